use thiserror::Error;

/// Errors surfaced by family evaluation, transport construction and
/// simulation.
#[derive(Debug, Error)]
pub enum Error {
    /// The marginal law puts no mass at the queried point, so the point
    /// cannot be a state of the process at that time.
    #[error("query outside support: family {family} has zero density at t={t}, x={x}")]
    QueryOutsideSupport { family: String, t: f64, x: f64 },

    /// The family violates the structural assumptions required by the
    /// requested operation (e.g. atoms whose locations move over time).
    #[error("unsupported family: {0}")]
    UnsupportedFamily(String),

    /// The family does not move mass from a central interval to the tails,
    /// so the binomial transport is not defined.
    #[error("family {0} does not satisfy the dispersion assumption")]
    NoDispersion(String),

    /// A root-finder failed to converge. Diagnostic; should not occur for
    /// the shipped families.
    #[error("root-finder failed to converge: {0}")]
    ConvergenceFailure(String),

    /// Adaptive quadrature could not reach the requested tolerance.
    #[error("quadrature failure: {0}")]
    QuadratureFailure(String),

    /// The jump-rate envelope is infinite on the requested time interval.
    #[error("jump rate unbounded on ({eps}, {t_end}): cannot simulate (start from epsilon > 0)")]
    UnboundedRate { eps: f64, t_end: f64 },

    /// Time-reversed simulation is only available for the worked examples.
    #[error("time-reversed simulation not available for family {0}")]
    UnsupportedExample(String),

    /// A self-similar profile failed its normalisation checks.
    #[error("invalid self-similar profile: {0}")]
    InvalidProfile(String),

    /// A synthetic path of unbounded oscillation was supplied where a
    /// finite-variation path is required.
    #[error("input path is not of finite variation")]
    NonFiniteVariationInput,

    /// Configuration failed validation.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("config parse error: {0}")]
    ConfigParse(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
