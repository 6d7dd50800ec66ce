//! Marginal families: flows of laws `t -> mu_t` increasing in convex order.
//!
//! A family exposes everything the transport and simulation layers need as
//! evaluable closed forms: density, distribution function, potential, the
//! half time-derivative of the potential `Q`, the signed density rate, the
//! jump rate and its envelope, support endpoints, and the decomposition of
//! the flow derivative into a mass-leaving measure `gamma` and a
//! mass-arriving measure `lambda` of equal mass and mean.

mod atom_mix;
mod exp_brownian;
mod gaussian;
mod self_similar;
mod uniform;

pub use atom_mix::AtomMixFamily;
pub use exp_brownian::ExpBrownianFamily;
pub use gaussian::GaussianFamily;
pub use self_similar::{self_similar_family, ProfileKind, SelfSimilarFamily, SelfSimilarProfile};
pub use uniform::UniformFamily;

use crate::error::Result;
use crate::measure::DecompositionMeasure;
use crate::numeric::roots;
use crate::scalar::Real;

/// A family of laws `(mu_t)` increasing in convex order, with enough
/// closed-form structure to drive the jump construction.
///
/// Implementations are immutable and safe to share across threads.
pub trait MarginalFamily<T: Real>: Send + Sync {
    fn name(&self) -> String;

    /// The common mean of every `mu_t`.
    fn mean(&self) -> T;

    /// Infimum of valid evaluation times. Most families require `t > 0`;
    /// families with a bounded rate at zero may allow `t = 0`.
    fn time_floor(&self) -> T {
        T::zero()
    }

    /// Density of the continuous part of `mu_t` at `x` (zero off support).
    fn density(&self, t: T, x: T) -> T;

    /// Atoms of `mu_t`, if any.
    fn atoms(&self, _t: T) -> Vec<(T, T)> {
        Vec::new()
    }

    /// Distribution function of `mu_t`.
    fn cdf(&self, t: T, x: T) -> T;

    /// Potential `U(t, x)`: the integral of `|y - x|` against `mu_t`.
    fn potential(&self, t: T, x: T) -> T;

    /// `Q(t, x)`: half the time derivative of the potential.
    fn q(&self, t: T, x: T) -> T;

    /// Spatial derivative of `Q(t, .)`.
    fn q_prime(&self, t: T, x: T) -> T {
        let h = T::of(1e-6) * (T::one() + x.abs());
        (self.q(t, x + h) - self.q(t, x - h)) / (T::two() * h)
    }

    /// Continuous part of the signed density rate (time derivative of the
    /// density). Zero wherever the rate is purely atomic.
    fn density_rate(&self, t: T, x: T) -> T;

    /// Jump rate `R_t(x)`: density of the mass-leaving measure relative to
    /// `mu_t`. Errors if `x` cannot be a state of the process at time `t`.
    fn rate(&self, t: T, x: T) -> Result<T>;

    /// Envelope `K(t)` with `R_t <= K(t)` everywhere.
    fn rate_bound(&self, t: T) -> T;

    /// Support interval of `mu_t`.
    fn support(&self, t: T) -> (T, T);

    /// Support interval of the mass-leaving measure (the central interval
    /// under dispersion).
    fn gamma_support(&self, t: T) -> (T, T);

    /// Hull of the support of the mass-arriving measure.
    fn lambda_support(&self, t: T) -> (T, T);

    /// Finite interval carrying all of `mu_t` up to negligible tail mass;
    /// quadratures run over this window.
    fn quad_window(&self, t: T) -> (T, T);

    /// Sorted initial subdivision of the quadrature window, endpoints
    /// included. Families whose window spans many orders of magnitude
    /// override this so adaptive quadrature cannot miss the density peak.
    fn quad_breakpoints(&self, t: T) -> Vec<T> {
        let (lo, hi) = self.quad_window(t);
        vec![lo, hi]
    }

    /// Splits the flow derivative at `t` into `(gamma, lambda)`.
    fn decompose(&self, t: T) -> Result<(DecompositionMeasure<T>, DecompositionMeasure<T>)>;

    /// Total mass `m(t)` of the mass-leaving measure.
    fn gamma_mass(&self, t: T) -> T;

    /// Whether the dispersion assumption (mass leaves a growing central
    /// interval, with the regularity needed by the binomial transport
    /// optimiser) holds.
    fn dispersion(&self) -> bool;

    /// Generalized inverse of the distribution function.
    fn quantile(&self, t: T, u: T) -> T {
        let (lo, hi) = self.quad_window(t);
        roots::bisect(|x| self.cdf(t, x) - u, lo, hi, T::of(1e-12))
            .expect("cdf spans (0,1) on the quadrature window")
    }

    /// Closed-form binomial transport targets, for families whose optimal
    /// transport is known exactly.
    fn hk_closed_form(&self, _t: T, _x: T) -> Option<(T, T)> {
        None
    }

    /// Self-similar structure, when the family is a scaling family.
    fn profile(&self) -> Option<SelfSimilarProfile<T>> {
        None
    }
}

impl<T: Real, F: MarginalFamily<T> + ?Sized> MarginalFamily<T> for &F {
    fn name(&self) -> String {
        (**self).name()
    }
    fn mean(&self) -> T {
        (**self).mean()
    }
    fn time_floor(&self) -> T {
        (**self).time_floor()
    }
    fn density(&self, t: T, x: T) -> T {
        (**self).density(t, x)
    }
    fn atoms(&self, t: T) -> Vec<(T, T)> {
        (**self).atoms(t)
    }
    fn cdf(&self, t: T, x: T) -> T {
        (**self).cdf(t, x)
    }
    fn potential(&self, t: T, x: T) -> T {
        (**self).potential(t, x)
    }
    fn q(&self, t: T, x: T) -> T {
        (**self).q(t, x)
    }
    fn q_prime(&self, t: T, x: T) -> T {
        (**self).q_prime(t, x)
    }
    fn density_rate(&self, t: T, x: T) -> T {
        (**self).density_rate(t, x)
    }
    fn rate(&self, t: T, x: T) -> Result<T> {
        (**self).rate(t, x)
    }
    fn rate_bound(&self, t: T) -> T {
        (**self).rate_bound(t)
    }
    fn support(&self, t: T) -> (T, T) {
        (**self).support(t)
    }
    fn gamma_support(&self, t: T) -> (T, T) {
        (**self).gamma_support(t)
    }
    fn lambda_support(&self, t: T) -> (T, T) {
        (**self).lambda_support(t)
    }
    fn quad_window(&self, t: T) -> (T, T) {
        (**self).quad_window(t)
    }
    fn quad_breakpoints(&self, t: T) -> Vec<T> {
        (**self).quad_breakpoints(t)
    }
    fn decompose(&self, t: T) -> Result<(DecompositionMeasure<T>, DecompositionMeasure<T>)> {
        (**self).decompose(t)
    }
    fn gamma_mass(&self, t: T) -> T {
        (**self).gamma_mass(t)
    }
    fn dispersion(&self) -> bool {
        (**self).dispersion()
    }
    fn quantile(&self, t: T, u: T) -> T {
        (**self).quantile(t, u)
    }
    fn hk_closed_form(&self, t: T, x: T) -> Option<(T, T)> {
        (**self).hk_closed_form(t, x)
    }
    fn profile(&self) -> Option<SelfSimilarProfile<T>> {
        (**self).profile()
    }
}

/// Outcome of the convex-order and conservation checks over a grid.
#[derive(Debug, Clone)]
pub struct ConvexOrderReport<T> {
    /// Largest decrease of the potential along the time grid (should be ~0).
    pub max_potential_decrease: T,
    /// Largest deviation of total mass from one across the time grid.
    pub max_mass_error: T,
    /// Largest deviation of the first moment from the family mean.
    pub max_mean_error: T,
}

impl<T: Real> ConvexOrderReport<T> {
    pub fn passes(&self, tol: T) -> bool {
        self.max_potential_decrease <= tol
            && self.max_mass_error <= tol
            && self.max_mean_error <= tol
    }
}

/// Checks that the potential is non-decreasing in time on the grid and that
/// mass and mean are conserved. Violations are reported, not raised.
pub fn check_convex_order<T: Real>(
    family: &dyn MarginalFamily<T>,
    t_grid: &[T],
    x_grid: &[T],
) -> ConvexOrderReport<T> {
    let mut max_decrease = T::zero();
    for pair in t_grid.windows(2) {
        for &x in x_grid {
            let du = family.potential(pair[1], x) - family.potential(pair[0], x);
            if -du > max_decrease {
                max_decrease = -du;
            }
        }
    }
    let mut max_mass_error = T::zero();
    let mut max_mean_error = T::zero();
    for &t in t_grid {
        let atom_mass: T = family.atoms(t).iter().map(|&(_, m)| m).sum();
        let atom_mean: T = family.atoms(t).iter().map(|&(x, m)| x * m).sum();
        let mass = integrate_marginal(family, t, |_| T::one());
        let mean = integrate_marginal(family, t, |x| x);
        max_mass_error = max_mass_error.max((mass + atom_mass - T::one()).abs());
        max_mean_error = max_mean_error.max((mean + atom_mean - family.mean()).abs());
    }
    ConvexOrderReport {
        max_potential_decrease: max_decrease,
        max_mass_error,
        max_mean_error,
    }
}

/// Integrates `x -> g(x) rho(t, x)` over the family's quadrature window,
/// honouring the family's initial subdivision (atoms are not included).
pub fn integrate_marginal<T: Real>(
    family: &dyn MarginalFamily<T>,
    t: T,
    g: impl Fn(T) -> T + Copy,
) -> T {
    let cuts = family.quad_breakpoints(t);
    let tol = T::of(1e-11) / T::of(cuts.len() as f64);
    let mut total = T::zero();
    for w in cuts.windows(2) {
        total += crate::numeric::quad::integrate(|x| g(x) * family.density(t, x), w[0], w[1], tol);
    }
    total
}

/// Adapter running a family's time axis backwards over `[t_lo, t_hi]`.
/// This destroys convex order; it exists as a negative control for
/// [`check_convex_order`].
pub struct TimeReversed<F> {
    pub inner: F,
    pub t_lo: f64,
    pub t_hi: f64,
}

impl<T: Real, F: MarginalFamily<T>> MarginalFamily<T> for TimeReversed<F> {
    fn name(&self) -> String {
        format!("reversed-{}", self.inner.name())
    }
    fn mean(&self) -> T {
        self.inner.mean()
    }
    fn density(&self, t: T, x: T) -> T {
        self.inner.density(self.flip(t), x)
    }
    fn cdf(&self, t: T, x: T) -> T {
        self.inner.cdf(self.flip(t), x)
    }
    fn potential(&self, t: T, x: T) -> T {
        self.inner.potential(self.flip(t), x)
    }
    fn q(&self, t: T, x: T) -> T {
        self.inner.q(self.flip(t), x)
    }
    fn density_rate(&self, t: T, x: T) -> T {
        -self.inner.density_rate(self.flip(t), x)
    }
    fn rate(&self, t: T, x: T) -> Result<T> {
        self.inner.rate(self.flip(t), x)
    }
    fn rate_bound(&self, t: T) -> T {
        self.inner.rate_bound(self.flip(t))
    }
    fn support(&self, t: T) -> (T, T) {
        self.inner.support(self.flip(t))
    }
    fn gamma_support(&self, t: T) -> (T, T) {
        self.inner.gamma_support(self.flip(t))
    }
    fn lambda_support(&self, t: T) -> (T, T) {
        self.inner.lambda_support(self.flip(t))
    }
    fn quad_window(&self, t: T) -> (T, T) {
        self.inner.quad_window(self.flip(t))
    }
    fn decompose(&self, t: T) -> Result<(DecompositionMeasure<T>, DecompositionMeasure<T>)> {
        self.inner.decompose(self.flip(t))
    }
    fn gamma_mass(&self, t: T) -> T {
        self.inner.gamma_mass(self.flip(t))
    }
    fn dispersion(&self) -> bool {
        false
    }
}

impl<F> TimeReversed<F> {
    fn flip<T: Real>(&self, t: T) -> T {
        T::of(self.t_lo) + T::of(self.t_hi) - t
    }
}
