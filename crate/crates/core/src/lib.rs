//! Pure-jump martingales consistent with a prescribed flow of marginal laws.
//!
//! Given a family of measures increasing in convex order, this crate builds
//! the pure-jump Markov martingale that matches every marginal: a Poisson
//! point process decides when states jump, a family of martingale transports
//! decides where they land. Under a dispersion assumption the binomial
//! transport makes the process the minimiser of expected total variation,
//! with an explicit lower bound and a pathwise sub-hedge certificate.
//!
//! The numeric core is generic over the scalar type (`f32`/`f64`) through
//! [`scalar::Real`]; the aliases below fix the common `f64` instantiations.

pub mod config;
pub mod error;
pub mod family;
pub mod hedge;
pub mod measure;
pub mod numeric;
pub mod rng;
pub mod sim;
pub mod stats;
pub mod transport;
pub mod variation;

mod scalar;

pub use error::{Error, Result};
pub use scalar::Real;

/// Default scalar for the command-line pipeline.
pub type Scalar = f64;

pub type Gaussian = family::GaussianFamily;
pub type ExpBrownian = family::ExpBrownianFamily;
pub type Uniform = family::UniformFamily;
pub type AtomMix = family::AtomMixFamily;
pub type SelfSimilar = family::SelfSimilarFamily<Scalar>;
pub type Profile = family::SelfSimilarProfile<Scalar>;
pub type Path = sim::PathSkeleton<Scalar>;
