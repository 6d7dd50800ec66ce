//! Centred Gaussian family: `mu_t = N(0, t)`, the marginals of Brownian
//! motion.

use std::sync::Arc;

use super::{MarginalFamily, ProfileKind, SelfSimilarProfile};
use crate::error::Result;
use crate::measure::DecompositionMeasure;
use crate::numeric::special::{norm_cdf, norm_pdf};
use crate::scalar::Real;

const SQRT_2PI: f64 = 2.5066282746310002;

#[derive(Debug, Clone, Copy, Default)]
pub struct GaussianFamily;

impl GaussianFamily {
    pub fn new() -> Self {
        Self
    }

    /// Cumulative of the mass-leaving density on `(-sqrt(t), sqrt(t))`.
    fn gamma_cdf<T: Real>(t: T, x: T) -> T {
        let rt = t.sqrt();
        let edge = GaussianFamily.density(t, rt) * rt;
        if x <= -rt {
            T::zero()
        } else if x >= rt {
            edge / t // = m(t)
        } else {
            (x * GaussianFamily.density(t, x) + edge) / (T::two() * t)
        }
    }

    /// Cumulative of the mass-arriving density (supported off the centre).
    fn lambda_cdf<T: Real>(t: T, x: T) -> T {
        let rt = t.sqrt();
        let m = GaussianFamily.gamma_mass(t);
        if x <= -rt {
            -x * GaussianFamily.density(t, x) / (T::two() * t)
        } else if x < rt {
            m * T::half()
        } else {
            m - x * GaussianFamily.density(t, x) / (T::two() * t)
        }
    }
}

impl<T: Real> MarginalFamily<T> for GaussianFamily {
    fn name(&self) -> String {
        "gaussian".into()
    }

    fn mean(&self) -> T {
        T::zero()
    }

    fn density(&self, t: T, x: T) -> T {
        let z = x / t.sqrt();
        norm_pdf(z) / t.sqrt()
    }

    fn cdf(&self, t: T, x: T) -> T {
        norm_cdf(x / t.sqrt())
    }

    fn potential(&self, t: T, x: T) -> T {
        let rt = t.sqrt();
        let z = x / rt;
        T::two() * rt * (norm_pdf(z) + z * norm_cdf(z) - z * T::half())
    }

    fn q(&self, t: T, x: T) -> T {
        norm_pdf(x / t.sqrt()) / (T::two() * t.sqrt())
    }

    fn q_prime(&self, t: T, x: T) -> T {
        let rt = t.sqrt();
        let z = x / rt;
        -z * norm_pdf(z) / (T::two() * t)
    }

    fn density_rate(&self, t: T, x: T) -> T {
        self.density(t, x) * (x * x - t) / (T::two() * t * t)
    }

    fn rate(&self, t: T, x: T) -> Result<T> {
        let num = (t - x * x).max(T::zero());
        Ok(num / (T::two() * t * t))
    }

    fn rate_bound(&self, t: T) -> T {
        T::one() / (T::two() * t)
    }

    fn support(&self, _t: T) -> (T, T) {
        (T::neg_infinity(), T::infinity())
    }

    fn gamma_support(&self, t: T) -> (T, T) {
        (-t.sqrt(), t.sqrt())
    }

    fn lambda_support(&self, _t: T) -> (T, T) {
        (T::neg_infinity(), T::infinity())
    }

    fn quad_window(&self, t: T) -> (T, T) {
        let w = T::of(10.0) * t.sqrt();
        (-w, w)
    }

    fn decompose(&self, t: T) -> Result<(DecompositionMeasure<T>, DecompositionMeasure<T>)> {
        let rt = t.sqrt();
        let (lo, hi) = <Self as MarginalFamily<T>>::quad_window(self, t);
        let gamma = DecompositionMeasure::continuous(
            vec![(-rt, rt)],
            Arc::new(move |x: T| (-GaussianFamily.density_rate(t, x)).max(T::zero())),
        )
        .with_cdf(Arc::new(move |x: T| Self::gamma_cdf(t, x)));
        let lambda = DecompositionMeasure::continuous(
            vec![(lo, -rt), (rt, hi)],
            Arc::new(move |x: T| GaussianFamily.density_rate(t, x).max(T::zero())),
        )
        .with_cdf(Arc::new(move |x: T| Self::lambda_cdf(t, x)));
        Ok((gamma, lambda))
    }

    fn gamma_mass(&self, t: T) -> T {
        T::of((-0.5f64).exp() / SQRT_2PI) / t
    }

    fn dispersion(&self) -> bool {
        true
    }

    fn profile(&self) -> Option<SelfSimilarProfile<T>> {
        Some(SelfSimilarProfile::new(T::half(), ProfileKind::Gaussian).expect("valid"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn rate_matches_paper_values() {
        let f = GaussianFamily;
        assert_abs_diff_eq!(f.rate(1.0, 0.0).unwrap(), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(f.rate(1.0, 2.0).unwrap(), 0.0, epsilon = 1e-15);
        assert!(f.rate(1.0, 0.5).unwrap() <= <GaussianFamily as MarginalFamily<f64>>::rate_bound(&f, 1.0));
    }

    #[test]
    fn q_matches_closed_form() {
        let f = GaussianFamily;
        let q: f64 = f.q(1.0, 0.0);
        assert_abs_diff_eq!(q, 1.0 / (2.0 * SQRT_2PI), epsilon = 1e-15);
        // Q vanishes far out
        assert!(f.q(1.0, 12.0) < 1e-12);
    }

    #[test]
    fn gamma_mass_matches_quadrature() {
        let f = GaussianFamily;
        let (g, l) = f.decompose(1.0).unwrap();
        let m: f64 = f.gamma_mass(1.0);
        assert_abs_diff_eq!(m, (-0.5f64).exp() / SQRT_2PI, epsilon = 1e-15);
        assert_abs_diff_eq!(g.mass(), m, epsilon = 1e-10);
        assert_abs_diff_eq!(l.mass(), m, epsilon = 1e-10);
        assert_abs_diff_eq!(g.mean_sum(), 0.0, epsilon = 1e-10);
        assert_abs_diff_eq!(l.mean_sum(), 0.0, epsilon = 1e-10);
    }

    #[test]
    fn closed_form_cdfs_match_quadrature() {
        let f = GaussianFamily;
        let (g, l) = f.decompose(0.7).unwrap();
        for x in [-2.0f64, -0.8, -0.3, 0.0, 0.4, 0.83, 2.5] {
            let gq = crate::numeric::quad::integrate(|y| g.density_at(y), -0.9, x.min(0.9), 1e-12);
            assert_abs_diff_eq!(g.mass_below(x), gq.max(0.0), epsilon = 1e-9);
            let lq = crate::numeric::quad::integrate(|y| l.density_at(y), -9.0, x, 1e-12);
            assert_abs_diff_eq!(l.mass_below(x), lq, epsilon = 1e-9);
        }
    }

    #[test]
    fn quantile_inverts_cdf() {
        let f = GaussianFamily;
        let x: f64 = f.quantile(0.25, 0.975);
        assert_abs_diff_eq!(x, 0.5 * 1.959963984540054, epsilon = 1e-9);
    }

    #[test]
    fn generic_over_f32() {
        let f = GaussianFamily;
        let d: f32 = f.density(1.0f32, 0.0f32);
        assert_abs_diff_eq!(d, 0.3989423, epsilon = 1e-5);
    }
}
