//! Exponential Brownian family: `mu_t` is the time-`t` law of
//! `exp(W_t - t/2)`, mean one, supported on the positive half-line.
//!
//! Densities are evaluated in log space; the `x^{-3/2}` factor underflows
//! otherwise for `x` near zero.

use std::sync::Arc;

use super::MarginalFamily;
use crate::error::Result;
use crate::measure::DecompositionMeasure;
use crate::numeric::special::norm_cdf;
use crate::scalar::Real;

const LN_SQRT_2PI: f64 = 0.9189385332046727;

#[derive(Debug, Clone, Copy, Default)]
pub struct ExpBrownianFamily;

impl ExpBrownianFamily {
    pub fn new() -> Self {
        Self
    }

    /// Half-width of the central interval in log space:
    /// the density rate vanishes where `(ln x)^2 = t + t^2/4`.
    fn log_edge<T: Real>(t: T) -> T {
        (t + t * t / T::of(4.0)).sqrt()
    }
}

impl<T: Real> MarginalFamily<T> for ExpBrownianFamily {
    fn name(&self) -> String {
        "exp-brownian".into()
    }

    fn mean(&self) -> T {
        T::one()
    }

    fn density(&self, t: T, x: T) -> T {
        if x <= T::zero() {
            return T::zero();
        }
        let lx = x.ln();
        let log_rho = -T::of(1.5) * lx - lx * lx / (T::two() * t)
            - t / T::of(8.0)
            - T::of(LN_SQRT_2PI)
            - t.ln() * T::half();
        log_rho.exp()
    }

    fn cdf(&self, t: T, x: T) -> T {
        if x <= T::zero() {
            return T::zero();
        }
        norm_cdf((x.ln() + t * T::half()) / t.sqrt())
    }

    fn potential(&self, t: T, x: T) -> T {
        if x <= T::zero() {
            return T::one() - x; // E|Y - x| = E[Y] - x for x below the support
        }
        let rt = t.sqrt();
        let lx = x.ln();
        T::two() * norm_cdf(-lx / rt + rt * T::half())
            - T::two() * x * norm_cdf(-lx / rt - rt * T::half())
            + x
    }

    fn q(&self, t: T, x: T) -> T {
        if x <= T::zero() {
            return T::zero();
        }
        x * x * self.density(t, x) * T::half()
    }

    fn q_prime(&self, t: T, x: T) -> T {
        if x <= T::zero() {
            return T::zero();
        }
        self.density(t, x) * x * (T::of(0.25) - x.ln() / (T::two() * t))
    }

    fn density_rate(&self, t: T, x: T) -> T {
        if x <= T::zero() {
            return T::zero();
        }
        let lx = x.ln();
        self.density(t, x) * (lx * lx - t - t * t / T::of(4.0)) / (T::two() * t * t)
    }

    fn rate(&self, t: T, x: T) -> Result<T> {
        if x <= T::zero() {
            return Err(crate::error::Error::QueryOutsideSupport {
                family: "exp-brownian".into(),
                t: t.f64(),
                x: x.f64(),
            });
        }
        let lx = x.ln();
        let r = T::of(0.125) + T::one() / (T::two() * t) - lx * lx / (T::two() * t * t);
        Ok(r.max(T::zero()))
    }

    fn rate_bound(&self, t: T) -> T {
        T::one() / (T::two() * t) + T::of(0.125)
    }

    fn support(&self, _t: T) -> (T, T) {
        (T::zero(), T::infinity())
    }

    fn gamma_support(&self, t: T) -> (T, T) {
        let s = Self::log_edge(t);
        ((-s).exp(), s.exp())
    }

    fn lambda_support(&self, t: T) -> (T, T) {
        <Self as MarginalFamily<T>>::quad_window(self, t)
    }

    fn quad_window(&self, t: T) -> (T, T) {
        let rt = t.sqrt();
        let spread = T::of(12.0) * rt;
        (
            (-t * T::half() - spread).exp(),
            (-t * T::half() + spread).exp(),
        )
    }

    fn quad_breakpoints(&self, t: T) -> Vec<T> {
        // the window spans many decades; subdivide uniformly in log space
        let rt = t.sqrt();
        (-12..=12)
            .map(|k| (-t * T::half() + rt * T::of(k as f64)).exp())
            .collect()
    }

    fn decompose(&self, t: T) -> Result<(DecompositionMeasure<T>, DecompositionMeasure<T>)> {
        let (gl, gr) = <Self as MarginalFamily<T>>::gamma_support(self, t);
        let gamma = DecompositionMeasure::continuous(
            vec![(gl, gr)],
            Arc::new(move |x: T| (-ExpBrownianFamily.density_rate(t, x)).max(T::zero())),
        );
        // split the tails at the log-spaced breakpoints so piecewise
        // quadrature cannot miss the density-rate bumps
        let mut pieces = Vec::new();
        let cuts = <Self as MarginalFamily<T>>::quad_breakpoints(self, t);
        let mut push_range = |lo: T, hi: T| {
            let mut prev = lo;
            for &c in cuts.iter().filter(|&&c| c > lo && c < hi) {
                pieces.push((prev, c));
                prev = c;
            }
            pieces.push((prev, hi));
        };
        let (wl, wr) = <Self as MarginalFamily<T>>::quad_window(self, t);
        push_range(wl.min(gl), gl);
        push_range(gr, wr.max(gr));
        let lambda = DecompositionMeasure::continuous(
            pieces,
            Arc::new(move |x: T| ExpBrownianFamily.density_rate(t, x).max(T::zero())),
        );
        Ok((gamma, lambda))
    }

    fn gamma_mass(&self, t: T) -> T {
        let (gl, gr) = <Self as MarginalFamily<T>>::gamma_support(self, t);
        crate::numeric::quad::integrate(
            |x| (-ExpBrownianFamily.density_rate(t, x)).max(T::zero()),
            gl,
            gr,
            T::of(1e-12),
        )
    }

    fn dispersion(&self) -> bool {
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;


    #[test]
    fn density_normalised_with_unit_mean() {
        let f = ExpBrownianFamily;
        for t in [0.25, 1.0, 2.0] {
            let mass = crate::family::integrate_marginal(&f, t, |_| 1.0);
            assert_abs_diff_eq!(mass, 1.0, epsilon = 1e-9);
            let mean = crate::family::integrate_marginal(&f, t, |x| x);
            assert_abs_diff_eq!(mean, 1.0, epsilon = 1e-8);
        }
    }

    #[test]
    fn q_is_half_x2_rho() {
        let f = ExpBrownianFamily;
        let q: f64 = f.q(1.0, 1.3);
        assert_abs_diff_eq!(q, 0.5 * 1.3 * 1.3 * f.density(1.0, 1.3), epsilon = 1e-15);
    }

    #[test]
    fn rate_respects_bound_and_vanishes_off_centre() {
        let f = ExpBrownianFamily;
        let t = 0.8;
        let k: f64 = f.rate_bound(t);
        let (gl, gr) = <ExpBrownianFamily as MarginalFamily<f64>>::gamma_support(&f, t);
        for x in [gl * 1.001, 0.5, 1.0, 2.0, gr * 0.999] {
            assert!(f.rate(t, x).unwrap() <= k);
        }
        assert_abs_diff_eq!(f.rate(t, gr * 1.01).unwrap(), 0.0, epsilon = 1e-15);
        assert!(f.rate(t, -1.0).is_err());
    }

    #[test]
    fn gamma_lambda_balance() {
        let f = ExpBrownianFamily;
        let (g, l) = f.decompose(1.0).unwrap();
        assert_abs_diff_eq!(g.mass(), l.mass(), epsilon = 1e-9);
        assert_abs_diff_eq!(g.mean_sum(), l.mean_sum(), epsilon = 1e-8);
        let m: f64 = f.gamma_mass(1.0);
        assert_abs_diff_eq!(g.mass(), m, epsilon = 1e-10);
    }
}
