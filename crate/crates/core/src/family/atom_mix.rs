//! Atom mixture family: `mu_t = e^{-t} delta_0 + (1 - e^{-t}) U[-1, 1]`.
//!
//! The mass-leaving measure is the shrinking atom at the origin, so the only
//! state that ever jumps is zero; the jump spreads uniformly over `[-1, 1]`.
//! The rate envelope is one for all `t`, which makes this the one shipped
//! family that simulates on `[0, T]` directly.

use std::sync::Arc;

use super::MarginalFamily;
use crate::error::Result;
use crate::measure::DecompositionMeasure;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, Default)]
pub struct AtomMixFamily;

impl AtomMixFamily {
    pub fn new() -> Self {
        Self
    }
}

impl<T: Real> MarginalFamily<T> for AtomMixFamily {
    fn name(&self) -> String {
        "atom-mix".into()
    }

    fn mean(&self) -> T {
        T::zero()
    }

    fn density(&self, t: T, x: T) -> T {
        if x.abs() < T::one() {
            (T::one() - (-t).exp()) * T::half()
        } else {
            T::zero()
        }
    }

    fn atoms(&self, t: T) -> Vec<(T, T)> {
        vec![(T::zero(), (-t).exp())]
    }

    fn cdf(&self, t: T, x: T) -> T {
        let cont = (T::one() - (-t).exp()) * ((x + T::one()) * T::half()).max(T::zero()).min(T::one());
        if x >= T::zero() {
            cont + (-t).exp()
        } else {
            cont
        }
    }

    fn potential(&self, t: T, x: T) -> T {
        if x.abs() < T::one() {
            (T::one() + x * x) * T::half() * (T::one() - (-t).exp()) + (-t).exp() * x.abs()
        } else {
            x.abs()
        }
    }

    fn q(&self, t: T, x: T) -> T {
        if x.abs() < T::one() {
            let d = T::one() - x.abs();
            (-t).exp() * d * d / T::of(4.0)
        } else {
            T::zero()
        }
    }

    fn q_prime(&self, t: T, x: T) -> T {
        if x.abs() < T::one() && x != T::zero() {
            (-t).exp() * (x - x.signum()) * T::half()
        } else {
            T::zero()
        }
    }

    fn density_rate(&self, t: T, x: T) -> T {
        // the continuous part only grows; the shrinking piece is the atom
        if x.abs() < T::one() {
            (-t).exp() * T::half()
        } else {
            T::zero()
        }
    }

    fn rate(&self, t: T, x: T) -> Result<T> {
        if x.abs() > T::one() || (t == T::zero() && x != T::zero()) {
            return Err(crate::error::Error::QueryOutsideSupport {
                family: "atom-mix".into(),
                t: t.f64(),
                x: x.f64(),
            });
        }
        Ok(if x == T::zero() { T::one() } else { T::zero() })
    }

    fn rate_bound(&self, _t: T) -> T {
        T::one()
    }

    fn support(&self, _t: T) -> (T, T) {
        (-T::one(), T::one())
    }

    fn gamma_support(&self, _t: T) -> (T, T) {
        (T::zero(), T::zero())
    }

    fn lambda_support(&self, _t: T) -> (T, T) {
        (-T::one(), T::one())
    }

    fn quad_window(&self, _t: T) -> (T, T) {
        (-T::one(), T::one())
    }

    fn decompose(&self, t: T) -> Result<(DecompositionMeasure<T>, DecompositionMeasure<T>)> {
        let gamma = DecompositionMeasure::atomic(vec![(T::zero(), (-t).exp())]);
        let lambda = DecompositionMeasure::continuous(
            vec![(-T::one(), T::one())],
            Arc::new(move |_x: T| (-t).exp() * T::half()),
        )
        .with_cdf(Arc::new(move |x: T| {
            (-t).exp() * ((x + T::one()) * T::half()).max(T::zero()).min(T::one())
        }));
        Ok((gamma, lambda))
    }

    fn gamma_mass(&self, t: T) -> T {
        (-t).exp()
    }

    fn dispersion(&self) -> bool {
        // the central interval degenerates to the single point zero
        false
    }

    fn quantile(&self, t: T, u: T) -> T {
        let w = T::one() - (-t).exp();
        let below = w * T::half();
        if u <= below {
            T::two() * u / w - T::one()
        } else if u <= below + (-t).exp() {
            T::zero()
        } else {
            T::two() * (u - (-t).exp()) / w - T::one()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn decompose_at_zero_is_unit_atom() {
        let f = AtomMixFamily;
        let (g, l) = f.decompose(0.0f64).unwrap();
        assert_eq!(g.atoms(), &[(0.0, 1.0)]);
        assert_abs_diff_eq!(l.mass(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn rate_is_indicator_of_origin() {
        let f = AtomMixFamily;
        assert_abs_diff_eq!(f.rate(1.0, 0.0).unwrap(), 1.0);
        assert_abs_diff_eq!(f.rate(1.0, 0.4).unwrap(), 0.0);
        assert!(<AtomMixFamily as MarginalFamily<f64>>::rate(&f, 1.0, 1.5).is_err());
    }

    #[test]
    fn quantile_respects_atom() {
        let f = AtomMixFamily;
        let t = 1.0f64;
        let w = 1.0 - (-t as f64).exp();
        assert_abs_diff_eq!(f.quantile(t, w / 2.0 + 0.1), 0.0);
        let x = f.quantile(t, 0.1);
        assert!(x < 0.0);
        assert_abs_diff_eq!(f.cdf(t, x), 0.1, epsilon = 1e-12);
    }

    #[test]
    fn mass_and_mean_balance() {
        let f = AtomMixFamily;
        let (g, l) = f.decompose(0.7f64).unwrap();
        assert_abs_diff_eq!(g.mass(), l.mass(), epsilon = 1e-10);
        assert_abs_diff_eq!(g.mean_sum(), l.mean_sum(), epsilon = 1e-10);
    }
}
