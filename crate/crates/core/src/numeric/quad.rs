//! Adaptive Gauss–Kronrod quadrature.
//!
//! A 15-point Kronrod rule with the embedded 7-point Gauss rule supplies the
//! local error estimate; intervals are bisected worst-first until the summed
//! estimate meets the absolute tolerance.

use crate::scalar::Real;

// Kronrod-15 abscissae on [0, 1] (positive half; the rule is symmetric).
// Odd indices are the embedded Gauss-7 nodes.
const XGK: [f64; 8] = [
    0.9914553711208126392068547,
    0.9491079123427585245261897,
    0.8648644233597690727897128,
    0.7415311855993944398638648,
    0.5860872354676911302941448,
    0.4058451513773971669066064,
    0.2077849550078984676006894,
    0.0,
];
const WGK: [f64; 8] = [
    0.0229353220105292249637320,
    0.0630920926299785532907007,
    0.1047900103222501838398763,
    0.1406532597155259187451896,
    0.1690047266392679028265834,
    0.1903505780647854099132564,
    0.2044329400752988924141620,
    0.2094821410847278280129992,
];
const WG: [f64; 4] = [
    0.1294849661688696932706114,
    0.2797053914892766679014678,
    0.3818300505051189449503698,
    0.4179591836734693877551020,
];

/// One application of the 15-point rule on `[a, b]`.
/// Returns `(kronrod, |kronrod - gauss|)`.
pub fn gk15<T: Real, F: Fn(T) -> T>(f: &F, a: T, b: T) -> (T, T) {
    let center = (a + b) * T::half();
    let half = (b - a) * T::half();
    let fc = f(center);
    let mut kronrod = fc * T::of(WGK[7]);
    let mut gauss = fc * T::of(WG[3]);
    for j in 0..7 {
        let dx = half * T::of(XGK[j]);
        let fsum = f(center - dx) + f(center + dx);
        kronrod += fsum * T::of(WGK[j]);
        if j % 2 == 1 {
            gauss += fsum * T::of(WG[j / 2]);
        }
    }
    kronrod *= half;
    gauss *= half;
    (kronrod, (kronrod - gauss).abs())
}

/// Integrates `f` over `[a, b]` to absolute tolerance `tol`.
///
/// Bisects the worst interval first. The returned value is the best estimate
/// even if the tolerance was not met within the subdivision budget; callers
/// that must detect failure use [`integrate_checked`].
pub fn integrate<T: Real, F: Fn(T) -> T>(f: F, a: T, b: T, tol: T) -> T {
    integrate_impl(&f, a, b, tol).0
}

/// As [`integrate`], also reporting the final error estimate.
pub fn integrate_checked<T: Real, F: Fn(T) -> T>(f: F, a: T, b: T, tol: T) -> (T, T) {
    integrate_impl(&f, a, b, tol)
}

fn integrate_impl<T: Real, F: Fn(T) -> T>(f: &F, a: T, b: T, tol: T) -> (T, T) {
    if a == b {
        return (T::zero(), T::zero());
    }
    // (error, a, b, value) kept sorted by error ascending; pop from the back.
    let (v, e) = gk15(f, a, b);
    let mut segments = vec![(e, a, b, v)];
    let max_segments = 2048;
    loop {
        let total_err: T = segments.iter().map(|s| s.0).sum();
        if total_err <= tol || segments.len() >= max_segments {
            let total: T = segments.iter().map(|s| s.3).sum();
            return (total, total_err);
        }
        let (_, sa, sb, _) = segments.pop().expect("nonempty");
        let mid = (sa + sb) * T::half();
        for (lo, hi) in [(sa, mid), (mid, sb)] {
            let (v, e) = gk15(f, lo, hi);
            let pos = segments.partition_point(|s| s.0 < e);
            segments.insert(pos, (e, lo, hi, v));
        }
    }
}

/// Composite Simpson weights on a uniform grid with an odd number of nodes.
/// Returns the cumulative integral at every node, `cum[0] = 0`.
///
/// Interior cumulative values at odd nodes come from fitting the same
/// quadratic as the surrounding Simpson pair, so the whole vector is O(h^4)
/// accurate.
pub fn cumulative_simpson<T: Real>(values: &[T], h: T) -> Vec<T> {
    let n = values.len();
    assert!(n >= 3 && n % 2 == 1, "need an odd number of nodes >= 3");
    let mut cum = vec![T::zero(); n];
    let c12 = T::of(1.0 / 12.0);
    for i in (0..n - 2).step_by(2) {
        let (f0, f1, f2) = (values[i], values[i + 1], values[i + 2]);
        // integral over the first half of the pair via the fitted parabola
        let first = h * (T::of(5.0) * f0 + T::of(8.0) * f1 - f2) * c12;
        let both = h * (f0 + T::of(4.0) * f1 + f2) / T::of(3.0);
        cum[i + 1] = cum[i] + first;
        cum[i + 2] = cum[i] + both;
    }
    cum
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn kronrod_weights_normalised() {
        let sum = WGK[7] + 2.0 * WGK[..7].iter().sum::<f64>();
        assert_abs_diff_eq!(sum, 2.0, epsilon = 1e-12);
        let sum_g = WG[3] + 2.0 * WG[..3].iter().sum::<f64>();
        assert_abs_diff_eq!(sum_g, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn integrates_polynomials_exactly() {
        let v = integrate(|x: f64| x * x, 0.0, 1.0, 1e-12);
        assert_abs_diff_eq!(v, 1.0 / 3.0, epsilon = 1e-13);
        let v = integrate(|x: f64| x.powi(9) - 3.0 * x.powi(4), -1.0, 2.0, 1e-12);
        let exact = (2.0f64.powi(10) - 1.0) / 10.0 - 3.0 * (2.0f64.powi(5) + 1.0) / 5.0;
        assert_abs_diff_eq!(v, exact, epsilon = 1e-11);
    }

    #[test]
    fn integrates_smooth_transcendental() {
        let v = integrate(|x: f64| x.exp(), 0.0, 1.0, 1e-12);
        assert_abs_diff_eq!(v, 1.0f64.exp() - 1.0, epsilon = 1e-12);
        let v = integrate(|x: f64| (-x * x / 2.0).exp(), -30.0, 30.0, 1e-10);
        assert_abs_diff_eq!(v, (2.0 * std::f64::consts::PI).sqrt(), epsilon = 1e-9);
    }

    #[test]
    fn handles_kinks_adaptively() {
        let v = integrate(|x: f64| x.abs(), -1.0, 2.0, 1e-10);
        assert_abs_diff_eq!(v, 2.5, epsilon = 1e-9);
    }

    #[test]
    fn cumulative_simpson_matches_antiderivative() {
        let n = 101;
        let h = 0.01f64;
        let values: Vec<f64> = (0..n).map(|i| (i as f64 * h).exp()).collect();
        let cum = cumulative_simpson(&values, h);
        for (i, c) in cum.iter().enumerate() {
            let exact = (i as f64 * h).exp() - 1.0;
            assert_abs_diff_eq!(*c, exact, epsilon = 5e-9);
        }
    }
}
