//! Error function and normal-law helpers.
//!
//! The rational approximations are W. J. Cody's (the classic `calerf`
//! scheme), accurate to roughly machine epsilon in `f64`. The generic
//! wrappers evaluate in `f64` and convert, which is exact for `f32`.

use crate::scalar::Real;

const SQRT_2PI: f64 = 2.5066282746310002;

// |x| <= 0.46875
const ERF_A: [f64; 5] = [
    3.16112374387056560e0,
    1.13864154151050156e2,
    3.77485237685302021e2,
    3.20937758913846947e3,
    1.85777706184603153e-1,
];
const ERF_B: [f64; 4] = [
    2.36012909523441209e1,
    2.44024637934444173e2,
    1.28261652607737228e3,
    2.84423683343917062e3,
];
// 0.46875 < x <= 4
const ERF_C: [f64; 9] = [
    5.64188496988670089e-1,
    8.88314979438837594e0,
    6.61191906371416295e1,
    2.98635138197400131e2,
    8.81952221241769090e2,
    1.71204761263407058e3,
    2.05107837782607147e3,
    1.23033935479799725e3,
    2.15311535474403846e-8,
];
const ERF_D: [f64; 8] = [
    1.57449261107098347e1,
    1.17693950891312499e2,
    5.37181101862009858e2,
    1.62138957456669019e3,
    3.29079923573345963e3,
    4.36261909014324716e3,
    3.43936767414372164e3,
    1.23033935480374942e3,
];
// x > 4
const ERF_P: [f64; 6] = [
    3.05326634961232344e-1,
    3.60344899949804439e-1,
    1.25781726111229246e-1,
    1.60837851487422766e-2,
    6.58749161529837803e-4,
    1.63153871373020978e-2,
];
const ERF_Q: [f64; 5] = [
    2.56852019228982242e0,
    1.87295284992346047e0,
    5.27905102951428412e-1,
    6.05183413124413191e-2,
    2.33520497626869185e-3,
];

fn erf_core(x: f64) -> f64 {
    let ax = x.abs();
    if ax <= 0.46875 {
        let z = x * x;
        let num = ((ERF_A[4] * z + ERF_A[0]) * z + ERF_A[1]) * z + ERF_A[2];
        let den = ((z + ERF_B[0]) * z + ERF_B[1]) * z + ERF_B[2];
        x * (num * z + ERF_A[3]) / (den * z + ERF_B[3])
    } else {
        let sign = x.signum();
        sign * (1.0 - erfc_large(ax))
    }
}

// erfc for x > 0.46875
fn erfc_large(x: f64) -> f64 {
    if x <= 4.0 {
        let mut num = ERF_C[8] * x;
        let mut den = x;
        for i in 0..7 {
            num = (num + ERF_C[i]) * x;
            den = (den + ERF_D[i]) * x;
        }
        let r = (num + ERF_C[7]) / (den + ERF_D[7]);
        exp_nx2(x) * r
    } else if x < 26.5 {
        let z = 1.0 / (x * x);
        let mut num = ERF_P[5] * z;
        let mut den = z;
        for i in 0..4 {
            num = (num + ERF_P[i]) * z;
            den = (den + ERF_Q[i]) * z;
        }
        const FRAC_1_SQRT_PI: f64 = 0.5641895835477563;
        let r = z * (num + ERF_P[4]) / (den + ERF_Q[4]);
        exp_nx2(x) * (FRAC_1_SQRT_PI - r) / x
    } else {
        0.0
    }
}

// exp(-x^2) computed with the split trick to avoid premature rounding.
fn exp_nx2(x: f64) -> f64 {
    let xsq = (x * 16.0).trunc() / 16.0;
    let del = (x - xsq) * (x + xsq);
    (-xsq * xsq).exp() * (-del).exp()
}

/// erf(x) for f64 inputs.
pub fn erf_f64(x: f64) -> f64 {
    if x.is_nan() {
        return x;
    }
    erf_core(x)
}

/// erfc(x) = 1 - erf(x).
pub fn erfc_f64(x: f64) -> f64 {
    if x.is_nan() {
        return x;
    }
    let ax = x.abs();
    if ax <= 0.46875 {
        1.0 - erf_core(x)
    } else if x > 0.0 {
        erfc_large(x)
    } else {
        2.0 - erfc_large(ax)
    }
}

/// Error function, generic over the scalar.
pub fn erf<T: Real>(x: T) -> T {
    T::of(erf_f64(x.f64()))
}

/// Standard normal density.
pub fn norm_pdf<T: Real>(x: T) -> T {
    let x = x.f64();
    T::of((-0.5 * x * x).exp() / SQRT_2PI)
}

/// Standard normal distribution function Phi.
pub fn norm_cdf<T: Real>(x: T) -> T {
    let x = x.f64();
    T::of(0.5 * erfc_f64(-x * core::f64::consts::FRAC_1_SQRT_2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn erf_reference_values() {
        assert_abs_diff_eq!(erf_f64(0.0), 0.0, epsilon = 1e-16);
        assert_abs_diff_eq!(erf_f64(0.5), 0.5204998778130465, epsilon = 1e-15);
        assert_abs_diff_eq!(erf_f64(1.0), 0.8427007929497149, epsilon = 1e-15);
        assert_abs_diff_eq!(erf_f64(2.0), 0.9953222650189527, epsilon = 1e-15);
        assert_abs_diff_eq!(erf_f64(-1.0), -0.8427007929497149, epsilon = 1e-15);
        assert_abs_diff_eq!(erfc_f64(3.0), 2.2090496998585441e-5, epsilon = 1e-18);
        assert_abs_diff_eq!(erfc_f64(6.0), 2.1519736712498913e-17, epsilon = 1e-30);
    }

    #[test]
    fn normal_cdf_values() {
        assert_abs_diff_eq!(norm_cdf(0.0f64), 0.5, epsilon = 1e-16);
        assert_abs_diff_eq!(norm_cdf(1.959963984540054f64), 0.975, epsilon = 1e-12);
        assert_abs_diff_eq!(norm_cdf(-1.0f64), 0.15865525393145705, epsilon = 1e-14);
        assert_abs_diff_eq!(norm_pdf(0.0f64), 0.3989422804014327, epsilon = 1e-16);
    }

    #[test]
    fn generic_f32_matches_f64() {
        let x = 0.7f32;
        assert_abs_diff_eq!(erf(x), erf_f64(0.7) as f32, epsilon = 1e-6);
    }
}
