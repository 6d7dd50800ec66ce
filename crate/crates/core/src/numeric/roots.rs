//! Scalar root-finding: bracketed bisection and guarded Newton.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Bisection on `[lo, hi]`, which must bracket a sign change.
/// Stops when the bracket width falls below `tol`.
pub fn bisect<T: Real, F: Fn(T) -> T>(f: F, mut lo: T, mut hi: T, tol: T) -> Result<T> {
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == T::zero() {
        return Ok(lo);
    }
    if fhi == T::zero() {
        return Ok(hi);
    }
    if (flo > T::zero()) == (fhi > T::zero()) {
        return Err(Error::ConvergenceFailure(format!(
            "bisect: no sign change on [{}, {}]",
            lo.f64(),
            hi.f64()
        )));
    }
    for _ in 0..200 {
        let mid = (lo + hi) * T::half();
        if mid == lo || mid == hi {
            break;
        }
        let fm = f(mid);
        if fm == T::zero() {
            return Ok(mid);
        }
        if (fm > T::zero()) == (flo > T::zero()) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
        if hi - lo <= tol {
            break;
        }
    }
    Ok((lo + hi) * T::half())
}

/// Newton iteration guarded by a bracket: steps that leave `[lo, hi]` or fail
/// to reduce the residual fall back to bisection on the maintained bracket.
pub fn newton_bracketed<T: Real>(
    f: impl Fn(T) -> T,
    df: impl Fn(T) -> T,
    x0: T,
    mut lo: T,
    mut hi: T,
    tol: T,
) -> Result<T> {
    let mut x = x0.max(lo).min(hi);
    let mut fx = f(x);
    let flo = f(lo);
    for _ in 0..100 {
        if fx.abs() <= tol {
            return Ok(x);
        }
        // maintain the bracket
        if (fx > T::zero()) == (flo > T::zero()) {
            lo = x;
        } else {
            hi = x;
        }
        let d = df(x);
        let step = if d != T::zero() { fx / d } else { T::infinity() };
        let mut x_new = x - step;
        if !(x_new > lo && x_new < hi) || !x_new.is_finite() {
            x_new = (lo + hi) * T::half();
        }
        if x_new == x {
            return Ok(x);
        }
        x = x_new;
        fx = f(x);
    }
    if fx.abs() <= tol * T::of(1e3) {
        Ok(x)
    } else {
        Err(Error::ConvergenceFailure(format!(
            "newton: residual {} at x={}",
            fx.f64(),
            x.f64()
        )))
    }
}

/// Generalized-inverse lookup on a sorted, non-decreasing column:
/// smallest index `i` with `col[i] >= v` (col ascending), using binary search.
pub fn lower_bound_by<T: Real>(col: &[T], v: T) -> usize {
    col.partition_point(|&c| c < v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn bisect_sqrt2() {
        let r = bisect(|x: f64| x * x - 2.0, 0.0, 2.0, 1e-14).unwrap();
        assert_abs_diff_eq!(r, std::f64::consts::SQRT_2, epsilon = 1e-13);
    }

    #[test]
    fn newton_with_bad_start_recovers() {
        let r = newton_bracketed(
            |x: f64| x.exp() - 3.0,
            |x: f64| x.exp(),
            10.0,
            0.0,
            10.0,
            1e-14,
        )
        .unwrap();
        assert_abs_diff_eq!(r, 3.0f64.ln(), epsilon = 1e-12);
    }

    #[test]
    fn bisect_rejects_no_bracket() {
        assert!(bisect(|x: f64| x * x + 1.0, -1.0, 1.0, 1e-12).is_err());
    }
}
