//! Binomial transport targets: for a source `x` in the central interval the
//! mass moves to a pair `a < x < b` outside it, chosen to maximise the chord
//! slope
//!
//! ```text
//! phi(x) = max_{alpha < x < beta} ( Qx(beta) - Q(alpha) ) / (beta - alpha),
//! Qx(y)  = Q(x) + Q'(x) (y - x) - Q(y),
//! ```
//!
//! whose stationarity conditions are `Q'(a) = phi` and `Q'(x) - Q'(b) = phi`.
//! The solver runs a damped Newton iteration on the pair of first-order
//! conditions from a coarse-scan start, falling back to bisection on the
//! nested scalar characterisation in `phi`.

use super::{BinomialKernel, JumpKernel};
use crate::error::{Error, Result};
use crate::family::MarginalFamily;
use crate::numeric::roots;
use crate::scalar::Real;

const MAX_NEWTON: usize = 80;

struct Problem<'a, T: Real> {
    fam: &'a dyn MarginalFamily<T>,
    t: T,
    x: T,
    qx: T,
    qpx: T,
    /// admissible windows for the two targets
    a_window: (T, T),
    b_window: (T, T),
}

impl<'a, T: Real> Problem<'a, T> {
    fn new(fam: &'a dyn MarginalFamily<T>, t: T, x: T) -> Result<Self> {
        let (gl, gr) = fam.gamma_support(t);
        if !(x > gl && x < gr) {
            return Err(Error::ConvergenceFailure(format!(
                "source {} outside the central interval ({}, {}) at t={}",
                x.f64(),
                gl.f64(),
                gr.f64(),
                t.f64()
            )));
        }
        let (wlo, whi) = fam.quad_window(t);
        let (ll, lr) = fam.lambda_support(t);
        Ok(Self {
            fam,
            t,
            x,
            qx: fam.q(t, x),
            qpx: fam.q_prime(t, x),
            a_window: (wlo.max(ll), gl),
            b_window: (gr, whi.min(lr)),
        })
    }

    fn q(&self, y: T) -> T {
        self.fam.q(self.t, y)
    }

    fn qp(&self, y: T) -> T {
        self.fam.q_prime(self.t, y)
    }

    fn qpp(&self, y: T) -> T {
        self.fam.density_rate(self.t, y)
    }

    /// Chord slope of the objective for a candidate pair.
    fn slope(&self, a: T, b: T) -> T {
        (self.qx + self.qpx * (b - self.x) - self.q(b) - self.q(a)) / (b - a)
    }

    fn residuals(&self, a: T, b: T) -> (T, T) {
        let chord = self.qx + self.qpx * (b - self.x) - self.q(b) - self.q(a);
        let f1 = self.qp(a) * (b - a) - chord;
        let f2 = (self.qpx - self.qp(b)) * (b - a) - chord;
        (f1, f2)
    }

    /// Coarse maximisation of the chord slope over a quadratically refined
    /// candidate grid (denser near the central interval).
    fn scan_start(&self) -> (T, T) {
        let n = 18;
        let mut best = (self.a_window.1 - self.gap_a(), self.b_window.0 + self.gap_b());
        let mut best_slope = T::neg_infinity();
        let cands_a: Vec<T> = (1..=n)
            .map(|k| {
                let f = T::of(k as f64 / n as f64);
                self.a_window.1 - (self.a_window.1 - self.a_window.0) * f * f
            })
            .collect();
        let cands_b: Vec<T> = (1..=n)
            .map(|k| {
                let f = T::of(k as f64 / n as f64);
                self.b_window.0 + (self.b_window.1 - self.b_window.0) * f * f
            })
            .collect();
        let qa: Vec<T> = cands_a.iter().map(|&a| self.q(a)).collect();
        for &b in &cands_b {
            let part = self.qx + self.qpx * (b - self.x) - self.q(b);
            for (i, &a) in cands_a.iter().enumerate() {
                let s = (part - qa[i]) / (b - a);
                if s > best_slope {
                    best_slope = s;
                    best = (a, b);
                }
            }
        }
        best
    }

    fn gap_a(&self) -> T {
        (self.a_window.1 - self.a_window.0) * T::of(1e-3)
    }

    fn gap_b(&self) -> T {
        (self.b_window.1 - self.b_window.0) * T::of(1e-3)
    }

    fn newton(&self, start: (T, T)) -> Option<(T, T)> {
        let (mut a, mut b) = start;
        let clamp = |v: T, w: (T, T), cur: T| -> T {
            if v > w.0 && v < w.1 {
                v
            } else if v <= w.0 {
                (cur + w.0) * T::half()
            } else {
                (cur + w.1) * T::half()
            }
        };
        let (mut f1, mut f2) = self.residuals(a, b);
        let mut norm = f1.abs() + f2.abs();
        for _ in 0..MAX_NEWTON {
            let j11 = self.qpp(a) * (b - a);
            let j22 = -self.qpp(b) * (b - a);
            let j12 = self.qp(a) - self.qpx + self.qp(b);
            let det = j11 * j22 - j12 * j12;
            if det == T::zero() || !det.is_finite() {
                return None;
            }
            let mut da = (-f1 * j22 + f2 * j12) / det;
            let mut db = (-j11 * f2 + j12 * f1) / det;
            // damped update with backtracking
            let mut improved = false;
            for _ in 0..30 {
                let an = clamp(a + da, self.a_window, a);
                let bn = clamp(b + db, self.b_window, b);
                let (g1, g2) = self.residuals(an, bn);
                let n_new = g1.abs() + g2.abs();
                if n_new < norm || (an == a && bn == b) {
                    a = an;
                    b = bn;
                    f1 = g1;
                    f2 = g2;
                    norm = n_new;
                    improved = true;
                    break;
                }
                da = da * T::half();
                db = db * T::half();
            }
            if !improved {
                break;
            }
            let scale = self.residual_scale(a, b);
            if norm <= scale * T::of(1e-13) {
                return Some((a, b));
            }
        }
        let scale = self.residual_scale(a, b);
        if norm <= scale * T::of(1e-10) {
            Some((a, b))
        } else {
            None
        }
    }

    fn residual_scale(&self, a: T, b: T) -> T {
        (self.qx.abs() + self.qpx.abs() * (b - a) + self.q(a).abs() + self.q(b).abs())
            .max(T::of(1e-30))
    }

    /// Bisection on the nested scalar characterisation: for a trial slope
    /// `phi`, `a(phi)` solves `Q'(a) = phi` on the left branch and `b(phi)`
    /// solves `Q'(x) - Q'(b) = phi` on the right branch; the achieved chord
    /// slope must equal `phi`.
    fn nested_bisection(&self) -> Result<(T, T)> {
        let tol = T::of(1e-14);
        let phi_cap_left = self.qp(self.a_window.1);
        let phi_cap_right = self.qpx - self.qp(self.b_window.0);
        let hi = phi_cap_left.min(phi_cap_right);
        let lo = self.qpx.max(T::zero());
        if !(hi > lo) {
            return Err(Error::ConvergenceFailure(
                "empty slope window in nested bisection".into(),
            ));
        }
        let pair_for = |phi: T| -> Result<(T, T)> {
            let a = roots::bisect(
                |y| self.qp(y) - phi,
                self.a_window.0,
                self.a_window.1,
                tol,
            )?;
            let b = roots::bisect(
                |y| self.qp(y) - (self.qpx - phi),
                self.b_window.0,
                self.b_window.1,
                tol,
            )?;
            Ok((a, b))
        };
        let g = |phi: T| -> Result<T> {
            let (a, b) = pair_for(phi)?;
            Ok(self.slope(a, b) - phi)
        };
        // scan for a sign change; the root is the fixed point of the slope map
        let n = 64;
        let mut prev_phi = lo + (hi - lo) * T::of(1e-6);
        let mut prev_g = g(prev_phi)?;
        let mut bracket = None;
        for k in 1..=n {
            let phi = lo + (hi - lo) * T::of(k as f64 / (n as f64 + 1.0));
            let val = g(phi)?;
            if (val > T::zero()) != (prev_g > T::zero()) {
                bracket = Some((prev_phi, phi));
                break;
            }
            prev_phi = phi;
            prev_g = val;
        }
        let (mut plo, mut phi_hi) = bracket.ok_or_else(|| {
            Error::ConvergenceFailure("no slope fixed point found in scan".into())
        })?;
        let mut glo = g(plo)?;
        for _ in 0..100 {
            let mid = (plo + phi_hi) * T::half();
            let gm = g(mid)?;
            if (gm > T::zero()) == (glo > T::zero()) {
                plo = mid;
                glo = gm;
            } else {
                phi_hi = mid;
            }
            if phi_hi - plo <= T::of(1e-15) * (T::one() + plo.abs()) {
                break;
            }
        }
        pair_for((plo + phi_hi) * T::half())
    }
}

/// Binomial transport targets for source `x` at time `t`.
///
/// Families with an exact closed-form transport short-circuit the solver;
/// otherwise the dispersion assumption is required.
pub fn hk_bounds<T: Real>(family: &dyn MarginalFamily<T>, t: T, x: T) -> Result<(T, T)> {
    hk_bounds_warm(family, t, x, None)
}

/// As [`hk_bounds`], reusing a previous solution as the Newton start. Table
/// builders marching across the central interval pass the neighbouring
/// column here.
pub fn hk_bounds_warm<T: Real>(
    family: &dyn MarginalFamily<T>,
    t: T,
    x: T,
    warm: Option<(T, T)>,
) -> Result<(T, T)> {
    if let Some(ab) = family.hk_closed_form(t, x) {
        return Ok(ab);
    }
    if !family.dispersion() {
        return Err(Error::NoDispersion(family.name()));
    }
    let problem = Problem::new(family, t, x)?;
    let start = match warm {
        Some((a, b))
            if a > problem.a_window.0
                && a < problem.a_window.1
                && b > problem.b_window.0
                && b < problem.b_window.1 =>
        {
            (a, b)
        }
        _ => problem.scan_start(),
    };
    if let Some((a, b)) = problem.newton(start) {
        return Ok((a, b));
    }
    if warm.is_some() {
        if let Some((a, b)) = problem.newton(problem.scan_start()) {
            return Ok((a, b));
        }
    }
    problem.nested_bisection()
}

/// The binomial martingale kernel at `(t, x)`.
pub fn hk_kernel<T: Real>(family: &dyn MarginalFamily<T>, t: T, x: T) -> Result<JumpKernel<T>> {
    let (a, b) = hk_bounds(family, t, x)?;
    Ok(JumpKernel::Binomial(BinomialKernel::new(a, x, b)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::{AtomMixFamily, ExpBrownianFamily, GaussianFamily, UniformFamily};
    use approx::assert_abs_diff_eq;

    /// Symmetric Gaussian root at the origin: `b` solves
    /// `2 (b^2 + 1) = exp(b^2 / 2)`.
    fn gaussian_symmetric_root() -> f64 {
        let f = |s: f64| 2.0 * (s + 1.0) - (s / 2.0).exp();
        let r = crate::numeric::roots::bisect(f, 1.0, 20.0, 1e-15).unwrap();
        r.sqrt()
    }

    #[test]
    fn gaussian_symmetric_bounds() {
        let fam = GaussianFamily;
        let (a, b) = hk_bounds(&fam as &dyn MarginalFamily<f64>, 1.0, 0.0).unwrap();
        let b_ref = gaussian_symmetric_root();
        assert_abs_diff_eq!(b, b_ref, epsilon = 1e-8);
        assert_abs_diff_eq!(a, -b_ref, epsilon = 1e-8);
        assert_abs_diff_eq!(b_ref, 2.2259, epsilon = 1e-4);
    }

    #[test]
    fn uniform_closed_form() {
        let fam = UniformFamily;
        let (a, b) = hk_bounds(&fam as &dyn MarginalFamily<f64>, 1.0, 0.3).unwrap();
        assert_eq!((a, b), (-1.0, 1.0));
        let k = hk_kernel(&fam as &dyn MarginalFamily<f64>, 2.0, 1.0).unwrap();
        match k {
            JumpKernel::Binomial(bk) => {
                assert_abs_diff_eq!(bk.p_down, 0.25, epsilon = 1e-15);
                assert_abs_diff_eq!(bk.p_up, 0.75, epsilon = 1e-15);
                assert_eq!((bk.a, bk.b), (-2.0, 2.0));
            }
            _ => panic!("expected binomial kernel"),
        }
    }

    #[test]
    fn bounds_continuous_through_origin() {
        let fam = GaussianFamily;
        let (al, bl) = hk_bounds(&fam as &dyn MarginalFamily<f64>, 1.0, -1e-7).unwrap();
        let (ar, br) = hk_bounds(&fam as &dyn MarginalFamily<f64>, 1.0, 1e-7).unwrap();
        assert_abs_diff_eq!(al, ar, epsilon = 1e-5);
        assert_abs_diff_eq!(bl, br, epsilon = 1e-5);
    }

    #[test]
    fn bounds_decrease_in_x() {
        let fam = GaussianFamily;
        let mut prev: Option<(f64, f64)> = None;
        let mut warm = None;
        for i in 0..17 {
            let x = -0.8 + 0.1 * i as f64;
            let (a, b) = hk_bounds_warm(&fam as &dyn MarginalFamily<f64>, 1.0, x, warm).unwrap();
            if let Some((pa, pb)) = prev {
                assert!(a <= pa + 1e-9, "a not decreasing at x={x}: {a} vs {pa}");
                assert!(b <= pb + 1e-9, "b not decreasing at x={x}: {b} vs {pb}");
            }
            prev = Some((a, b));
            warm = Some((a, b));
        }
    }

    #[test]
    fn first_order_conditions_hold() {
        let fam = GaussianFamily;
        for &(t, x) in &[(1.0, 0.0), (1.0, 0.5), (0.25, -0.22), (2.0, 0.9)] {
            let (a, b) = hk_bounds(&fam as &dyn MarginalFamily<f64>, t, x).unwrap();
            let phi = (fam.q(t, x) + fam.q_prime(t, x) * (b - x) - fam.q(t, b) - fam.q(t, a))
                / (b - a);
            assert_abs_diff_eq!(fam.q_prime(t, a), phi, epsilon = 1e-9);
            assert_abs_diff_eq!(fam.q_prime(t, x) - fam.q_prime(t, b), phi, epsilon = 1e-9);
            assert!(phi > 0.0);
        }
    }

    #[test]
    fn exp_brownian_bounds_are_sane() {
        let fam = ExpBrownianFamily;
        let t = 1.0;
        let (gl, gr) = MarginalFamily::<f64>::gamma_support(&fam, t);
        for x in [gl * 1.2, 1.0, gr * 0.8] {
            let (a, b) = hk_bounds(&fam as &dyn MarginalFamily<f64>, t, x).unwrap();
            assert!(a < gl && b > gr, "targets must straddle the centre");
            let k = hk_kernel(&fam as &dyn MarginalFamily<f64>, t, x).unwrap();
            assert_abs_diff_eq!(k.mean(), x, epsilon = 1e-10);
        }
    }

    #[test]
    fn no_dispersion_family_rejected() {
        let fam = AtomMixFamily;
        match hk_bounds(&fam as &dyn MarginalFamily<f64>, 1.0, 0.0) {
            Err(crate::Error::NoDispersion(_)) => {}
            other => panic!("expected NoDispersion, got {other:?}"),
        }
    }
}
