//! Martingale transports: the conditional jump laws of the process.
//!
//! Two constructions are provided. The binomial kernel sends mass at `x` to
//! a two-point law on `{a, b}` with `a < x < b` chosen to minimise expected
//! jump size (built in [`hk`]); the general kernel handles arbitrary
//! mass-pair decompositions through tail formulas built from the chord-slope
//! auxiliaries (built in [`hp`]). Both expose quantile evaluation, which is
//! all the simulator needs.

mod hk;
mod hp;
mod pushforward;

pub use hk::{hk_bounds, hk_bounds_warm, hk_kernel};
pub use hp::{
    hp_auxiliaries, hp_kernel, hp_kernel_for_family, point_source_kernel, HpAuxiliaries,
};
pub use pushforward::pushforward_check;

use crate::scalar::Real;

/// Two-point martingale jump law.
#[derive(Debug, Clone, Copy)]
pub struct BinomialKernel<T> {
    /// Down target.
    pub a: T,
    /// Up target.
    pub b: T,
    /// Source point.
    pub x: T,
    pub p_up: T,
    pub p_down: T,
}

impl<T: Real> BinomialKernel<T> {
    /// Builds the kernel with the martingale weights. Requires `a < x < b`.
    pub fn new(a: T, x: T, b: T) -> Self {
        debug_assert!(a < x && x < b, "need a < x < b");
        let span = b - a;
        Self {
            a,
            b,
            x,
            p_up: (x - a) / span,
            p_down: (b - x) / span,
        }
    }

    pub fn quantile(&self, u: T) -> T {
        if u <= self.p_down {
            self.a
        } else {
            self.b
        }
    }

    pub fn mean(&self) -> T {
        self.p_down * self.a + self.p_up * self.b
    }

    /// Expected absolute jump size from the source.
    pub fn expected_abs_jump(&self) -> T {
        T::two() * (self.b - self.x) * (self.x - self.a) / (self.b - self.a)
    }
}

/// One node of a tail table: the tail value at the node and just past it
/// differ exactly by the atom mass at the node.
#[derive(Debug, Clone, Copy)]
pub(crate) struct TailNode<T> {
    pub z: T,
    /// For upper tables: `pi([z, inf))`. For lower tables: `pi((-inf, z])`.
    pub at: T,
    /// For upper tables: `pi((z, inf))`. For lower tables: `pi((-inf, z))`.
    pub beyond: T,
}

/// General martingale jump law given through its two tail functions.
#[derive(Clone)]
pub struct GeneralKernel<T: Real> {
    source: T,
    /// Nodes above the source, ascending in `z`.
    upper: Vec<TailNode<T>>,
    /// Nodes below the source, ascending in `z`.
    lower: Vec<TailNode<T>>,
    mass_at_source: T,
    mean: T,
}

impl<T: Real> GeneralKernel<T> {
    pub(crate) fn from_parts(
        source: T,
        upper: Vec<TailNode<T>>,
        lower: Vec<TailNode<T>>,
        mass_at_source: T,
        mean: T,
    ) -> Self {
        Self {
            source,
            upper,
            lower,
            mass_at_source,
            mean,
        }
    }

    pub fn source(&self) -> T {
        self.source
    }

    pub fn mass_at_source(&self) -> T {
        self.mass_at_source
    }

    /// Total mass (one, up to the quadrature error of the construction).
    pub fn mass(&self) -> T {
        self.mass_down() + self.mass_at_source + self.mass_up()
    }

    pub fn mass_up(&self) -> T {
        self.upper.first().map_or(T::zero(), |n| n.at)
    }

    pub fn mass_down(&self) -> T {
        self.lower.last().map_or(T::zero(), |n| n.at)
    }

    pub fn mean(&self) -> T {
        self.mean
    }

    /// Upper tail `pi([z, inf))` for `z > source`.
    pub fn upper_tail(&self, z: T) -> T {
        if self.upper.is_empty() || z <= self.source {
            return self.mass_up();
        }
        let n = self.upper.len();
        if z > self.upper[n - 1].z {
            return T::zero();
        }
        let i = self.upper.partition_point(|node| node.z < z);
        if i == 0 {
            return self.upper[0].at;
        }
        let (lo, hi) = (self.upper[i - 1], self.upper[i]);
        if hi.z == z {
            return hi.at;
        }
        // linear across the continuous piece between the nodes
        let w = (z - lo.z) / (hi.z - lo.z);
        lo.beyond + (hi.at - lo.beyond) * w
    }

    /// Lower tail `pi((-inf, z])` for `z < source`.
    pub fn lower_tail(&self, z: T) -> T {
        if self.lower.is_empty() || z >= self.source {
            return self.mass_down();
        }
        if z < self.lower[0].z {
            return T::zero();
        }
        let i = self.lower.partition_point(|node| node.z <= z);
        let lo = self.lower[i - 1];
        if i >= self.lower.len() || lo.z == z {
            return lo.at;
        }
        let hi = self.lower[i];
        let w = (z - lo.z) / (hi.z - lo.z);
        lo.at + (hi.beyond - lo.at) * w
    }

    /// Generalized inverse of the kernel distribution function.
    pub fn quantile(&self, u: T) -> T {
        let down = self.mass_down();
        let total = self.mass();
        let u = u.max(T::zero()).min(T::one()) * total;
        if u <= down && !self.lower.is_empty() {
            // smallest z with lower cdf >= u
            let i = self.lower.partition_point(|node| node.at < u);
            if i == 0 {
                return self.lower[0].z;
            }
            if i >= self.lower.len() {
                return self.source;
            }
            let (lo, hi) = (self.lower[i - 1], self.lower[i]);
            if u <= hi.beyond && hi.beyond > lo.at {
                // interpolate inside the continuous piece
                let w = (u - lo.at) / (hi.beyond - lo.at);
                return lo.z + (hi.z - lo.z) * w;
            }
            return hi.z;
        }
        if u <= down + self.mass_at_source || self.upper.is_empty() {
            return self.source;
        }
        // invert the upper tail: smallest y with pi((y, inf)) <= total - u
        let target = total - u;
        let i = self.upper.partition_point(|node| node.beyond > target);
        if i >= self.upper.len() {
            return self.upper[self.upper.len() - 1].z;
        }
        if i == 0 {
            return self.upper[0].z;
        }
        let (lo, hi) = (self.upper[i - 1], self.upper[i]);
        if hi.at >= target && hi.at > lo.beyond {
            // the tail falls linearly from lo.beyond to hi.at across the piece
            let w = (lo.beyond - target) / (lo.beyond - hi.at);
            return lo.z + (hi.z - lo.z) * w.max(T::zero()).min(T::one());
        }
        hi.z
    }
}

/// A conditional jump law, queryable by quantile.
#[derive(Clone)]
pub enum JumpKernel<T: Real> {
    Binomial(BinomialKernel<T>),
    General(GeneralKernel<T>),
}

impl<T: Real> JumpKernel<T> {
    /// Post-jump location for label `u` in `(0, 1)`:
    /// the generalized inverse `inf { y : F(y) >= u }` of the kernel cdf.
    pub fn quantile(&self, u: T) -> T {
        match self {
            JumpKernel::Binomial(k) => k.quantile(u),
            JumpKernel::General(k) => k.quantile(u),
        }
    }

    pub fn source(&self) -> T {
        match self {
            JumpKernel::Binomial(k) => k.x,
            JumpKernel::General(k) => k.source(),
        }
    }

    pub fn mean(&self) -> T {
        match self {
            JumpKernel::Binomial(k) => k.mean(),
            JumpKernel::General(k) => k.mean(),
        }
    }

    pub fn mass(&self) -> T {
        match self {
            JumpKernel::Binomial(k) => k.p_up + k.p_down,
            JumpKernel::General(k) => k.mass(),
        }
    }
}

/// Evaluates the generalized inverse of a kernel's distribution function.
pub fn kernel_quantile<T: Real>(kernel: &JumpKernel<T>, u: T) -> T {
    kernel.quantile(u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn binomial_quantile_examples() {
        let k = BinomialKernel::new(-1.0, 0.3, 1.0);
        assert_abs_diff_eq!(k.p_down, 0.35, epsilon = 1e-15);
        assert_eq!(k.quantile(0.2), -1.0);
        assert_eq!(k.quantile(0.9), 1.0);
        assert_abs_diff_eq!(k.mean(), 0.3, epsilon = 1e-15);
    }

    proptest! {
        #[test]
        fn binomial_kernel_is_exactly_martingale(
            a in -10.0f64..0.0,
            gap1 in 1e-6f64..5.0,
            gap2 in 1e-6f64..5.0,
        ) {
            let x = a + gap1;
            let b = x + gap2;
            let k = BinomialKernel::new(a, x, b);
            prop_assert!((k.mean() - x).abs() <= 1e-11 * (1.0 + x.abs() + b.abs()));
            prop_assert!((k.p_up + k.p_down - 1.0).abs() <= 1e-14);
        }

        #[test]
        fn binomial_quantile_monotone(u1 in 0.001f64..0.999, u2 in 0.001f64..0.999) {
            let k = BinomialKernel::new(-2.0, -0.5, 3.0);
            let (lo, hi) = if u1 <= u2 { (u1, u2) } else { (u2, u1) };
            prop_assert!(k.quantile(lo) <= k.quantile(hi));
        }
    }
}
