//! Scaling families `mu_t = law(t^alpha Z)` for a centred profile variable
//! `Z`. Every family capability reduces to a `t`-independent profile
//! evaluation; the dual objects of the variation layer reduce likewise.

use std::sync::Arc;

use super::MarginalFamily;
use crate::error::{Error, Result};
use crate::measure::DecompositionMeasure;
use crate::numeric::quad;
use crate::numeric::special::{norm_cdf, norm_pdf};
use crate::scalar::Real;

/// Shape of the profile law.
#[derive(Debug, Clone)]
pub enum ProfileKind<T> {
    /// Standard normal profile.
    Gaussian,
    /// Uniform on `[-1, 1]`.
    Uniform,
    /// Density sampled on a grid, linearly interpolated.
    Tabulated { z: Vec<T>, rho: Vec<T> },
}

impl<T> ProfileKind<T> {
    fn label(&self) -> &'static str {
        match self {
            ProfileKind::Gaussian => "gaussian",
            ProfileKind::Uniform => "uniform",
            ProfileKind::Tabulated { .. } => "tabulated",
        }
    }
}

/// A validated self-similar profile: exponent, profile density and the
/// derived objects (central interval, rate-bound constant, signed density
/// rate `zeta`).
#[derive(Clone)]
pub struct SelfSimilarProfile<T: Real> {
    alpha: T,
    kind: ProfileKind<T>,
    /// Hull of the support (may be infinite).
    support: (T, T),
    /// Finite window carrying all mass up to negligible tails.
    window: (T, T),
    /// Central interval on which the profile density rate is negative.
    central: (T, T),
    /// Rate-bound constant: `sup zeta^- / rho` over the central interval.
    k_z: T,
    /// Total mass of `zeta^-`.
    zeta_minus_mass: T,
    /// Tabulated-profile cumulants (cdf and first-moment cumulative).
    tab: Option<TabulatedAux<T>>,
}

#[derive(Clone)]
struct TabulatedAux<T> {
    z: Vec<T>,
    rho: Vec<T>,
    slope: Vec<T>, // density slope on each cell
    cdf: Vec<T>,
    m1: Vec<T>, // cumulative of z*rho
}

impl<T: Real> SelfSimilarProfile<T> {
    pub fn new(alpha: T, kind: ProfileKind<T>) -> Result<Self> {
        if !(alpha > T::zero()) {
            return Err(Error::InvalidProfile(format!(
                "exponent must be positive, got {}",
                alpha.f64()
            )));
        }
        match kind {
            ProfileKind::Gaussian => Ok(Self {
                alpha,
                kind,
                support: (T::neg_infinity(), T::infinity()),
                window: (T::of(-12.0), T::of(12.0)),
                central: (-T::one(), T::one()),
                k_z: alpha,
                zeta_minus_mass: T::two() * alpha * norm_pdf(T::one()),
                tab: None,
            }),
            ProfileKind::Uniform => Ok(Self {
                alpha,
                kind,
                support: (-T::one(), T::one()),
                window: (-T::one(), T::one()),
                central: (-T::one(), T::one()),
                k_z: alpha,
                zeta_minus_mass: alpha,
                tab: None,
            }),
            ProfileKind::Tabulated { z, rho } => Self::build_tabulated(alpha, z, rho),
        }
    }

    fn build_tabulated(alpha: T, z: Vec<T>, rho: Vec<T>) -> Result<Self> {
        if z.len() != rho.len() || z.len() < 5 {
            return Err(Error::InvalidProfile(
                "tabulated profile needs matching z/rho arrays with at least 5 nodes".into(),
            ));
        }
        if z.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidProfile("z grid must be strictly increasing".into()));
        }
        if rho.iter().any(|&r| r < T::zero()) {
            return Err(Error::InvalidProfile("density must be nonnegative".into()));
        }
        let n = z.len();
        let mut slope = Vec::with_capacity(n - 1);
        for i in 0..n - 1 {
            slope.push((rho[i + 1] - rho[i]) / (z[i + 1] - z[i]));
        }
        // trapezoid cumulants on the (possibly non-uniform) grid
        let mut cdf = vec![T::zero(); n];
        let mut m1 = vec![T::zero(); n];
        for i in 0..n - 1 {
            let h = z[i + 1] - z[i];
            cdf[i + 1] = cdf[i] + h * (rho[i] + rho[i + 1]) * T::half();
            m1[i + 1] = m1[i] + h * (z[i] * rho[i] + z[i + 1] * rho[i + 1]) * T::half();
        }
        let mass = cdf[n - 1];
        let mean = m1[n - 1];
        let tol = T::of(1e-6);
        if (mass - T::one()).abs() > tol {
            return Err(Error::InvalidProfile(format!(
                "density mass is {}, not 1",
                mass.f64()
            )));
        }
        if mean.abs() > tol {
            return Err(Error::InvalidProfile(format!(
                "density mean is {}, not 0",
                mean.f64()
            )));
        }
        let tab = TabulatedAux {
            z: z.clone(),
            rho: rho.clone(),
            slope,
            cdf,
            m1,
        };
        // locate the central interval: maximal sign-positive run of
        // rho + z rho' through the origin
        let mut probe = Self {
            alpha,
            kind: ProfileKind::Tabulated { z: z.clone(), rho },
            support: (z[0], z[n - 1]),
            window: (z[0], z[n - 1]),
            central: (z[0], z[n - 1]),
            k_z: T::one(),
            zeta_minus_mass: T::zero(),
            tab: Some(tab),
        };
        let m = 4096;
        let lo = z[0];
        let hi = z[n - 1];
        let h = (hi - lo) / T::of(m as f64);
        let disp = |y: T| probe.rho(y) + y * probe.rho_prime(y);
        let mut left = lo;
        let mut right = hi;
        let mut y = T::zero();
        if disp(y) <= T::zero() {
            return Err(Error::InvalidProfile(
                "profile density rate is not negative at the origin".into(),
            ));
        }
        while y - h > lo {
            if disp(y - h) <= T::zero() {
                left = y - h;
                break;
            }
            y = y - h;
        }
        y = T::zero();
        while y + h < hi {
            if disp(y + h) <= T::zero() {
                right = y + h;
                break;
            }
            y = y + h;
        }
        probe.central = (left, right);
        let mut k = T::zero();
        for i in 0..=m {
            let yy = lo + h * T::of(i as f64);
            if yy > left && yy < right {
                let r = probe.rho(yy);
                if r > T::zero() {
                    k = k.max((-probe.zeta(yy)).max(T::zero()) / r);
                }
            }
        }
        probe.k_z = k * (T::one() + T::of(1e-9));
        probe.zeta_minus_mass =
            quad::integrate(|yy| (-probe.zeta(yy)).max(T::zero()), left, right, T::of(1e-12));
        Ok(probe)
    }

    pub fn alpha(&self) -> T {
        self.alpha
    }

    pub fn kind_label(&self) -> &'static str {
        self.kind.label()
    }

    pub fn support(&self) -> (T, T) {
        self.support
    }

    pub fn window(&self) -> (T, T) {
        self.window
    }

    /// The central interval `E` on which mass leaves.
    pub fn central_interval(&self) -> (T, T) {
        self.central
    }

    pub fn rate_bound_constant(&self) -> T {
        self.k_z
    }

    pub fn zeta_minus_mass(&self) -> T {
        self.zeta_minus_mass
    }

    /// Whether the profile is regular enough for the transport optimiser.
    pub fn regular(&self) -> bool {
        !matches!(self.kind, ProfileKind::Uniform)
    }

    pub fn rho(&self, z: T) -> T {
        match &self.kind {
            ProfileKind::Gaussian => norm_pdf(z),
            ProfileKind::Uniform => {
                if z.abs() < T::one() {
                    T::half()
                } else {
                    T::zero()
                }
            }
            ProfileKind::Tabulated { .. } => {
                let tab = self.tab.as_ref().expect("tabulated aux");
                match locate(&tab.z, z) {
                    Some(i) => tab.rho[i] + tab.slope[i] * (z - tab.z[i]),
                    None => T::zero(),
                }
            }
        }
    }

    pub fn rho_prime(&self, z: T) -> T {
        match &self.kind {
            ProfileKind::Gaussian => -z * norm_pdf(z),
            ProfileKind::Uniform => T::zero(),
            ProfileKind::Tabulated { .. } => {
                let tab = self.tab.as_ref().expect("tabulated aux");
                match locate(&tab.z, z) {
                    Some(i) => tab.slope[i],
                    None => T::zero(),
                }
            }
        }
    }

    /// Continuous part of the profile density rate.
    pub fn zeta(&self, z: T) -> T {
        -self.alpha * (self.rho(z) + z * self.rho_prime(z))
    }

    /// Atoms of the positive part of the density rate.
    pub fn zeta_atoms(&self) -> Vec<(T, T)> {
        match self.kind {
            ProfileKind::Uniform => {
                let m = self.alpha * T::half();
                vec![(-T::one(), m), (T::one(), m)]
            }
            _ => Vec::new(),
        }
    }

    pub fn cdf(&self, z: T) -> T {
        match &self.kind {
            ProfileKind::Gaussian => norm_cdf(z),
            ProfileKind::Uniform => ((z + T::one()) * T::half()).max(T::zero()).min(T::one()),
            ProfileKind::Tabulated { .. } => {
                let tab = self.tab.as_ref().expect("tabulated aux");
                match locate(&tab.z, z) {
                    Some(i) => {
                        let d = z - tab.z[i];
                        let r = tab.rho[i] + tab.slope[i] * d;
                        tab.cdf[i] + (tab.rho[i] + r) * d * T::half()
                    }
                    None => {
                        if z <= tab.z[0] {
                            T::zero()
                        } else {
                            T::one()
                        }
                    }
                }
            }
        }
    }

    /// Potential of the profile law.
    pub fn u(&self, y: T) -> T {
        match &self.kind {
            ProfileKind::Gaussian => {
                T::two() * norm_pdf(y) + y * (T::two() * norm_cdf(y) - T::one())
            }
            ProfileKind::Uniform => {
                if y.abs() < T::one() {
                    (T::one() + y * y) * T::half()
                } else {
                    y.abs()
                }
            }
            ProfileKind::Tabulated { .. } => {
                let tab = self.tab.as_ref().expect("tabulated aux");
                let f = self.cdf(y);
                let m1 = match locate(&tab.z, y) {
                    Some(i) => {
                        let d = y - tab.z[i];
                        let r = tab.rho[i] + tab.slope[i] * d;
                        tab.m1[i] + (tab.z[i] * tab.rho[i] + y * r) * d * T::half()
                    }
                    None => {
                        if y <= tab.z[0] {
                            T::zero()
                        } else {
                            *tab.m1.last().expect("nonempty")
                        }
                    }
                };
                y * (T::two() * f - T::one()) - T::two() * m1
            }
        }
    }

    /// `P(y) = alpha/2 (U(y) - y U'(y))`: the profile form of `Q`.
    pub fn p(&self, y: T) -> T {
        match &self.kind {
            ProfileKind::Gaussian => self.alpha * norm_pdf(y),
            ProfileKind::Uniform => {
                if y.abs() < T::one() {
                    self.alpha * (T::one() - y * y) / T::of(4.0)
                } else {
                    T::zero()
                }
            }
            ProfileKind::Tabulated { .. } => {
                let u_prime = T::two() * self.cdf(y) - T::one();
                self.alpha * T::half() * (self.u(y) - y * u_prime)
            }
        }
    }

    /// Derivative of `P`: equals `-alpha y rho(y)` identically.
    pub fn p_prime(&self, y: T) -> T {
        -self.alpha * y * self.rho(y)
    }
}

fn locate<T: Real>(grid: &[T], z: T) -> Option<usize> {
    if z < grid[0] || z > grid[grid.len() - 1] {
        return None;
    }
    let i = grid.partition_point(|&g| g <= z);
    Some(i.saturating_sub(1).min(grid.len() - 2))
}

/// Marginal family generated by scaling a profile variable.
#[derive(Clone)]
pub struct SelfSimilarFamily<T: Real> {
    profile: SelfSimilarProfile<T>,
}

impl<T: Real> SelfSimilarFamily<T> {
    pub fn new(profile: SelfSimilarProfile<T>) -> Self {
        Self { profile }
    }

    fn scale(&self, t: T) -> T {
        t.powf(self.profile.alpha)
    }
}

/// Builds the family generated by `t^alpha Z`; errors if the profile fails
/// its normalisation checks (checked at profile construction).
pub fn self_similar_family<T: Real>(profile: SelfSimilarProfile<T>) -> SelfSimilarFamily<T> {
    SelfSimilarFamily::new(profile)
}

impl<T: Real> MarginalFamily<T> for SelfSimilarFamily<T> {
    fn name(&self) -> String {
        format!("self-similar-{}", self.profile.kind_label())
    }

    fn mean(&self) -> T {
        T::zero()
    }

    fn density(&self, t: T, x: T) -> T {
        let s = self.scale(t);
        self.profile.rho(x / s) / s
    }

    fn cdf(&self, t: T, x: T) -> T {
        self.profile.cdf(x / self.scale(t))
    }

    fn potential(&self, t: T, x: T) -> T {
        let s = self.scale(t);
        s * self.profile.u(x / s)
    }

    fn q(&self, t: T, x: T) -> T {
        let s = self.scale(t);
        s / t * self.profile.p(x / s)
    }

    fn q_prime(&self, t: T, x: T) -> T {
        self.profile.p_prime(x / self.scale(t)) / t
    }

    fn density_rate(&self, t: T, x: T) -> T {
        let s = self.scale(t);
        self.profile.zeta(x / s) / (s * t)
    }

    fn rate(&self, t: T, x: T) -> Result<T> {
        let z = x / self.scale(t);
        let rho = self.profile.rho(z);
        if rho <= T::zero() {
            return Err(Error::QueryOutsideSupport {
                family: self.name(),
                t: t.f64(),
                x: x.f64(),
            });
        }
        Ok((-self.profile.zeta(z)).max(T::zero()) / rho / t)
    }

    fn rate_bound(&self, t: T) -> T {
        self.profile.rate_bound_constant() / t
    }

    fn support(&self, t: T) -> (T, T) {
        let s = self.scale(t);
        let (lo, hi) = self.profile.support();
        (lo * s, hi * s)
    }

    fn gamma_support(&self, t: T) -> (T, T) {
        let s = self.scale(t);
        let (lo, hi) = self.profile.central_interval();
        (lo * s, hi * s)
    }

    fn lambda_support(&self, t: T) -> (T, T) {
        <Self as MarginalFamily<T>>::support(self, t)
    }

    fn quad_window(&self, t: T) -> (T, T) {
        let s = self.scale(t);
        let (lo, hi) = self.profile.window();
        (lo * s, hi * s)
    }

    fn decompose(&self, t: T) -> Result<(DecompositionMeasure<T>, DecompositionMeasure<T>)> {
        let s = self.scale(t);
        let (el, er) = <Self as MarginalFamily<T>>::gamma_support(self, t);
        let (wl, wr) = <Self as MarginalFamily<T>>::quad_window(self, t);
        let me = self.clone();
        let gamma = DecompositionMeasure::continuous(
            vec![(el, er)],
            Arc::new(move |x: T| (-me.density_rate(t, x)).max(T::zero())),
        );
        let me = self.clone();
        let lambda_density: crate::measure::DensityFn<T> =
            Arc::new(move |x: T| me.density_rate(t, x).max(T::zero()));
        let atoms: Vec<(T, T)> = self
            .profile
            .zeta_atoms()
            .into_iter()
            .map(|(z, m)| (z * s, m / t))
            .collect();
        let mut pieces = Vec::new();
        if wl < el {
            pieces.push((wl, el));
        }
        if er < wr {
            pieces.push((er, wr));
        }
        let lambda = if atoms.is_empty() {
            DecompositionMeasure::continuous(pieces, lambda_density)
        } else if pieces.is_empty() {
            DecompositionMeasure::atomic(atoms)
        } else {
            DecompositionMeasure::continuous(pieces, lambda_density).with_atoms(atoms)
        };
        Ok((gamma, lambda))
    }

    fn gamma_mass(&self, t: T) -> T {
        self.profile.zeta_minus_mass() / t
    }

    fn dispersion(&self) -> bool {
        self.profile.regular()
    }

    fn hk_closed_form(&self, t: T, _x: T) -> Option<(T, T)> {
        match self.profile.kind {
            ProfileKind::Uniform => {
                let s = self.scale(t);
                Some((-s, s))
            }
            _ => None,
        }
    }

    fn profile(&self) -> Option<SelfSimilarProfile<T>> {
        Some(self.profile.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::{GaussianFamily, UniformFamily};
    use approx::assert_abs_diff_eq;

    #[test]
    fn gaussian_profile_scaling_identities() {
        let fam = self_similar_family(
            SelfSimilarProfile::<f64>::new(0.5, ProfileKind::Gaussian).unwrap(),
        );
        // rho(4, 0) = rho_Z(0)/2
        assert_abs_diff_eq!(fam.density(4.0, 0.0), norm_pdf(0.0f64) / 2.0, epsilon = 1e-15);
        // matches the direct closed-form family everywhere tested
        let direct = GaussianFamily;
        for t in [0.3, 1.0, 2.5] {
            for x in [-1.7, -0.2, 0.0, 0.9, 2.1] {
                assert_abs_diff_eq!(fam.density(t, x), direct.density(t, x), epsilon = 1e-13);
                assert_abs_diff_eq!(fam.q(t, x), direct.q(t, x), epsilon = 1e-13);
                assert_abs_diff_eq!(fam.q_prime(t, x), direct.q_prime(t, x), epsilon = 1e-13);
                assert_abs_diff_eq!(
                    fam.density_rate(t, x),
                    direct.density_rate(t, x),
                    epsilon = 1e-13
                );
                assert_abs_diff_eq!(fam.potential(t, x), direct.potential(t, x), epsilon = 1e-12);
                assert_abs_diff_eq!(
                    fam.rate(t, x).unwrap(),
                    direct.rate(t, x).unwrap(),
                    epsilon = 1e-13
                );
            }
        }
        // central interval scales like sqrt(t)
        let (l, r) = fam.gamma_support(0.49);
        assert_abs_diff_eq!(l, -0.7, epsilon = 1e-12);
        assert_abs_diff_eq!(r, 0.7, epsilon = 1e-12);
    }

    #[test]
    fn uniform_profile_scaling_identities() {
        let fam =
            self_similar_family(SelfSimilarProfile::<f64>::new(1.0, ProfileKind::Uniform).unwrap());
        assert_abs_diff_eq!(fam.density(2.0, 1.0), 0.25, epsilon = 1e-15);
        let direct = UniformFamily;
        for t in [0.5, 1.0, 2.0] {
            for x in [-0.9, 0.0, 0.3] {
                let xs = x * t;
                assert_abs_diff_eq!(fam.density(t, xs), direct.density(t, xs), epsilon = 1e-14);
                assert_abs_diff_eq!(fam.q(t, xs), direct.q(t, xs), epsilon = 1e-14);
            }
        }
        let (g, l) = fam.decompose(2.0).unwrap();
        assert_abs_diff_eq!(g.mass(), 0.5, epsilon = 1e-12);
        assert_eq!(l.atoms().len(), 2);
        assert_abs_diff_eq!(l.atoms()[0].1, 0.25, epsilon = 1e-14);
    }

    #[test]
    fn tabulated_profile_validates_and_scales() {
        // triangular density on [-2, 2], mass 1, mean 0
        let n = 401;
        let z: Vec<f64> = (0..n).map(|i| -2.0 + 4.0 * i as f64 / (n - 1) as f64).collect();
        let rho: Vec<f64> = z.iter().map(|&zz: &f64| (0.5 - zz.abs() * 0.25).max(0.0)).collect();
        let p = SelfSimilarProfile::new(1.0, ProfileKind::Tabulated { z, rho }).unwrap();
        let (el, er) = p.central_interval();
        // rho + z rho' = 0.5 - |z|/2 for the triangle: positive iff |z| < 1
        assert_abs_diff_eq!(el, -1.0, epsilon = 1e-2);
        assert_abs_diff_eq!(er, 1.0, epsilon = 1e-2);
        let fam = self_similar_family(p);
        assert_abs_diff_eq!(fam.density(2.0, 0.0), 0.25, epsilon = 1e-12);
    }

    #[test]
    fn rejects_unnormalised_profile() {
        let z: Vec<f64> = (0..11).map(|i| -1.0 + 0.2 * i as f64).collect();
        let rho = vec![1.0; 11];
        assert!(SelfSimilarProfile::new(1.0, ProfileKind::Tabulated { z, rho }).is_err());
    }
}
