//! Finite measures on the line split into a continuous part and atoms.
//!
//! The time derivative of a marginal flow decomposes into a mass-leaving part
//! and a mass-arriving part of equal total mass and mean. Atoms are kept
//! exactly as `(location, mass)` pairs and are never smoothed.

use std::sync::Arc;

use crate::numeric::quad;
use crate::scalar::Real;

pub type DensityFn<T> = Arc<dyn Fn(T) -> T + Send + Sync>;

/// A nonnegative finite measure: piecewise-continuous density plus atoms.
#[derive(Clone)]
pub struct DecompositionMeasure<T: Real> {
    /// Disjoint, sorted intervals carrying the continuous part.
    pieces: Vec<(T, T)>,
    density: Option<DensityFn<T>>,
    /// Closed-form cumulative of the continuous part, when known.
    cdf: Option<DensityFn<T>>,
    /// Sorted by location.
    atoms: Vec<(T, T)>,
}

impl<T: Real> DecompositionMeasure<T> {
    pub fn continuous(pieces: Vec<(T, T)>, density: DensityFn<T>) -> Self {
        Self {
            pieces,
            density: Some(density),
            cdf: None,
            atoms: Vec::new(),
        }
    }

    pub fn atomic(mut atoms: Vec<(T, T)>) -> Self {
        atoms.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite atom locations"));
        Self {
            pieces: Vec::new(),
            density: None,
            cdf: None,
            atoms,
        }
    }

    /// Attaches a closed-form cumulative for the continuous part.
    pub fn with_cdf(mut self, cdf: DensityFn<T>) -> Self {
        self.cdf = Some(cdf);
        self
    }

    /// Adds atoms to a measure that also carries a continuous part.
    pub fn with_atoms(mut self, atoms: Vec<(T, T)>) -> Self {
        self.atoms.extend(atoms);
        self.atoms
            .sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite atom locations"));
        self
    }

    pub fn pieces(&self) -> &[(T, T)] {
        &self.pieces
    }

    pub fn atoms(&self) -> &[(T, T)] {
        &self.atoms
    }

    pub fn density_at(&self, x: T) -> T {
        match &self.density {
            Some(f) if self.pieces.iter().any(|&(a, b)| x > a && x < b) => f(x),
            _ => T::zero(),
        }
    }

    pub fn has_atoms(&self) -> bool {
        !self.atoms.is_empty()
    }

    /// Smallest interval containing all mass.
    pub fn support_hull(&self) -> (T, T) {
        let mut lo = T::infinity();
        let mut hi = T::neg_infinity();
        for &(a, b) in &self.pieces {
            lo = lo.min(a);
            hi = hi.max(b);
        }
        for &(x, _) in &self.atoms {
            lo = lo.min(x);
            hi = hi.max(x);
        }
        (lo, hi)
    }

    fn integrate_continuous(&self, weight: impl Fn(T) -> T + Copy, tol: T) -> T {
        let Some(f) = &self.density else {
            return T::zero();
        };
        let mut total = T::zero();
        for &(a, b) in &self.pieces {
            total += quad::integrate(|x| f(x) * weight(x), a, b, tol);
        }
        total
    }

    pub fn mass(&self) -> T {
        let atom_mass: T = self.atoms.iter().map(|&(_, m)| m).sum();
        self.integrate_continuous(|_| T::one(), T::of(1e-12)) + atom_mass
    }

    pub fn mean_sum(&self) -> T {
        let atom_mean: T = self.atoms.iter().map(|&(x, m)| x * m).sum();
        self.integrate_continuous(|x| x, T::of(1e-12)) + atom_mean
    }

    /// Mass strictly below `z` (continuous part + atoms at locations `< z`).
    pub fn mass_below(&self, z: T) -> T {
        let atom: T = self
            .atoms
            .iter()
            .filter(|&&(x, _)| x < z)
            .map(|&(_, m)| m)
            .sum();
        let cont = match &self.cdf {
            Some(cdf) => cdf(z),
            None => {
                let Some(f) = &self.density else {
                    return atom;
                };
                let mut total = T::zero();
                for &(a, b) in &self.pieces {
                    if z <= a {
                        break;
                    }
                    let hi = if z < b { z } else { b };
                    total += quad::integrate(|x| f(x), a, hi, T::of(1e-12));
                }
                total
            }
        };
        cont + atom
    }

    /// Integrates a test function against the measure (atoms exact).
    pub fn integrate(&self, g: impl Fn(T) -> T + Copy, tol: T) -> T {
        let atom: T = self.atoms.iter().map(|&(x, m)| g(x) * m).sum();
        self.integrate_continuous(g, tol) + atom
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn atomic_measure_bookkeeping() {
        let m = DecompositionMeasure::atomic(vec![(1.0, 0.5), (-1.0, 0.5)]);
        assert_abs_diff_eq!(m.mass(), 1.0);
        assert_abs_diff_eq!(m.mean_sum(), 0.0);
        assert_abs_diff_eq!(m.mass_below(0.0), 0.5);
        assert_abs_diff_eq!(m.mass_below(1.0), 0.5);
        assert_abs_diff_eq!(m.mass_below(1.0 + 1e-12), 1.0);
    }

    #[test]
    fn continuous_measure_mass_and_mean() {
        let m = DecompositionMeasure::continuous(vec![(0.0, 2.0)], Arc::new(|x: f64| x));
        assert_abs_diff_eq!(m.mass(), 2.0, epsilon = 1e-10);
        assert_abs_diff_eq!(m.mean_sum(), 8.0 / 3.0, epsilon = 1e-10);
        assert_abs_diff_eq!(m.mass_below(1.0), 0.5, epsilon = 1e-10);
    }

    #[test]
    fn two_piece_support() {
        let m = DecompositionMeasure::continuous(
            vec![(-2.0, -1.0), (1.0, 2.0)],
            Arc::new(|_x: f64| 1.0),
        );
        assert_abs_diff_eq!(m.mass(), 2.0, epsilon = 1e-10);
        assert_abs_diff_eq!(m.mass_below(0.0), 1.0, epsilon = 1e-10);
        assert_eq!(m.support_hull(), (-2.0, 2.0));
    }
}
