//! Verifies that a kernel family transports the mass-leaving measure onto
//! the mass-arriving measure: the defining marginal property of a
//! martingale transport.

use super::JumpKernel;
use crate::error::Result;
use crate::family::MarginalFamily;
use crate::measure::DecompositionMeasure;
use crate::scalar::Real;

struct Buckets<T> {
    edges: Vec<T>,
    bins: Vec<T>,
    atoms: Vec<(T, T)>,
    atom_tol: T,
}

impl<T: Real> Buckets<T> {
    fn new(lo: T, hi: T, bins: usize, atom_locs: &[(T, T)]) -> Self {
        let mut edges: Vec<T> = (0..=bins)
            .map(|k| lo + (hi - lo) * T::of(k as f64 / bins as f64))
            .collect();
        for &(u, _) in atom_locs {
            edges.push(u);
        }
        edges.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
        edges.dedup();
        let n = edges.len() - 1;
        Self {
            edges,
            bins: vec![T::zero(); n],
            atoms: atom_locs.iter().map(|&(u, _)| (u, T::zero())).collect(),
            atom_tol: (hi - lo) * T::of(1e-11),
        }
    }

    fn deposit_point(&mut self, y: T, mass: T) {
        for a in self.atoms.iter_mut() {
            if (a.0 - y).abs() <= self.atom_tol {
                a.1 += mass;
                return;
            }
        }
        let i = self.edges.partition_point(|&e| e <= y);
        let k = i.saturating_sub(1).min(self.bins.len() - 1);
        self.bins[k] += mass;
    }

    /// Uniform spread of `mass` over `[lo, hi]`; collapses to an atom when
    /// the interval is numerically a point.
    fn spread(&mut self, lo: T, hi: T, mass: T) {
        if mass == T::zero() {
            return;
        }
        if hi - lo <= self.atom_tol {
            self.deposit_point((lo + hi) * T::half(), mass);
            return;
        }
        let width = hi - lo;
        let i0 = self.edges.partition_point(|&e| e <= lo).saturating_sub(1);
        for k in i0..self.bins.len() {
            let seg_lo = self.edges[k].max(lo);
            let seg_hi = self.edges[k + 1].min(hi);
            if seg_hi > seg_lo {
                self.bins[k] += mass * (seg_hi - seg_lo) / width;
            }
            if self.edges[k + 1] >= hi {
                break;
            }
        }
    }

    /// Adds `weight` times a general kernel's law.
    fn deposit_kernel(&mut self, kernel: &JumpKernel<T>, weight: T) {
        let JumpKernel::General(gk) = kernel else {
            unreachable!("binomial kernels take the column path");
        };
        let x = gk.source();
        let d = self.atom_tol;
        // kernel atoms sitting at the target's atom locations
        let atom_locs: Vec<T> = self.atoms.iter().map(|a| a.0).collect();
        let mut local: Vec<(T, T)> = Vec::new();
        for (slot, &u) in atom_locs.iter().enumerate() {
            let jump = if u > x {
                gk.upper_tail(u) - gk.upper_tail(u + d)
            } else if u < x {
                gk.lower_tail(u) - gk.lower_tail(u - d)
            } else {
                gk.mass_at_source()
            };
            if jump > T::zero() {
                self.atoms[slot].1 += weight * jump;
                local.push((u, jump));
            }
        }
        let atom_at = |e: T| -> T {
            local
                .iter()
                .filter(|&&(u, _)| (u - e).abs() <= d)
                .map(|&(_, j)| j)
                .sum()
        };
        let n = self.bins.len();
        for k in 0..n {
            let (lo, hi) = (self.edges[k], self.edges[k + 1]);
            // mass on [lo, hi)
            let mass = if hi <= x {
                gk.lower_tail(hi) - gk.lower_tail(lo) + atom_at(lo) - atom_at(hi)
            } else if lo > x {
                gk.upper_tail(lo) - gk.upper_tail(hi)
            } else {
                let below = gk.mass_down() - (gk.lower_tail(lo) - atom_at(lo));
                let above = gk.mass_up() - gk.upper_tail(hi);
                below + gk.mass_at_source() + above
            };
            let local_inside: T = local
                .iter()
                .filter(|&&(u, _)| u >= lo && u < hi)
                .map(|&(_, j)| j)
                .sum();
            self.bins[k] += weight * (mass - local_inside).max(T::zero());
        }
    }

    fn l1_against(&self, lambda: &DecompositionMeasure<T>) -> T {
        let mut err = T::zero();
        for (k, win) in self.edges.windows(2).enumerate() {
            let atoms_inside: T = lambda
                .atoms()
                .iter()
                .filter(|&&(u, _)| u >= win[0] && u < win[1])
                .map(|&(_, m)| m)
                .sum();
            let target = lambda.mass_below(win[1]) - lambda.mass_below(win[0])
                + lambda_atom_at(lambda, win[0], self.atom_tol)
                - lambda_atom_at(lambda, win[1], self.atom_tol)
                - atoms_inside;
            err += (self.bins[k] - target).abs();
        }
        for &(u, m) in &self.atoms {
            err += (m - lambda_atom_at(lambda, u, self.atom_tol)).abs();
        }
        err
    }
}

fn lambda_atom_at<T: Real>(lambda: &DecompositionMeasure<T>, u: T, tol: T) -> T {
    lambda
        .atoms()
        .iter()
        .filter(|&&(loc, _)| (loc - u).abs() <= tol)
        .map(|&(_, m)| m)
        .sum()
}

/// L1 distance between the pushforward of `gamma` through the kernels and
/// `lambda`: the continuous part is compared on `bins` intervals, atoms are
/// compared exactly. The builder is called with ascending sources so it can
/// warm-start.
pub fn pushforward_check<T: Real>(
    family: &dyn MarginalFamily<T>,
    t: T,
    mut kernel_builder: impl FnMut(T) -> Result<JumpKernel<T>>,
    bins: usize,
) -> Result<T> {
    let (gamma, lambda) = family.decompose(t)?;
    let hull = lambda.support_hull();
    let (wlo, whi) = family.quad_window(t);
    let (lo, hi) = (hull.0.max(wlo), hull.1.min(whi));
    let mut buckets = Buckets::new(lo, hi, bins, lambda.atoms());

    if gamma.pieces().is_empty() && gamma.atoms().len() == 1 {
        let (x0, m0) = gamma.atoms()[0];
        let kernel = kernel_builder(x0)?;
        buckets.deposit_kernel(&kernel, m0);
    } else {
        let (gl, gr) = gamma.pieces().first().copied().unwrap_or(hull);
        let n_x = 4001usize;
        let h = (gr - gl) / T::of((n_x - 1) as f64);
        let inset = h * T::of(1e-3);
        let mut cols: Vec<(T, T, T, T)> = Vec::new();
        for i in 0..n_x {
            let x = (gl + h * T::of(i as f64)).max(gl + inset).min(gr - inset);
            let kernel = kernel_builder(x)?;
            match &kernel {
                JumpKernel::Binomial(k) => {
                    let gdens = gamma.density_at(x);
                    cols.push((k.a, k.b, gdens * k.p_down, gdens * k.p_up));
                }
                JumpKernel::General(_) => {
                    let w = simpson_weight::<T>(i, n_x) * h;
                    buckets.deposit_kernel(&kernel, gamma.density_at(x) * w);
                }
            }
        }
        // binomial columns: each x-cell's mass spreads over the image
        // interval of the monotone target maps
        for win in cols.windows(2) {
            let (a0, b0, wd0, wu0) = win[0];
            let (a1, b1, wd1, wu1) = win[1];
            let m_down = (wd0 + wd1) * T::half() * h;
            let m_up = (wu0 + wu1) * T::half() * h;
            buckets.spread(a0.min(a1), a0.max(a1), m_down);
            buckets.spread(b0.min(b1), b0.max(b1), m_up);
        }
    }
    Ok(buckets.l1_against(&lambda))
}

fn simpson_weight<T: Real>(i: usize, n: usize) -> T {
    if i == 0 || i == n - 1 {
        T::of(1.0 / 3.0)
    } else if i % 2 == 1 {
        T::of(4.0 / 3.0)
    } else {
        T::of(2.0 / 3.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::{GaussianFamily, UniformFamily};
    use crate::transport::{hk_bounds_warm, BinomialKernel};

    #[test]
    fn uniform_binomial_pushforward_is_exact() {
        let fam = UniformFamily;
        let err = pushforward_check(
            &fam as &dyn MarginalFamily<f64>,
            1.0,
            |x| crate::transport::hk_kernel(&fam as &dyn MarginalFamily<f64>, 1.0, x),
            200,
        )
        .unwrap();
        assert!(err < 1e-12, "uniform pushforward error {err}");
    }

    #[test]
    fn gaussian_binomial_pushforward_small_error() {
        let fam = GaussianFamily;
        let mut warm = None;
        let err = pushforward_check(
            &fam as &dyn MarginalFamily<f64>,
            1.0,
            |x| {
                let ab = hk_bounds_warm(&fam as &dyn MarginalFamily<f64>, 1.0, x, warm)?;
                warm = Some(ab);
                Ok(JumpKernel::Binomial(BinomialKernel::new(ab.0, x, ab.1)))
            },
            2000,
        )
        .unwrap();
        assert!(err < 1e-4, "gaussian hk pushforward error {err}");
    }

    #[test]
    fn swapped_weights_fail_pushforward() {
        let fam = UniformFamily;
        let err = pushforward_check(
            &fam as &dyn MarginalFamily<f64>,
            1.0,
            |x| {
                Ok(JumpKernel::Binomial(BinomialKernel {
                    a: -1.0,
                    b: 1.0,
                    x,
                    // deliberately swapped
                    p_up: (1.0 - x) / 2.0,
                    p_down: (x + 1.0) / 2.0,
                }))
            },
            200,
        )
        .unwrap();
        assert!(err > 0.1, "negative control must fail, err={err}");
    }
}
