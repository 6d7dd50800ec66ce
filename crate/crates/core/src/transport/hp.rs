//! General martingale coupling between a mass-leaving measure `gamma` and a
//! mass-arriving measure `lambda` of equal mass and mean.
//!
//! The construction runs through three auxiliaries of the chord-slope
//! functional of `Q` (half the potential difference of the pair):
//!
//! ```text
//! xi(z)  = sup_{w < z} (Q(z) - Q(w)) / (z - w)
//! g(z)   = largest w attaining the sup (z itself when it is not attained)
//! Xi(z)  = lambda((-inf, z)) - xi(z)
//! ```
//!
//! For each source `x` a survivor function `Upsilon^x` is accumulated from
//! the continuous part of `lambda` and exact atom factors; the kernel's
//! upper tail integrates `exp(-int dv/(v - g(v)))` against `|d Upsilon|`,
//! and the lower tail pushes the same weight down through `g`.

use super::{GeneralKernel, JumpKernel, TailNode};
use crate::error::{Error, Result};
use crate::family::MarginalFamily;
use crate::measure::DecompositionMeasure;
use crate::numeric::quad::cumulative_simpson;
use crate::numeric::roots;
use crate::scalar::Real;

/// Capacity guard for the exponent of the survival factors.
const EXP_CAP: f64 = 700.0;

/// Chord-slope auxiliaries on a grid, plus the measure cumulants the kernel
/// construction needs. Atom locations of `lambda` are grid nodes; columns
/// store left limits there and atom masses are applied exactly.
#[derive(Clone)]
pub struct HpAuxiliaries<T: Real> {
    z: Vec<T>,
    xi: Vec<T>,
    g: Vec<T>,
    /// cumulative of the continuous part of lambda, strictly-below convention
    lambda_cont_below: Vec<T>,
    /// gamma((-inf, z)) at nodes (gamma is atomless here)
    gamma_below: Vec<T>,
    lambda_density: Vec<T>,
    lambda_atoms: Vec<(T, T)>,
}

impl<T: Real> HpAuxiliaries<T> {
    pub fn grid(&self) -> &[T] {
        &self.z
    }

    fn interp(col: &[T], grid: &[T], z: T) -> T {
        let n = grid.len();
        if z <= grid[0] {
            return col[0];
        }
        if z >= grid[n - 1] {
            return col[n - 1];
        }
        let i = grid.partition_point(|&v| v < z);
        let (z0, z1) = (grid[i - 1], grid[i]);
        let w = (z - z0) / (z1 - z0);
        col[i - 1] + (col[i] - col[i - 1]) * w
    }

    /// Max chord slope from the left.
    pub fn xi(&self, z: T) -> T {
        Self::interp(&self.xi, &self.z, z)
    }

    /// Largest location attaining the chord-slope supremum.
    pub fn g(&self, z: T) -> T {
        Self::interp(&self.g, &self.z, z)
    }

    /// `lambda((-inf, z))`, atoms strictly below included exactly.
    pub fn lambda_below(&self, z: T) -> T {
        let cont = Self::interp(&self.lambda_cont_below, &self.z, z);
        let atoms: T = self
            .lambda_atoms
            .iter()
            .filter(|&&(u, _)| u < z)
            .map(|&(_, m)| m)
            .sum();
        cont + atoms
    }

    pub fn gamma_below(&self, z: T) -> T {
        Self::interp(&self.gamma_below, &self.z, z)
    }

    /// `Xi(z) = lambda((-inf, z)) - xi(z)`; increasing and left-continuous.
    pub fn big_xi(&self, z: T) -> T {
        self.lambda_below(z) - self.xi(z)
    }

    fn lambda_density_at(&self, z: T) -> T {
        Self::interp(&self.lambda_density, &self.z, z)
    }
}

/// Build options shared by the two auxiliary constructions.
struct AuxInputs<'a, T: Real> {
    gamma: &'a DecompositionMeasure<T>,
    lambda: &'a DecompositionMeasure<T>,
    q: &'a dyn Fn(T) -> T,
    q_prime: &'a dyn Fn(T) -> T,
    /// lower end of the chord search (left tail of lambda)
    w_lo: T,
}

fn grid_with_atoms<T: Real>(lo: T, hi: T, n: usize, atoms: &[(T, T)]) -> Vec<T> {
    let mut cuts: Vec<T> = vec![lo, hi];
    for &(u, _) in atoms {
        if u > lo && u < hi {
            cuts.push(u);
        }
    }
    cuts.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    cuts.dedup();
    let total = hi - lo;
    let mut z = Vec::with_capacity(n + cuts.len() * 2);
    for seg in cuts.windows(2) {
        let frac = ((seg[1] - seg[0]) / total).f64();
        // even cell count per segment (odd node count incl. the segment
        // end) so Simpson weights apply cleanly
        let m = (((n as f64 * frac).ceil() as usize).max(8) + 1) & !1;
        let h = (seg[1] - seg[0]) / T::of(m as f64);
        for k in 0..m {
            z.push(seg[0] + h * T::of(k as f64));
        }
    }
    z.push(hi);
    z
}

/// Chord-slope auxiliaries by exhaustive scan: for each grid node the
/// supremum is searched over every earlier node plus the left-limit slope,
/// the attaining set is tie-broken towards its largest element, and interior
/// maxima are sharpened by a stationarity bisection. Robust for measures
/// with atoms; quadratic in the grid size.
pub fn hp_auxiliaries<T: Real>(
    gamma: &DecompositionMeasure<T>,
    lambda: &DecompositionMeasure<T>,
    q: impl Fn(T) -> T,
    q_prime: impl Fn(T) -> T,
    range: (T, T),
    n: usize,
) -> Result<HpAuxiliaries<T>> {
    reject_non_orthogonal(gamma, lambda)?;
    let (lo, hi) = range;
    let w_lo = lambda.support_hull().0.max(lo - (hi - lo));
    let inputs = AuxInputs {
        gamma,
        lambda,
        q: &q,
        q_prime: &q_prime,
        w_lo,
    };
    let z = grid_with_atoms(lo, hi, n, lambda.atoms());
    // candidate w grid: extends below the z range to cover the left tail
    let mut w_cands: Vec<T> = Vec::new();
    let m = n.max(64);
    let h = (hi - w_lo) / T::of(m as f64);
    for k in 0..=m {
        w_cands.push(w_lo + h * T::of(k as f64));
    }
    for &(u, _) in lambda.atoms() {
        if u >= w_lo && u <= hi {
            w_cands.push(u);
        }
    }
    w_cands.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    w_cands.dedup();
    let qw: Vec<T> = w_cands.iter().map(|&w| (inputs.q)(w)).collect();

    let mut xi = Vec::with_capacity(z.len());
    let mut g_col = Vec::with_capacity(z.len());
    for &zi in &z {
        let qz = (inputs.q)(zi);
        let mut best = T::neg_infinity();
        let mut best_w = zi;
        let tiny = T::of(1e-9) * (hi - w_lo);
        for (j, &w) in w_cands.iter().enumerate() {
            if w >= zi - tiny {
                break;
            }
            let s = (qz - qw[j]) / (zi - w);
            if s > best {
                best = s;
                best_w = w;
            }
        }
        let limit = (inputs.q_prime)(zi);
        let tie = T::of(1e-12) + best.abs() * T::of(1e-9);
        if best_w == zi || limit >= best - tie {
            // supremum approached at z itself
            xi.push(limit.max(best));
            g_col.push(zi);
            continue;
        }
        // largest attaining candidate (scan right to left)
        let mut w_star = best_w;
        for (j, &w) in w_cands.iter().enumerate().rev() {
            if w >= zi - tiny {
                continue;
            }
            let s = (qz - qw[j]) / (zi - w);
            if s >= best - tie {
                w_star = w;
                break;
            }
        }
        // sharpen interior smooth maxima by the stationarity condition
        let is_atom = lambda
            .atoms()
            .iter()
            .any(|&(u, _)| (u - w_star).abs() <= tiny);
        if !is_atom {
            let idx = w_cands.partition_point(|&v| v < w_star);
            let lo_b = if idx > 0 { w_cands[idx - 1] } else { w_star };
            let hi_b = if idx + 1 < w_cands.len() {
                w_cands[idx + 1].min(zi - tiny)
            } else {
                w_star
            };
            if lo_b < hi_b {
                let hfun = |w: T| (inputs.q_prime)(w) * (zi - w) - qz + (inputs.q)(w);
                if let Ok(w_ref) = roots::bisect(hfun, lo_b, hi_b, T::of(1e-14)) {
                    let s_ref = (qz - (inputs.q)(w_ref)) / (zi - w_ref);
                    if s_ref >= best - tie {
                        w_star = w_ref;
                        best = best.max(s_ref);
                    }
                }
            }
        }
        xi.push(best);
        g_col.push(w_star);
    }
    finish_aux(inputs, z, xi, g_col)
}

/// Fast auxiliary construction for the regular dispersion case (continuous
/// `lambda`): the supremum is a tangency into the left convex branch, and
/// the tangency point is marched across the grid with warm-started Newton.
fn hp_auxiliaries_march<T: Real>(
    family: &dyn MarginalFamily<T>,
    t: T,
    range: (T, T),
    n: usize,
) -> Result<HpAuxiliaries<T>> {
    let (gamma, lambda) = family.decompose(t)?;
    reject_non_orthogonal(&gamma, &lambda)?;
    let (lo, hi) = range;
    let (wlo_win, _) = family.quad_window(t);
    let (gl, _) = family.gamma_support(t);
    let w_lo = lambda.support_hull().0.max(wlo_win);
    let z = grid_with_atoms(lo, hi, n, &[]);
    let q = |y: T| family.q(t, y);
    let qp = |y: T| family.q_prime(t, y);
    let qpp = |y: T| family.density_rate(t, y);

    let mut xi = Vec::with_capacity(z.len());
    let mut g_col = Vec::with_capacity(z.len());
    let mut w_prev: Option<T> = None;
    for &zi in &z {
        let qz = q(zi);
        let hfun = |w: T| qp(w) * (zi - w) - qz + q(w);
        let w_hi = gl.min(zi - T::of(1e-12) * (hi - w_lo));
        let mut w_star = None;
        if let Some(wp) = w_prev {
            // warm Newton on the tangency equation
            let mut w = wp.max(w_lo).min(w_hi);
            for _ in 0..12 {
                let f = hfun(w);
                let d = qpp(w) * (zi - w);
                if d == T::zero() {
                    break;
                }
                let wn = (w - f / d).max(w_lo).min(w_hi);
                if (wn - w).abs() <= T::of(1e-14) * (T::one() + w.abs()) {
                    w = wn;
                    break;
                }
                w = wn;
            }
            if hfun(w).abs()
                <= (qz.abs() + qp(w).abs() * (zi - w).abs()).max(T::of(1e-280)) * T::of(1e-9)
            {
                w_star = Some(w);
            }
        }
        if w_star.is_none() {
            w_star = roots::bisect(hfun, w_lo, w_hi, T::of(1e-15)).ok();
        }
        let w_star = w_star.ok_or_else(|| {
            Error::ConvergenceFailure(format!("tangency search failed at z={}", zi.f64()))
        })?;
        xi.push((qz - q(w_star)) / (zi - w_star));
        g_col.push(w_star);
        w_prev = Some(w_star);
    }
    let inputs = AuxInputs {
        gamma: &gamma,
        lambda: &lambda,
        q: &q,
        q_prime: &qp,
        w_lo,
    };
    finish_aux(inputs, z, xi, g_col)
}

fn finish_aux<T: Real>(
    inputs: AuxInputs<'_, T>,
    z: Vec<T>,
    xi: Vec<T>,
    g_col: Vec<T>,
) -> Result<HpAuxiliaries<T>> {
    let lambda_density: Vec<T> = z.iter().map(|&v| inputs.lambda.density_at(v)).collect();
    let gamma_below: Vec<T> = z.iter().map(|&v| inputs.gamma.mass_below(v)).collect();
    // continuous-part cumulative of lambda along the grid
    let mut lambda_cont_below = Vec::with_capacity(z.len());
    let mut acc = inputs.lambda.mass_below(z[0])
        - inputs
            .lambda
            .atoms()
            .iter()
            .filter(|&&(u, _)| u < z[0])
            .map(|&(_, m)| m)
            .sum::<T>();
    lambda_cont_below.push(acc);
    for w in z.windows(2) {
        acc += crate::numeric::quad::integrate(
            |v| inputs.lambda.density_at(v),
            w[0],
            w[1],
            T::of(1e-13),
        );
        lambda_cont_below.push(acc);
    }
    Ok(HpAuxiliaries {
        z,
        xi,
        g: g_col,
        lambda_cont_below,
        gamma_below,
        lambda_density,
        lambda_atoms: inputs.lambda.atoms().to_vec(),
    })
}

fn reject_non_orthogonal<T: Real>(
    gamma: &DecompositionMeasure<T>,
    lambda: &DecompositionMeasure<T>,
) -> Result<()> {
    for &(gl, gr) in gamma.pieces() {
        for &(ll, lr) in lambda.pieces() {
            let overlap = gr.min(lr) - gl.max(ll);
            if overlap > T::of(1e-12) * (gr - gl).max(lr - ll) {
                return Err(Error::UnsupportedFamily(
                    "mass-leaving and mass-arriving measures are not orthogonal".into(),
                ));
            }
        }
        for &(u, _) in lambda.atoms() {
            if u > gl && u < gr {
                return Err(Error::UnsupportedFamily(
                    "lambda atom inside the support of gamma".into(),
                ));
            }
        }
    }
    Ok(())
}

/// The general martingale kernel at source `x` built from the auxiliaries.
///
/// `x` must lie in the support of `gamma`; the kernel carries no mass at the
/// source because the two measures are orthogonal.
pub fn hp_kernel<T: Real>(
    aux: &HpAuxiliaries<T>,
    gamma: &DecompositionMeasure<T>,
    lambda: &DecompositionMeasure<T>,
    x: T,
) -> Result<JumpKernel<T>> {
    if let Some(k) = point_gamma_shortcut(gamma, lambda, x)? {
        return Ok(k);
    }
    let z_end = *aux.grid().last().expect("nonempty grid");
    if x >= z_end {
        return Err(Error::QuadratureFailure(format!(
            "source {} lies beyond the auxiliary grid",
            x.f64()
        )));
    }
    // sub-grid from x: segment boundaries at every lambda atom above x
    let atoms: Vec<(T, T)> = aux
        .lambda_atoms
        .iter()
        .copied()
        .filter(|&(u, _)| u > x && u <= z_end)
        .collect();
    let n_nodes = (aux.grid().len()).max(65);
    let z = grid_with_atoms(x, z_end, n_nodes, &atoms);
    let m = z.len();

    let g: Vec<T> = z.iter().map(|&v| aux.g(v)).collect();
    let inv: Vec<T> = z
        .iter()
        .zip(&g)
        .map(|(&v, &gv)| {
            let d = v - gv;
            if d > T::zero() {
                (T::one() / d).min(T::of(1e30))
            } else {
                T::of(1e30)
            }
        })
        .collect();
    let hdens: Vec<T> = z
        .iter()
        .map(|&v| {
            let den = aux.gamma_below(v) - aux.big_xi(v);
            let num = aux.lambda_density_at(v);
            if den > T::of(1e-280) {
                (num / den).min(T::of(1e30))
            } else if num > T::zero() {
                T::of(1e30)
            } else {
                T::zero()
            }
        })
        .collect();

    // segment-chained cumulants of the two survival exponents
    let mut exp_e = vec![T::zero(); m]; // int_x^z dv/(v - g(v))
    let mut exp_u = vec![T::zero(); m]; // continuous Upsilon exponent
    let mut ups_factor = vec![T::one(); m]; // atom product factor, applied from the left
    {
        let mut seg_start = 0usize;
        let mut factor = T::one();
        while seg_start + 1 < m {
            // segment runs to the next atom node (or the end)
            let mut seg_end = m - 1;
            for (idx, &zz) in z.iter().enumerate().skip(seg_start + 1) {
                if atoms.iter().any(|&(u, _)| u == zz) {
                    seg_end = idx;
                    break;
                }
            }
            let count = seg_end - seg_start + 1;
            let h = (z[seg_end] - z[seg_start]) / T::of((count - 1) as f64);
            let ce = cumulative_simpson(&inv[seg_start..=seg_end], h);
            let cu = cumulative_simpson(&hdens[seg_start..=seg_end], h);
            for k in 0..count {
                exp_e[seg_start + k] = exp_e[seg_start] + ce[k];
                exp_u[seg_start + k] = exp_u[seg_start] + cu[k];
                // an atom node keeps its left-limit factor; nodes past it
                // pick up the post-jump product below
                if k > 0 || seg_start == 0 {
                    ups_factor[seg_start + k] = factor;
                }
            }
            if seg_end == m - 1 {
                break;
            }
            // apply the atom factor at the segment join for nodes beyond it
            let u_loc = z[seg_end];
            let mass = atoms
                .iter()
                .find(|&&(u, _)| u == u_loc)
                .map(|&(_, mm)| mm)
                .expect("atom at join");
            let den = aux.gamma_below(u_loc) - aux.big_xi(u_loc);
            let r = if den > T::zero() { mass / den } else { T::one() };
            factor *= (T::one() - r).max(T::zero());
            seg_start = seg_end;
        }
        // the last node of each closed segment keeps the pre-jump factor;
        // ups_factor at indices past a join was set when its segment ran
    }
    let cap = T::of(EXP_CAP);
    let e: Vec<T> = exp_e.iter().map(|&v| (-v.min(cap)).exp()).collect();
    let ups: Vec<T> = exp_u
        .iter()
        .zip(&ups_factor)
        .map(|(&v, &f)| (-v.min(cap)).exp() * f)
        .collect();

    // atom contributions to the upper side: mass e(u) * Delta Upsilon(u)
    let mut upper_atoms: Vec<(T, T)> = Vec::new();
    for &(u_loc, mass) in &atoms {
        let idx = z.partition_point(|&v| v < u_loc);
        let den = aux.gamma_below(u_loc) - aux.big_xi(u_loc);
        let r = if den > T::zero() {
            (mass / den).min(T::one())
        } else {
            T::one()
        };
        let delta = ups[idx] * r;
        if delta > T::zero() {
            upper_atoms.push((u_loc, e[idx] * delta));
        }
    }

    // continuous integrands
    let f_up: Vec<T> = (0..m).map(|i| e[i] * ups[i] * hdens[i]).collect();
    let omega: Vec<T> = (0..m).map(|i| e[i] * ups[i] * inv[i]).collect();

    // suffix cumulants, chained over the same segments
    let suffix = |vals: &[T]| -> Vec<T> {
        let mut out = vec![T::zero(); m];
        let mut seg_ends: Vec<usize> = atoms.iter().map(|&(u, _)| z.partition_point(|&v| v < u)).collect();
        seg_ends.push(m - 1);
        let mut start = 0usize;
        let mut segments: Vec<(usize, usize)> = Vec::new();
        for &end in &seg_ends {
            if end > start {
                segments.push((start, end));
            }
            start = end;
        }
        for &(s, t_end) in segments.iter().rev() {
            let count = t_end - s + 1;
            let h = (z[t_end] - z[s]) / T::of((count - 1) as f64);
            let cum = cumulative_simpson(&vals[s..=t_end], h);
            let total = cum[count - 1];
            for k in 0..count {
                out[s + k] = out[t_end] + (total - cum[k]);
            }
        }
        out
    };
    let up_cont_suffix = suffix(&f_up);
    let omega_suffix = suffix(&omega);

    // upper tail nodes
    let mut upper = Vec::with_capacity(m);
    for i in 0..m {
        if z[i] <= x {
            continue;
        }
        let atom_from_here: T = upper_atoms
            .iter()
            .filter(|&&(u, _)| u >= z[i])
            .map(|&(_, mm)| mm)
            .sum();
        let atom_beyond: T = upper_atoms
            .iter()
            .filter(|&&(u, _)| u > z[i])
            .map(|&(_, mm)| mm)
            .sum();
        upper.push(TailNode {
            z: z[i],
            at: up_cont_suffix[i] + atom_from_here,
            beyond: up_cont_suffix[i] + atom_beyond,
        });
    }

    // lower side: omega mass lands at g(w); g is non-increasing, so the
    // suffix cumulative in w is the lower cdf in landing position
    let mut monotone = true;
    for wpair in g.windows(2) {
        if wpair[1] > wpair[0] + T::of(1e-10) {
            monotone = false;
            break;
        }
    }
    let mut lower: Vec<TailNode<T>> = Vec::new();
    if monotone {
        // ascending in landing position g[i]; at a continuous node the
        // cdf value is the omega suffix from its preimage, and runs of
        // equal landing positions merge into atoms
        let nodes: Vec<(T, T)> = (0..m).rev().map(|i| (g[i], omega_suffix[i])).collect();
        let scale = (z_end - x).abs() + x.abs();
        let tol = scale * T::of(1e-12);
        let mut k = 0usize;
        while k < nodes.len() {
            let mut j = k;
            while j + 1 < nodes.len() && (nodes[j + 1].0 - nodes[k].0).abs() <= tol {
                j += 1;
            }
            lower.push(TailNode {
                z: nodes[k].0,
                at: nodes[k].1.max(nodes[j].1),
                beyond: nodes[k].1.min(nodes[j].1),
            });
            k = j + 1;
        }
    } else {
        // fall back to sorting mass cells by landing position
        let mut cells: Vec<(T, T)> = Vec::with_capacity(m);
        for i in 0..m - 1 {
            let mass = omega_suffix[i] - omega_suffix[i + 1];
            if mass > T::zero() {
                cells.push(((g[i] + g[i + 1]) * T::half(), mass));
            }
        }
        cells.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite"));
        let mut acc = T::zero();
        for (pos, mass) in cells {
            let beyond = acc;
            acc += mass;
            lower.push(TailNode {
                z: pos,
                at: acc,
                beyond,
            });
        }
    }

    // mean: continuous Simpson pieces plus atoms
    let weighted_up: Vec<T> = (0..m).map(|i| z[i] * f_up[i]).collect();
    let weighted_down: Vec<T> = (0..m).map(|i| g[i] * omega[i]).collect();
    let mean_up = suffix(&weighted_up)[0];
    let mean_down = suffix(&weighted_down)[0];
    let mean_atoms: T = upper_atoms.iter().map(|&(u, mm)| u * mm).sum();
    let mean = mean_up + mean_down + mean_atoms;

    Ok(JumpKernel::General(GeneralKernel::from_parts(
        x,
        upper,
        lower,
        T::zero(),
        mean,
    )))
}

/// When the mass-leaving measure is a single atom the coupling is forced:
/// the kernel is the normalised mass-arriving measure.
pub fn point_source_kernel<T: Real>(
    lambda: &DecompositionMeasure<T>,
    x: T,
) -> Result<JumpKernel<T>> {
    let total = lambda.mass();
    if !(total > T::zero()) {
        return Err(Error::QuadratureFailure(
            "mass-arriving measure is empty".into(),
        ));
    }
    let (lo, hi) = lambda.support_hull();
    let z = grid_with_atoms(lo, hi, 513, lambda.atoms());
    let mut upper = Vec::new();
    let mut lower = Vec::new();
    let mut mean = T::zero();
    for &(u, mm) in lambda.atoms() {
        mean += u * mm / total;
    }
    mean += crate::numeric::quad::integrate(
        |v| v * lambda.density_at(v),
        lo,
        hi,
        T::of(1e-12),
    ) / total;
    for &zi in &z {
        let below_open = lambda.mass_below(zi) / total;
        let atom_here: T = lambda
            .atoms()
            .iter()
            .filter(|&&(u, _)| u == zi)
            .map(|&(_, mm)| mm)
            .sum::<T>()
            / total;
        if zi > x {
            upper.push(TailNode {
                z: zi,
                at: T::one() - below_open,
                beyond: T::one() - below_open - atom_here,
            });
        } else if zi < x {
            lower.push(TailNode {
                z: zi,
                at: below_open + atom_here,
                beyond: below_open,
            });
        }
    }
    let mass_up = upper.first().map_or(T::zero(), |n| n.at);
    let mass_down = lower.last().map_or(T::zero(), |n| n.at);
    let at_source = (T::one() - mass_up - mass_down).max(T::zero());
    Ok(JumpKernel::General(GeneralKernel::from_parts(
        x,
        upper,
        lower,
        at_source,
        mean,
    )))
}

fn point_gamma_shortcut<T: Real>(
    gamma: &DecompositionMeasure<T>,
    lambda: &DecompositionMeasure<T>,
    x: T,
) -> Result<Option<JumpKernel<T>>> {
    if gamma.pieces().is_empty() && gamma.atoms().len() == 1 {
        let loc = gamma.atoms()[0].0;
        if (loc - x).abs() > T::of(1e-12) {
            return Err(Error::QueryOutsideSupport {
                family: "point-source coupling".into(),
                t: f64::NAN,
                x: x.f64(),
            });
        }
        return Ok(Some(point_source_kernel(lambda, x)?));
    }
    Ok(None)
}

/// Kernel at `(t, x)` for a family: builds the auxiliaries on a per-source
/// grid (fast tangency march for regular families, exhaustive scan when the
/// arriving measure has atoms) and assembles the kernel.
pub fn hp_kernel_for_family<T: Real>(
    family: &dyn MarginalFamily<T>,
    t: T,
    x: T,
    n: usize,
) -> Result<JumpKernel<T>> {
    let (gamma, lambda) = family.decompose(t)?;
    if let Some(k) = point_gamma_shortcut(&gamma, &lambda, x)? {
        return Ok(k);
    }
    let (_, hi) = family.quad_window(t);
    let z_end = hi.min(lambda.support_hull().1);
    let aux = if lambda.has_atoms() || !family.dispersion() {
        hp_auxiliaries(
            &gamma,
            &lambda,
            |y| family.q(t, y),
            |y| family.q_prime(t, y),
            (x, z_end),
            n,
        )?
    } else {
        hp_auxiliaries_march(family, t, (x, z_end), n)?
    };
    hp_kernel(&aux, &gamma, &lambda, x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::{AtomMixFamily, GaussianFamily, UniformFamily};
    use approx::assert_abs_diff_eq;

    fn uniform_aux(t: f64, n: usize) -> (HpAuxiliaries<f64>, DecompositionMeasure<f64>, DecompositionMeasure<f64>) {
        let fam = UniformFamily;
        let (g, l) = fam.decompose(t).unwrap();
        let aux = hp_auxiliaries(
            &g,
            &l,
            |y| fam.q(t, y),
            |y| fam.q_prime(t, y),
            (-t + 1e-9, t),
            n,
        )
        .unwrap();
        (aux, g, l)
    }

    #[test]
    fn uniform_worked_example_auxiliaries() {
        let (aux, _, _) = uniform_aux(1.0, 801);
        // xi(z) = (t - z)/(4 t^2) on (-t, t]
        assert_abs_diff_eq!(aux.xi(0.5), 0.125, epsilon = 1e-6);
        assert_abs_diff_eq!(aux.xi(-0.2), 0.3, epsilon = 1e-6);
        // g(z) = -t there
        assert_abs_diff_eq!(aux.g(0.5), -1.0, epsilon = 1e-6);
        assert_abs_diff_eq!(aux.g(-0.4), -1.0, epsilon = 1e-6);
        // Xi(z) = (t + z)^+ / (4 t^2)
        assert_abs_diff_eq!(aux.big_xi(0.0), 0.25, epsilon = 1e-6);
        assert_abs_diff_eq!(aux.big_xi(0.6), 0.4, epsilon = 1e-6);
    }

    #[test]
    fn uniform_worked_example_kernel() {
        let (aux, g, l) = uniform_aux(1.0, 801);
        let k = hp_kernel(&aux, &g, &l, 0.0).unwrap();
        let JumpKernel::General(ref gk) = k else {
            panic!("expected general kernel")
        };
        // upper tail = (t + x)/2t = 1/2 for x < z <= t
        assert_abs_diff_eq!(gk.upper_tail(0.5), 0.5, epsilon = 1e-6);
        assert_abs_diff_eq!(gk.upper_tail(1.0), 0.5, epsilon = 1e-6);
        assert_abs_diff_eq!(gk.upper_tail(1.0 + 1e-9), 0.0, epsilon = 1e-6);
        // lower tail jumps to (t - x)/2t at -t
        assert_abs_diff_eq!(gk.lower_tail(-1.0), 0.5, epsilon = 1e-6);
        assert_abs_diff_eq!(gk.lower_tail(-1.0 - 1e-9), 0.0, epsilon = 1e-9);
        // quantiles land on the two atoms
        assert_abs_diff_eq!(k.quantile(0.75), 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(k.quantile(0.25), -1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(k.mean(), 0.0, epsilon = 1e-7);
        assert_abs_diff_eq!(k.mass(), 1.0, epsilon = 1e-7);
    }

    #[test]
    fn uniform_off_centre_kernel_weights() {
        let (aux, g, l) = uniform_aux(1.0, 801);
        let k = hp_kernel(&aux, &g, &l, 0.3).unwrap();
        let JumpKernel::General(ref gk) = k else {
            panic!("expected general kernel")
        };
        assert_abs_diff_eq!(gk.mass_up(), 0.65, epsilon = 1e-6);
        assert_abs_diff_eq!(gk.mass_down(), 0.35, epsilon = 1e-6);
        assert_abs_diff_eq!(k.mean(), 0.3, epsilon = 1e-6);
    }

    #[test]
    fn gaussian_kernel_is_martingale_with_unit_mass() {
        let fam = GaussianFamily;
        for &x in &[-0.5, 0.0, 0.4, 0.9] {
            let k = hp_kernel_for_family(&fam as &dyn MarginalFamily<f64>, 1.0, x, 2049).unwrap();
            assert_abs_diff_eq!(k.mass(), 1.0, epsilon = 1e-6);
            assert_abs_diff_eq!(k.mean(), x, epsilon = 1e-7);
        }
    }

    #[test]
    fn gaussian_march_agrees_with_scan() {
        let fam = GaussianFamily;
        let t = 1.0;
        let (g, l) = fam.decompose(t).unwrap();
        let scan = hp_auxiliaries(
            &g,
            &l,
            |y| fam.q(t, y),
            |y| fam.q_prime(t, y),
            (0.2, 6.0),
            1025,
        )
        .unwrap();
        let march = hp_auxiliaries_march(&fam, t, (0.2, 6.0), 1025).unwrap();
        for &z in &[0.3, 0.9, 1.5, 2.5, 4.0] {
            assert_abs_diff_eq!(scan.g(z), march.g(z), epsilon = 2e-4);
            assert_abs_diff_eq!(scan.xi(z), march.xi(z), epsilon = 1e-8);
        }
    }

    #[test]
    fn gaussian_quantile_round_trip() {
        let fam = GaussianFamily;
        let k = hp_kernel_for_family(&fam as &dyn MarginalFamily<f64>, 1.0, 0.2, 1025).unwrap();
        let mut prev = f64::NEG_INFINITY;
        for i in 1..40 {
            let u = i as f64 / 40.0;
            let y = k.quantile(u);
            assert!(y >= prev, "quantile must be monotone");
            prev = y;
        }
    }

    #[test]
    fn atom_mix_point_source() {
        let fam = AtomMixFamily;
        let k = hp_kernel_for_family(&fam as &dyn MarginalFamily<f64>, 1.0, 0.0, 513).unwrap();
        assert_abs_diff_eq!(k.mean(), 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(k.mass(), 1.0, epsilon = 1e-9);
        // the post-jump law is uniform on [-1, 1]
        assert_abs_diff_eq!(k.quantile(0.75), 0.5, epsilon = 1e-3);
        assert_abs_diff_eq!(k.quantile(0.25), -0.5, epsilon = 1e-3);
    }

    #[test]
    fn upsilon_is_non_increasing() {
        // survivor-function monotonicity shows up as monotone upper tails
        let fam = GaussianFamily;
        let k = hp_kernel_for_family(&fam as &dyn MarginalFamily<f64>, 0.5, 0.1, 1025).unwrap();
        let JumpKernel::General(ref gk) = k else {
            panic!()
        };
        let mut prev = f64::INFINITY;
        for i in 0..60 {
            let z = 0.1 + i as f64 * 0.1;
            let t = gk.upper_tail(z);
            assert!(t <= prev + 1e-12);
            prev = t;
        }
    }
}
