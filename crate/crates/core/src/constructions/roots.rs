//! Polynomial root-finding with two poly-attention heads.
//!
//! For an integer polynomial `p` over `t` variables and a set `S = {y_1..y_n}`
//! of distinct reals, head 1 uses `h = x1⋯xt` with one column per monomial of
//! `p²`, so that `h(Q¹_ℓ1, …, Qᵗ_ℓt) = -c_gap · p(y_ℓ1, …, y_ℓt)²`. Its softmax
//! concentrates on the root tuples whose first coordinate is `y_ℓ1`, and the
//! value matrices read out `(0, y_ℓ2, …, y_ℓt)`. Head 2 copies `y_ℓ1` into
//! coordinate 0 through the same trick with `p₂ = x1 - x2`. Summing both
//! heads and snapping to `S` gives a candidate root per row; candidates are
//! checked by direct evaluation.
//!
//! When `p` has several roots sharing `y_ℓ1`, the softmax averages them. An
//! optional tie-break column adds `τ·y_ℓ2` to the exponent so that the root
//! with the largest second coordinate dominates.

use super::intpoly::IntPoly;
use crate::error::{Error, Result};
use crate::exact::{attend_bruteforce_with, AttentionInputs, BruteForceConfig};
use crate::linalg::Matrix;
use crate::poly::{AttentionPolynomial, Monomial};

/// Leak tolerance behind the default gap.
const GAP_TOL: f64 = 1e-6;

/// `h = x1⋯xt` and, for every monomial of `p²` (in `IntPoly` term order),
/// the index of the `h`-monomial containing its support (always 0).
pub fn derive_h_for_p(p: &IntPoly) -> Result<(AttentionPolynomial, Vec<usize>)> {
    let t = p.t();
    if t < 2 {
        return Err(Error::InvalidPolynomial(format!(
            "root finding needs at least 2 variables, {p} has {t}"
        )));
    }
    let h = AttentionPolynomial::new(vec![Monomial::new((1..=t).collect())?], None)?;
    Ok((h, vec![0; p.square()?.sparsity()]))
}

#[derive(Clone, Copy, Debug)]
pub struct RootFindingOptions {
    /// Exponent gap; `None` picks `(t+1)·ln n + ln 10⁶` (plus the tie-break spread).
    pub c_gap: Option<f64>,
    pub tie_break: bool,
}

impl Default for RootFindingOptions {
    fn default() -> Self {
        Self { c_gap: None, tie_break: true }
    }
}

#[derive(Clone, Debug)]
pub struct RootFindingInstance {
    pub p: IntPoly,
    pub set: Vec<f64>,
    pub h: AttentionPolynomial,
    pub heads: [AttentionInputs; 2],
    pub embed_dim: usize,
    pub c_gap: f64,
    /// Tie-break weight `τ`, zero when disabled.
    pub tau: f64,
}

fn min_separation(set: &[f64]) -> f64 {
    let mut sorted = set.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min)
}

/// Query-key matrices realizing `Σ_m coef_m ∏_j y_ℓj^{e_mj}` scaled by `-gap`.
/// The gap magnitude is split evenly across the `t` factors.
fn encode_square(sq: &IntPoly, set: &[f64], gap: f64, dim: usize, t: usize) -> Vec<Matrix> {
    let n = set.len();
    let terms: Vec<(&[u32], i64)> = sq.terms().collect();
    let share = gap.powf(1.0 / t as f64);
    (1..=t)
        .map(|j| {
            Matrix::from_fn(n, dim, |row, col| match terms.get(col) {
                Some((exps, coef)) => {
                    let lead = if j == 1 { -(*coef as f64) } else { 1.0 };
                    lead * share * set[row].powi(exps[j - 1] as i32)
                }
                None => 0.0,
            })
        })
        .collect()
}

pub fn encode_root_finding(p: &IntPoly, set: &[f64], opts: &RootFindingOptions) -> Result<RootFindingInstance> {
    let (h, _) = derive_h_for_p(p)?;
    let t = p.t();
    let n = set.len();
    if n == 0 {
        return Err(Error::InvalidArgument("the set S is empty".into()));
    }
    if let Some(bad) = set.iter().find(|y| !y.is_finite()) {
        return Err(Error::InvalidArgument(format!("set element {bad} is not finite")));
    }
    let sep = min_separation(set);
    if sep == 0.0 {
        return Err(Error::InvalidArgument("elements of S must be distinct".into()));
    }
    let sq = p.square()?;
    let s0 = sq.sparsity();
    let k0 = p.degree() as usize;
    let extra = usize::from(opts.tie_break);
    let embed_dim = (s0 + extra).max(2 * k0 + 2).max(t).max(3);

    let ln_n = (n as f64).ln();
    let max_abs = set.iter().fold(0.0f64, |m, y| m.max(y.abs()));
    // With a single element there is nothing to break.
    let tau = if opts.tie_break && n > 1 {
        let margin = (t - 1) as f64 * ln_n + (1.0 / GAP_TOL).ln() + (1.0 + 2.0 * max_abs / sep).ln();
        margin / sep
    } else {
        0.0
    };
    let spread = set.iter().fold(f64::NEG_INFINITY, |m, &y| m.max(y)) - set.iter().fold(f64::INFINITY, |m, &y| m.min(y));
    let c_gap = match opts.c_gap {
        Some(c) if c.is_finite() && c > 0.0 => c,
        Some(c) => return Err(Error::InvalidArgument(format!("c_gap must be positive, got {c}"))),
        None => (t + 1) as f64 * ln_n + (1.0 / GAP_TOL).ln() + tau * spread,
    };

    // Head 1: exponent -c_gap·p² (+ τ·y_ℓ2), values (0, y_ℓ2, …, y_ℓt, 0…).
    let mut q1 = encode_square(&sq, set, c_gap, embed_dim, t);
    if tau > 0.0 {
        for (j, q) in q1.iter_mut().enumerate() {
            for (row, &y) in set.iter().enumerate() {
                q.row_mut(row)[s0] = match j {
                    0 => tau,
                    1 => y,
                    _ => 1.0,
                };
            }
        }
    }
    let v1 = (2..=t)
        .map(|j| {
            Matrix::from_fn(n, embed_dim, |row, col| match col {
                0 => 0.0,
                c if c == j - 1 => set[row],
                c if c < t => 1.0,
                _ => 0.0,
            })
        })
        .collect();
    let head1 = AttentionInputs::new(h.clone(), q1, v1)?.with_d_scale(1.0)?;

    // Head 2: exponent -(c_gap/sep²)·(y_ℓ1 - y_ℓ2)², values y_ℓ2 in column 0.
    let p2 = IntPoly::parse("x1-x2")?.padded(t);
    let q2 = encode_square(&p2.square()?, set, c_gap / (sep * sep), embed_dim, t);
    let v2 = (2..=t)
        .map(|j| {
            Matrix::from_fn(n, embed_dim, |row, col| match (col, j) {
                (0, 2) => set[row],
                (0, _) => 1.0,
                _ => 0.0,
            })
        })
        .collect();
    let head2 = AttentionInputs::new(h.clone(), q2, v2)?.with_d_scale(1.0)?;

    Ok(RootFindingInstance { p: p.clone(), set: set.to_vec(), h, heads: [head1, head2], embed_dim, c_gap, tau })
}

/// Indices of the nearest and second-nearest elements of `set` to `x`.
fn nearest_two(set: &[f64], x: f64) -> (usize, Option<usize>) {
    let mut order: Vec<usize> = (0..set.len()).collect();
    order.sort_by(|&a, &b| (set[a] - x).abs().total_cmp(&(set[b] - x).abs()).then(a.cmp(&b)));
    (order[0], order.get(1).copied())
}

/// Sums the two heads, then for each row (ascending) snaps every coordinate
/// to `S`, trying nearest and second-nearest choices, and returns the first
/// tuple at which `p` vanishes exactly.
pub fn solve_root_finding(inst: &RootFindingInstance) -> Result<Option<Vec<f64>>> {
    let cfg = BruteForceConfig { safe: true, ..BruteForceConfig::default() };
    let a = attend_bruteforce_with(&inst.heads[0], &cfg)?.matrix;
    let b = attend_bruteforce_with(&inst.heads[1], &cfg)?.matrix;
    let t = inst.p.t();
    for row in 0..a.rows() {
        let snaps: Vec<(usize, Option<usize>)> =
            (0..t).map(|c| nearest_two(&inst.set, a[(row, c)] + b[(row, c)])).collect();
        for mask in 0u32..(1 << t) {
            let mut tuple = Vec::with_capacity(t);
            for (c, &(first, second)) in snaps.iter().enumerate() {
                let pick = if mask >> c & 1 == 1 { second } else { Some(first) };
                match pick {
                    Some(i) => tuple.push(inst.set[i]),
                    None => break,
                }
            }
            if tuple.len() == t && inst.p.eval(&tuple) == 0.0 {
                return Ok(Some(tuple));
            }
        }
    }
    Ok(None)
}

/// First root of `p` over `S^t` in lexicographic index order.
pub fn brute_force_root(p: &IntPoly, set: &[f64]) -> Option<Vec<f64>> {
    let (t, n) = (p.t(), set.len());
    if n == 0 {
        return None;
    }
    let mut idx = vec![0usize; t];
    let mut tuple = vec![set[0]; t];
    loop {
        if p.eval(&tuple) == 0.0 {
            return Some(tuple);
        }
        let mut k = t;
        loop {
            if k == 0 {
                return None;
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < n {
                tuple[k] = set[idx[k]];
                break;
            }
            idx[k] = 0;
            tuple[k] = set[0];
        }
    }
}
