//! Monomial feature basis for the truncated exponential.
//!
//! `Σ_{m≤deg} (⟨a,b⟩/s)^m / m!` expands over multisets `J` of coordinates
//! (`|J| ≤ deg`) as `Σ_J w_J ∏_{c∈J} a_c b_c` with
//! `w_J = 1 / (s^{|J|} ∏_c mult_c(J)!)`. Splitting `w_J` evenly across the
//! factors gives the low-rank (and multi-way) factorizations.

use crate::error::{Error, Result};
use crate::linalg::Matrix;

pub const DEFAULT_RANK_CAP: usize = 20_000;

/// `C(dim + degree, degree)`, saturating.
pub fn feature_rank(dim: usize, degree: usize) -> u128 {
    let mut acc: u128 = 1;
    for i in 1..=degree as u128 {
        acc = acc.saturating_mul(dim as u128 + i) / i;
    }
    acc
}

/// Multisets as a prefix tree: entry `k > 0` extends `parent[k]` by `coord[k]`.
#[derive(Clone, Debug)]
pub struct FeatureBasis {
    parent: Vec<usize>,
    coord: Vec<usize>,
    weight: Vec<f64>,
    dim: usize,
}

impl FeatureBasis {
    pub fn new(dim: usize, degree: usize, scale: f64, rank_cap: usize) -> Result<Self> {
        let rank = feature_rank(dim, degree);
        if rank > rank_cap as u128 {
            return Err(Error::RankTooLarge { rank, cap: rank_cap });
        }
        let rank = rank as usize;
        let mut parent = Vec::with_capacity(rank);
        let mut coord = Vec::with_capacity(rank);
        let mut weight = Vec::with_capacity(rank);
        // run length of the last coordinate, to update the multinomial weight
        let mut run = Vec::with_capacity(rank);
        parent.push(usize::MAX);
        coord.push(0);
        weight.push(1.0);
        run.push(0usize);
        let mut level = 0..1;
        for _ in 0..degree {
            let start = parent.len();
            for k in level.clone() {
                let first = if k == 0 { 0 } else { coord[k] };
                for c in first..dim {
                    let r = if k != 0 && c == coord[k] { run[k] + 1 } else { 1 };
                    parent.push(k);
                    coord.push(c);
                    weight.push(weight[k] / (r as f64 * scale));
                    run.push(r);
                }
            }
            level = start..parent.len();
        }
        debug_assert_eq!(parent.len(), rank);
        Ok(Self { parent, coord, weight, dim })
    }

    pub fn rank(&self) -> usize {
        self.parent.len()
    }

    /// Feature matrix `F[i,J] = w_J^power · ∏_{c∈J} x[i,c]`.
    pub fn features(&self, x: &Matrix, power: f64) -> Result<Matrix> {
        if x.cols() != self.dim {
            return Err(Error::Shape(format!("features: {} columns, basis over {}", x.cols(), self.dim)));
        }
        let w: Vec<f64> = self.weight.iter().map(|w| w.powf(power)).collect();
        let r = self.rank();
        let mut out = Matrix::zeros(x.rows(), r);
        let mut prod = vec![0.0; r];
        for i in 0..x.rows() {
            let row = x.row(i);
            prod[0] = 1.0;
            for k in 1..r {
                prod[k] = prod[self.parent[k]] * row[self.coord[k]];
            }
            for ((o, p), wk) in out.row_mut(i).iter_mut().zip(&prod).zip(&w) {
                *o = p * wk;
            }
        }
        Ok(out)
    }
}
