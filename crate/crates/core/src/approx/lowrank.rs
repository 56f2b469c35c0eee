use super::exp_poly::{exp_approx_poly_capped, ExpPolynomial};
use super::features::FeatureBasis;
use super::ApproxConfig;
use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// `U Wᵀ ≈ [A Bᵀ / d_scale]^e` entry-wise, with relative error at most
/// `poly.rel_error`.
#[derive(Clone, Debug)]
pub struct LowRankFactors {
    pub u: Matrix,
    pub w: Matrix,
    pub rank: usize,
    pub poly: ExpPolynomial,
}

impl LowRankFactors {
    /// `U · (Wᵀ x)` in `O(n·rank)`.
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.u.matvec(&self.w.matvec_transposed(x)?)
    }
}

/// Rigorous bound on `|⟨a_i, b_j⟩| / d_scale` from per-column maxima.
pub fn gram_radius(a: &Matrix, b: &Matrix, d_scale: f64) -> f64 {
    a.column_max_abs()
        .iter()
        .zip(b.column_max_abs())
        .fold(0.0, |acc, (x, y)| acc + x * y)
        / d_scale
}

pub fn lowrank_exp_factor(a: &Matrix, b: &Matrix, d_scale: f64, cfg: &ApproxConfig) -> Result<LowRankFactors> {
    if a.cols() != b.cols() {
        return Err(Error::Shape(format!("lowrank_exp_factor: {} vs {} columns", a.cols(), b.cols())));
    }
    let radius = gram_radius(a, b, d_scale);
    let poly = exp_approx_poly_capped(radius, cfg.eps, cfg.degree_cap)?;
    let basis = FeatureBasis::new(a.cols(), poly.degree(), d_scale, cfg.rank_cap)?;
    let u = basis.features(a, 0.5)?;
    let w = basis.features(b, 0.5)?;
    Ok(LowRankFactors { rank: basis.rank(), u, w, poly })
}
