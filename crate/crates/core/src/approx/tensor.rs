//! Reduction of any attention polynomial to tensor attention, and the
//! multi-way feature expansion that approximates it.

use super::exp_poly::exp_approx_poly_capped;
use super::features::FeatureBasis;
use super::ApproxConfig;
use crate::error::{Error, Result};
use crate::exact::{AttentionInputs, AttentionOutput, Engine};
use crate::linalg::Matrix;

/// Block matrices `K¹..Kᵗ` (`n × s·d`) and padded values `Wv²..Wvᵗ` with
/// `⟨K¹_a, K²_b ⊙ … ⊙ Kᵗ_z⟩ = h(Q¹_a, Q²_b, …, Qᵗ_z)`.
#[derive(Clone, Debug)]
pub struct TensorReduction {
    pub k: Vec<Matrix>,
    pub wv: Vec<Matrix>,
    /// Width of the original value matrices; the output keeps these columns.
    pub d: usize,
}

/// Block `i` (one per monomial, in preference order) of `K^j` is `Q^j` when
/// `x_j` occurs in monomial `i` and all-ones otherwise; `Wv^j = [V^j | 0]`.
pub fn reduce_to_tensor(inp: &AttentionInputs) -> TensorReduction {
    let (n, d) = (inp.n(), inp.d());
    let monomials = inp.h().monomials();
    let width = monomials.len() * d;
    let k = (1..=inp.h().t())
        .map(|j| {
            let q = inp.q(j);
            Matrix::from_fn(n, width, |r, c| {
                if monomials[c / d].contains(j) {
                    q[(r, c % d)]
                } else {
                    1.0
                }
            })
        })
        .collect();
    let wv = inp
        .v_all()
        .iter()
        .map(|v| Matrix::from_fn(n, width, |r, c| if c < d { v[(r, c)] } else { 0.0 }))
        .collect();
    TensorReduction { k, wv, d }
}

/// Rigorous bound on `|⟨K¹_a, K²_b ⊙ …⟩| / d_scale` from per-column maxima.
pub fn tensor_radius(red: &TensorReduction, d_scale: f64) -> f64 {
    let maxes: Vec<Vec<f64>> = red.k.iter().map(Matrix::column_max_abs).collect();
    let width = maxes[0].len();
    (0..width).fold(0.0, |acc, c| acc + maxes.iter().map(|m| m[c]).product::<f64>()) / d_scale
}

/// Expands `exp(⟨K¹_i, K²_ℓ2 ⊙ … ⊙ Kᵗ_ℓt⟩/d_scale)` as `Σ_J ∏_j Φʲ[ℓ_j, J]`
/// so the sum over `(ℓ2..ℓt)` factorizes per variable:
/// `num[i,c] = Σ_J Φ¹[i,J] ∏_{j≥2} (Σ_ℓ Φʲ[ℓ,J] Wvʲ[ℓ,c])`.
pub fn attend_tensor_approx(red: &TensorReduction, cfg: &ApproxConfig, d_scale: f64) -> Result<AttentionOutput> {
    if !(d_scale.is_finite() && d_scale > 0.0) {
        return Err(Error::InvalidArgument(format!("d_scale must be positive, got {d_scale}")));
    }
    let t = red.k.len();
    let n = red.k[0].rows();
    let width = red.k[0].cols();
    let radius = tensor_radius(red, d_scale);
    let poly = exp_approx_poly_capped(radius, cfg.eps, cfg.degree_cap)?;
    let basis = FeatureBasis::new(width, poly.degree(), d_scale, cfg.rank_cap)?;
    let power = 1.0 / t as f64;
    let phi: Vec<Matrix> = red.k.iter().map(|k| basis.features(k, power)).collect::<Result<_>>()?;

    let ones = vec![1.0; n];
    let mut key_den = vec![1.0; basis.rank()];
    for p in &phi[1..] {
        let s = p.matvec_transposed(&ones)?;
        key_den.iter_mut().zip(&s).for_each(|(a, b)| *a *= b);
    }
    let den = phi[0].matvec(&key_den)?;
    if let Some(row) = den.iter().position(|&z| !(z > 0.0 && z.is_finite())) {
        return Err(Error::Underflow { row });
    }

    let mut out = Matrix::zeros(n, red.d);
    for col in 0..red.d {
        let mut key_num = vec![1.0; basis.rank()];
        for (p, wv) in phi[1..].iter().zip(&red.wv) {
            let s = p.matvec_transposed(&wv.column(col))?;
            key_num.iter_mut().zip(&s).for_each(|(a, b)| *a *= b);
        }
        let num = phi[0].matvec(&key_num)?;
        for i in 0..n {
            out[(i, col)] = num[i] / den[i];
        }
    }
    Ok(AttentionOutput { matrix: out, engine: Engine::TensorApprox, denominators: Some(den) })
}
