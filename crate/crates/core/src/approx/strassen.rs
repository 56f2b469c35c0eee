use super::lowrank::{lowrank_exp_factor, LowRankFactors};
use super::ApproxConfig;
use crate::error::{Error, Result};
use crate::exact::{AttentionInputs, AttentionOutput, Engine};
use crate::linalg::{matmul, Matrix};
use crate::structure::{build_structure, PolyClass};

/// `Wᵀ · diag(scale) · U` (`r×r`), summing rows in increasing order.
fn weighted_cross(w: &Matrix, scale: Option<&[f64]>, u: &Matrix) -> Matrix {
    let (rw, ru) = (w.cols(), u.cols());
    let mut out = Matrix::zeros(rw, ru);
    for k in 0..w.rows() {
        let s = scale.map_or(1.0, |s| s[k]);
        let urow = u.row(k);
        for (a, &wa) in w.row(k).iter().enumerate() {
            let coef = wa * s;
            for (o, ub) in out.row_mut(a).iter_mut().zip(urow) {
                *o += coef * ub;
            }
        }
    }
    out
}

/// `u_i · M · w_iᵀ` for every row `i`.
fn quadratic_forms(u: &Matrix, m: &Matrix, w: &Matrix) -> Vec<f64> {
    (0..u.rows())
        .map(|i| {
            let left = m.matvec_transposed(u.row(i)).expect("rank agrees");
            left.iter().zip(w.row(i)).fold(0.0, |acc, (a, b)| acc + a * b)
        })
        .collect()
}

/// Low-rank cycle engine. For the Strassen polynomial `x1x2+x2x3+x3x1`:
/// factor the three exponentiated Gram matrices, form
/// `A = (W¹ᵀU²)(W²ᵀU³)` and, per value column, `B = (W¹ᵀD¹U²)(W²ᵀD²U³)`,
/// then read `R_i = U¹_i A W³_iᵀ` and `P_i = U¹_i B W³_iᵀ`.
///
/// Any polynomial that is a single pure cycle through `x1` (and nothing
/// else) is accepted; longer cycles just lengthen both chains.
pub fn attend_strassen_approx(inp: &AttentionInputs, cfg: &ApproxConfig) -> Result<AttentionOutput> {
    let st = build_structure(inp.h());
    let vertices = match &st.class {
        PolyClass::SingleCycle { vertices, .. }
            if vertices[0] == 1 && st.branches.len() == 1 && st.isolated.is_empty() =>
        {
            vertices.clone()
        }
        _ => {
            return Err(Error::NotAdmissible {
                engine: "approx-strassen",
                reason: format!("{} is not a single cycle through x1", inp.h()),
            })
        }
    };
    let (n, d, r) = (inp.n(), inp.d(), vertices.len());
    let factors: Vec<LowRankFactors> = (0..r)
        .map(|j| lowrank_exp_factor(inp.q(vertices[j]), inp.q(vertices[(j + 1) % r]), inp.d_scale(), cfg))
        .collect::<Result<_>>()?;

    let chain = |col: Option<usize>| -> Result<Matrix> {
        let mut acc: Option<Matrix> = None;
        for j in 0..r - 1 {
            let diag = col.map(|c| inp.v(vertices[j + 1]).column(c));
            let link = weighted_cross(&factors[j].w, diag.as_deref(), &factors[j + 1].u);
            acc = Some(match acc {
                None => link,
                Some(prev) => matmul(&prev, &link)?,
            });
        }
        Ok(acc.expect("cycle has length >= 3"))
    };

    let (first, last) = (&factors[0], &factors[r - 1]);
    let den = quadratic_forms(&first.u, &chain(None)?, &last.w);
    if let Some(row) = den.iter().position(|&z| !(z > 0.0 && z.is_finite())) {
        return Err(Error::Underflow { row });
    }
    let mut out = Matrix::zeros(n, d);
    for col in 0..d {
        let num = quadratic_forms(&first.u, &chain(Some(col))?, &last.w);
        for i in 0..n {
            out[(i, col)] = num[i] / den[i];
        }
    }
    Ok(AttentionOutput { matrix: out, engine: Engine::StrassenApprox, denominators: Some(den) })
}
