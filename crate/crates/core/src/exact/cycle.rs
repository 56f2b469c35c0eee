//! Pure-cycle engine via diagonal extraction of a matrix chain.
//!
//! For the cycle `c1 → c2 → … → cr → c1` with `G_j = [Q^{c_j} (Q^{c_{j+1}})ᵀ / d_scale]^e`
//! and `D_j = diag(V^{c_j}[:, ℓ])`, the numerator for column `ℓ` is
//! `diag(G_1 D_2 G_2 D_3 … G_{r-1} D_r G_r)` and the denominator drops the
//! `D`s. For `r = 3` this is the factored form of Strassen attention.

use super::{AttentionInputs, BranchTerms};
use crate::error::{Error, Result};
use crate::linalg::{diag_of_chain, exp_gram, Matrix};
use crate::structure::{classify, Branch, PolyClass};

pub(super) fn branch_terms(inp: &AttentionInputs, branch: &Branch) -> Result<BranchTerms> {
    let PolyClass::SingleCycle { vertices, .. } = classify(&branch.poly) else {
        return Err(Error::NotAdmissible { engine: "cycle", reason: format!("{} is not a pure cycle", branch.poly) });
    };
    let (n, d) = (inp.n(), inp.d());
    let r = vertices.len();
    let scale = 1.0 / inp.d_scale();
    let grams: Vec<Matrix> = (0..r)
        .map(|j| exp_gram(inp.q(vertices[j]), inp.q(vertices[(j + 1) % r]), scale))
        .collect::<Result<_>>()?;

    let den_diag = diag_of_chain(&grams)?;
    let mut num_cols = Vec::with_capacity(d);
    for col in 0..d {
        let mut chain = Vec::with_capacity(r);
        for j in 0..r - 1 {
            chain.push(grams[j].scale_columns(&inp.v(vertices[j + 1]).column(col))?);
        }
        chain.push(grams[r - 1].clone());
        num_cols.push(diag_of_chain(&chain)?);
    }

    if vertices[0] == 1 {
        let num = Matrix::from_fn(n, d, |row, c| num_cols[c][row]);
        return Ok(BranchTerms { num, den: den_diag });
    }
    // No query variable: close the trace with c1's own values.
    let v1 = inp.v(vertices[0]);
    let sums: Vec<f64> = (0..d)
        .map(|c| (0..n).fold(0.0, |acc, row| acc + num_cols[c][row] * v1[(row, c)]))
        .collect();
    let total = den_diag.iter().fold(0.0, |acc, v| acc + v);
    Ok(BranchTerms::constant(n, &sums, total))
}
