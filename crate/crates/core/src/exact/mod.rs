//! Exact poly-attention.
//!
//! Row `i` of the output is
//!
//! ```text
//!   Σ_{ℓ2..ℓt} exp(h(Q¹_i, Q²_ℓ2, …, Qᵗ_ℓt) / d_scale) · (V²_ℓ2 ⊙ … ⊙ Vᵗ_ℓt)
//!   ─────────────────────────────────────────────────────────────────────────
//!   Σ_{ℓ2..ℓt} exp(h(Q¹_i, Q²_ℓ2, …, Qᵗ_ℓt) / d_scale)
//! ```
//!
//! [`attend_bruteforce`] evaluates this literally and is the oracle for the
//! structured engines. The structured engines work branch by branch: the
//! numerator and denominator both factor over branches that share only `x1`,
//! so each branch contributes a `(numerator, denominator)` pair and the pairs
//! are multiplied entry-wise.

mod brute;
mod cycle;
pub(crate) mod tree;

pub use brute::{attend_bruteforce, attend_bruteforce_with, BruteForceConfig, DEFAULT_BUDGET};

use std::fmt;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::poly::AttentionPolynomial;
use crate::structure::{build_structure, classify, Branch, PolyClass};

/// Query-key matrices `Q¹..Qᵗ` and value matrices `V²..Vᵗ`, all `n×d`.
#[derive(Clone, Debug)]
pub struct AttentionInputs {
    h: AttentionPolynomial,
    q: Vec<Matrix>,
    v: Vec<Matrix>,
    d_scale: f64,
}

impl AttentionInputs {
    /// `d_scale` defaults to `d`.
    pub fn new(h: AttentionPolynomial, q: Vec<Matrix>, v: Vec<Matrix>) -> Result<Self> {
        let t = h.t();
        if t < 2 {
            return Err(Error::InvalidArgument(format!("need t >= 2 variables, got {t}")));
        }
        if q.len() != t {
            return Err(Error::Shape(format!("expected {t} query-key matrices, got {}", q.len())));
        }
        if v.len() != t - 1 {
            return Err(Error::Shape(format!("expected {} value matrices, got {}", t - 1, v.len())));
        }
        let shape = q[0].shape();
        for (name, m) in q.iter().enumerate().map(|(i, m)| (format!("Q{}", i + 1), m)).chain(
            v.iter().enumerate().map(|(i, m)| (format!("V{}", i + 2), m)),
        ) {
            if m.shape() != shape {
                return Err(Error::Shape(format!(
                    "{name} is {}x{}, expected {}x{}",
                    m.rows(),
                    m.cols(),
                    shape.0,
                    shape.1
                )));
            }
        }
        let d_scale = shape.1 as f64;
        Ok(Self { h, q, v, d_scale })
    }

    pub fn with_d_scale(mut self, d_scale: f64) -> Result<Self> {
        if !(d_scale.is_finite() && d_scale > 0.0) {
            return Err(Error::InvalidArgument(format!("d_scale must be positive, got {d_scale}")));
        }
        self.d_scale = d_scale;
        Ok(self)
    }

    pub fn h(&self) -> &AttentionPolynomial {
        &self.h
    }

    pub fn n(&self) -> usize {
        self.q[0].rows()
    }

    pub fn d(&self) -> usize {
        self.q[0].cols()
    }

    pub fn d_scale(&self) -> f64 {
        self.d_scale
    }

    /// Query-key matrix for variable `x_j` (1-based).
    pub fn q(&self, j: usize) -> &Matrix {
        &self.q[j - 1]
    }

    /// Value matrix for variable `x_j`, `j >= 2`.
    pub fn v(&self, j: usize) -> &Matrix {
        &self.v[j - 2]
    }

    pub fn q_all(&self) -> &[Matrix] {
        &self.q
    }

    pub fn v_all(&self) -> &[Matrix] {
        &self.v
    }

    /// Same matrices, different polynomial over the same `t`.
    pub(crate) fn with_poly(&self, h: AttentionPolynomial) -> Self {
        debug_assert_eq!(h.t(), self.h.t());
        Self { h, q: self.q.clone(), v: self.v.clone(), d_scale: self.d_scale }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Engine {
    BruteForce,
    Tree,
    Cycle,
    Auto,
    StrassenApprox,
    TreeApprox,
    TensorApprox,
}

impl Engine {
    pub fn name(self) -> &'static str {
        match self {
            Engine::BruteForce => "brute",
            Engine::Tree => "tree",
            Engine::Cycle => "cycle",
            Engine::Auto => "auto",
            Engine::StrassenApprox => "approx-strassen",
            Engine::TreeApprox => "approx-tree",
            Engine::TensorApprox => "approx-tensor",
        }
    }
}

impl fmt::Display for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug)]
pub struct AttentionOutput {
    pub matrix: Matrix,
    pub engine: Engine,
    /// Softmax normalizers per row, when the engine computes them unshifted.
    pub denominators: Option<Vec<f64>>,
}

/// Numerator (`n×d`) and denominator (`n`) contributed by one branch.
#[derive(Clone, Debug)]
pub(crate) struct BranchTerms {
    pub num: Matrix,
    pub den: Vec<f64>,
}

impl BranchTerms {
    pub fn ones(n: usize, d: usize) -> Self {
        Self { num: Matrix::filled(n, d, 1.0), den: vec![1.0; n] }
    }

    /// Broadcast a row-constant contribution to `n` rows.
    pub fn constant(n: usize, num: &[f64], den: f64) -> Self {
        Self { num: Matrix::from_fn(n, num.len(), |_, c| num[c]), den: vec![den; n] }
    }

    pub fn absorb(&mut self, other: &BranchTerms) {
        for r in 0..self.num.rows() {
            for (a, b) in self.num.row_mut(r).iter_mut().zip(other.num.row(r)) {
                *a *= b;
            }
        }
        for (a, b) in self.den.iter_mut().zip(&other.den) {
            *a *= b;
        }
    }

    pub fn finish(self, engine: Engine) -> Result<AttentionOutput> {
        let mut out = self.num;
        for (r, &den) in self.den.iter().enumerate() {
            if !(den > 0.0) || !den.is_finite() {
                return if den.is_infinite() {
                    Err(Error::Overflow { value: den })
                } else {
                    Err(Error::Underflow { row: r })
                };
            }
            out.row_mut(r).iter_mut().for_each(|v| *v /= den);
        }
        if let Some(pos) = out.as_slice().iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { row: pos / out.cols(), col: pos % out.cols() });
        }
        Ok(AttentionOutput { matrix: out, engine, denominators: Some(self.den) })
    }
}

/// Isolated variables are summed with weight one, contributing the column
/// mean of their value matrix.
pub(crate) fn isolated_terms(inp: &AttentionInputs, var: usize) -> BranchTerms {
    let v = inp.v(var);
    let sums: Vec<f64> = (0..inp.d())
        .map(|c| (0..inp.n()).fold(0.0, |acc, r| acc + v[(r, c)]))
        .collect();
    BranchTerms::constant(inp.n(), &sums, inp.n() as f64)
}

type BranchEval = fn(&AttentionInputs, &Branch) -> Result<BranchTerms>;

fn combine(
    inp: &AttentionInputs,
    engine: Engine,
    pick: impl Fn(&Branch) -> Result<BranchEval>,
) -> Result<AttentionOutput> {
    let st = build_structure(inp.h());
    let mut acc = BranchTerms::ones(inp.n(), inp.d());
    for branch in &st.branches {
        let eval = pick(branch)?;
        acc.absorb(&eval(inp, branch)?);
    }
    for &var in &st.isolated {
        acc.absorb(&isolated_terms(inp, var));
    }
    acc.finish(engine)
}

/// Quadratic-time exact engine for polynomials whose graph is a forest.
pub fn attend_tree(inp: &AttentionInputs) -> Result<AttentionOutput> {
    let class = classify(inp.h());
    if class != PolyClass::TreeForest {
        return Err(Error::NotAdmissible {
            engine: "tree",
            reason: format!("polynomial {} is classified {}", inp.h(), class.name()),
        });
    }
    combine(inp, Engine::Tree, |_| Ok(tree::branch_terms as BranchEval))
}

/// Exact engine for a single pure cycle; any other components must be trees
/// and are handled by the tree recursion.
pub fn attend_cycle(inp: &AttentionInputs) -> Result<AttentionOutput> {
    let class = classify(inp.h());
    if !matches!(class, PolyClass::SingleCycle { .. }) {
        return Err(Error::NotAdmissible {
            engine: "cycle",
            reason: format!("polynomial {} is classified {}", inp.h(), class.name()),
        });
    }
    combine(inp, Engine::Cycle, |b| match classify(&b.poly) {
        PolyClass::TreeForest => Ok(tree::branch_terms as BranchEval),
        PolyClass::SingleCycle { .. } => Ok(cycle::branch_terms as BranchEval),
        PolyClass::General => Err(Error::NotAdmissible {
            engine: "cycle",
            reason: format!("branch {} is neither a tree nor a pure cycle", b.poly),
        }),
    })
}

/// Dispatches each branch to the tree, cycle or brute-force evaluator by its
/// own class.
pub fn attend_exact(inp: &AttentionInputs) -> Result<AttentionOutput> {
    combine(inp, Engine::Auto, |b| {
        Ok(match classify(&b.poly) {
            PolyClass::TreeForest => tree::branch_terms as BranchEval,
            PolyClass::SingleCycle { .. } => cycle::branch_terms as BranchEval,
            PolyClass::General => brute::branch_terms as BranchEval,
        })
    })
}
