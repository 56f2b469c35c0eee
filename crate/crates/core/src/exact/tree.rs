//! Bottom-up tree recursion.
//!
//! For a node `u` with children `c`, the per-row numerator and denominator are
//!
//! ```text
//!   num_u = ⊙_c  G(u,c) · (V^c[:, ℓ] ⊙ num_c)
//!   den_u = ⊙_c  G(u,c) · den_c
//! ```
//!
//! with `G(u,c) = [Q^u (Q^c)ᵀ / d_scale]^e` and leaves contributing all-ones
//! vectors. The tree is rooted at `x1`, or at the branch's smallest variable
//! when `x1` is absent (then the root's rows are summed out too).

use super::{AttentionInputs, BranchTerms};
use crate::error::Result;
use crate::linalg::{exp_gram, Matrix};
use crate::poly::AttentionPolynomial;
use crate::structure::Branch;

/// Parent-before-child order of a rooted tree, children in increasing index.
pub(crate) struct RootedTree {
    pub root: usize,
    /// `(parent, child)` edges in preorder.
    pub edges: Vec<(usize, usize)>,
    #[cfg_attr(not(test), allow(dead_code))]
    pub children: Vec<Vec<usize>>,
}

impl RootedTree {
    pub fn new(poly: &AttentionPolynomial, root: usize) -> Self {
        let t = poly.t();
        let mut adj = vec![Vec::new(); t + 1];
        for m in poly.monomials() {
            let (a, b) = (m.vars()[0], m.vars()[1]);
            adj[a].push(b);
            adj[b].push(a);
        }
        adj.iter_mut().for_each(|l| l.sort_unstable());
        let mut children = vec![Vec::new(); t + 1];
        let mut edges = Vec::new();
        let mut seen = vec![false; t + 1];
        let mut stack = vec![root];
        seen[root] = true;
        while let Some(u) = stack.pop() {
            for &c in &adj[u] {
                if !seen[c] {
                    seen[c] = true;
                    children[u].push(c);
                    edges.push((u, c));
                }
            }
            stack.extend(children[u].iter().rev());
        }
        Self { root, edges, children }
    }

    pub fn root_for(branch: &Branch) -> usize {
        if branch.contains_x1 {
            1
        } else {
            *branch.poly.support().iter().next().expect("non-empty branch")
        }
    }
}

/// Shared recursion with a pluggable "apply G(u,c)" step so the low-rank
/// engine can reuse it.
pub(crate) fn tree_terms<F>(inp: &AttentionInputs, branch: &Branch, mut apply: F) -> Result<BranchTerms>
where
    F: FnMut(usize, usize, &[f64]) -> Result<Vec<f64>>,
{
    let (n, d) = (inp.n(), inp.d());
    let tree = RootedTree::new(&branch.poly, RootedTree::root_for(branch));
    let t = branch.poly.t();

    let mut den: Vec<Vec<f64>> = vec![vec![1.0; n]; t + 1];
    for &(u, c) in tree.edges.iter().rev() {
        let msg = apply(u, c, &den[c])?;
        den[u].iter_mut().zip(&msg).for_each(|(a, b)| *a *= b);
    }

    let mut num_cols: Vec<Vec<f64>> = Vec::with_capacity(d);
    for col in 0..d {
        let mut num: Vec<Vec<f64>> = vec![vec![1.0; n]; t + 1];
        for &(u, c) in tree.edges.iter().rev() {
            let weighted: Vec<f64> = num[c].iter().zip(inp.v(c).column(col)).map(|(a, b)| a * b).collect();
            let msg = apply(u, c, &weighted)?;
            num[u].iter_mut().zip(&msg).for_each(|(a, b)| *a *= b);
        }
        num_cols.push(std::mem::take(&mut num[tree.root]));
    }

    let root_den = std::mem::take(&mut den[tree.root]);
    if tree.root == 1 {
        let num = Matrix::from_fn(n, d, |r, c| num_cols[c][r]);
        return Ok(BranchTerms { num, den: root_den });
    }
    let root_v = inp.v(tree.root);
    let sums: Vec<f64> = (0..d)
        .map(|c| (0..n).fold(0.0, |acc, r| acc + num_cols[c][r] * root_v[(r, c)]))
        .collect();
    let total = root_den.iter().fold(0.0, |acc, v| acc + v);
    Ok(BranchTerms::constant(n, &sums, total))
}

pub(super) fn branch_terms(inp: &AttentionInputs, branch: &Branch) -> Result<BranchTerms> {
    let t = branch.poly.t();
    let scale = 1.0 / inp.d_scale();
    let mut grams: Vec<Option<Matrix>> = vec![None; t + 1];
    let tree = RootedTree::new(&branch.poly, RootedTree::root_for(branch));
    for &(u, c) in &tree.edges {
        grams[c] = Some(exp_gram(inp.q(u), inp.q(c), scale)?);
    }
    tree_terms(inp, branch, |_, c, x| grams[c].as_ref().expect("edge gram").matvec(x))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rooted_tree_orders_children() {
        let h = AttentionPolynomial::parse("x1*x2+x1*x3+x1*x4+x2*x5+x2*x6+x4*x7").unwrap();
        let tree = RootedTree::new(&h, 1);
        assert_eq!(tree.children[1], vec![2, 3, 4]);
        assert_eq!(tree.children[2], vec![5, 6]);
        assert_eq!(tree.edges[0], (1, 2));
        assert_eq!(tree.edges.len(), 6);
        // every parent appears before its children
        for (i, &(_, c)) in tree.edges.iter().enumerate() {
            assert!(tree.edges[..i].iter().all(|&(p, _)| p != c));
        }
    }
}
