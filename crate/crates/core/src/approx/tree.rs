use super::lowrank::lowrank_exp_factor;
use super::ApproxConfig;
use crate::error::{Error, Result};
use crate::exact::tree::{tree_terms, RootedTree};
use crate::exact::{isolated_terms, AttentionInputs, AttentionOutput, BranchTerms, Engine};
use crate::structure::{build_structure, PolyClass};

/// Tree recursion with every `[Q^u (Q^c)ᵀ/d_scale]^e · x` replaced by
/// `U (Wᵀ x)`, so each edge costs `O(n·rank)` instead of `O(n²)`.
pub fn attend_tree_approx(inp: &AttentionInputs, cfg: &ApproxConfig) -> Result<AttentionOutput> {
    let st = build_structure(inp.h());
    if st.class != PolyClass::TreeForest {
        return Err(Error::NotAdmissible {
            engine: "approx-tree",
            reason: format!("polynomial {} is classified {}", inp.h(), st.class.name()),
        });
    }
    let mut acc = BranchTerms::ones(inp.n(), inp.d());
    for branch in &st.branches {
        let tree = RootedTree::new(&branch.poly, RootedTree::root_for(branch));
        let mut factors = vec![None; branch.poly.t() + 1];
        for &(u, c) in &tree.edges {
            factors[c] = Some(lowrank_exp_factor(inp.q(u), inp.q(c), inp.d_scale(), cfg)?);
        }
        let terms = tree_terms(inp, branch, |_, c, x| factors[c].as_ref().expect("edge factor").apply(x))?;
        acc.absorb(&terms);
    }
    for &var in &st.isolated {
        acc.absorb(&isolated_terms(inp, var));
    }
    acc.finish(Engine::TreeApprox)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{attend_bruteforce, attend_tree};
    use crate::poly::AttentionPolynomial;
    use crate::rng::{random_inputs, rng};

    #[test]
    fn matches_exact_tree_engine() {
        let h = AttentionPolynomial::parse("x1*x2+x2*x3").unwrap();
        let inp = random_inputs(&h, 128, 4, 0.5, &mut rng(10));
        let exact = attend_tree(&inp).unwrap().matrix;
        let approx = attend_tree_approx(&inp, &ApproxConfig::with_eps(1e-6)).unwrap().matrix;
        assert!(approx.max_abs_diff(&exact).unwrap() <= 1e-5);
    }

    #[test]
    fn single_token_matches_brute_force() {
        let h = AttentionPolynomial::parse("x1*x2+x2*x3").unwrap();
        let inp = random_inputs(&h, 1, 4, 0.5, &mut rng(11));
        let exact = attend_bruteforce(&inp).unwrap().matrix;
        let approx = attend_tree_approx(&inp, &ApproxConfig::default()).unwrap().matrix;
        assert!(approx.max_abs_diff(&exact).unwrap() <= 1e-15);
    }

    #[test]
    fn seven_variable_tree() {
        let h = AttentionPolynomial::parse("x1*x2+x1*x3+x1*x4+x2*x5+x2*x6+x4*x7").unwrap();
        let inp = random_inputs(&h, 32, 4, 0.5, &mut rng(12));
        let exact = attend_tree(&inp).unwrap().matrix;
        let approx = attend_tree_approx(&inp, &ApproxConfig::default()).unwrap().matrix;
        assert!(approx.max_abs_diff(&exact).unwrap() <= 1e-5);
    }

    #[test]
    fn forest_without_x1_component() {
        let h = AttentionPolynomial::parse("x1*x2+x3*x4").unwrap();
        let inp = random_inputs(&h, 9, 2, 0.5, &mut rng(13));
        let exact = attend_tree(&inp).unwrap().matrix;
        let approx = attend_tree_approx(&inp, &ApproxConfig::default()).unwrap().matrix;
        assert!(approx.max_abs_diff(&exact).unwrap() <= 1e-5);
    }
}
