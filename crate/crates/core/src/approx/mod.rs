//! Entry-wise approximation of poly-attention by the polynomial method.
//!
//! Every exponentiated Gram matrix (or higher-order exponentiated inner
//! product) is replaced by a truncated Taylor expansion of `e^x`, which
//! factors through a feature map of rank `C(dim + deg, deg)`. Inputs must be
//! bounded so the expansion's certified radius covers every exponent;
//! otherwise the engines refuse rather than silently lose accuracy.

mod exp_poly;
mod features;
mod lowrank;
mod strassen;
mod tensor;
mod tree;

pub use exp_poly::{exp_approx_poly, exp_approx_poly_capped, ExpPolynomial, DEFAULT_DEGREE_CAP};
pub use features::{feature_rank, FeatureBasis, DEFAULT_RANK_CAP};
pub use lowrank::{gram_radius, lowrank_exp_factor, LowRankFactors};
pub use strassen::attend_strassen_approx;
pub use tensor::{attend_tensor_approx, reduce_to_tensor, tensor_radius, TensorReduction};
pub use tree::attend_tree_approx;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ApproxConfig {
    /// Relative error target for each exponential.
    pub eps: f64,
    pub degree_cap: usize,
    pub rank_cap: usize,
}

impl Default for ApproxConfig {
    fn default() -> Self {
        Self { eps: 1e-6, degree_cap: DEFAULT_DEGREE_CAP, rank_cap: DEFAULT_RANK_CAP }
    }
}

impl ApproxConfig {
    pub fn with_eps(eps: f64) -> Self {
        Self { eps, ..Self::default() }
    }
}
