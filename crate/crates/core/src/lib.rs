//! Poly-attention: attention whose softmax exponent is an attention
//! polynomial evaluated on one query-key row per variable.
//!
//! The crate parses and classifies attention polynomials, computes the
//! attention output exactly (brute force, tree recursion, cycle chain) or
//! approximately (low-rank polynomial-method factorizations), and builds the
//! explicit function-composition and root-finding instances.

pub mod approx;
pub mod bench;
pub mod constructions;
pub mod dispatch;
pub mod error;
pub mod exact;
pub mod linalg;
pub mod poly;
pub mod rng;
pub mod structure;

pub use error::{Error, Result};
pub use exact::{
    attend_bruteforce, attend_bruteforce_with, attend_cycle, attend_exact, attend_tree, AttentionInputs,
    AttentionOutput, BruteForceConfig, Engine,
};
pub use linalg::Matrix;
pub use poly::{AttentionPolynomial, Monomial};
pub use structure::{build_structure, classify, separate_variables, Branch, PolyClass, PolyStructure};
