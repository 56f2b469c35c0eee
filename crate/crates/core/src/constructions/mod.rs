//! Explicit attention instances: function composition and root finding.

pub mod composition;
pub mod intpoly;
pub mod roots;

pub use composition::{
    build_chain_polynomial, default_scale, encode_composition, min_scale, solve_composition, CompositionEncoding,
    CompositionInstance,
};
pub use intpoly::IntPoly;
pub use roots::{
    brute_force_root, derive_h_for_p, encode_root_finding, solve_root_finding, RootFindingInstance,
    RootFindingOptions,
};
