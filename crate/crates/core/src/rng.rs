//! Seeded, portable randomness for instance generation.

use rand::{Rng, SeedableRng};
use rand_xoshiro::SplitMix64;

use crate::exact::AttentionInputs;
use crate::linalg::Matrix;
use crate::poly::AttentionPolynomial;

/// Identifier reported in machine-readable output.
pub const RNG_ALGORITHM: &str = "splitmix64";

pub type InstanceRng = SplitMix64;

pub fn rng(seed: u64) -> InstanceRng {
    SplitMix64::seed_from_u64(seed)
}

/// `n×d` matrix with entries uniform in `[-bound, bound]`.
pub fn uniform_matrix(rng: &mut InstanceRng, n: usize, d: usize, bound: f64) -> Matrix {
    if bound == 0.0 {
        return Matrix::zeros(n, d);
    }
    Matrix::from_fn(n, d, |_, _| rng.random_range(-bound..=bound))
}

/// Random inputs for `h`: query-key entries in `[-qk_bound, qk_bound]`,
/// value entries in `[-1, 1]`.
pub fn random_inputs(
    h: &AttentionPolynomial,
    n: usize,
    d: usize,
    qk_bound: f64,
    rng: &mut InstanceRng,
) -> AttentionInputs {
    let q = (0..h.t()).map(|_| uniform_matrix(rng, n, d, qk_bound)).collect();
    let v = (1..h.t()).map(|_| uniform_matrix(rng, n, d, 1.0)).collect();
    AttentionInputs::new(h.clone(), q, v).expect("shapes agree by construction")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproducible_and_bounded() {
        let a = uniform_matrix(&mut rng(42), 5, 3, 0.4);
        let b = uniform_matrix(&mut rng(42), 5, 3, 0.4);
        assert_eq!(a, b);
        assert!(a.max_abs() <= 0.4);
        assert_ne!(a, uniform_matrix(&mut rng(43), 5, 3, 0.4));
    }
}
