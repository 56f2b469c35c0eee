//! `r`-fold function composition with one chain-polynomial head.
//!
//! Tokens are `φ(1..=rn+1)` with `φ(ℓ + (j-1)n) = f_j(ℓ)` and `φ(rn+1) = x`.
//! The query-key rows are built so that
//!
//! ```text
//!   h(Q¹_ℓ1, …, Q^{r+1}_ℓ{r+1}) = -A² ln n · Σ_j (ℓ_{j+1} - (j-1)n - φ(ℓ_j))²
//! ```
//!
//! which is zero exactly along the pointer chain starting at the last token.
//! The chain ends at `ℓ_{r+1} = (r-1)n + f_{r-1}(…f_1(x))`, a token of the
//! `f_r` segment, so the last value matrix carries `φ(ℓ)` (the answer) in
//! column 0 and the raw index `ℓ` in column 1 as a consistency check.

use rand::Rng;

use crate::error::{Error, Result};
use crate::exact::{attend_tree, AttentionInputs};
use crate::linalg::Matrix;
use crate::poly::{AttentionPolynomial, Monomial};
use crate::rng::InstanceRng;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CompositionInstance {
    pub r: usize,
    pub n: usize,
    /// `f[j][ℓ-1] = f_{j+1}(ℓ)`, values in `1..=n`.
    pub f: Vec<Vec<usize>>,
    pub x: usize,
}

impl CompositionInstance {
    pub fn new(r: usize, n: usize, f: Vec<Vec<usize>>, x: usize) -> Result<Self> {
        if r < 2 || n < 2 {
            return Err(Error::InvalidArgument(format!("need r >= 2 and n >= 2, got r={r}, n={n}")));
        }
        if f.len() != r {
            return Err(Error::InvalidArgument(format!("expected {r} functions, got {}", f.len())));
        }
        for (j, fj) in f.iter().enumerate() {
            if fj.len() != n || fj.iter().any(|&v| v < 1 || v > n) {
                return Err(Error::InvalidArgument(format!("f{} must map 1..={n} into 1..={n}", j + 1)));
            }
        }
        if x < 1 || x > n {
            return Err(Error::InvalidArgument(format!("x = {x} outside 1..={n}")));
        }
        Ok(Self { r, n, f, x })
    }

    pub fn random(r: usize, n: usize, rng: &mut InstanceRng) -> Result<Self> {
        let f = (0..r).map(|_| (0..n).map(|_| rng.random_range(1..=n)).collect()).collect();
        let x = rng.random_range(1..=n);
        Self::new(r, n, f, x)
    }

    /// `f_r(…f_1(x))` evaluated directly.
    pub fn direct_answer(&self) -> usize {
        self.f.iter().fold(self.x, |v, fj| fj[v - 1])
    }

    pub fn token_count(&self) -> usize {
        self.r * self.n + 1
    }

    /// `φ(i)` for 1-based token `i`.
    pub fn token(&self, i: usize) -> usize {
        if i == self.token_count() {
            self.x
        } else {
            let (j, l) = ((i - 1) / self.n, (i - 1) % self.n);
            self.f[j][l]
        }
    }
}

/// `x1x2 + x2x3 + … + x_r x_{r+1}`.
pub fn build_chain_polynomial(r: usize) -> Result<AttentionPolynomial> {
    if r < 2 {
        return Err(Error::InvalidArgument(format!("chain polynomial needs r >= 2, got {r}")));
    }
    let monos = (1..=r).map(|j| Monomial::new(vec![j, j + 1])).collect::<Result<Vec<_>>>()?;
    AttentionPolynomial::new(monos, None)
}

#[derive(Clone, Debug)]
pub struct CompositionEncoding {
    pub instance: CompositionInstance,
    pub inputs: AttentionInputs,
    pub scale: f64,
}

impl CompositionEncoding {
    pub fn h_chain(&self) -> &AttentionPolynomial {
        self.inputs.h()
    }
}

/// `A = √(r+3)`: the leak from non-maximal tuples is about `n^{r-A²}`.
pub fn default_scale(r: usize) -> f64 {
    ((r + 3) as f64).sqrt()
}

pub fn min_scale(r: usize) -> f64 {
    ((r + 2) as f64).sqrt()
}

pub fn encode_composition(inst: &CompositionInstance, scale: f64) -> Result<CompositionEncoding> {
    let (r, n) = (inst.r, inst.n);
    if !(scale > min_scale(r)) {
        return Err(Error::InvalidArgument(format!(
            "scale A = {scale} must exceed sqrt(r+2) = {:.4}",
            min_scale(r)
        )));
    }
    let tokens = inst.token_count();
    let width = 3 * (r + 1);
    let c = scale * (n as f64).ln().sqrt();
    let phi = |row: usize| inst.token(row + 1) as f64;

    let mut q = Vec::with_capacity(r + 1);
    q.push(Matrix::from_fn(tokens, width, |row, col| match col {
        0 => c * phi(row).powi(2),
        1 => c * phi(row),
        2 => c,
        _ => 0.0,
    }));
    for j in 2..=r + 1 {
        let off = 3 * (j - 2);
        q.push(Matrix::from_fn(tokens, width, |row, col| {
            let shifted = (row + 1) as f64 - ((j - 2) * n) as f64;
            match col.wrapping_sub(off) {
                0 => -c,
                1 => 2.0 * c * shifted,
                2 => -c * shifted.powi(2),
                3 => c * phi(row).powi(2),
                4 => c * phi(row),
                5 => c,
                _ => 0.0,
            }
        }));
    }

    let mut v = Vec::with_capacity(r);
    for _ in 2..=r {
        v.push(Matrix::from_fn(tokens, width, |_, col| if col < 2 { 1.0 } else { 0.0 }));
    }
    v.push(Matrix::from_fn(tokens, width, |row, col| match col {
        0 => phi(row),
        1 => (row + 1) as f64,
        _ => 0.0,
    }));

    let inputs = AttentionInputs::new(build_chain_polynomial(r)?, q, v)?.with_d_scale(1.0)?;
    Ok(CompositionEncoding { instance: inst.clone(), inputs, scale })
}

/// Runs the tree engine and decodes the last token's row.
pub fn solve_composition(enc: &CompositionEncoding) -> Result<usize> {
    let (r, n) = (enc.instance.r, enc.instance.n);
    let out = attend_tree(&enc.inputs)?.matrix;
    let last = enc.instance.token_count() - 1;
    let pointer = out[(last, 1)].round();
    let lo = ((r - 1) * n + 1) as f64;
    let hi = (r * n) as f64;
    if !(lo..=hi).contains(&pointer) {
        return Err(Error::Decode(format!(
            "final pointer {} outside token range [{lo}, {hi}]",
            out[(last, 1)]
        )));
    }
    let answer = out[(last, 0)].round();
    if !(1.0..=n as f64).contains(&answer) {
        return Err(Error::Decode(format!("decoded value {} outside [1, {n}]", out[(last, 0)])));
    }
    Ok(answer as usize)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng;
    use crate::structure::{classify, PolyClass};

    #[test]
    fn chain_polynomials() {
        assert_eq!(build_chain_polynomial(2).unwrap().to_string(), "x1*x2+x2*x3");
        assert_eq!(build_chain_polynomial(3).unwrap().to_string(), "x1*x2+x2*x3+x3*x4");
        for r in 2..=10 {
            assert_eq!(classify(&build_chain_polynomial(r).unwrap()), PolyClass::TreeForest);
        }
        assert!(build_chain_polynomial(1).is_err());
    }

    #[test]
    fn worked_example() {
        let inst = CompositionInstance::new(2, 3, vec![vec![2, 3, 1], vec![3, 1, 2]], 1).unwrap();
        assert_eq!(inst.direct_answer(), 1);
        let enc = encode_composition(&inst, default_scale(2)).unwrap();
        assert_eq!(solve_composition(&enc).unwrap(), 1);
    }

    #[test]
    fn identity_functions_return_x() {
        for x in 1..=4 {
            let inst = CompositionInstance::new(3, 4, vec![(1..=4).collect(); 3], x).unwrap();
            let enc = encode_composition(&inst, default_scale(3)).unwrap();
            assert_eq!(solve_composition(&enc).unwrap(), x);
        }
    }

    #[test]
    fn exponent_identity() {
        use rand::Rng;
        let mut g = rng(9);
        let inst = CompositionInstance::random(3, 6, &mut g).unwrap();
        let a = default_scale(3);
        let enc = encode_composition(&inst, a).unwrap();
        let tokens = inst.token_count();
        for _ in 0..50 {
            let rows: Vec<usize> = (0..4).map(|_| g.random_range(1..=tokens)).collect();
            let ys: Vec<&[f64]> = (0..4).map(|j| enc.inputs.q(j + 1).row(rows[j] - 1)).collect();
            let got = enc.h_chain().evaluate(&ys).unwrap();
            let mismatch: f64 = (1..=3)
                .map(|j| {
                    let target = rows[j] as f64 - ((j - 1) * inst.n) as f64 - inst.token(rows[j - 1]) as f64;
                    target * target
                })
                .sum();
            let expected = -a * a * (inst.n as f64).ln() * mismatch;
            assert!((got - expected).abs() <= 1e-9 * expected.abs().max(1.0), "{got} vs {expected}");
        }
    }

    #[test]
    fn token_count_matches_setting() {
        let inst = CompositionInstance::random(2, 25, &mut rng(1)).unwrap();
        assert_eq!(inst.token_count(), 51);
    }

    #[test]
    fn scale_below_threshold_rejected() {
        let inst = CompositionInstance::random(2, 5, &mut rng(2)).unwrap();
        assert!(encode_composition(&inst, 1.01).is_err());
        assert!(encode_composition(&inst, 2.0).is_err());
        assert!(encode_composition(&inst, 2.01).is_ok());
    }

    #[test]
    fn invalid_instances() {
        assert!(CompositionInstance::new(1, 3, vec![vec![1, 2, 3]], 1).is_err());
        assert!(CompositionInstance::new(2, 3, vec![vec![1, 2, 3], vec![1, 2, 4]], 1).is_err());
        assert!(CompositionInstance::new(2, 3, vec![vec![1, 2, 3], vec![1, 2, 3]], 0).is_err());
    }
}
