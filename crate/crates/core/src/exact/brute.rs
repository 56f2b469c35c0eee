use super::{AttentionInputs, AttentionOutput, BranchTerms, Engine};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::structure::Branch;

/// Default cap on the number of summand tuples `n^(t-1)` per output row.
pub const DEFAULT_BUDGET: u128 = 100_000_000;

#[derive(Clone, Copy, Debug)]
pub struct BruteForceConfig {
    pub budget: u128,
    /// Log-sum-exp stabilization. Only the oracle offers this; the result is
    /// the same softmax, but no intermediate exponential can overflow.
    pub safe: bool,
}

impl Default for BruteForceConfig {
    fn default() -> Self {
        Self { budget: DEFAULT_BUDGET, safe: false }
    }
}

pub fn attend_bruteforce(inp: &AttentionInputs) -> Result<AttentionOutput> {
    attend_bruteforce_with(inp, &BruteForceConfig::default())
}

/// Direct nested summation over every `(ℓ2, …, ℓt) ∈ [n]^(t-1)`.
pub fn attend_bruteforce_with(inp: &AttentionInputs, cfg: &BruteForceConfig) -> Result<AttentionOutput> {
    let (n, d, t) = (inp.n(), inp.d(), inp.h().t());
    check_budget(n, t - 1, cfg.budget)?;
    let free: Vec<usize> = (2..=t).collect();
    let mut out = Matrix::zeros(n, d);
    let mut dens = Vec::with_capacity(n);
    for row in 0..n {
        let acc = enumerate(inp, Some(row), &free, cfg.safe)?;
        if !(acc.den > 0.0) {
            return Err(Error::Underflow { row });
        }
        for (o, v) in out.row_mut(row).iter_mut().zip(&acc.num) {
            *o = v / acc.den;
        }
        dens.push(acc.den);
    }
    let denominators = if cfg.safe { None } else { Some(dens) };
    Ok(AttentionOutput { matrix: out, engine: Engine::BruteForce, denominators })
}

fn check_budget(n: usize, free: usize, budget: u128) -> Result<()> {
    let tuples = (n as u128).checked_pow(free as u32).unwrap_or(u128::MAX);
    if tuples > budget {
        return Err(Error::Budget { tuples, budget });
    }
    Ok(())
}

/// Brute-force contribution of a single branch: enumerates only the branch's
/// own non-query variables.
pub(super) fn branch_terms(inp: &AttentionInputs, branch: &Branch) -> Result<BranchTerms> {
    let n = inp.n();
    let free: Vec<usize> = branch.poly.support().into_iter().filter(|&v| v != 1).collect();
    check_budget(n, free.len(), DEFAULT_BUDGET)?;
    let sub = inp.with_poly(branch.poly.clone());
    if !branch.contains_x1 {
        let acc = enumerate(&sub, None, &free, false)?;
        return Ok(BranchTerms::constant(n, &acc.num, acc.den));
    }
    let mut num = Matrix::zeros(n, inp.d());
    let mut den = Vec::with_capacity(n);
    for row in 0..n {
        let acc = enumerate(&sub, Some(row), &free, false)?;
        num.row_mut(row).copy_from_slice(&acc.num);
        den.push(acc.den);
    }
    Ok(BranchTerms { num, den })
}

struct Accum {
    num: Vec<f64>,
    den: f64,
}

/// Sums `exp(h/d_scale)·∏ V` over all index tuples of `free`, with `x1`
/// pinned to `query` (variables outside `free` read row 0 and must not occur
/// in `h`).
fn enumerate(inp: &AttentionInputs, query: Option<usize>, free: &[usize], safe: bool) -> Result<Accum> {
    let (n, d, t) = (inp.n(), inp.d(), inp.h().t());
    let inv_scale = 1.0 / inp.d_scale();
    let mut idx = vec![0usize; free.len()];
    let mut ys: Vec<&[f64]> = (1..=t).map(|j| inp.q(j).row(0)).collect();
    if let Some(r) = query {
        ys[0] = inp.q(1).row(r);
    }
    let mut num = vec![0.0; d];
    let mut den = 0.0;
    let mut shift = f64::NEG_INFINITY;
    let mut prod = vec![0.0; d];
    loop {
        for (&var, &i) in free.iter().zip(&idx) {
            ys[var - 1] = inp.q(var).row(i);
        }
        let e = inp.h().evaluate(&ys)? * inv_scale;
        let w = if safe {
            if e > shift {
                let rescale = (shift - e).exp();
                num.iter_mut().for_each(|v| *v *= rescale);
                den *= rescale;
                shift = e;
            }
            (e - shift).exp()
        } else {
            let w = e.exp();
            if !w.is_finite() {
                return Err(Error::Overflow { value: e });
            }
            w
        };
        prod.iter_mut().for_each(|p| *p = w);
        for (&var, &i) in free.iter().zip(&idx) {
            if var == 1 {
                continue;
            }
            for (p, v) in prod.iter_mut().zip(inp.v(var).row(i)) {
                *p *= v;
            }
        }
        for (a, p) in num.iter_mut().zip(&prod) {
            *a += p;
        }
        den += w;

        // odometer, last variable fastest
        let mut pos = free.len();
        loop {
            if pos == 0 {
                return Ok(Accum { num, den });
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < n {
                break;
            }
            idx[pos] = 0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::AttentionPolynomial;

    fn m(rows: &[&[f64]]) -> Matrix {
        Matrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn two_token_scalar_softmax() {
        let h = AttentionPolynomial::parse("x1*x2").unwrap();
        let q = m(&[&[1.0], &[0.0]]);
        let inp = AttentionInputs::new(h, vec![q.clone(), q], vec![m(&[&[1.0], &[2.0]])])
            .unwrap()
            .with_d_scale(1.0)
            .unwrap();
        let out = attend_bruteforce(&inp).unwrap().matrix;
        let e = std::f64::consts::E;
        let expected = (e * 1.0 + 2.0) / (e + 1.0);
        assert!((out[(0, 0)] - expected).abs() < 1e-15);
        assert!((out[(0, 0)] - 1.268_941_421_369_995).abs() < 1e-12);
        // row 2 has zero query: uniform average
        assert!((out[(1, 0)] - 1.5).abs() < 1e-15);
    }

    #[test]
    fn zero_queries_give_uniform_average() {
        let h = AttentionPolynomial::parse("x1*x2*x3").unwrap();
        let z = Matrix::zeros(3, 2);
        let v2 = m(&[&[1.0, 2.0], &[3.0, 4.0], &[5.0, 6.0]]);
        let v3 = m(&[&[1.0, -1.0], &[0.5, 2.0], &[2.0, 0.0]]);
        let inp = AttentionInputs::new(h, vec![z.clone(), z.clone(), z], vec![v2.clone(), v3.clone()]).unwrap();
        let out = attend_bruteforce(&inp).unwrap().matrix;
        for c in 0..2 {
            let mut s = 0.0;
            for a in 0..3 {
                for b in 0..3 {
                    s += v2[(a, c)] * v3[(b, c)];
                }
            }
            for r in 0..3 {
                assert!((out[(r, c)] - s / 9.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn budget_is_enforced() {
        let h = AttentionPolynomial::parse("x1*x2*x3").unwrap();
        let z = Matrix::zeros(4, 1);
        let inp = AttentionInputs::new(h, vec![z.clone(), z.clone(), z.clone()], vec![z.clone(), z]).unwrap();
        let cfg = BruteForceConfig { budget: 15, safe: false };
        assert_eq!(attend_bruteforce_with(&inp, &cfg).unwrap_err(), Error::Budget { tuples: 16, budget: 15 });
        let cfg = BruteForceConfig { budget: 16, safe: false };
        assert!(attend_bruteforce_with(&inp, &cfg).is_ok());
    }

    #[test]
    fn safe_mode_survives_large_exponents() {
        let h = AttentionPolynomial::parse("x1*x2").unwrap();
        let q = m(&[&[40.0], &[-40.0]]);
        let v = m(&[&[1.0], &[2.0]]);
        let inp = AttentionInputs::new(h, vec![q.clone(), q], vec![v]).unwrap().with_d_scale(1.0).unwrap();
        assert!(matches!(attend_bruteforce(&inp), Err(Error::Overflow { .. })));
        let out = attend_bruteforce_with(&inp, &BruteForceConfig { safe: true, ..Default::default() })
            .unwrap()
            .matrix;
        assert!((out[(0, 0)] - 1.0).abs() < 1e-12);
        assert!((out[(1, 0)] - 2.0).abs() < 1e-12);
    }
}
