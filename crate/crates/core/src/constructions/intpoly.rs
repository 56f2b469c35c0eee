//! Integer-coefficient polynomials over `x1..xt`, for root-finding targets.
//!
//! Grammar (whitespace ignored):
//!
//! ```text
//!   poly   := ['-'] term (('+' | '-') term)*
//!   term   := factor ('*' factor)*
//!   factor := integer | var ['^' integer]
//!   var    := 'x' digits
//! ```

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};

/// Sparse polynomial: exponent vector (length `t`) → nonzero coefficient.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntPoly {
    t: usize,
    terms: BTreeMap<Vec<u32>, i64>,
}

impl IntPoly {
    pub fn parse(text: &str) -> Result<Self> {
        let raw = Lexer { src: text.as_bytes(), pos: 0 }.poly()?;
        let t = raw.iter().flat_map(|(_, vars)| vars.iter().map(|(v, _)| *v)).max().unwrap_or(0);
        let mut terms: BTreeMap<Vec<u32>, i64> = BTreeMap::new();
        for (coef, vars) in raw {
            let mut exps = vec![0u32; t];
            for (v, e) in vars {
                exps[v - 1] += e;
            }
            let slot = terms.entry(exps).or_insert(0);
            *slot = slot
                .checked_add(coef)
                .ok_or_else(|| Error::InvalidPolynomial("coefficient overflow".into()))?;
        }
        terms.retain(|_, c| *c != 0);
        if terms.is_empty() {
            return Err(Error::InvalidPolynomial(format!("{text:?} is identically zero")));
        }
        Ok(Self { t, terms })
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|e| e.iter().sum()).max().unwrap_or(0)
    }

    /// Number of monomials.
    pub fn sparsity(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[u32], i64)> {
        self.terms.iter().map(|(e, &c)| (e.as_slice(), c))
    }

    pub fn square(&self) -> Result<IntPoly> {
        let mut terms: BTreeMap<Vec<u32>, i64> = BTreeMap::new();
        for (ea, &ca) in &self.terms {
            for (eb, &cb) in &self.terms {
                let e: Vec<u32> = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                let prod = ca
                    .checked_mul(cb)
                    .ok_or_else(|| Error::InvalidPolynomial("coefficient overflow".into()))?;
                let slot = terms.entry(e).or_insert(0);
                *slot = slot
                    .checked_add(prod)
                    .ok_or_else(|| Error::InvalidPolynomial("coefficient overflow".into()))?;
            }
        }
        terms.retain(|_, c| *c != 0);
        Ok(IntPoly { t: self.t, terms })
    }

    /// Copy over `t` variables (`t` may only grow).
    pub fn padded(&self, t: usize) -> IntPoly {
        assert!(t >= self.t);
        let terms = self
            .terms
            .iter()
            .map(|(e, &c)| {
                let mut e = e.clone();
                e.resize(t, 0);
                (e, c)
            })
            .collect();
        IntPoly { t, terms }
    }

    pub fn eval(&self, ys: &[f64]) -> f64 {
        self.terms.iter().fold(0.0, |acc, (e, &c)| {
            acc + c as f64 * e.iter().zip(ys).map(|(&k, y)| y.powi(k as i32)).product::<f64>()
        })
    }
}

impl fmt::Display for IntPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (e, &c)) in self.terms.iter().rev().enumerate() {
            let vars: Vec<String> = e
                .iter()
                .enumerate()
                .filter(|(_, &k)| k > 0)
                .map(|(v, &k)| if k == 1 { format!("x{}", v + 1) } else { format!("x{}^{k}", v + 1) })
                .collect();
            let sign = if c < 0 { "-" } else if i > 0 { "+" } else { "" };
            let mag = c.unsigned_abs();
            f.write_str(sign)?;
            match (vars.is_empty(), mag) {
                (true, _) => write!(f, "{mag}")?,
                (false, 1) => f.write_str(&vars.join("*"))?,
                (false, _) => write!(f, "{mag}*{}", vars.join("*"))?,
            }
        }
        Ok(())
    }
}

type RawTerm = (i64, Vec<(usize, u32)>);

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Lexer<'_> {
    fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        Err(Error::Parse { pos: self.pos, msg: msg.into() })
    }

    fn peek(&mut self) -> Option<u8> {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        self.src.get(self.pos).copied()
    }

    fn number(&mut self) -> Result<u64> {
        self.peek();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return self.err("expected digits");
        }
        std::str::from_utf8(&self.src[start..self.pos])
            .expect("ascii")
            .parse()
            .map_err(|_| Error::Parse { pos: start, msg: "number out of range".into() })
    }

    fn poly(&mut self) -> Result<Vec<RawTerm>> {
        let mut terms = Vec::new();
        let mut sign = 1i64;
        if self.peek() == Some(b'-') {
            self.pos += 1;
            sign = -1;
        }
        loop {
            let (c, vars) = self.term()?;
            terms.push((sign * c, vars));
            match self.peek() {
                Some(b'+') => sign = 1,
                Some(b'-') => sign = -1,
                None => return Ok(terms),
                Some(ch) => return self.err(format!("unexpected character {:?}", ch as char)),
            }
            self.pos += 1;
        }
    }

    fn term(&mut self) -> Result<RawTerm> {
        let mut coef: i64 = 1;
        let mut vars = Vec::new();
        loop {
            match self.peek() {
                Some(b'x') => {
                    self.pos += 1;
                    let start = self.pos;
                    let v = self.number()? as usize;
                    if v == 0 {
                        return Err(Error::Parse { pos: start, msg: "variable index 0".into() });
                    }
                    let mut e = 1u32;
                    if self.peek() == Some(b'^') {
                        self.pos += 1;
                        e = u32::try_from(self.number()?).map_err(|_| Error::Parse {
                            pos: self.pos,
                            msg: "exponent too large".into(),
                        })?;
                    }
                    vars.push((v, e));
                }
                Some(c) if c.is_ascii_digit() => {
                    let k = i64::try_from(self.number()?)
                        .map_err(|_| Error::Parse { pos: self.pos, msg: "coefficient too large".into() })?;
                    coef = coef
                        .checked_mul(k)
                        .ok_or_else(|| Error::Parse { pos: self.pos, msg: "coefficient overflow".into() })?;
                }
                _ => return self.err("expected a number or variable"),
            }
            if self.peek() == Some(b'*') {
                self.pos += 1;
            } else {
                return Ok((coef, vars));
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_square() {
        let p = IntPoly::parse("x1+x2+x3").unwrap();
        assert_eq!((p.t(), p.degree(), p.sparsity()), (3, 1, 3));
        let sq = p.square().unwrap();
        assert_eq!(sq.sparsity(), 6);
        assert_eq!(sq.eval(&[1.0, 2.0, -3.0]), 0.0);
        assert_eq!(sq.eval(&[1.0, 1.0, 1.0]), 9.0);

        let q = IntPoly::parse("x1*x2 - x3^2").unwrap();
        assert_eq!(q.degree(), 2);
        assert_eq!(q.eval(&[2.0, 3.0, 1.0]), 5.0);
        let q = IntPoly::parse("-2*x1^3 + 5 - x2*3").unwrap();
        assert_eq!(q.eval(&[1.0, 1.0]), 0.0);
        assert_eq!(q.to_string(), "-2*x1^3-3*x2+5");
    }

    #[test]
    fn combines_like_terms() {
        let p = IntPoly::parse("x1*x2 + x2*x1 - 2*x1*x2 + x1").unwrap();
        assert_eq!(p.sparsity(), 1);
        assert!(IntPoly::parse("x1 - x1").is_err());
    }

    #[test]
    fn parse_errors() {
        for bad in ["", "x1+", "x0", "x1^", "x1 x2", "+x1", "x1**x2"] {
            assert!(IntPoly::parse(bad).is_err(), "{bad:?}");
        }
    }

    #[test]
    fn display_round_trip() {
        for text in ["x1+x2+x3", "x1*x2-x3^2", "3*x1^2*x2-7+x4"] {
            let p = IntPoly::parse(text).unwrap();
            assert_eq!(IntPoly::parse(&p.to_string()).unwrap(), p);
        }
    }
}
