//! Attention polynomials: multilinear, {0,1}-coefficient, every monomial of
//! degree at least two.
//!
//! Text form is `x1*x2+x2*x3`; whitespace is ignored. Monomials are kept in
//! preference order (higher degree first, then lexicographically earlier
//! first) so two polynomials are equal iff their canonical renderings are.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// A product of distinct variables, stored as strictly increasing 1-based
/// indices.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Monomial {
    vars: Vec<usize>,
}

impl Monomial {
    pub fn new(mut vars: Vec<usize>) -> Result<Self> {
        vars.sort_unstable();
        if vars.first() == Some(&0) {
            return Err(Error::InvalidPolynomial("variable index 0 (indices are 1-based)".into()));
        }
        if let Some(w) = vars.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::InvalidPolynomial(format!(
                "x{} repeated within a monomial (not multilinear)",
                w[0]
            )));
        }
        if vars.len() < 2 {
            return Err(Error::InvalidPolynomial(format!(
                "monomial {} has degree {}, minimum is 2",
                render_vars(&vars),
                vars.len()
            )));
        }
        Ok(Self { vars })
    }

    pub fn vars(&self) -> &[usize] {
        &self.vars
    }

    pub fn degree(&self) -> usize {
        self.vars.len()
    }

    pub fn contains(&self, var: usize) -> bool {
        self.vars.binary_search(&var).is_ok()
    }

    /// Generalized inner product `Σ_ℓ ∏_{j∈vars} Y_j[ℓ]` (`ys` is 0-based,
    /// so `x_j` reads `ys[j-1]`).
    pub fn evaluate(&self, ys: &[&[f64]]) -> f64 {
        let d = ys[self.vars[0] - 1].len();
        (0..d).fold(0.0, |acc, l| acc + self.vars.iter().map(|&j| ys[j - 1][l]).product::<f64>())
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render_vars(&self.vars))
    }
}

fn render_vars(vars: &[usize]) -> String {
    vars.iter().map(|v| format!("x{v}")).collect::<Vec<_>>().join("*")
}

/// Preference order: `Less` means `a` comes first.
pub fn monomial_order_cmp(a: &Monomial, b: &Monomial) -> Ordering {
    b.degree().cmp(&a.degree()).then_with(|| a.vars.cmp(&b.vars))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AttentionPolynomial {
    t: usize,
    monomials: Vec<Monomial>,
}

impl AttentionPolynomial {
    /// Normalizes `monomials` into preference order. `t` defaults to the
    /// largest index used; an explicit `t` may only enlarge it.
    pub fn new(mut monomials: Vec<Monomial>, t: Option<usize>) -> Result<Self> {
        if monomials.is_empty() {
            return Err(Error::InvalidPolynomial("polynomial has no monomials".into()));
        }
        monomials.sort_by(monomial_order_cmp);
        if let Some(w) = monomials.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::InvalidPolynomial(format!("duplicate monomial {}", w[0])));
        }
        let max_var = monomials.iter().flat_map(|m| m.vars.iter().copied()).max().unwrap_or(0);
        let t = match t {
            Some(t) if t < max_var => {
                return Err(Error::InvalidPolynomial(format!(
                    "t = {t} is smaller than the largest variable index x{max_var}"
                )))
            }
            Some(t) => t,
            None => max_var,
        };
        Ok(Self { t, monomials })
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::parse_with_t(text, None)
    }

    pub fn parse_with_t(text: &str, t: Option<usize>) -> Result<Self> {
        let terms = Parser::new(text).polynomial()?;
        let monomials = terms
            .into_iter()
            .map(|(pos, vars)| {
                Monomial::new(vars).map_err(|e| match e {
                    Error::InvalidPolynomial(msg) => Error::Parse { pos, msg },
                    other => other,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(monomials, t)
    }

    /// Number of variables.
    pub fn t(&self) -> usize {
        self.t
    }

    /// Maximum monomial degree.
    pub fn k(&self) -> usize {
        self.monomials.iter().map(Monomial::degree).max().unwrap_or(0)
    }

    /// Sparsity: number of monomials.
    pub fn s(&self) -> usize {
        self.monomials.len()
    }

    pub fn monomials(&self) -> &[Monomial] {
        &self.monomials
    }

    /// Variables that occur in at least one monomial.
    pub fn support(&self) -> BTreeSet<usize> {
        self.monomials.iter().flat_map(|m| m.vars.iter().copied()).collect()
    }

    pub fn contains_var(&self, var: usize) -> bool {
        self.monomials.iter().any(|m| m.contains(var))
    }

    /// Sub-polynomial over the same `t` keeping the given monomials.
    pub(crate) fn restrict(&self, monomials: Vec<Monomial>) -> Self {
        Self::new(monomials, Some(self.t)).expect("subset of a valid polynomial")
    }

    /// `h(Y_1, …, Y_t)` for `t` equal-length vectors.
    pub fn evaluate(&self, ys: &[&[f64]]) -> Result<f64> {
        if ys.len() != self.t {
            return Err(Error::Shape(format!("expected {} vectors, got {}", self.t, ys.len())));
        }
        let d = ys[0].len();
        if d == 0 {
            return Err(Error::Shape("vectors must have length at least 1".into()));
        }
        if let Some(j) = ys.iter().position(|y| y.len() != d) {
            return Err(Error::Shape(format!("vector {} has length {}, expected {d}", j + 1, ys[j].len())));
        }
        Ok(self.monomials.iter().fold(0.0, |acc, m| acc + m.evaluate(ys)))
    }
}

impl fmt::Display for AttentionPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let terms: Vec<String> = self.monomials.iter().map(ToString::to_string).collect();
        f.write_str(&terms.join("+"))
    }
}

impl FromStr for AttentionPolynomial {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::parse(s)
    }
}

/// Recursive-descent parser for `poly := term ('+' term)*`,
/// `term := var ('*' var)*`, `var := 'x' digits`. Degree checks happen in
/// [`Monomial::new`] so the error names the offending term.
struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn new(text: &'a str) -> Self {
        Self { src: text.as_bytes(), pos: 0 }
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        Err(Error::Parse { pos: self.pos, msg: msg.into() })
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn eat(&mut self, c: u8) -> bool {
        self.skip_ws();
        if self.src.get(self.pos) == Some(&c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn polynomial(&mut self) -> Result<Vec<(usize, Vec<usize>)>> {
        let mut terms = vec![self.term()?];
        while self.eat(b'+') {
            terms.push(self.term()?);
        }
        self.skip_ws();
        if self.pos != self.src.len() {
            return self.err(format!("unexpected character {:?}", self.src[self.pos] as char));
        }
        Ok(terms)
    }

    fn term(&mut self) -> Result<(usize, Vec<usize>)> {
        self.skip_ws();
        let start = self.pos;
        let mut vars = vec![self.var()?];
        while self.eat(b'*') {
            vars.push(self.var()?);
        }
        Ok((start, vars))
    }

    fn var(&mut self) -> Result<usize> {
        self.skip_ws();
        if self.src.get(self.pos) != Some(&b'x') {
            return self.err("expected variable 'x<index>'");
        }
        self.pos += 1;
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return self.err("expected digits after 'x'");
        }
        let digits = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii digits");
        match digits.parse::<usize>() {
            Ok(0) => Err(Error::Parse { pos: start, msg: "variable index 0 (indices are 1-based)".into() }),
            Ok(v) => Ok(v),
            Err(_) => Err(Error::Parse { pos: start, msg: format!("index {digits} out of range") }),
        }
    }
}
