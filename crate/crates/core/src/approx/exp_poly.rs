use crate::error::{Error, Result};

pub const DEFAULT_DEGREE_CAP: usize = 64;

/// Taylor polynomial of `e^x` at 0 with a certified relative error on
/// `[-radius, radius]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ExpPolynomial {
    /// `coefficients[m] = 1/m!`
    pub coefficients: Vec<f64>,
    pub valid_radius: f64,
    /// Certified bound on `|P(a) - e^a| / e^a` over the radius.
    pub rel_error: f64,
}

impl ExpPolynomial {
    pub fn degree(&self) -> usize {
        self.coefficients.len() - 1
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coefficients.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }
}

fn ln_factorial(m: usize) -> f64 {
    (2..=m).map(|i| (i as f64).ln()).sum()
}

/// `ln` of the Lagrange remainder bound relative to the smallest value of
/// `e^a` on the interval: `e^{2Γ} Γ^{deg+1} / (deg+1)!`.
fn ln_relative_remainder(radius: f64, degree: usize) -> f64 {
    if radius == 0.0 {
        return f64::NEG_INFINITY;
    }
    2.0 * radius + (degree + 1) as f64 * radius.ln() - ln_factorial(degree + 1)
}

pub fn exp_approx_poly(radius: f64, eps: f64) -> Result<ExpPolynomial> {
    exp_approx_poly_capped(radius, eps, DEFAULT_DEGREE_CAP)
}

/// Smallest-degree Taylor polynomial whose remainder bound certifies
/// relative error `eps` on `[-radius, radius]`.
pub fn exp_approx_poly_capped(radius: f64, eps: f64, degree_cap: usize) -> Result<ExpPolynomial> {
    if !(radius >= 0.0 && radius.is_finite()) {
        return Err(Error::InvalidArgument(format!("radius must be finite and >= 0, got {radius}")));
    }
    if !(eps > 0.0 && eps < 0.1) {
        return Err(Error::InvalidArgument(format!("eps must lie in (0, 0.1), got {eps}")));
    }
    let target = eps.ln();
    let degree = (0..=degree_cap)
        .find(|&deg| ln_relative_remainder(radius, deg) <= target)
        .ok_or(Error::RadiusTooLarge { radius, cap: degree_cap })?;
    let mut coefficients = Vec::with_capacity(degree + 1);
    let mut c = 1.0;
    for m in 0..=degree {
        if m > 0 {
            c /= m as f64;
        }
        coefficients.push(c);
    }
    Ok(ExpPolynomial {
        coefficients,
        valid_radius: radius,
        rel_error: ln_relative_remainder(radius, degree).exp(),
    })
}
