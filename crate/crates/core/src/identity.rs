//! Exact check of `div div Dᵈf = ((d-1)/d) Δ div f` on polynomial vector
//! fields, using rational coefficient arithmetic.
//!
//! This is the identity that turns the divergence of the equilibrium system
//! into a scalar equation for `div u`. Both sides are computed by symbolic
//! differentiation so the residual is an exact rational number.

use std::collections::BTreeMap;

use num_rational::Rational64;

use crate::error::{Error, Result};

/// Highest supported total degree.
pub const MAX_DEGREE: usize = 3;

/// Multivariate polynomial in `dim` variables with rational coefficients.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Poly {
    dim: usize,
    terms: BTreeMap<Vec<u32>, Rational64>,
}

impl Poly {
    pub fn zero(dim: usize) -> Self {
        Self { dim, terms: BTreeMap::new() }
    }

    /// `c · x^exps`.
    pub fn monomial(coef: Rational64, exps: &[u32]) -> Self {
        let mut p = Self::zero(exps.len());
        p.add_term(exps.to_vec(), coef);
        p
    }

    pub fn from_terms(dim: usize, terms: impl IntoIterator<Item = (Vec<u32>, Rational64)>) -> Self {
        let mut p = Self::zero(dim);
        for (e, c) in terms {
            assert_eq!(e.len(), dim, "exponent vector length must equal dimension");
            p.add_term(e, c);
        }
        p
    }

    fn add_term(&mut self, exps: Vec<u32>, c: Rational64) {
        if c == Rational64::from_integer(0) {
            return;
        }
        let entry = self.terms.entry(exps).or_insert_with(|| Rational64::from_integer(0));
        *entry += c;
        if *entry == Rational64::from_integer(0) {
            self.terms.retain(|_, v| *v != Rational64::from_integer(0));
        }
    }

    pub fn degree(&self) -> usize {
        self.terms.keys().map(|e| e.iter().sum::<u32>() as usize).max().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn derivative(&self, var: usize) -> Self {
        let mut out = Self::zero(self.dim);
        for (e, c) in &self.terms {
            if e[var] > 0 {
                let mut ne = e.clone();
                ne[var] -= 1;
                out.add_term(ne, *c * Rational64::from_integer(e[var] as i64));
            }
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(e.clone(), *c);
        }
        out
    }

    pub fn scale(&self, s: Rational64) -> Self {
        let mut out = Self::zero(self.dim);
        for (e, c) in &self.terms {
            out.add_term(e.clone(), *c * s);
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(Rational64::from_integer(-1)))
    }

    /// Largest absolute coefficient.
    pub fn max_abs_coef(&self) -> Rational64 {
        self.terms
            .values()
            .map(|c| if *c < Rational64::from_integer(0) { -*c } else { *c })
            .max()
            .unwrap_or_else(|| Rational64::from_integer(0))
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(e, c)| {
                let mono: f64 = e.iter().zip(x).map(|(&k, &xi)| xi.powi(k as i32)).product();
                (*c.numer() as f64 / *c.denom() as f64) * mono
            })
            .sum()
    }
}

/// Both sides of the identity for a vector field `f` with `f.len() == d`.
pub fn identity_sides(f: &[Poly]) -> Result<(Poly, Poly)> {
    let d = f.len();
    if d == 0 || f.iter().any(|p| p.dim != d) {
        return Err(Error::Mismatch(format!(
            "vector field needs {d} components, each in {d} variables"
        )));
    }
    if let Some(deg) = f.iter().map(Poly::degree).find(|&g| g > MAX_DEGREE) {
        return Err(Error::DegreeOverflow(deg));
    }
    let half = Rational64::new(1, 2);
    let inv_d = Rational64::new(1, d as i64);
    let div = (0..d).fold(Poly::zero(d), |acc, i| acc.add(&f[i].derivative(i)));

    // Dᵈf_ij = (∂_j f_i + ∂_i f_j)/2 - δ_ij div f / d
    let mut lhs = Poly::zero(d);
    for i in 0..d {
        for j in 0..d {
            let mut entry = f[i].derivative(j).add(&f[j].derivative(i)).scale(half);
            if i == j {
                entry = entry.sub(&div.scale(inv_d));
            }
            lhs = lhs.add(&entry.derivative(j).derivative(i));
        }
    }
    let lap_div = (0..d).fold(Poly::zero(d), |acc, k| acc.add(&div.derivative(k).derivative(k)));
    let rhs = lap_div.scale(Rational64::new(d as i64 - 1, d as i64));
    Ok((lhs, rhs))
}

/// Maximum absolute coefficient of `LHS - RHS`; zero whenever the identity
/// holds.
pub fn polynomial_identity_check(f: &[Poly]) -> Result<Rational64> {
    let (lhs, rhs) = identity_sides(f)?;
    Ok(lhs.sub(&rhs).max_abs_coef())
}
