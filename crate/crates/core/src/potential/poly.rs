//! Inline polynomial potentials.
//!
//! Parses sums of monomials with real coefficients, e.g.
//! `0.25*x1^4 - 0.5*x1^2 + 0.5*x2^2 + 0.25`, into a [`Potential`] with
//! analytic gradient and Hessian.  Variables are `x1, x2, ...`.

use std::sync::Arc;

use nalgebra::DMatrix;

use super::{Modulus, Potential};
use crate::error::{Error, Result};

/// One monomial: coefficient times a product of `x_i^p` factors.
#[derive(Debug, Clone, PartialEq)]
pub struct Monomial {
    pub coef: f64,
    /// (zero-based variable index, power)
    pub factors: Vec<(usize, u32)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    pub monomials: Vec<Monomial>,
    pub dim: usize,
}

impl Polynomial {
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.monomials
            .iter()
            .map(|m| {
                m.coef * m.factors.iter().map(|&(i, p)| x[i].powi(p as i32)).product::<f64>()
            })
            .sum()
    }

    /// Partial derivative with respect to variable `var`.
    pub fn derivative(&self, var: usize) -> Polynomial {
        let monomials = self
            .monomials
            .iter()
            .filter_map(|m| {
                let pos = m.factors.iter().position(|&(i, _)| i == var)?;
                let (_, p) = m.factors[pos];
                let mut factors = m.factors.clone();
                if p == 1 {
                    factors.remove(pos);
                } else {
                    factors[pos] = (var, p - 1);
                }
                Some(Monomial { coef: m.coef * p as f64, factors })
            })
            .collect();
        Polynomial { monomials, dim: self.dim }
    }
}

fn parse_err(msg: impl Into<String>) -> Error {
    Error::ConfigInvalid { field: "potential.inline".to_string(), message: msg.into() }
}

/// Parse a polynomial expression.  Grammar: signed terms joined by `+`/`-`,
/// each term a `*`-product of a decimal coefficient and `x<i>^<p>` factors.
pub fn parse(expr: &str) -> Result<Polynomial> {
    let cleaned: String = expr.chars().filter(|c| !c.is_whitespace()).collect();
    if cleaned.is_empty() {
        return Err(parse_err("empty expression"));
    }
    let mut monomials = Vec::new();
    let mut dim = 0usize;
    let mut rest: &str = &cleaned;
    let mut sign = 1.0;
    if let Some(r) = rest.strip_prefix('-') {
        sign = -1.0;
        rest = r;
    } else if let Some(r) = rest.strip_prefix('+') {
        rest = r;
    }
    while !rest.is_empty() {
        let end = rest
            .char_indices()
            .skip(1)
            .find(|&(i, c)| (c == '+' || c == '-') && !matches!(&rest[i - 1..i], "e" | "E"))
            .map(|(i, _)| i)
            .unwrap_or(rest.len());
        let term = &rest[..end];
        let mut coef = sign;
        let mut factors: Vec<(usize, u32)> = Vec::new();
        for factor in term.split('*') {
            if factor.is_empty() {
                return Err(parse_err(format!("empty factor in term '{term}'")));
            }
            if let Some(var_part) = factor.strip_prefix('x') {
                let (idx_s, pow) = match var_part.split_once('^') {
                    Some((i, p)) => {
                        (i, p.parse::<u32>().map_err(|_| parse_err(format!("bad power '{p}'")))?)
                    }
                    None => (var_part, 1),
                };
                let idx: usize =
                    idx_s.parse().map_err(|_| parse_err(format!("bad variable '{factor}'")))?;
                if idx == 0 {
                    return Err(parse_err("variables are 1-based: x1, x2, ..."));
                }
                dim = dim.max(idx);
                match factors.iter_mut().find(|(i, _)| *i == idx - 1) {
                    Some(f) => f.1 += pow,
                    None => factors.push((idx - 1, pow)),
                }
            } else {
                let c: f64 =
                    factor.parse().map_err(|_| parse_err(format!("bad coefficient '{factor}'")))?;
                coef *= c;
            }
        }
        monomials.push(Monomial { coef, factors });
        if end == rest.len() {
            break;
        }
        sign = if rest.as_bytes()[end] == b'-' { -1.0 } else { 1.0 };
        rest = &rest[end + 1..];
    }
    if dim == 0 {
        return Err(parse_err("expression uses no variables"));
    }
    Ok(Polynomial { monomials, dim })
}

/// Build a [`Potential`] from a parsed polynomial.  The caller is
/// responsible for the polynomial actually being confining; `growth_const`
/// is taken on trust.
pub fn to_potential(p: &Polynomial, growth_const: f64) -> Potential {
    let dim = p.dim;
    let grads: Vec<Polynomial> = (0..dim).map(|i| p.derivative(i)).collect();
    let hessians: Vec<Vec<Polynomial>> =
        grads.iter().map(|g| (0..dim).map(|j| g.derivative(j)).collect()).collect();
    let pe = p.clone();
    let eval: super::ScalarFn = Arc::new(move |x: &[f64]| pe.eval(x));
    let grad: super::VecFn =
        Arc::new(move |x: &[f64]| grads.iter().map(|g| g.eval(x)).collect());
    let hess: super::MatFn = Arc::new(move |x: &[f64]| {
        DMatrix::from_fn(dim, dim, |i, j| hessians[i][j].eval(x))
    });
    Potential::new(dim, eval, grad, Some(hess), growth_const, Modulus::power_law(1.0, 1.5))
}
