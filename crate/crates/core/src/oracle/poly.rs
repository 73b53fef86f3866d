//! Conversion of coefficient expressions that are polynomial in `w` to
//! coefficient vectors (constant term first).

use num_complex::Complex64;

use crate::coeffs::CoeffExpr;
use crate::{Error, Result};

pub fn to_poly(expr: &CoeffExpr) -> Result<Vec<Complex64>> {
    if expr.is_constant() {
        return Ok(vec![expr.eval(Complex64::new(0.0, 0.0))?]);
    }
    match expr {
        CoeffExpr::Var => Ok(vec![Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)]),
        CoeffExpr::Add(a, b) => Ok(add(&to_poly(a)?, &to_poly(b)?, 1.0)),
        CoeffExpr::Sub(a, b) => Ok(add(&to_poly(a)?, &to_poly(b)?, -1.0)),
        CoeffExpr::Mul(a, b) => Ok(mul(&to_poly(a)?, &to_poly(b)?)),
        CoeffExpr::Div(a, b) if b.is_constant() => {
            let d = b.eval(Complex64::new(0.0, 0.0))?;
            Ok(to_poly(a)?.into_iter().map(|c| c / d).collect())
        }
        CoeffExpr::Pow(a, k) => {
            let base = to_poly(a)?;
            let mut acc = vec![Complex64::new(1.0, 0.0)];
            for _ in 0..*k {
                acc = mul(&acc, &base);
            }
            Ok(acc)
        }
        other => Err(Error::NotPolynomial(other.to_string())),
    }
}

fn add(a: &[Complex64], b: &[Complex64], sign: f64) -> Vec<Complex64> {
    let n = a.len().max(b.len());
    (0..n)
        .map(|k| {
            let x = a.get(k).copied().unwrap_or_default();
            let y = b.get(k).copied().unwrap_or_default();
            x + y * sign
        })
        .collect()
}

fn mul(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// `sum_k c_k w^k`, combining `g + sum_j alpha_j f_j` coefficient-wise.
pub(crate) fn combine(g: &[Complex64], f: &[Vec<Complex64>], alpha: &[f64]) -> Vec<Complex64> {
    let mut out = g.to_vec();
    for (fj, &aj) in f.iter().zip(alpha) {
        out = add(&out, &fj.iter().map(|c| c * aj).collect::<Vec<_>>(), 1.0);
    }
    out
}
