//! Simultaneous polynomial root finding (Aberth–Ehrlich) with Newton polishing.

use num_complex::Complex64;

use crate::{Error, Result};

/// Backward error accepted for a root: `|p(z)| <= BACKWARD * sum |c_k| |z|^k`.
pub const BACKWARD: f64 = 1e-10;

/// `p(z)` and `p'(z)` by Horner's rule; `coeffs[k]` multiplies `z^k`.
fn horner(coeffs: &[Complex64], z: Complex64) -> (Complex64, Complex64) {
    let mut p = Complex64::new(0.0, 0.0);
    let mut dp = Complex64::new(0.0, 0.0);
    for &c in coeffs.iter().rev() {
        dp = dp * z + p;
        p = p * z + c;
    }
    (p, dp)
}

/// `|p(z)| / sum |c_k| |z|^k`.
pub fn backward_error(coeffs: &[Complex64], z: Complex64) -> f64 {
    let (p, _) = horner(coeffs, z);
    let r = z.norm();
    let scale = coeffs.iter().rev().fold(0.0, |acc, c| acc * r + c.norm());
    if scale == 0.0 {
        0.0
    } else {
        p.norm() / scale
    }
}

/// All roots of `sum_k coeffs[k] z^k`, with multiplicity.
///
/// Leading coefficients that vanish are dropped; a nonzero constant has no
/// roots, the zero polynomial is an error.
pub fn roots(coeffs: &[Complex64]) -> Result<Vec<Complex64>> {
    let top = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if top == 0.0 {
        return Err(Error::ZeroPolynomial);
    }
    let mut c: Vec<Complex64> = coeffs.to_vec();
    while c.last().is_some_and(|x| x.norm() == 0.0) {
        c.pop();
    }
    // exact zero roots
    let zeros = c.iter().take_while(|x| x.norm() == 0.0).count();
    let c: Vec<Complex64> = c[zeros..].to_vec();
    let mut out = vec![Complex64::new(0.0, 0.0); zeros];
    let deg = c.len() - 1;
    if deg == 0 {
        return Ok(out);
    }
    if deg == 1 {
        out.push(-c[0] / c[1]);
        return Ok(out);
    }
    let lead = c[deg];
    let monic: Vec<Complex64> = c.iter().map(|x| x / lead).collect();

    // Initial guesses on a circle whose radius is the Fujiwara bound.
    let radius = (0..deg)
        .map(|k| monic[k].norm().powf(1.0 / (deg - k) as f64))
        .fold(0.0, f64::max)
        .max(1e-3);
    let mut z: Vec<Complex64> = (0..deg)
        .map(|k| {
            let theta = 2.0 * std::f64::consts::PI * k as f64 / deg as f64 + 0.4;
            Complex64::from_polar(radius, theta)
        })
        .collect();

    for _ in 0..1000 {
        let mut moved: f64 = 0.0;
        for i in 0..deg {
            let (p, dp) = horner(&monic, z[i]);
            if p.norm() == 0.0 {
                continue;
            }
            let ratio = p / dp;
            let mut s = Complex64::new(0.0, 0.0);
            for j in 0..deg {
                if j != i {
                    let d = z[i] - z[j];
                    if d.norm() > 0.0 {
                        s += 1.0 / d;
                    }
                }
            }
            let step = ratio / (1.0 - ratio * s);
            if step.re.is_finite() && step.im.is_finite() {
                z[i] -= step;
                moved = moved.max(step.norm() / (1.0 + z[i].norm()));
            }
        }
        if moved < 1e-15 {
            break;
        }
    }
    for zi in z.iter_mut() {
        for _ in 0..3 {
            let (p, dp) = horner(&monic, *zi);
            if dp.norm() == 0.0 || p.norm() == 0.0 {
                break;
            }
            let next = *zi - p / dp;
            if backward_error(&monic, next) <= backward_error(&monic, *zi) {
                *zi = next;
            } else {
                break;
            }
        }
    }
    out.extend(z);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn sorted(mut v: Vec<Complex64>) -> Vec<Complex64> {
        v.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        v
    }

    #[test]
    fn cubic_with_imaginary_pair() {
        // w^3 + w / 4
        let r = sorted(roots(&[c(0.0, 0.0), c(0.25, 0.0), c(0.0, 0.0), c(1.0, 0.0)]).unwrap());
        let expected = [c(0.0, -0.5), c(0.0, 0.0), c(0.0, 0.5)];
        for (a, b) in r.iter().zip(&expected) {
            assert!((a - b).norm() < 1e-14, "{r:?}");
        }
    }

    #[test]
    fn double_root() {
        // w^2 - 2w + 1
        let coeffs = [c(1.0, 0.0), c(-2.0, 0.0), c(1.0, 0.0)];
        let r = roots(&coeffs).unwrap();
        assert_eq!(r.len(), 2);
        for z in r {
            assert!((z - 1.0).norm() < 1e-7);
            assert!(backward_error(&coeffs, z) <= BACKWARD);
        }
    }

    #[test]
    fn degenerate_inputs() {
        assert!(matches!(
            roots(&[c(0.0, 0.0); 3]),
            Err(Error::ZeroPolynomial)
        ));
        assert!(roots(&[c(2.0, 0.0), c(0.0, 0.0)]).unwrap().is_empty());
        let r = roots(&[c(-3.0, 0.0), c(1.0, 0.0)]).unwrap();
        assert_eq!(r, vec![c(3.0, 0.0)]);
    }

    #[test]
    fn wilkinson_like_backward_errors() {
        // (w - 1)(w - 2)...(w - 8) expanded
        let mut coeffs = vec![c(1.0, 0.0)];
        for k in 1..=8 {
            let mut next = vec![c(0.0, 0.0); coeffs.len() + 1];
            for (i, &a) in coeffs.iter().enumerate() {
                next[i + 1] += a;
                next[i] -= a * k as f64;
            }
            coeffs = next;
        }
        let r = sorted(roots(&coeffs).unwrap());
        for (k, z) in r.iter().enumerate() {
            assert!((z - (k + 1) as f64).norm() < 1e-8, "{r:?}");
            assert!(backward_error(&coeffs, *z) <= BACKWARD);
        }
    }
}
