//! Exact bounded-variable least squares for the 2 x n systems `F alpha = G`.
//!
//! The minimum of `||F alpha - G||` over a box is attained (the image of a
//! box under `F` is a closed polygon). Among the minimizers there is one at
//! which every coordinate is either pinned to an anchor value or free, and the
//! free columns of `F` are linearly independent. Anchors are the finite
//! endpoints of each axis, and `0` for an axis unbounded in both directions.
//! Because `F` has two rows, at most two coordinates are free, so the
//! minimizer is found by enumerating pinnings and solving a 0 x 0, 1 x 1 or
//! 2 x 2 system for each.

use crate::coeffs::LinearSystem;
use crate::region::{slack, subsets, Interval};

/// Result of [`solve_box`].
#[derive(Debug, Clone, PartialEq)]
pub struct BoxSolution {
    pub alpha: Vec<f64>,
    pub eps: f64,
    /// Number of feasible candidates examined.
    pub candidates: usize,
}

/// Relative slack allowed when accepting a free coordinate just outside its interval.
const FEASIBILITY_SLACK: f64 = 1e-12;

fn anchors(iv: &Interval) -> Vec<f64> {
    if iv.is_doubly_unbounded() {
        vec![0.0]
    } else {
        iv.finite_endpoints()
    }
}

/// Minimizes `||F alpha - G||` over the box `bounds`.
///
/// Work grows like `n^2 2^n`, which is intended for the handful of
/// coefficients an operator function has.
pub fn solve_box(sys: &LinearSystem, bounds: &[Interval]) -> BoxSolution {
    let n = sys.n();
    assert_eq!(bounds.len(), n, "system and box dimensions differ");
    let cols = &sys.columns;
    let pinned: Vec<Vec<f64>> = bounds.iter().map(anchors).collect();
    // Degenerate axes are always pinned.
    let movable: Vec<usize> = (0..n).filter(|&j| bounds[j].lo < bounds[j].hi).collect();

    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut candidates = 0usize;
    let mut alpha = vec![0.0; n];

    for k in 0..=movable.len().min(2) {
        for pick in subsets(movable.len(), k) {
            let free: Vec<usize> = pick.iter().map(|&p| movable[p]).collect();
            let independent = match free.len() {
                0 => true,
                1 => cols[free[0]] != [0.0, 0.0],
                _ => det2(cols[free[0]], cols[free[1]]) != 0.0,
            };
            if !independent {
                continue;
            }
            let fixed: Vec<usize> = (0..n).filter(|j| !free.contains(j)).collect();
            let total: usize = fixed.iter().map(|&j| pinned[j].len()).product();
            for code in 0..total {
                let mut c = code;
                for &j in &fixed {
                    let opts = &pinned[j];
                    alpha[j] = opts[c % opts.len()];
                    c /= opts.len();
                }
                let mut r = sys.rhs;
                for &j in &fixed {
                    r[0] -= cols[j][0] * alpha[j];
                    r[1] -= cols[j][1] * alpha[j];
                }
                let ok = match free.len() {
                    0 => true,
                    1 => {
                        let f = cols[free[0]];
                        let x = (f[0] * r[0] + f[1] * r[1]) / (f[0] * f[0] + f[1] * f[1]);
                        place(&mut alpha, free[0], x, bounds)
                    }
                    _ => {
                        let (a, b) = (cols[free[0]], cols[free[1]]);
                        let d = det2(a, b);
                        let xa = (r[0] * b[1] - r[1] * b[0]) / d;
                        let xb = (a[0] * r[1] - a[1] * r[0]) / d;
                        place(&mut alpha, free[0], xa, bounds)
                            && place(&mut alpha, free[1], xb, bounds)
                    }
                };
                if !ok {
                    continue;
                }
                candidates += 1;
                let eps = sys.residual_norm(&alpha);
                if best.as_ref().is_none_or(|(e, _)| eps < *e) {
                    best = Some((eps, alpha.clone()));
                }
            }
        }
    }
    let (eps, alpha) = best.expect("the all-pinned candidates are always feasible");
    BoxSolution {
        alpha,
        eps,
        candidates,
    }
}

fn det2(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

fn place(alpha: &mut [f64], j: usize, x: f64, bounds: &[Interval]) -> bool {
    let iv = bounds[j];
    if !x.is_finite() || !iv.contains(x, FEASIBILITY_SLACK) {
        return false;
    }
    alpha[j] = iv.clamp(x);
    true
}

/// Scaled violation of the first-order optimality conditions at `alpha`.
///
/// For each coordinate the gradient component `f_j . (F alpha - G)` is
/// divided by `|f_j| (|G| + sum_k |f_k| |alpha_k|)`, the size of the
/// rounding noise it carries. Free coordinates contribute `|grad|`, lower
/// bounds `max(0, -grad)`, upper bounds `max(0, grad)`.
pub fn kkt_residual(sys: &LinearSystem, bounds: &[Interval], alpha: &[f64]) -> f64 {
    let v = sys.apply(alpha);
    let r = [v[0] - sys.rhs[0], v[1] - sys.rhs[1]];
    let norm = |c: &[f64; 2]| c[0].hypot(c[1]);
    let size = norm(&sys.rhs)
        + sys
            .columns
            .iter()
            .zip(alpha)
            .map(|(c, a)| norm(c) * a.abs())
            .sum::<f64>();
    let mut worst: f64 = 0.0;
    for ((c, iv), &a) in sys.columns.iter().zip(bounds).zip(alpha) {
        let scale = norm(c) * size;
        if scale == 0.0 {
            continue;
        }
        let grad = (c[0] * r[0] + c[1] * r[1]) / scale;
        let at_lo = iv.lo.is_finite() && a <= iv.lo + slack(iv.lo, FEASIBILITY_SLACK);
        let at_hi = iv.hi.is_finite() && a >= iv.hi - slack(iv.hi, FEASIBILITY_SLACK);
        let v = match (at_lo, at_hi) {
            (true, true) => 0.0,
            (true, false) => (-grad).max(0.0),
            (false, true) => grad.max(0.0),
            (false, false) => grad.abs(),
        };
        worst = worst.max(v);
    }
    worst
}
