//! Exact least squares over two-coefficient regions whose constraints are
//! piecewise linear with the right curvature (concave upper bounds, convex
//! lower bounds). Such a region is a convex polygon, so the minimum of
//! `||F alpha - G||` sits at the unconstrained minimizer or on an edge.

use crate::coeffs::LinearSystem;
use crate::envelope::EnvelopeFn;
use crate::region::{ConstraintBound, Direction, Region, ScalarConstraint};

/// Stand-in for infinite box ends. Any minimizer farther out than this is
/// missed; it needs `||F||` below roughly `1e-12` relative to `||G||`.
const FAR: f64 = 1e12;

/// `a . alpha <= b`.
type HalfPlane = ([f64; 2], f64);

#[derive(Debug, Clone)]
pub(crate) struct Polygon {
    /// Counter-clockwise vertices; empty when the region is empty.
    vertices: Vec<[f64; 2]>,
}

/// Affine pieces of a piecewise linear envelope, `None` when the curvature
/// does not match the direction, so that the constraint is not convex.
fn pieces(env: &EnvelopeFn, direction: Direction) -> Option<Vec<(f64, f64)>> {
    let bp = &env.breakpoints;
    if bp.len() == 1 {
        return Some(vec![(0.0, bp[0].1)]);
    }
    let lines: Vec<(f64, f64)> = bp
        .windows(2)
        .map(|w| {
            let m = (w[1].1 - w[0].1) / (w[1].0 - w[0].0);
            (m, w[0].1 - m * w[0].0)
        })
        .collect();
    let ok = lines.windows(2).all(|p| {
        let d = p[1].0 - p[0].0;
        let slack = 1e-12 * (1.0 + p[0].0.abs().max(p[1].0.abs()));
        match direction {
            Direction::Le => d <= slack,
            Direction::Ge => d >= -slack,
        }
    });
    (ok && lines.iter().all(|(m, b)| m.is_finite() && b.is_finite())).then_some(lines)
}

/// Half-planes of one constraint; `Some(vec![])` when it never binds.
fn half_planes(c: &ScalarConstraint) -> Option<Vec<HalfPlane>> {
    let ConstraintBound::Sum { terms, constant } = &c.bound else {
        return None;
    };
    let k = c.target;
    let sign = match c.direction {
        Direction::Le => 1.0,
        Direction::Ge => -1.0,
    };
    match terms.as_slice() {
        [] => {
            let mut a = [0.0; 2];
            a[k] = sign;
            Some(vec![(a, sign * constant)])
        }
        [(j, env)] if *j != k => {
            if env.is_unbounded() {
                // an infinite upper bound never binds; an infinite lower bound empties the region
                return (c.direction == Direction::Le).then(Vec::new);
            }
            let lines = pieces(env, c.direction)?;
            Some(
                lines
                    .into_iter()
                    .map(|(m, b)| {
                        let mut a = [0.0; 2];
                        a[k] = sign;
                        a[*j] = -sign * m;
                        (a, sign * (constant + b))
                    })
                    .collect(),
            )
        }
        _ => None,
    }
}

fn clip(poly: Vec<[f64; 2]>, (a, b): HalfPlane) -> Vec<[f64; 2]> {
    let side = |p: &[f64; 2]| a[0] * p[0] + a[1] * p[1] - b;
    let mut out = Vec::with_capacity(poly.len() + 1);
    for i in 0..poly.len() {
        let p = poly[i];
        let q = poly[(i + 1) % poly.len()];
        let (sp, sq) = (side(&p), side(&q));
        if sp <= 0.0 {
            out.push(p);
        }
        if (sp < 0.0 && sq > 0.0) || (sp > 0.0 && sq < 0.0) {
            let t = sp / (sp - sq);
            out.push([p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]);
        }
    }
    out.dedup();
    if out.len() > 1 && out.first() == out.last() {
        out.pop();
    }
    out
}

impl Polygon {
    /// The polygon of a constrained two-coefficient region, or `None` when
    /// some constraint is not of the supported form.
    pub(crate) fn of_region(region: &Region) -> Option<Polygon> {
        if region.n() != 2 || region.is_box() {
            return None;
        }
        let mut planes = Vec::new();
        for c in &region.constraints {
            planes.extend(half_planes(c)?);
        }
        let b = &region.bounds;
        let end = |x: f64| if x.is_finite() { x } else { x.signum() * FAR };
        let (x0, x1, y0, y1) = (end(b[0].lo), end(b[0].hi), end(b[1].lo), end(b[1].hi));
        let mut vertices = vec![[x0, y0], [x1, y0], [x1, y1], [x0, y1]];
        vertices.dedup();
        if vertices.len() > 1 && vertices.first() == vertices.last() {
            vertices.pop();
        }
        for p in planes {
            if vertices.is_empty() {
                break;
            }
            vertices = clip(vertices, p);
        }
        Some(Polygon { vertices })
    }

    fn contains(&self, p: [f64; 2]) -> bool {
        let v = &self.vertices;
        if v.len() < 3 {
            return false;
        }
        (0..v.len()).all(|i| {
            let (a, b) = (v[i], v[(i + 1) % v.len()]);
            (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]) >= 0.0
        })
    }

    /// Minimum of `||F alpha - G||` and a minimizer; `None` for an empty polygon.
    pub(crate) fn minimize(&self, sys: &LinearSystem) -> Option<(f64, Vec<f64>)> {
        let v = &self.vertices;
        let first = *v.first()?;
        let mut best = (sys.residual_norm(&first), first.to_vec());
        let mut consider = |p: [f64; 2]| {
            let r = sys.residual_norm(&p);
            if r < best.0 {
                best = (r, p.to_vec());
            }
        };
        let [c0, c1] = [sys.columns[0], sys.columns[1]];
        let g = sys.rhs;
        let det = c0[0] * c1[1] - c1[0] * c0[1];
        let scale = (c0[0].hypot(c0[1])) * (c1[0].hypot(c1[1]));
        if det.abs() > 1e-14 * scale {
            let p = [
                (g[0] * c1[1] - c1[0] * g[1]) / det,
                (c0[0] * g[1] - g[0] * c0[1]) / det,
            ];
            if self.contains(p) {
                consider(p);
            }
        }
        for i in 0..v.len() {
            let (mut a, mut b) = (v[i], v[(i + 1) % v.len()]);
            // project from the nearer end so that edges reaching FAR keep precision
            if a[0].hypot(a[1]) > b[0].hypot(b[1]) {
                std::mem::swap(&mut a, &mut b);
            }
            let e = [b[0] - a[0], b[1] - a[1]];
            let fe = sys.apply(&e);
            let fa = sys.apply(&a);
            let r = [fa[0] - g[0], fa[1] - g[1]];
            let den = fe[0] * fe[0] + fe[1] * fe[1];
            if den > 0.0 {
                let t = (-(fe[0] * r[0] + fe[1] * r[1]) / den).clamp(0.0, 1.0);
                consider([a[0] + t * e[0], a[1] + t * e[1]]);
            }
            consider(a);
        }
        Some(best)
    }
}
