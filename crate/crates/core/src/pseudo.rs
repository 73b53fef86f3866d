//! `eps_omega = inf_{alpha in Omega} |t_alpha(w)|`, the resolvent bound
//! `1 / eps_omega` and membership in the pseudonumerical-range enclosure.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::coeffs::{LinearSystem, ProblemSpec};
use crate::lsq::{kkt_residual, solve_box};
use crate::region::{slack, Region};
use crate::{Error, Result};

/// Outcome of a minimization of `||F alpha - G||` over a region.
#[derive(Debug, Clone, PartialEq)]
pub struct LsqResult {
    pub eps: f64,
    pub argmin: Option<Vec<f64>>,
    /// The infimum is a minimum. Always true over boxes and polyhedra.
    pub attained: bool,
    pub iterations: usize,
    /// `eps` is the global minimum (boxes, skeletons and polygonal
    /// two-coefficient regions) rather than a local value from the
    /// multi-start search over a carved region.
    pub certified: bool,
    /// False when the carved-region search hit its iteration cap or found no feasible start.
    pub converged: bool,
    /// Scaled first-order optimality residual for box solves.
    pub kkt: Option<f64>,
}

/// Settings for the search over constraint-carved regions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CarvedSearch {
    pub starts: usize,
    pub max_iterations: usize,
    pub seed: u64,
    pub region_tol: f64,
}

impl Default for CarvedSearch {
    fn default() -> Self {
        CarvedSearch {
            starts: 16,
            max_iterations: 200,
            seed: 0x5eed,
            region_tol: 1e-9,
        }
    }
}

pub fn eps_omega(spec: &ProblemSpec, region: &Region, w: Complex64) -> Result<LsqResult> {
    check_dims(spec, region)?;
    Ok(eps_of_system(
        &spec.linearize(w)?,
        region,
        &CarvedSearch::default(),
    ))
}

fn check_dims(spec: &ProblemSpec, region: &Region) -> Result<()> {
    if spec.n() != region.n() {
        return Err(Error::DimensionMismatch {
            expected: spec.n(),
            got: region.n(),
        });
    }
    Ok(())
}

/// Minimizes `||F alpha - G||` over `region` for an already linearized system.
pub fn eps_of_system(sys: &LinearSystem, region: &Region, search: &CarvedSearch) -> LsqResult {
    let sol = solve_box(sys, &region.bounds);
    let kkt = kkt_residual(sys, &region.bounds, &sol.alpha);
    if region.is_box() || region.satisfies_constraints(&sol.alpha, search.region_tol) {
        return LsqResult {
            eps: sol.eps,
            argmin: Some(sol.alpha),
            attained: true,
            iterations: sol.candidates,
            certified: true,
            converged: true,
            kkt: Some(kkt),
        };
    }
    if let Some(poly) = region.polygon() {
        let found = poly.minimize(sys);
        return LsqResult {
            eps: found.as_ref().map_or(f64::INFINITY, |f| f.0),
            attained: found.is_some(),
            argmin: found.map(|f| f.1),
            iterations: 0,
            certified: true,
            converged: true,
            kkt: None,
        };
    }
    carved_search(sys, region, &sol.alpha, search)
}

fn objective(sys: &LinearSystem, a: &[f64]) -> f64 {
    sys.residual_norm(a)
}

fn lerp(a: &[f64], b: &[f64], t: f64) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + t * (y - x)).collect()
}

/// Largest step `t` in `[0, 1]` such that `from + t (to - from)` is feasible,
/// assuming `from` is. Feasibility along the segment is taken to be an
/// interval, which holds for convex regions.
fn farthest_feasible(region: &Region, from: &[f64], to: &[f64], tol: f64) -> Vec<f64> {
    if region.in_box(to, tol) && region.satisfies_constraints(to, tol) {
        return to.to_vec();
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..48 {
        let mid = 0.5 * (lo + hi);
        let p = lerp(from, to, mid);
        if region.in_box(&p, tol) && region.satisfies_constraints(&p, tol) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lerp(from, to, lo)
}

/// Deterministic feasible starting points: random box points, with half-open
/// and unbounded axes sampled on a scale set by `hint`.
fn feasible_starts(region: &Region, hint: &[f64], search: &CarvedSearch) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(search.seed);
    let scale: f64 = 1.0 + hint.iter().map(|x| x.abs()).fold(0.0, f64::max);
    let mut out = Vec::new();
    for _ in 0..64 * search.starts.max(1) {
        let p: Vec<f64> = region
            .bounds
            .iter()
            .map(|iv| {
                let u: f64 = rng.random();
                let e: f64 = -(1.0 - u).ln() * scale;
                match (iv.lo.is_finite(), iv.hi.is_finite()) {
                    (true, true) => iv.lo + u * (iv.hi - iv.lo),
                    (true, false) => iv.lo + e,
                    (false, true) => iv.hi - e,
                    (false, false) => (2.0 * u - 1.0) * 4.0 * scale,
                }
            })
            .collect();
        if region.satisfies_constraints(&p, search.region_tol) {
            out.push(p);
            if out.len() == search.starts {
                break;
            }
        }
    }
    out
}

/// Feasible-direction descent from feasible starts: jump towards the box
/// minimizer as far as feasibility allows, then take projected-gradient
/// steps whose feasibility is restored by bisection.
fn carved_search(
    sys: &LinearSystem,
    region: &Region,
    box_min: &[f64],
    search: &CarvedSearch,
) -> LsqResult {
    let tol = search.region_tol;
    let starts = feasible_starts(region, box_min, search);
    if starts.is_empty() {
        log::warn!("no feasible point found in the carved region");
        return LsqResult {
            eps: f64::INFINITY,
            argmin: None,
            attained: false,
            iterations: 0,
            certified: false,
            converged: false,
            kkt: None,
        };
    }
    let mut jumped: Vec<(f64, Vec<f64>)> = starts
        .iter()
        .map(|s| {
            let p = farthest_feasible(region, s, box_min, tol);
            (objective(sys, &p), p)
        })
        .collect();
    jumped.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut best = jumped[0].clone();
    let mut iterations = 0;
    let mut converged = true;
    for (_, start) in jumped.into_iter().take(4) {
        let (value, point, iters, done) = descend(sys, region, start, box_min, search);
        iterations += iters;
        converged &= done;
        if value < best.0 {
            best = (value, point);
        }
    }
    LsqResult {
        eps: best.0,
        argmin: Some(best.1),
        attained: true,
        iterations,
        certified: false,
        converged,
        kkt: None,
    }
}

fn descend(
    sys: &LinearSystem,
    region: &Region,
    mut x: Vec<f64>,
    box_min: &[f64],
    search: &CarvedSearch,
) -> (f64, Vec<f64>, usize, bool) {
    let tol = search.region_tol;
    let n = x.len();
    let mut fx = objective(sys, &x);
    for it in 0..search.max_iterations {
        let v = sys.apply(&x);
        let r = [v[0] - sys.rhs[0], v[1] - sys.rhs[1]];
        let grad: Vec<f64> = sys
            .columns
            .iter()
            .map(|c| c[0] * r[0] + c[1] * r[1])
            .collect();
        let mut d: Vec<f64> = grad.iter().map(|g| -g).collect();
        for j in 0..n {
            let iv = region.bounds[j];
            let at_lo = iv.lo.is_finite() && x[j] <= iv.lo + slack(iv.lo, tol);
            let at_hi = iv.hi.is_finite() && x[j] >= iv.hi - slack(iv.hi, tol);
            if (at_lo && d[j] < 0.0) || (at_hi && d[j] > 0.0) {
                d[j] = 0.0;
            }
        }
        // Remove components that push into nearly active constraints.
        let normals: Vec<Vec<f64>> = region
            .constraints
            .iter()
            .filter(|c| c.violation(&x) >= -1e-7 * (1.0 + x[c.target].abs()))
            .map(|c| c.violation_gradient(&x))
            .collect();
        for _ in 0..2 {
            for nrm in &normals {
                let dn: f64 = d.iter().zip(nrm).map(|(a, b)| a * b).sum();
                let nn: f64 = nrm.iter().map(|a| a * a).sum();
                if dn > 0.0 && nn > 0.0 {
                    d.iter_mut().zip(nrm).for_each(|(a, b)| *a -= dn / nn * b);
                }
            }
        }
        let mut improved = false;
        let fd = sys.apply(&d);
        let fd2 = fd[0] * fd[0] + fd[1] * fd[1];
        if fd2 > 0.0 {
            let s = -(r[0] * fd[0] + r[1] * fd[1]) / fd2;
            if s > 0.0 {
                let target: Vec<f64> = x
                    .iter()
                    .zip(&d)
                    .zip(&region.bounds)
                    .map(|((a, b), iv)| iv.clamp(a + s * b))
                    .collect();
                let y = farthest_feasible(region, &x, &target, tol);
                let fy = objective(sys, &y);
                if fy < fx * (1.0 - 1e-14) {
                    x = y;
                    fx = fy;
                    improved = true;
                }
            }
        }
        let y = farthest_feasible(region, &x, box_min, tol);
        let fy = objective(sys, &y);
        if fy < fx * (1.0 - 1e-14) {
            x = y;
            fx = fy;
            improved = true;
        }
        if !improved || fx == 0.0 {
            return (fx, x, it + 1, true);
        }
    }
    (fx, x, search.max_iterations, false)
}

/// `1 / eps_omega`, or `+inf` when `eps_omega = 0`.
pub fn resolvent_bound(spec: &ProblemSpec, region: &Region, w: Complex64) -> Result<f64> {
    let eps = eps_omega(spec, region, w)?.eps;
    Ok(if eps > 0.0 { 1.0 / eps } else { f64::INFINITY })
}

/// `eps_omega < eps`.
pub fn pseudo_membership(
    spec: &ProblemSpec,
    region: &Region,
    w: Complex64,
    eps: f64,
) -> Result<bool> {
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "pseudo level {eps} must be positive"
        )));
    }
    Ok(eps_omega(spec, region, w)?.eps < eps)
}

/// Minimum of `|t_alpha(w)|` over the `m`-skeleton of a box region; `m = -1`
/// is the whole region.
pub fn eps_on_skeleton(
    spec: &ProblemSpec,
    region: &Region,
    m: i32,
    w: Complex64,
) -> Result<LsqResult> {
    check_dims(spec, region)?;
    if !region.is_box() {
        return Err(Error::SkeletonUnavailable);
    }
    let sys = spec.linearize(w)?;
    eps_on_skeleton_system(&sys, region, m)
}

pub(crate) fn eps_on_skeleton_system(
    sys: &LinearSystem,
    region: &Region,
    m: i32,
) -> Result<LsqResult> {
    if m == -1 {
        if !region.is_box() {
            return Err(Error::SkeletonUnavailable);
        }
        return Ok(eps_of_system(sys, region, &CarvedSearch::default()));
    }
    let faces = region.skeleton_faces(m)?;
    let mut best: Option<LsqResult> = None;
    let mut iterations = 0;
    for face in faces {
        let bounds = face.as_bounds();
        let sol = solve_box(sys, &bounds);
        iterations += sol.candidates;
        if best.as_ref().is_none_or(|b| sol.eps < b.eps) {
            let kkt = kkt_residual(sys, &bounds, &sol.alpha);
            best = Some(LsqResult {
                eps: sol.eps,
                argmin: Some(sol.alpha),
                attained: true,
                iterations: 0,
                certified: true,
                converged: true,
                kkt: Some(kkt),
            });
        }
    }
    let mut best = best.expect("every skeleton of a nonempty box has a face");
    best.iterations = iterations;
    Ok(best)
}

/// Locates a point on the segment `[a, b]` where `eps_omega` crosses `level`.
///
/// Requires `eps_omega - level` to change sign between the ends; returns
/// `None` otherwise. Bisection stops when the bracket is shorter than `tol`.
pub fn locate_level_crossing(
    spec: &ProblemSpec,
    region: &Region,
    a: Complex64,
    b: Complex64,
    level: f64,
    tol: f64,
) -> Result<Option<Complex64>> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(
            "bisection tolerance must be positive".into(),
        ));
    }
    let side = |w: Complex64| -> Result<bool> { Ok(eps_omega(spec, region, w)?.eps < level) };
    let (mut lo, mut hi) = (a, b);
    let inside_lo = side(lo)?;
    if inside_lo == side(hi)? {
        return Ok(None);
    }
    while (hi - lo).norm() > tol {
        let mid = 0.5 * (lo + hi);
        if side(mid)? == inside_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Some(0.5 * (lo + hi)))
}
