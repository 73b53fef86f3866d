//! The constraint region `Omega`: a box with possibly infinite endpoints,
//! optionally carved by scalar inequality constraints.

use std::fmt;
use std::sync::OnceLock;

use crate::envelope::EnvelopeFn;
use crate::polygon::Polygon;
use crate::{Error, Result};

/// Closed interval; either end may be infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Interval> {
        if lo.is_nan() || hi.is_nan() || lo > hi || lo == f64::INFINITY || hi == f64::NEG_INFINITY {
            return Err(Error::InvalidArgument(format!(
                "invalid interval [{lo}, {hi}]"
            )));
        }
        Ok(Interval { lo, hi })
    }

    pub fn point(x: f64) -> Interval {
        Interval { lo: x, hi: x }
    }

    pub fn real_line() -> Interval {
        Interval {
            lo: f64::NEG_INFINITY,
            hi: f64::INFINITY,
        }
    }

    pub fn is_bounded(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }

    pub fn is_doubly_unbounded(&self) -> bool {
        self.lo == f64::NEG_INFINITY && self.hi == f64::INFINITY
    }

    pub fn contains(&self, x: f64, tol: f64) -> bool {
        x >= self.lo - slack(self.lo, tol) && x <= self.hi + slack(self.hi, tol)
    }

    /// True when `self` contains `other` up to the endpoint tolerance.
    pub fn covers(&self, other: &Interval, tol: f64) -> bool {
        self.lo - slack(self.lo, tol) <= other.lo && self.hi + slack(self.hi, tol) >= other.hi
    }

    pub fn clamp(&self, x: f64) -> f64 {
        x.max(self.lo).min(self.hi)
    }

    /// Finite endpoints, deduplicated (a degenerate interval has one).
    pub fn finite_endpoints(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(2);
        if self.lo.is_finite() {
            out.push(self.lo);
        }
        if self.hi.is_finite() && self.hi != self.lo {
            out.push(self.hi);
        }
        out
    }

    /// A finite sub-interval `(a, b)` with `a < b`, used to place breakpoints
    /// of affine functions.
    pub fn finite_span(&self) -> (f64, f64) {
        match (self.lo.is_finite(), self.hi.is_finite()) {
            (true, true) if self.lo < self.hi => (self.lo, self.hi),
            (true, _) => (self.lo, self.lo + 1.0),
            (false, true) => (self.hi - 1.0, self.hi),
            (false, false) => (0.0, 1.0),
        }
    }

    fn at_endpoint(&self, x: f64, tol: f64) -> bool {
        self.finite_endpoints()
            .into_iter()
            .any(|e| (x - e).abs() <= tol * (1.0 + e.abs()))
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

/// Tolerance slack at an endpoint `e`: `tol * (1 + |e|)`, zero at infinity.
pub(crate) fn slack(e: f64, tol: f64) -> f64 {
    if e.is_finite() {
        tol * (1.0 + e.abs())
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    /// `alpha_k <= bound`.
    Le,
    /// `alpha_k >= bound`.
    Ge,
}

/// Right-hand side of a scalar constraint on `alpha_k`.
#[derive(Debug, Clone, PartialEq)]
pub enum ConstraintBound {
    /// `constant + sum_j env_j(alpha_j)`.
    Sum {
        terms: Vec<(usize, EnvelopeFn)>,
        constant: f64,
    },
    /// `(gamma^(2/3) + sum_j env_j(alpha_j)^(2/3))^(3/2)`, negated when `negate`.
    Domination {
        gamma: f64,
        terms: Vec<(usize, EnvelopeFn)>,
        negate: bool,
    },
}

impl ConstraintBound {
    pub fn terms(&self) -> &[(usize, EnvelopeFn)] {
        match self {
            ConstraintBound::Sum { terms, .. } | ConstraintBound::Domination { terms, .. } => terms,
        }
    }

    pub fn eval(&self, alpha: &[f64]) -> f64 {
        match self {
            ConstraintBound::Sum { terms, constant } => terms
                .iter()
                .fold(*constant, |acc, (j, env)| acc + env.eval(alpha[*j])),
            ConstraintBound::Domination {
                gamma,
                terms,
                negate,
            } => {
                let s = terms.iter().fold(gamma.powf(2.0 / 3.0), |acc, (j, env)| {
                    acc + env.eval(alpha[*j]).max(0.0).powf(2.0 / 3.0)
                });
                let b = s.powf(1.5);
                if *negate {
                    -b
                } else {
                    b
                }
            }
        }
    }

    /// Partial derivatives with respect to each `alpha_j` (segment slopes of the envelopes).
    fn gradient(&self, alpha: &[f64], out: &mut [f64]) {
        match self {
            ConstraintBound::Sum { terms, .. } => {
                for (j, env) in terms {
                    out[*j] += env.slope_at(alpha[*j]);
                }
            }
            ConstraintBound::Domination {
                gamma,
                terms,
                negate,
            } => {
                let vals: Vec<f64> = terms
                    .iter()
                    .map(|(j, env)| env.eval(alpha[*j]).max(0.0))
                    .collect();
                let s = vals
                    .iter()
                    .fold(gamma.powf(2.0 / 3.0), |acc, v| acc + v.powf(2.0 / 3.0));
                let sign = if *negate { -1.0 } else { 1.0 };
                for ((j, env), v) in terms.iter().zip(&vals) {
                    if *v > 0.0 {
                        out[*j] += sign * s.sqrt() * v.powf(-1.0 / 3.0) * env.slope_at(alpha[*j]);
                    }
                }
            }
        }
    }
}

/// `alpha_target (<= | >=) bound(alpha)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarConstraint {
    pub target: usize,
    pub direction: Direction,
    pub bound: ConstraintBound,
}

impl ScalarConstraint {
    /// Signed violation: positive when the constraint fails. An infinite
    /// bound on the permissive side never constrains.
    pub fn violation(&self, alpha: &[f64]) -> f64 {
        let b = self.bound.eval(alpha);
        let x = alpha[self.target];
        let v = match self.direction {
            Direction::Le => x - b,
            Direction::Ge => b - x,
        };
        if v.is_nan() {
            f64::NEG_INFINITY
        } else {
            v
        }
    }

    pub fn satisfied(&self, alpha: &[f64], tol: f64) -> bool {
        let b = self.bound.eval(alpha);
        self.violation(alpha) <= slack(b, tol).max(slack(alpha[self.target], tol))
    }

    /// Gradient of [`ScalarConstraint::violation`].
    pub fn violation_gradient(&self, alpha: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; alpha.len()];
        self.bound.gradient(alpha, &mut g);
        if self.direction == Direction::Le {
            g.iter_mut().for_each(|v| *v = -*v);
        }
        match self.direction {
            Direction::Le => g[self.target] += 1.0,
            Direction::Ge => g[self.target] -= 1.0,
        }
        g
    }
}

/// A face of a box: some coordinates pinned to finite endpoints, the rest free.
#[derive(Debug, Clone, PartialEq)]
pub struct Face {
    pub fixed: Vec<(usize, f64)>,
    pub free: Vec<(usize, Interval)>,
}

impl Face {
    pub fn contains(&self, alpha: &[f64], tol: f64) -> bool {
        self.fixed
            .iter()
            .all(|&(j, v)| (alpha[j] - v).abs() <= tol * (1.0 + v.abs()))
            && self.free.iter().all(|(j, iv)| iv.contains(alpha[*j], tol))
    }

    /// The face as a box in the full coordinate space (fixed axes degenerate).
    pub fn as_bounds(&self) -> Vec<Interval> {
        let n = self.fixed.len() + self.free.len();
        let mut out = vec![Interval::real_line(); n];
        for &(j, v) in &self.fixed {
            out[j] = Interval::point(v);
        }
        for &(j, iv) in &self.free {
            out[j] = iv;
        }
        out
    }
}

/// `{alpha in box : every constraint holds}`.
///
/// Treated as immutable once queried: the polygon used for exact least
/// squares on two-coefficient regions is computed on first use.
#[derive(Debug, Clone)]
pub struct Region {
    pub bounds: Vec<Interval>,
    pub constraints: Vec<ScalarConstraint>,
    polygon: OnceLock<Option<Polygon>>,
}

impl PartialEq for Region {
    fn eq(&self, other: &Region) -> bool {
        self.bounds == other.bounds && self.constraints == other.constraints
    }
}

impl Region {
    pub fn new_box(bounds: Vec<Interval>) -> Result<Region> {
        if bounds.is_empty() {
            return Err(Error::InvalidArgument(
                "a region needs at least one axis".into(),
            ));
        }
        Ok(Region {
            bounds,
            constraints: Vec::new(),
            polygon: OnceLock::new(),
        })
    }

    /// Adds a constraint after checking its indices and that every envelope
    /// interval covers the corresponding box axis.
    pub fn with_constraint(mut self, c: ScalarConstraint) -> Result<Region> {
        let n = self.n();
        if c.target >= n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: c.target + 1,
            });
        }
        for (j, env) in c.bound.terms() {
            if *j >= n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: j + 1,
                });
            }
            let axis = self.bounds[*j];
            if !env.interval.covers(&axis, 1e-12) {
                return Err(Error::IntervalMismatch {
                    axis: *j,
                    env_lo: env.interval.lo,
                    env_hi: env.interval.hi,
                    box_lo: axis.lo,
                    box_hi: axis.hi,
                });
            }
        }
        self.constraints.push(c);
        self.polygon = OnceLock::new();
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.bounds.len()
    }

    pub fn is_box(&self) -> bool {
        self.constraints.is_empty()
    }

    /// The region as a convex polygon, when it has two axes and only
    /// piecewise linear constraints of matching curvature.
    pub(crate) fn polygon(&self) -> Option<&Polygon> {
        self.polygon
            .get_or_init(|| Polygon::of_region(self))
            .as_ref()
    }

    fn check_dim(&self, alpha: &[f64]) -> Result<()> {
        if alpha.len() != self.n() {
            return Err(Error::DimensionMismatch {
                expected: self.n(),
                got: alpha.len(),
            });
        }
        Ok(())
    }

    fn require_box(&self) -> Result<()> {
        if self.is_box() {
            Ok(())
        } else {
            Err(Error::SkeletonUnavailable)
        }
    }

    pub(crate) fn in_box(&self, alpha: &[f64], tol: f64) -> bool {
        self.bounds
            .iter()
            .zip(alpha)
            .all(|(iv, &x)| iv.contains(x, tol))
    }

    pub(crate) fn satisfies_constraints(&self, alpha: &[f64], tol: f64) -> bool {
        self.constraints.iter().all(|c| c.satisfied(alpha, tol))
    }

    pub fn contains(&self, alpha: &[f64], tol: f64) -> Result<bool> {
        self.check_dim(alpha)?;
        Ok(self.in_box(alpha, tol) && self.satisfies_constraints(alpha, tol))
    }

    /// Number of coordinates sitting at a finite endpoint of the sub-box that
    /// contains `alpha` after splitting every doubly unbounded axis at 0.
    fn endpoint_count(&self, alpha: &[f64], tol: f64) -> usize {
        self.bounds
            .iter()
            .zip(alpha)
            .filter(|(iv, &x)| {
                if iv.is_doubly_unbounded() {
                    x.abs() <= tol
                } else {
                    iv.at_endpoint(x, tol)
                }
            })
            .count()
    }

    pub fn slashed_boundary_contains(&self, alpha: &[f64], tol: f64) -> Result<bool> {
        self.require_box()?;
        self.check_dim(alpha)?;
        Ok(self.in_box(alpha, tol) && self.endpoint_count(alpha, tol) >= 1)
    }

    /// Membership in the `m`-skeleton; `m = -1` is the whole region.
    pub fn skeleton_contains(&self, m: i32, alpha: &[f64], tol: f64) -> Result<bool> {
        self.require_box()?;
        self.check_dim(alpha)?;
        self.check_m(m)?;
        if m < 0 {
            return self.contains(alpha, tol);
        }
        Ok(self.in_box(alpha, tol) && self.endpoint_count(alpha, tol) > m as usize)
    }

    fn check_m(&self, m: i32) -> Result<()> {
        if m < -1 || m >= self.n() as i32 {
            return Err(Error::InvalidArgument(format!(
                "skeleton order {m} outside -1..={}",
                self.n() as i32 - 1
            )));
        }
        Ok(())
    }

    /// Axes of the split sub-boxes: a doubly unbounded axis is replaced by
    /// its halves `[0, inf)` and `(-inf, 0]`.
    fn split_axes(&self) -> Vec<Vec<Interval>> {
        self.bounds
            .iter()
            .map(|iv| {
                if iv.is_doubly_unbounded() {
                    vec![
                        Interval {
                            lo: 0.0,
                            hi: f64::INFINITY,
                        },
                        Interval {
                            lo: f64::NEG_INFINITY,
                            hi: 0.0,
                        },
                    ]
                } else {
                    vec![*iv]
                }
            })
            .collect()
    }

    /// All sub-boxes of the doubly-unbounded-axis split.
    pub fn sub_boxes(&self) -> Vec<Vec<Interval>> {
        let axes = self.split_axes();
        let mut out = vec![Vec::with_capacity(self.n())];
        for choices in &axes {
            out = out
                .into_iter()
                .flat_map(|prefix| {
                    choices.iter().map(move |iv| {
                        let mut next = prefix.clone();
                        next.push(*iv);
                        next
                    })
                })
                .collect();
        }
        out
    }

    /// Faces with exactly `m + 1` coordinates at finite endpoints of a
    /// sub-box. Their union is the `m`-skeleton.
    pub fn skeleton_faces(&self, m: i32) -> Result<Vec<Face>> {
        self.require_box()?;
        self.check_m(m)?;
        if m < 0 {
            return Err(Error::InvalidArgument(
                "the (-1)-skeleton has no faces".into(),
            ));
        }
        let n = self.n();
        let k = m as usize + 1;
        let mut faces: Vec<Face> = Vec::new();
        for sub in self.sub_boxes() {
            for subset in subsets(n, k) {
                let mut partial: Vec<Vec<(usize, f64)>> = vec![Vec::new()];
                for &j in &subset {
                    let ends = sub[j].finite_endpoints();
                    partial = partial
                        .into_iter()
                        .flat_map(|p| {
                            ends.iter().map(move |&e| {
                                let mut q = p.clone();
                                q.push((j, e));
                                q
                            })
                        })
                        .collect();
                }
                for fixed in partial {
                    let free = (0..n)
                        .filter(|j| !subset.contains(j))
                        .map(|j| (j, sub[j]))
                        .collect();
                    let face = Face { fixed, free };
                    if !faces.contains(&face) {
                        faces.push(face);
                    }
                }
            }
        }
        Ok(faces)
    }

    /// Box containing the l1 `eps`-neighbourhood: finite endpoints move out by `eps`.
    pub fn inflate_l1(&self, eps: f64) -> Result<Region> {
        self.require_box()?;
        if !(eps >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "inflation radius {eps} is negative"
            )));
        }
        Region::new_box(
            self.bounds
                .iter()
                .map(|iv| Interval {
                    lo: iv.lo - eps,
                    hi: iv.hi + eps,
                })
                .collect(),
        )
    }

    /// Parameter range `[s0, s1]` of `point + s * dir` inside the box, or
    /// `None` when the line misses it.
    pub fn clip_line(&self, point: &[f64], dir: &[f64], tol: f64) -> Result<Option<(f64, f64)>> {
        self.check_dim(point)?;
        self.check_dim(dir)?;
        if dir.iter().all(|&d| d == 0.0) {
            return Err(Error::InvalidArgument("line direction is zero".into()));
        }
        Ok(clip_to(&self.bounds, point, dir, tol))
    }

    pub fn line_meets_region(&self, point: &[f64], dir: &[f64], tol: f64) -> Result<bool> {
        Ok(self.line_witness(point, dir, tol)?.is_some())
    }

    /// A point of the region on the line `point + s * dir`, if one is found.
    ///
    /// Constraints are searched on the clipped parameter range by sampling
    /// 1024 parameters followed by golden-section refinement of the best one.
    pub fn line_witness(&self, point: &[f64], dir: &[f64], tol: f64) -> Result<Option<Vec<f64>>> {
        let Some((s0, s1)) = self.clip_line(point, dir, tol)? else {
            return Ok(None);
        };
        let at = |s: f64| -> Vec<f64> { point.iter().zip(dir).map(|(p, d)| p + s * d).collect() };
        if self.is_box() {
            // Prefer the exact clip so the witness lands on the box, not in the slack.
            let (s0, s1) = clip_to(&self.bounds, point, dir, 0.0).unwrap_or((s0, s1));
            let s = if s0.is_finite() {
                s0
            } else if s1.is_finite() {
                s1
            } else {
                0.0
            };
            return Ok(Some(at(s)));
        }
        const SAMPLES: usize = 1024;
        let param = |u: f64| -> f64 {
            match (s0.is_finite(), s1.is_finite()) {
                (true, true) => s0 + u * (s1 - s0),
                (true, false) => s0 + u / (1.0 - u),
                (false, true) => s1 - (1.0 - u) / u,
                (false, false) => (std::f64::consts::PI * (u - 0.5)).tan(),
            }
        };
        let worst = |s: f64| -> f64 {
            let a = at(s);
            self.constraints
                .iter()
                .map(|c| c.violation(&a))
                .fold(f64::NEG_INFINITY, f64::max)
        };
        let bounded = s0.is_finite() && s1.is_finite();
        let us: Vec<f64> = (0..SAMPLES)
            .map(|k| {
                let u = k as f64 / (SAMPLES - 1) as f64;
                // the maps for unbounded ranges are singular at the ends
                if bounded {
                    u
                } else {
                    u.clamp(1e-9, 1.0 - 1e-9)
                }
            })
            .collect();
        let mut best = (f64::INFINITY, 0usize);
        for (k, &u) in us.iter().enumerate() {
            let a = at(param(u));
            if self.contains(&a, tol)? {
                return Ok(Some(a));
            }
            let v = worst(param(u));
            if v < best.0 {
                best = (v, k);
            }
        }
        // Golden-section search on the bracket around the best sample.
        let k = best.1;
        let (mut lo, mut hi) = (us[k.saturating_sub(1)], us[(k + 1).min(SAMPLES - 1)]);
        let g = 0.5 * (5f64.sqrt() - 1.0);
        for _ in 0..100 {
            let m1 = hi - g * (hi - lo);
            let m2 = lo + g * (hi - lo);
            if worst(param(m1)) <= worst(param(m2)) {
                hi = m2;
            } else {
                lo = m1;
            }
        }
        let a = at(param(0.5 * (lo + hi)));
        if self.contains(&a, tol)? {
            Ok(Some(a))
        } else {
            log::debug!("line search over carved region missed at 1024 samples");
            Ok(None)
        }
    }
}

pub(crate) fn clip_to(
    bounds: &[Interval],
    point: &[f64],
    dir: &[f64],
    tol: f64,
) -> Option<(f64, f64)> {
    let (mut s0, mut s1) = (f64::NEG_INFINITY, f64::INFINITY);
    for ((iv, &p), &d) in bounds.iter().zip(point).zip(dir) {
        let lo = iv.lo - slack(iv.lo, tol);
        let hi = iv.hi + slack(iv.hi, tol);
        if d == 0.0 {
            if p < lo || p > hi {
                return None;
            }
            continue;
        }
        let (a, b) = ((lo - p) / d, (hi - p) / d);
        let (a, b) = if a <= b { (a, b) } else { (b, a) };
        s0 = s0.max(a);
        s1 = s1.min(b);
    }
    if s0 <= s1 {
        Some((s0, s1))
    } else {
        None
    }
}

/// All `k`-element subsets of `0..n` in lexicographic order.
pub(crate) fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for j in start..n {
            cur.push(j);
            rec(j + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if k <= n {
        rec(0, n, k, &mut Vec::new(), &mut out);
    }
    out
}
