//! Membership of `w` in the enclosure `W_Omega(T)`: the set of `w` for which
//! `t_alpha(w) = 0` has a solution `alpha` in `Omega`.

use num_complex::Complex64;

use crate::coeffs::{Degeneracy, LinearSystem, ProblemSpec};
use crate::pseudo::{eps_of_system, eps_on_skeleton_system, CarvedSearch};
use crate::region::Region;
use crate::{Error, Result, Tolerances};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Status {
    Inside,
    Outside,
    /// `eps_omega` lies in `(tau, 10 tau]`, too close to call.
    BoundaryCandidate,
    /// A coefficient could not be evaluated (pole).
    Undefined,
}

impl Status {
    pub fn as_str(&self) -> &'static str {
        match self {
            Status::Inside => "in",
            Status::Outside => "out",
            Status::BoundaryCandidate => "boundary",
            Status::Undefined => "undefined",
        }
    }
}

/// Which solution structure decided the membership.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Branch {
    /// Two coefficients, `F(w)` invertible: one candidate `alpha`.
    RegularUnique,
    /// `F(w)` rank deficient: the solutions form a line or affine set.
    DegenerateLine,
    /// Decided through `eps_omega`.
    General,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MembershipResult {
    pub status: Status,
    /// A point of `Omega` with `|t_alpha(w)| <= tau`, when one was found.
    pub witness: Option<Vec<f64>>,
    pub branch: Branch,
}

impl MembershipResult {
    fn new(status: Status, witness: Option<Vec<f64>>, branch: Branch) -> Self {
        MembershipResult {
            status,
            witness,
            branch,
        }
    }
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

/// Two coefficients at a regular point: solves `F alpha = G` uniquely and
/// tests the solution against `Omega`.
pub fn membership_n2(
    spec: &ProblemSpec,
    region: &Region,
    w: Complex64,
    tol: &Tolerances,
) -> Result<MembershipResult> {
    check_dims(spec, region)?;
    if spec.n() != 2 {
        return Err(Error::InvalidArgument(format!(
            "the two-coefficient formula needs n = 2, got {}",
            spec.n()
        )));
    }
    let sys = spec.linearize(w)?;
    if sys.degeneracy(tol.degeneracy) != Degeneracy::Regular {
        return Err(Error::WrongBranch(format!("w = {w} is degenerate")));
    }
    let (f1, f2, g) = (spec.f[0].eval(w)?, spec.f[1].eval(w)?, spec.g.eval(w)?);
    Ok(regular_n2(f1, f2, g, region, tol))
}

pub(crate) fn regular_n2(
    f1: Complex64,
    f2: Complex64,
    g: Complex64,
    region: &Region,
    tol: &Tolerances,
) -> MembershipResult {
    let d = (f1 * f2.conj()).im;
    let alpha = vec![(f2 * g.conj()).im / d, (f1.conj() * g).im / d];
    if region.in_box(&alpha, tol.region) && region.satisfies_constraints(&alpha, tol.region) {
        MembershipResult::new(Status::Inside, Some(alpha), Branch::RegularUnique)
    } else {
        MembershipResult::new(Status::Outside, None, Branch::RegularUnique)
    }
}

/// Membership at a degenerate point, where `rank F(w) < 2`.
///
/// An inconsistent system means `w` is outside. Otherwise the solution set
/// is an affine set; over a box the witness is taken on the slashed
/// boundary.
pub fn membership_degenerate(
    spec: &ProblemSpec,
    region: &Region,
    w: Complex64,
    tol: &Tolerances,
) -> Result<MembershipResult> {
    check_dims(spec, region)?;
    let sys = spec.linearize(w)?;
    if sys.degeneracy(tol.degeneracy) != Degeneracy::Degenerate {
        return Err(Error::WrongBranch(format!("w = {w} is regular")));
    }
    Ok(degenerate(&sys, region, tol))
}

pub(crate) fn degenerate(
    sys: &LinearSystem,
    region: &Region,
    tol: &Tolerances,
) -> MembershipResult {
    let n = sys.n();
    let (smax, _) = sys.singular_values();
    let rhs_norm = sys.rhs[0].hypot(sys.rhs[1]);
    let outside = MembershipResult::new(Status::Outside, None, Branch::DegenerateLine);

    // Minimum-norm solution through the dominant singular direction.
    let (a, b, c, det) = sys.gram();
    let (l1, _) = crate::coeffs::sym2_eigenvalues(a, b, c, det);
    let u = dominant_eigvec(a, b, c, l1);
    let row: Vec<f64> = sys
        .columns
        .iter()
        .map(|col| u[0] * col[0] + u[1] * col[1])
        .collect();

    if smax <= tol.degeneracy {
        if rhs_norm > tol.witness {
            return outside;
        }
        // F = 0 and G = 0: every point of Omega is a witness.
        let sol = eps_of_system(sys, region, &CarvedSearch::default());
        return match sol.argmin {
            Some(a) => MembershipResult::new(Status::Inside, Some(a), Branch::DegenerateLine),
            None => outside,
        };
    }
    let ug = u[0] * sys.rhs[0] + u[1] * sys.rhs[1];
    let alpha0: Vec<f64> = row.iter().map(|r| r * ug / l1).collect();
    if sys.residual_norm(&alpha0) > tol.witness {
        return outside;
    }
    if n == 2 {
        // null direction of the rank-one map alpha -> u . F alpha
        let dir = [-row[1], row[0]];
        if dir == [0.0, 0.0] {
            return outside;
        }
        let found = if region.is_box() {
            slashed_line_witness(region, &alpha0, &dir, tol.region)
        } else {
            region
                .line_witness(&alpha0, &dir, tol.region)
                .ok()
                .flatten()
        };
        return match found {
            Some(a) => MembershipResult::new(Status::Inside, Some(a), Branch::DegenerateLine),
            None => outside,
        };
    }
    // n = 1 (a single point) or n >= 3 (an affine set of dimension n - 1):
    // the bounded least-squares minimizer over a box sits on a skeleton face.
    let sol = eps_of_system(sys, region, &CarvedSearch::default());
    match sol.argmin {
        Some(a) if sol.eps <= tol.witness => {
            MembershipResult::new(Status::Inside, Some(a), Branch::DegenerateLine)
        }
        _ => outside,
    }
}

fn dominant_eigvec(a: f64, b: f64, c: f64, l1: f64) -> [f64; 2] {
    // rows of (M - l1 I) are orthogonal to the eigenvector
    let (v1, v2) = ([l1 - c, b], [b, l1 - a]);
    let v = if v1[0].hypot(v1[1]) >= v2[0].hypot(v2[1]) {
        v1
    } else {
        v2
    };
    let norm = v[0].hypot(v[1]);
    if norm == 0.0 {
        [1.0, 0.0]
    } else {
        [v[0] / norm, v[1] / norm]
    }
}

/// Endpoint of the line clipped to a sub-box of the doubly-unbounded-axis
/// split, which lies on the slashed boundary.
fn slashed_line_witness(region: &Region, point: &[f64], dir: &[f64], tol: f64) -> Option<Vec<f64>> {
    for sub in region.sub_boxes() {
        if let Some((s0, s1)) = crate::region::clip_to(&sub, point, dir, tol) {
            let s = if s0.is_finite() { s0 } else { s1 };
            if s.is_finite() {
                let a: Vec<f64> = point.iter().zip(dir).map(|(p, d)| p + s * d).collect();
                let a: Vec<f64> = a.iter().zip(&sub).map(|(x, iv)| iv.clamp(*x)).collect();
                return Some(a);
            }
        }
    }
    None
}

/// Membership through `eps_omega`: inside when `eps_omega <= tau`, a
/// boundary candidate when `eps_omega <= 10 tau`.
pub fn membership_general(
    spec: &ProblemSpec,
    region: &Region,
    w: Complex64,
    tol: &Tolerances,
) -> Result<MembershipResult> {
    check_dims(spec, region)?;
    let sys = spec.linearize(w)?;
    Ok(general(&sys, region, tol).0)
}

pub(crate) fn general(
    sys: &LinearSystem,
    region: &Region,
    tol: &Tolerances,
) -> (MembershipResult, crate::LsqResult) {
    let sol = eps_of_system(sys, region, &CarvedSearch::default());
    let result = if sol.eps <= tol.witness {
        MembershipResult::new(Status::Inside, sol.argmin.clone(), Branch::General)
    } else if sol.eps <= 10.0 * tol.witness {
        MembershipResult::new(Status::BoundaryCandidate, None, Branch::General)
    } else {
        MembershipResult::new(Status::Outside, None, Branch::General)
    };
    (result, sol)
}

/// Dispatches to the two-coefficient formulas when `n = 2` and to
/// [`membership_general`] otherwise.
pub fn classify(
    spec: &ProblemSpec,
    region: &Region,
    w: Complex64,
    tol: &Tolerances,
) -> Result<MembershipResult> {
    check_dims(spec, region)?;
    let sys = spec.linearize(w)?;
    Ok(classify_system(&sys, region, tol))
}

pub(crate) fn classify_system(
    sys: &LinearSystem,
    region: &Region,
    tol: &Tolerances,
) -> MembershipResult {
    if sys.n() == 2 {
        match sys.degeneracy(tol.degeneracy) {
            Degeneracy::Regular => {
                let f1 = Complex64::new(sys.columns[0][0], sys.columns[0][1]);
                let f2 = Complex64::new(sys.columns[1][0], sys.columns[1][1]);
                let g = Complex64::new(-sys.rhs[0], -sys.rhs[1]);
                regular_n2(f1, f2, g, region, tol)
            }
            Degeneracy::Degenerate => degenerate(sys, region, tol),
        }
    } else {
        general(sys, region, tol).0
    }
}

/// Whether `t_alpha(w) = 0` is solvable (to `tau`) on the `(n - 2)`-skeleton
/// of a box region.
///
/// Requires the problem to be flagged holomorphic and independent on the
/// window of interest; the answer reports skeleton solvability, which is a
/// necessary condition for `w` to lie on the boundary of the enclosure.
pub fn boundary_candidate(
    spec: &ProblemSpec,
    region: &Region,
    w: Complex64,
    tol: &Tolerances,
) -> Result<bool> {
    check_dims(spec, region)?;
    if !region.is_box() {
        return Err(Error::SkeletonUnavailable);
    }
    if !spec.holomorphic_independent {
        return Err(Error::InvalidArgument(
            "boundary candidates need coefficients flagged holomorphic and independent".into(),
        ));
    }
    let sys = spec.linearize(w)?;
    boundary_candidate_system(&sys, region, tol)
}

pub(crate) fn boundary_candidate_system(
    sys: &LinearSystem,
    region: &Region,
    tol: &Tolerances,
) -> Result<bool> {
    let m = sys.n() as i32 - 2;
    Ok(eps_on_skeleton_system(sys, region, m)?.eps <= tol.witness)
}
