//! Enclosures of the numerical range of operator functions
//!
//! ```text
//! T(w) = g(w) I + A_1 f1(w) + ... + A_n fn(w)
//! ```
//!
//! with selfadjoint coefficients `A_j`. Replacing every `A_j` by a real number
//! `alpha_j` gives the scalar function `t_alpha(w)`. Given a region `Omega`
//! that encloses the joint numerical range of `(A_1, ..., A_n)`, the set of
//! `w` for which `t_alpha(w) = 0` is solvable with `alpha` in `Omega` encloses
//! the numerical range of `T`, and `inf_{alpha in Omega} |t_alpha(w)|` bounds
//! the resolvent norm from above.
//!
//! Module map:
//!
//! * [`coeffs`]: coefficient expressions, `t_alpha` and its real 2 x n linearization.
//! * [`region`]: the constraint region, its slashed boundary and skeletons.
//! * [`envelope`]: concave/convex envelopes and affine bound families.
//! * [`jointbounds`]: region constraints from operator relations.
//! * [`lsq`]: bounded-variable least squares for the 2 x n systems.
//! * [`pseudo`]: `eps_omega`, resolvent bounds, pseudonumerical membership.
//! * [`enclosure`]: membership in the enclosure and boundary candidates.
//! * [`scan`]: grid sweeps over complex windows and their CSV/PPM output.
//! * [`oracle`]: finite-matrix ground truth with its own numerics.

// `!(x > 0.0)` is used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod coeffs;
pub mod enclosure;
pub mod envelope;
mod error;
pub mod fmt;
pub mod jointbounds;
pub mod lsq;
pub mod oracle;
mod polygon;
pub mod pseudo;
pub mod region;
pub mod scan;

pub use num_complex::Complex64;

pub use coeffs::{CoeffExpr, Degeneracy, LinearSystem, ProblemSpec};
pub use enclosure::{Branch, MembershipResult, Status};
pub use envelope::{EnvelopeFn, EnvelopeKind};
pub use error::{Error, Result};
pub use jointbounds::{DominationSpec, EnvelopeSource, RelationSpec};
pub use pseudo::LsqResult;
pub use region::{Direction, Face, Interval, Region, ScalarConstraint};
pub use scan::{Palette, ScanField, ScanOptions, Window};

/// Numerical tolerances shared by the classification routines.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Relative singular-value threshold separating regular from degenerate `w`.
    pub degeneracy: f64,
    /// Absolute bound on `|t_alpha(w)|` accepted as a root.
    pub witness: f64,
    /// Relative slack for "on an endpoint" and region membership.
    pub region: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            degeneracy: 1e-10,
            witness: 1e-8,
            region: 1e-9,
        }
    }
}
