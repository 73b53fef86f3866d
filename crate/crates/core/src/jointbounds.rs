//! Region constraints derived from relations between the coefficient
//! operators: `<A_k u,u> <= sum_j y_j(<A_j u,u>)` style relations and
//! relative (domination) bounds `||A_k u|| <= gamma ||u|| + sum_j ||y_j(A_j) u||`.

use std::fmt;
use std::sync::Arc;

use crate::envelope::{
    chord_bound, lower_envelope, sample, upper_envelope, EnvelopeFn, EnvelopeKind,
};
use crate::region::{ConstraintBound, Direction, Interval, ScalarConstraint};
use crate::{Error, Result};

/// Default sample count for [`EnvelopeSource::Function`].
pub const DEFAULT_SAMPLES: usize = 2049;

/// How the envelope of one `y_j` is obtained.
#[derive(Clone)]
pub enum EnvelopeSource {
    /// Sorted `(x, y(x))` pairs on `interval`.
    Samples {
        points: Vec<(f64, f64)>,
        interval: Interval,
    },
    /// `y` sampled equispaced on the bounded `interval`.
    Function {
        f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
        interval: Interval,
        samples: usize,
    },
    /// `slope * x + intercept`, exact for both directions.
    Affine {
        slope: f64,
        intercept: f64,
        interval: Interval,
    },
    /// Chord of a convex `y` over `[a0, a1]`; only valid as an upper envelope.
    Chord {
        a0: f64,
        a1: f64,
        f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    },
    /// A precomputed envelope; its kind must match the direction.
    Table(EnvelopeFn),
    /// `y` unbounded above on `interval`: the upper envelope is `+inf`.
    Unbounded(Interval),
}

impl fmt::Debug for EnvelopeSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EnvelopeSource::Samples { points, interval } => f
                .debug_struct("Samples")
                .field("points", &points.len())
                .field("interval", interval)
                .finish(),
            EnvelopeSource::Function {
                interval, samples, ..
            } => f
                .debug_struct("Function")
                .field("interval", interval)
                .field("samples", samples)
                .finish(),
            EnvelopeSource::Affine {
                slope,
                intercept,
                interval,
            } => f
                .debug_struct("Affine")
                .field("slope", slope)
                .field("intercept", intercept)
                .field("interval", interval)
                .finish(),
            EnvelopeSource::Chord { a0, a1, .. } => f
                .debug_struct("Chord")
                .field("a0", a0)
                .field("a1", a1)
                .finish(),
            EnvelopeSource::Table(env) => f.debug_tuple("Table").field(env).finish(),
            EnvelopeSource::Unbounded(iv) => f.debug_tuple("Unbounded").field(iv).finish(),
        }
    }
}

impl EnvelopeSource {
    pub fn function<F: Fn(f64) -> f64 + Send + Sync + 'static>(
        f: F,
        interval: Interval,
    ) -> EnvelopeSource {
        EnvelopeSource::Function {
            f: Arc::new(f),
            interval,
            samples: DEFAULT_SAMPLES,
        }
    }

    pub fn chord<F: Fn(f64) -> f64 + Send + Sync + 'static>(
        a0: f64,
        a1: f64,
        f: F,
    ) -> EnvelopeSource {
        EnvelopeSource::Chord {
            a0,
            a1,
            f: Arc::new(f),
        }
    }

    pub fn identity(interval: Interval) -> EnvelopeSource {
        EnvelopeSource::Affine {
            slope: 1.0,
            intercept: 0.0,
            interval,
        }
    }

    /// Builds the concave majorant (`Upper`) or convex minorant (`Lower`).
    pub fn envelope(&self, kind: EnvelopeKind) -> Result<EnvelopeFn> {
        match self {
            EnvelopeSource::Samples { points, interval } => match kind {
                EnvelopeKind::Upper => upper_envelope(points, *interval, false),
                EnvelopeKind::Lower => lower_envelope(points, *interval),
            },
            EnvelopeSource::Function {
                f,
                interval,
                samples,
            } => {
                if !interval.is_bounded() {
                    return Err(Error::InvalidArgument(format!(
                        "sampled envelopes need a bounded interval, got {interval}"
                    )));
                }
                let pts = sample(|x| f(x), interval.lo, interval.hi, *samples)?;
                EnvelopeSource::Samples {
                    points: pts,
                    interval: *interval,
                }
                .envelope(kind)
            }
            EnvelopeSource::Affine {
                slope,
                intercept,
                interval,
            } => Ok(EnvelopeFn::affine(*interval, kind, *slope, *intercept)),
            EnvelopeSource::Chord { a0, a1, f } => {
                if kind != EnvelopeKind::Upper {
                    return Err(Error::InvalidArgument(
                        "a chord of a convex function is an upper envelope only".into(),
                    ));
                }
                let (slope, intercept) = chord_bound(*a0, *a1, |x| f(x))?;
                Ok(EnvelopeFn::affine(
                    Interval::new(*a0, *a1)?,
                    kind,
                    slope,
                    intercept,
                ))
            }
            EnvelopeSource::Table(env) => {
                if env.kind != kind {
                    return Err(Error::InvalidArgument(format!(
                        "table holds a {:?} envelope, {:?} needed",
                        env.kind, kind
                    )));
                }
                Ok(env.clone())
            }
            EnvelopeSource::Unbounded(iv) => match kind {
                EnvelopeKind::Upper => Ok(EnvelopeFn::unbounded(*iv, kind)),
                EnvelopeKind::Lower => Err(Error::InvalidArgument(
                    "an unbounded-above function has no finite convex minorant description".into(),
                )),
            },
        }
    }
}

/// `alpha_k (<= | >=) constant + sum_{j in M} y_j(alpha_j)`.
#[derive(Debug, Clone)]
pub struct RelationSpec {
    pub target: usize,
    pub terms: Vec<(usize, EnvelopeSource)>,
    pub direction: Direction,
    pub constant: f64,
}

/// `||A_k u|| <= gamma ||u|| + sum_{j in M} ||y_j(A_j) u||`.
#[derive(Debug, Clone)]
pub struct DominationSpec {
    pub target: usize,
    pub gamma: f64,
    pub terms: Vec<(usize, EnvelopeSource)>,
}

fn check_indices(target: usize, terms: &[(usize, EnvelopeSource)], n: usize) -> Result<()> {
    if terms.is_empty() {
        return Err(Error::InvalidArgument("the index set M is empty".into()));
    }
    if target >= n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: target + 1,
        });
    }
    for (j, _) in terms {
        if *j >= n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: j + 1,
            });
        }
        if *j == target {
            return Err(Error::InvalidArgument(format!(
                "target index {target} also appears in M"
            )));
        }
    }
    Ok(())
}

fn covering(j: usize, env: EnvelopeFn, bounds: &[Interval]) -> Result<EnvelopeFn> {
    let axis = bounds[j];
    if !env.interval.covers(&axis, 1e-12) {
        return Err(Error::IntervalMismatch {
            axis: j,
            env_lo: env.interval.lo,
            env_hi: env.interval.hi,
            box_lo: axis.lo,
            box_hi: axis.hi,
        });
    }
    Ok(env)
}

/// The scalar constraint of a relation: upper envelopes for `<=`, lower
/// envelopes for `>=`. Each envelope interval must cover its box axis.
pub fn relation_constraint(spec: &RelationSpec, bounds: &[Interval]) -> Result<ScalarConstraint> {
    check_indices(spec.target, &spec.terms, bounds.len())?;
    if !spec.constant.is_finite() {
        return Err(Error::InvalidArgument(
            "relation constant must be finite".into(),
        ));
    }
    let kind = match spec.direction {
        Direction::Le => EnvelopeKind::Upper,
        Direction::Ge => EnvelopeKind::Lower,
    };
    let terms = spec
        .terms
        .iter()
        .map(|(j, src)| Ok((*j, covering(*j, src.envelope(kind)?, bounds)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(ScalarConstraint {
        target: spec.target,
        direction: spec.direction,
        bound: ConstraintBound::Sum {
            terms,
            constant: spec.constant,
        },
    })
}

/// True when the envelope is nonnegative on its whole interval, including
/// extrapolated ends.
fn nonnegative(env: &EnvelopeFn) -> bool {
    if env.is_unbounded() {
        return true;
    }
    let iv = env.interval;
    let first = env.breakpoints[0].0;
    let last = env.breakpoints[env.breakpoints.len() - 1].0;
    let left_ok = if iv.lo == f64::NEG_INFINITY {
        env.slope_at(first - 1.0) <= 0.0
    } else {
        env.eval(iv.lo.min(first)) >= 0.0
    };
    let right_ok = if iv.hi == f64::INFINITY {
        env.slope_at(last + 1.0) >= 0.0
    } else {
        env.eval(iv.hi.max(last)) >= 0.0
    };
    env.min_value() >= 0.0 && left_ok && right_ok
}

/// The pair `alpha_k <= B(alpha)` and `alpha_k >= -B(alpha)` with
/// `B = (gamma^(2/3) + sum_j env_j(alpha_j)^(2/3))^(3/2)` over upper envelopes.
pub fn domination_constraints(
    spec: &DominationSpec,
    bounds: &[Interval],
) -> Result<[ScalarConstraint; 2]> {
    check_indices(spec.target, &spec.terms, bounds.len())?;
    if !(spec.gamma >= 0.0) || !spec.gamma.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "gamma must be finite and >= 0, got {}",
            spec.gamma
        )));
    }
    let terms = spec
        .terms
        .iter()
        .map(|(j, src)| {
            let env = covering(*j, src.envelope(EnvelopeKind::Upper)?, bounds)?;
            if !nonnegative(&env) {
                return Err(Error::Domain(format!(
                    "envelope for index {j} takes negative values"
                )));
            }
            Ok((*j, env))
        })
        .collect::<Result<Vec<_>>>()?;
    let make = |direction, negate| ScalarConstraint {
        target: spec.target,
        direction,
        bound: ConstraintBound::Domination {
            gamma: spec.gamma,
            terms: terms.clone(),
            negate,
        },
    };
    Ok([make(Direction::Le, false), make(Direction::Ge, true)])
}

/// `(gamma^(2/3) + sum_j t_j^(2/3))^(3/2)`.
pub fn bound_from_norm_inequality(gamma: f64, terms: &[f64]) -> Result<f64> {
    if !(gamma >= 0.0) || terms.iter().any(|t| !(*t >= 0.0)) {
        return Err(Error::InvalidArgument(
            "gamma and all terms must be >= 0".into(),
        ));
    }
    let s = terms
        .iter()
        .fold(gamma.powf(2.0 / 3.0), |acc, t| acc + t.powf(2.0 / 3.0));
    Ok(s.powf(1.5))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Region;

    fn half_line() -> Interval {
        Interval::new(0.0, f64::INFINITY).unwrap()
    }

    fn unit() -> Interval {
        Interval::new(0.0, 1.0).unwrap()
    }

    fn relation(src: EnvelopeSource, direction: Direction) -> RelationSpec {
        RelationSpec {
            target: 1,
            terms: vec![(0, src)],
            direction,
            constant: 0.0,
        }
    }

    #[test]
    fn identity_relation_is_diagonal_cut() {
        let bounds = [half_line(), half_line()];
        let c = relation_constraint(
            &relation(EnvelopeSource::identity(half_line()), Direction::Le),
            &bounds,
        )
        .unwrap();
        assert!(c.satisfied(&[3.0, 3.0], 0.0));
        assert!(c.satisfied(&[3.0, 1.0], 0.0));
        assert!(!c.satisfied(&[1.0, 1.5], 1e-9));
        assert_eq!(c.violation(&[100.0, 200.0]), 100.0);
    }

    #[test]
    fn square_relation_uses_chord_above() {
        let bounds = [unit(), unit()];
        let c = relation_constraint(
            &relation(EnvelopeSource::chord(0.0, 1.0, |x| x * x), Direction::Le),
            &bounds,
        )
        .unwrap();
        for a in [0.0, 0.25, 0.5, 1.0] {
            assert!((c.bound.eval(&[a, 0.0]) - a).abs() < 1e-15);
        }
        // The sampled concave majorant agrees with the chord.
        let c2 = relation_constraint(
            &relation(EnvelopeSource::function(|x| x * x, unit()), Direction::Le),
            &bounds,
        )
        .unwrap();
        for a in [0.0, 0.3, 0.7, 1.0] {
            assert!((c2.bound.eval(&[a, 0.0]) - a).abs() < 1e-12);
        }
    }

    #[test]
    fn square_relation_from_below_tracks_the_square() {
        let bounds = [unit(), unit()];
        let c = relation_constraint(
            &relation(EnvelopeSource::function(|x| x * x, unit()), Direction::Ge),
            &bounds,
        )
        .unwrap();
        for k in 0..=100 {
            let a = k as f64 / 100.0;
            let v = c.bound.eval(&[a, 0.0]);
            // Piecewise-linear interpolant of x^2 with step 1/2048 overshoots by at most h^2/4.
            assert!(v >= a * a - 1e-15 && v - a * a <= 1.0 / (4.0 * 2048.0 * 2048.0) + 1e-15);
        }
        assert!(c.satisfied(&[0.5, 0.25], 1e-9));
        assert!(!c.satisfied(&[0.5, 0.2], 1e-9));
    }

    #[test]
    fn relation_errors() {
        let bounds = [half_line(), half_line()];
        // Envelope on [0, 1] cannot cover the half-line axis.
        let err = relation_constraint(
            &relation(EnvelopeSource::chord(0.0, 1.0, |x| x * x), Direction::Le),
            &bounds,
        )
        .unwrap_err();
        assert!(matches!(err, Error::IntervalMismatch { axis: 0, .. }));
        let mut spec = relation(EnvelopeSource::identity(half_line()), Direction::Le);
        spec.target = 0;
        assert!(relation_constraint(&spec, &bounds).is_err());
        spec.terms.clear();
        assert!(relation_constraint(&spec, &bounds).is_err());
        let ge_chord = relation(EnvelopeSource::chord(0.0, 1.0, |x| x * x), Direction::Ge);
        assert!(relation_constraint(&ge_chord, &[unit(), unit()]).is_err());
    }

    #[test]
    fn domination_with_identity_is_absolute_value_cut() {
        let bounds = [half_line(), Interval::real_line()];
        let spec = DominationSpec {
            target: 1,
            gamma: 0.0,
            terms: vec![(0, EnvelopeSource::identity(half_line()))],
        };
        let [le, ge] = domination_constraints(&spec, &bounds).unwrap();
        let region = Region::new_box(bounds.to_vec())
            .unwrap()
            .with_constraint(le)
            .unwrap()
            .with_constraint(ge)
            .unwrap();
        assert!(region.contains(&[2.0, -2.0], 1e-12).unwrap());
        assert!(region.contains(&[2.0, 1.5], 1e-12).unwrap());
        assert!(!region.contains(&[2.0, -2.5], 1e-9).unwrap());
        assert!(!region.contains(&[2.0, 2.5], 1e-9).unwrap());
    }

    #[test]
    fn domination_bound_arithmetic() {
        let bounds = [Interval::new(0.0, 10.0).unwrap(), Interval::real_line()];
        let spec = DominationSpec {
            target: 1,
            gamma: 1.0,
            terms: vec![(
                0,
                EnvelopeSource::Affine {
                    slope: 0.0,
                    intercept: 8.0,
                    interval: bounds[0],
                },
            )],
        };
        let [le, ge] = domination_constraints(&spec, &bounds).unwrap();
        let expected = 5f64.powf(1.5);
        assert!((le.bound.eval(&[3.0, 0.0]) - 11.180339887498949).abs() < 1e-12);
        assert!((ge.bound.eval(&[3.0, 0.0]) + expected).abs() < 1e-12);
    }

    #[test]
    fn domination_rejects_negative_envelopes() {
        let bounds = [half_line(), Interval::real_line()];
        let spec = DominationSpec {
            target: 1,
            gamma: 0.0,
            terms: vec![(
                0,
                EnvelopeSource::Affine {
                    slope: 1.0,
                    intercept: -1.0,
                    interval: half_line(),
                },
            )],
        };
        assert!(matches!(
            domination_constraints(&spec, &bounds),
            Err(Error::Domain(_))
        ));
        let decreasing = DominationSpec {
            terms: vec![(
                0,
                EnvelopeSource::Affine {
                    slope: -1.0,
                    intercept: 5.0,
                    interval: half_line(),
                },
            )],
            ..spec.clone()
        };
        assert!(domination_constraints(&decreasing, &bounds).is_err());
        let negative_gamma = DominationSpec {
            gamma: -1.0,
            ..spec
        };
        assert!(domination_constraints(&negative_gamma, &bounds).is_err());
    }

    #[test]
    fn norm_inequality_bound() {
        assert!((bound_from_norm_inequality(0.0, &[3.5]).unwrap() - 3.5).abs() < 1e-14);
        assert!(
            (bound_from_norm_inequality(0.0, &[1.0, 1.0]).unwrap() - 2f64.powf(1.5)).abs() < 1e-15
        );
        assert!((bound_from_norm_inequality(2.0, &[]).unwrap() - 2.0).abs() < 1e-15);
        assert!(
            (bound_from_norm_inequality(1.0, &[8.0]).unwrap() - 11.180339887498949).abs() < 1e-12
        );
        assert!(bound_from_norm_inequality(0.0, &[-1.0]).is_err());
        assert!(bound_from_norm_inequality(-0.5, &[]).is_err());
    }
}
