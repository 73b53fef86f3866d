//! Turns a parsed [`Config`] into core objects.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use specrange_core::envelope::{grid, EnvelopeFn, EnvelopeKind, PowerChordFamily};
use specrange_core::jointbounds::{domination_constraints, relation_constraint};
use specrange_core::pseudo::CarvedSearch;
use specrange_core::{
    CoeffExpr, Complex64, Direction, DominationSpec, EnvelopeSource, Interval, ProblemSpec, Region,
    RelationSpec, Tolerances, Window,
};

use crate::config::{interval, Config, Dir, Source, Term};
use crate::{CliError, RunOptions};

fn cfg_err(e: specrange_core::Error) -> CliError {
    CliError::Config(e.to_string())
}

/// Everything a mode needs, built once.
#[derive(Debug)]
pub struct Context {
    pub spec: ProblemSpec,
    pub region: Region,
    pub tol: Tolerances,
    pub search: CarvedSearch,
    pub seed: u64,
    pub window: Option<Window>,
    pub base: PathBuf,
}

impl Context {
    pub fn new(cfg: &Config, base: &Path, opts: &RunOptions) -> Result<Context, CliError> {
        let f: Vec<&str> = cfg.problem.f.iter().map(String::as_str).collect();
        let spec = ProblemSpec::parse(&cfg.problem.g, &f).map_err(cfg_err)?;
        let tol = cfg
            .tolerances
            .as_ref()
            .map(|t| Tolerances {
                degeneracy: t.degeneracy.0,
                witness: t.witness.0,
                region: t.region.0,
            })
            .unwrap_or_default();
        let seed = opts.seed.or(cfg.seed).unwrap_or(0);
        let search = CarvedSearch {
            seed,
            region_tol: tol.region,
            ..CarvedSearch::default()
        };
        let window = cfg
            .window
            .as_ref()
            .map(|w| {
                Window::new(w.re[0].0, w.re[1].0, w.im[0].0, w.im[1].0, w.nx, w.ny).map_err(cfg_err)
            })
            .transpose()?;
        let region = build_region(cfg, base)?;
        Ok(Context {
            spec,
            region,
            tol,
            search,
            seed,
            window,
            base: base.to_path_buf(),
        })
    }
}

fn build_region(cfg: &Config, base: &Path) -> Result<Region, CliError> {
    let bounds = cfg
        .region
        .bounds
        .iter()
        .map(interval)
        .collect::<Result<Vec<_>, _>>()?;
    let mut region = Region::new_box(bounds.clone()).map_err(cfg_err)?;
    let terms = |ts: &[Term]| -> Result<Vec<(usize, EnvelopeSource)>, CliError> {
        ts.iter()
            .map(|t| Ok((t.index - 1, source(cfg.resolve(&t.envelope)?, base)?)))
            .collect()
    };
    for r in &cfg.region.relations {
        let spec = RelationSpec {
            target: r.target - 1,
            terms: terms(&r.terms)?,
            direction: match r.direction {
                Dir::Le => Direction::Le,
                Dir::Ge => Direction::Ge,
            },
            constant: r.constant.0,
        };
        let c = relation_constraint(&spec, &bounds).map_err(cfg_err)?;
        region = region.with_constraint(c).map_err(cfg_err)?;
    }
    for d in &cfg.region.dominations {
        let spec = DominationSpec {
            target: d.target - 1,
            gamma: d.gamma.0,
            terms: terms(&d.terms)?,
        };
        for c in domination_constraints(&spec, &bounds).map_err(cfg_err)? {
            region = region.with_constraint(c).map_err(cfg_err)?;
        }
    }
    Ok(region)
}

/// A real function of one variable from an expression in `w`; non-real or
/// undefined values come back as NaN and are rejected by the samplers.
pub fn real_function(expr: &str) -> Result<Arc<dyn Fn(f64) -> f64 + Send + Sync>, CliError> {
    let e = CoeffExpr::parse(expr).map_err(cfg_err)?;
    Ok(Arc::new(move |x| match e.eval(Complex64::new(x, 0.0)) {
        Ok(z) if z.im.abs() <= 1e-12 * (1.0 + z.re.abs()) => z.re,
        _ => f64::NAN,
    }))
}

pub fn source(src: &Source, base: &Path) -> Result<EnvelopeSource, CliError> {
    Ok(match src {
        Source::Identity { interval: iv } => EnvelopeSource::identity(interval(iv)?),
        Source::Affine {
            slope,
            intercept,
            interval: iv,
        } => EnvelopeSource::Affine {
            slope: slope.0,
            intercept: intercept.0,
            interval: interval(iv)?,
        },
        Source::Chord { expr, a0, a1 } => EnvelopeSource::Chord {
            a0: a0.0,
            a1: a1.0,
            f: real_function(expr)?,
        },
        Source::Function {
            expr,
            interval: iv,
            samples,
        } => EnvelopeSource::Function {
            f: real_function(expr)?,
            interval: interval(iv)?,
            samples: samples.unwrap_or(specrange_core::jointbounds::DEFAULT_SAMPLES),
        },
        Source::Samples {
            points,
            interval: iv,
        } => EnvelopeSource::Samples {
            points: points.iter().map(|p| (p[0].0, p[1].0)).collect(),
            interval: interval(iv)?,
        },
        Source::Table { path, interval: iv } => {
            let iv = interval(iv)?;
            let full = base.join(path);
            let file = std::fs::File::open(&full).map_err(|e| {
                CliError::Config(format!("cannot open table {}: {e}", full.display()))
            })?;
            let env = EnvelopeFn::read_csv(file, iv, EnvelopeKind::Upper).map_err(cfg_err)?;
            if env.is_unbounded() {
                EnvelopeSource::Unbounded(iv)
            } else {
                EnvelopeSource::Samples {
                    points: env.breakpoints,
                    interval: iv,
                }
            }
        }
        Source::PowerChordMin {
            base: b,
            a0,
            a1,
            s,
            negate,
        } => {
            let fam = PowerChordFamily::new(b.0, a0.0, a1.0).map_err(cfg_err)?;
            let mut s_grid = Vec::new();
            for [lo, hi, step] in s {
                s_grid.extend(grid(lo.0, hi.0, step.0).map_err(cfg_err)?);
            }
            let sign = if *negate { -1.0 } else { 1.0 };
            EnvelopeSource::Samples {
                points: fam
                    .min_table(&s_grid)
                    .map_err(cfg_err)?
                    .into_iter()
                    .map(|(x, y)| (x, sign * y))
                    .collect(),
                interval: Interval::new(a0.0, a1.0).map_err(cfg_err)?,
            }
        }
        Source::Unbounded { interval: iv } => EnvelopeSource::Unbounded(interval(iv)?),
    })
}
