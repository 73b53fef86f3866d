//! Run configuration: one JSON document, every float written as a decimal
//! string. Parsing checks references and value ranges; `canonical` prints a
//! normalised document that parses back to an equal value.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::de::{self, Deserializer};
use serde::{Deserialize, Serialize, Serializer};
use specrange_core::{CoeffExpr, Interval};

use crate::CliError;

/// A float carried as a decimal string, `"inf"`/`"-inf"` allowed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dec(pub f64);

impl Serialize for Dec {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        // shortest representation that reads back to the same bits
        s.serialize_str(&format!("{:?}", self.0))
    }
}

impl<'de> Deserialize<'de> for Dec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Dec, D::Error> {
        let text = String::deserialize(d)?;
        let x: f64 = text
            .trim()
            .parse()
            .map_err(|_| de::Error::custom(format!("`{text}` is not a decimal number")))?;
        if x.is_nan() {
            return Err(de::Error::custom("NaN is not allowed"));
        }
        Ok(Dec(x))
    }
}

impl fmt::Display for Dec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Scan,
    Trace,
    Envelope,
    Oracle,
    Pseudo,
}

impl Mode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::Scan => "scan",
            Mode::Trace => "trace",
            Mode::Envelope => "envelope",
            Mode::Oracle => "oracle",
            Mode::Pseudo => "pseudo",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    /// Optional guard: when present it must match the command.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<Mode>,
    pub problem: Problem,
    pub region: RegionConfig,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub envelopes: BTreeMap<String, Source>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<WindowConfig>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub eps_levels: Vec<Dec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerances: Option<TolConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scan: Option<ScanConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<TraceConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pseudo: Option<PseudoConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub envelope: Option<EnvelopeJob>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleConfig>,
}

/// `T(w) = g(w) I + sum_j f[j](w) A_j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Problem {
    pub g: String,
    pub f: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionConfig {
    #[serde(rename = "box")]
    pub bounds: Vec<[Dec; 2]>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub relations: Vec<Relation>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub dominations: Vec<Domination>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dir {
    Le,
    Ge,
}

/// Coefficient numbers are 1-based, as in `A_1, ..., A_n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Relation {
    pub target: usize,
    pub terms: Vec<Term>,
    pub direction: Dir,
    #[serde(default = "zero")]
    pub constant: Dec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Domination {
    pub target: usize,
    pub gamma: Dec,
    pub terms: Vec<Term>,
}

fn zero() -> Dec {
    Dec(0.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Term {
    pub index: usize,
    pub envelope: SourceRef,
}

/// A name from the top-level `envelopes` table or an inline source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SourceRef {
    Named(String),
    Inline(Source),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Source {
    Identity {
        interval: [Dec; 2],
    },
    Affine {
        slope: Dec,
        intercept: Dec,
        interval: [Dec; 2],
    },
    /// Chord of a convex real function given as an expression in `w`.
    Chord {
        expr: String,
        a0: Dec,
        a1: Dec,
    },
    /// Equispaced samples of an expression in `w` on a bounded interval.
    Function {
        expr: String,
        interval: [Dec; 2],
        #[serde(default, skip_serializing_if = "Option::is_none")]
        samples: Option<usize>,
    },
    Samples {
        points: Vec<[Dec; 2]>,
        interval: [Dec; 2],
    },
    /// `x,value` CSV, path relative to the config file.
    Table {
        path: String,
        interval: [Dec; 2],
    },
    /// Minimum over `s` of the chords of `base^(-s) x^s` on `[a0, a1]`.
    PowerChordMin {
        base: Dec,
        a0: Dec,
        a1: Dec,
        /// `[lo, hi, step]` grids of exponents.
        s: Vec<[Dec; 3]>,
        #[serde(default, skip_serializing_if = "is_false")]
        negate: bool,
    },
    Unbounded {
        interval: [Dec; 2],
    },
}

fn is_false(b: &bool) -> bool {
    !*b
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowConfig {
    pub re: [Dec; 2],
    pub im: [Dec; 2],
    pub nx: usize,
    pub ny: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TolConfig {
    pub degeneracy: Dec,
    pub witness: Dec,
    pub region: Dec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    #[serde(default, skip_serializing_if = "is_false")]
    pub skeleton: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Ray {
    pub from: [Dec; 2],
    pub to: [Dec; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceConfig {
    pub level: Dec,
    pub rays: Vec<Ray>,
    #[serde(default = "default_trace_tol")]
    pub tol: Dec,
}

fn default_trace_tol() -> Dec {
    Dec(1e-8)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PseudoConfig {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub points: Vec<[Dec; 2]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Upper,
    Lower,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvelopeJob {
    pub source: SourceRef,
    pub kind: Kind,
    /// `[lo, hi, step]` evaluation grid for `values.csv`.
    pub alpha: [Dec; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleConfig {
    /// Matrix CSV files, one per coefficient, relative to the config file.
    /// When absent, random matrices with `W(A_j)` equal to the box axes are used.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub matrices: Vec<String>,
    #[serde(default = "default_dim")]
    pub dim: usize,
    /// Random unit vectors per check.
    #[serde(default = "default_samples")]
    pub samples: usize,
}

fn default_dim() -> usize {
    6
}

fn default_samples() -> usize {
    1000
}

impl Config {
    pub fn parse(text: &str) -> Result<Config, CliError> {
        let cfg: Config =
            serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Config, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Config::parse(&text)
    }

    /// Pretty JSON with floats in shortest round-trip form.
    pub fn canonical(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("config serialises");
        s.push('\n');
        s
    }

    pub fn n(&self) -> usize {
        self.problem.f.len()
    }

    pub fn resolve<'a>(&'a self, r: &'a SourceRef) -> Result<&'a Source, CliError> {
        match r {
            SourceRef::Inline(s) => Ok(s),
            SourceRef::Named(name) => self
                .envelopes
                .get(name)
                .ok_or_else(|| CliError::Config(format!("unknown envelope `{name}`"))),
        }
    }

    fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        for (k, e) in std::iter::once(&self.problem.g)
            .chain(&self.problem.f)
            .enumerate()
        {
            if let Err(err) = CoeffExpr::parse(e) {
                let which = if k == 0 {
                    "g".to_string()
                } else {
                    format!("f[{k}]")
                };
                return bad(format!("{which}: {err}"));
            }
        }
        let n = self.n();
        if n == 0 {
            return bad("problem needs at least one coefficient f".into());
        }
        if self.region.bounds.len() != n {
            return bad(format!(
                "box has {} axes, problem has {n} coefficients",
                self.region.bounds.len()
            ));
        }
        for b in &self.region.bounds {
            interval(b)?;
        }
        let check_index = |i: usize, what: &str| {
            if i == 0 || i > n {
                Err(CliError::Config(format!("{what} {i} is not in 1..={n}")))
            } else {
                Ok(())
            }
        };
        for r in &self.region.relations {
            check_index(r.target, "relation target")?;
            for t in &r.terms {
                check_index(t.index, "relation term")?;
                self.resolve(&t.envelope)?;
            }
        }
        for d in &self.region.dominations {
            check_index(d.target, "domination target")?;
            for t in &d.terms {
                check_index(t.index, "domination term")?;
                self.resolve(&t.envelope)?;
            }
        }
        if let Some(w) = &self.window {
            if w.nx == 0 || w.ny == 0 {
                return bad("window needs nx, ny >= 1".into());
            }
        }
        if self
            .eps_levels
            .iter()
            .any(|e| !(e.0 > 0.0) || !e.0.is_finite())
        {
            return bad("eps levels must be positive and finite".into());
        }
        if let Some(t) = &self.tolerances {
            if [t.degeneracy, t.witness, t.region]
                .iter()
                .any(|x| !(x.0 > 0.0) || !x.0.is_finite())
            {
                return bad("tolerances must be positive and finite".into());
            }
        }
        if let Some(t) = &self.trace {
            if !(t.level.0 > 0.0) || !(t.tol.0 > 0.0) {
                return bad("trace level and tol must be positive".into());
            }
        }
        if let Some(e) = &self.envelope {
            self.resolve(&e.source)?;
            let [lo, hi, step] = e.alpha;
            if !(step.0 > 0.0) || !(lo.0 <= hi.0) || !lo.0.is_finite() || !hi.0.is_finite() {
                return bad(
                    "envelope alpha grid must be [lo, hi, step] with lo <= hi and step > 0".into(),
                );
            }
        }
        if let Some(o) = &self.oracle {
            if !o.matrices.is_empty() && o.matrices.len() != n {
                return bad(format!(
                    "oracle lists {} matrices for {n} coefficients",
                    o.matrices.len()
                ));
            }
            if o.dim == 0 || o.samples == 0 {
                return bad("oracle dim and samples must be >= 1".into());
            }
        }
        Ok(())
    }
}

pub fn interval(b: &[Dec; 2]) -> Result<Interval, CliError> {
    Interval::new(b[0].0, b[1].0).map_err(|e| CliError::Config(e.to_string()))
}
