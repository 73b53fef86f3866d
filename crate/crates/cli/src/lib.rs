//! Driver behind the `specrange` binary: configuration, dispatch and
//! report writing.

// `!(x > 0.0)` is used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod build;
pub mod config;
pub mod modes;
pub mod report;

use std::path::PathBuf;

use thiserror::Error;

pub use config::{Config, Mode};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical error: {0}")]
    Numerical(#[from] specrange_core::Error),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Numerical(_) => EXIT_NUMERICAL,
            CliError::Io(_) => 1,
        }
    }
}

pub const EXIT_OK: u8 = 0;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_NUMERICAL: u8 = 3;

/// Command-line overrides.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out: PathBuf,
    pub threads: Option<usize>,
    pub seed: Option<u64>,
}

/// Loads the config, runs `mode` and writes outputs plus `report.txt` into
/// `opts.out`. Returns the process exit code.
pub fn run(mode: Mode, config_path: &std::path::Path, opts: &RunOptions) -> Result<u8, CliError> {
    let start = std::time::Instant::now();
    let cfg = Config::load(config_path)?;
    if let Some(m) = cfg.mode {
        if m != mode {
            return Err(CliError::Config(format!(
                "config is for `{}`, command was `{}`",
                m.as_str(),
                mode.as_str()
            )));
        }
    }
    let base = config_path.parent().map(PathBuf::from).unwrap_or_default();
    let ctx = build::Context::new(&cfg, &base, opts)?;
    let parsed = start.elapsed();
    std::fs::create_dir_all(&opts.out)
        .map_err(|e| CliError::Io(format!("{}: {e}", opts.out.display())))?;

    let mut rep = report::Report::new(mode, config_path, &ctx);
    rep.timing("setup", parsed);
    let t = std::time::Instant::now();
    match mode {
        Mode::Scan => modes::scan(&cfg, &ctx, opts, &mut rep)?,
        Mode::Pseudo => modes::pseudo(&cfg, &ctx, opts, &mut rep)?,
        Mode::Trace => modes::trace(&cfg, &ctx, opts, &mut rep)?,
        Mode::Envelope => modes::envelope(&cfg, &ctx, opts, &mut rep)?,
        Mode::Oracle => modes::oracle(&cfg, &ctx, opts, &mut rep)?,
    }
    rep.timing(mode.as_str(), t.elapsed());
    rep.timing("total", start.elapsed());
    rep.write(&opts.out.join("report.txt"))?;
    Ok(if rep.flags() > 0 {
        EXIT_NUMERICAL
    } else {
        EXIT_OK
    })
}
