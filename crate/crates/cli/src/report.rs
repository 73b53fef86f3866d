//! `report.txt`: settings, results, numerical-failure flags and timings.

use std::io::Write;
use std::path::Path;
use std::time::Duration;

use specrange_core::scan::write_atomic;

use crate::build::Context;
use crate::config::Mode;
use crate::CliError;

#[derive(Debug, Default)]
pub struct Report {
    header: Vec<(String, String)>,
    results: Vec<(String, String)>,
    flags: Vec<(String, usize)>,
    timings: Vec<(String, Duration)>,
}

impl Report {
    pub fn new(mode: Mode, config: &Path, ctx: &Context) -> Report {
        let mut r = Report::default();
        r.header.push(("mode".into(), mode.as_str().into()));
        r.header
            .push(("config".into(), config.display().to_string()));
        r.header
            .push(("coefficients".into(), ctx.spec.n().to_string()));
        r.header.push((
            "tolerances".into(),
            format!(
                "degeneracy={:e} witness={:e} region={:e}",
                ctx.tol.degeneracy, ctx.tol.witness, ctx.tol.region
            ),
        ));
        r.header.push(("seed".into(), ctx.seed.to_string()));
        r.header.push((
            "region".into(),
            if ctx.region.is_box() {
                "box"
            } else {
                "box with constraints"
            }
            .into(),
        ));
        r
    }

    pub fn setting(&mut self, key: &str, value: impl ToString) {
        self.header.push((key.into(), value.to_string()));
    }

    pub fn result(&mut self, key: &str, value: impl ToString) {
        self.results.push((key.into(), value.to_string()));
    }

    /// A count that makes the run exit with the numerical-failure code when nonzero.
    pub fn flag(&mut self, key: &str, count: usize) {
        self.flags.push((key.into(), count));
    }

    pub fn flags(&self) -> usize {
        self.flags.iter().map(|f| f.1).sum()
    }

    pub fn timing(&mut self, key: &str, d: Duration) {
        self.timings.push((key.into(), d));
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let section = |s: &mut String, title: &str, rows: &[(String, String)]| {
            s.push_str(&format!("[{title}]\n"));
            for (k, v) in rows {
                s.push_str(&format!("{k}: {v}\n"));
            }
            s.push('\n');
        };
        section(&mut s, "settings", &self.header);
        section(&mut s, "results", &self.results);
        let flags: Vec<(String, String)> = self
            .flags
            .iter()
            .map(|(k, v)| (k.clone(), v.to_string()))
            .collect();
        section(&mut s, "flags", &flags);
        let times: Vec<(String, String)> = self
            .timings
            .iter()
            .map(|(k, d)| (k.clone(), format!("{:.3}s", d.as_secs_f64())))
            .collect();
        section(&mut s, "timings", &times);
        s.push_str(&format!(
            "status: {}\n",
            if self.flags() == 0 {
                "ok"
            } else {
                "numerical failure flags present"
            }
        ));
        s
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        let text = self.render();
        write_atomic(path, |out| {
            out.write_all(text.as_bytes())?;
            Ok(())
        })
        .map_err(|e| CliError::Io(e.to_string()))
    }
}
