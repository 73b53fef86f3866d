//! Rectangular sweeps of the complex plane and their CSV and PPM output.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::coeffs::ProblemSpec;
use crate::enclosure::{boundary_candidate_system, classify_system, Status};
use crate::fmt::g17;
use crate::pseudo::{eps_of_system, CarvedSearch};
use crate::region::Region;
use crate::{Error, Result, Tolerances};

/// Grid of `nx x ny` cells over `[re_min, re_max] x [im_min, im_max]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
    pub nx: usize,
    pub ny: usize,
}

impl Window {
    pub fn new(
        re_min: f64,
        re_max: f64,
        im_min: f64,
        im_max: f64,
        nx: usize,
        ny: usize,
    ) -> Result<Window> {
        let finite = [re_min, re_max, im_min, im_max]
            .iter()
            .all(|x| x.is_finite());
        if !finite || !(re_min < re_max) || !(im_min < im_max) || nx == 0 || ny == 0 {
            return Err(Error::InvalidArgument(format!(
                "invalid window [{re_min}, {re_max}] x [{im_min}, {im_max}] at {nx} x {ny}"
            )));
        }
        Ok(Window {
            re_min,
            re_max,
            im_min,
            im_max,
            nx,
            ny,
        })
    }

    pub fn dx(&self) -> f64 {
        (self.re_max - self.re_min) / self.nx as f64
    }

    pub fn dy(&self) -> f64 {
        (self.im_max - self.im_min) / self.ny as f64
    }

    pub fn cell_diagonal(&self) -> f64 {
        self.dx().hypot(self.dy())
    }

    /// Centre of cell `(i, j)`, `i` along the real axis, `j` along the imaginary axis.
    pub fn center(&self, i: usize, j: usize) -> Complex64 {
        Complex64::new(
            self.re_min + (i as f64 + 0.5) * self.dx(),
            self.im_min + (j as f64 + 0.5) * self.dy(),
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub w: Complex64,
    pub status: Status,
    /// `None` for undefined cells.
    pub eps: Option<f64>,
    pub skeleton: Option<bool>,
    /// `eps` is a global minimum rather than a carved-region search value.
    pub certified: bool,
    pub converged: bool,
}

impl Cell {
    /// `1 / eps`, `+inf` at `eps = 0`.
    pub fn bound(&self) -> Option<f64> {
        self.eps
            .map(|e| if e > 0.0 { 1.0 / e } else { f64::INFINITY })
    }
}

/// Classified grid. Cells are stored row by row, the imaginary part varying slowest.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanField {
    pub window: Window,
    pub cells: Vec<Cell>,
    pub eps_levels: Vec<f64>,
}

impl ScanField {
    pub fn cell(&self, i: usize, j: usize) -> &Cell {
        &self.cells[j * self.window.nx + i]
    }

    pub fn count(&self, status: Status) -> usize {
        self.cells.iter().filter(|c| c.status == status).count()
    }

    /// Cells whose `eps` came from a search that did not converge.
    pub fn unconverged(&self) -> usize {
        self.cells.iter().filter(|c| !c.converged).count()
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        write_atomic(path, |out| self.write_csv_to(out))
    }

    pub fn write_csv_to<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["re", "im", "status", "eps", "bound", "skeleton"])?;
        for c in &self.cells {
            let eps = c.eps.map(g17).unwrap_or_default();
            let bound = c.bound().map(g17).unwrap_or_default();
            let skel = match c.skeleton {
                Some(true) => "1",
                Some(false) => "0",
                None => "",
            };
            w.write_record([
                &g17(c.w.re),
                &g17(c.w.im),
                c.status.as_str(),
                &eps,
                &bound,
                skel,
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_ppm(&self, path: &Path, palette: &Palette) -> Result<()> {
        write_atomic(path, |out| self.write_ppm_to(out, palette))
    }

    /// Binary P6 image, one pixel per cell, top row at the largest imaginary part.
    pub fn write_ppm_to<W: Write>(&self, mut out: W, palette: &Palette) -> Result<()> {
        let Window { nx, ny, .. } = self.window;
        write!(out, "P6\n{nx} {ny}\n255\n")?;
        let mut row = Vec::with_capacity(3 * nx);
        for j in (0..ny).rev() {
            row.clear();
            for i in 0..nx {
                row.extend_from_slice(&palette.color(self.cell(i, j), &self.eps_levels));
            }
            out.write_all(&row)?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Writes through a temporary file in the same directory, then renames.
pub fn write_atomic<F>(path: &Path, body: F) -> Result<()>
where
    F: FnOnce(&mut BufWriter<fs::File>) -> Result<()>,
{
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let name = path
        .file_name()
        .ok_or_else(|| Error::Io(format!("{} is not a file path", path.display())))?;
    let tmp = dir.join(format!(
        ".{}.tmp{}",
        name.to_string_lossy(),
        std::process::id()
    ));
    let result = (|| {
        let mut out = BufWriter::new(fs::File::create(&tmp)?);
        body(&mut out)?;
        out.into_inner()
            .map_err(|e| Error::Io(e.to_string()))?
            .sync_all()?;
        fs::rename(&tmp, path)?;
        Ok(())
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result
}

/// Colours for cell statuses and `eps` bands.
#[derive(Debug, Clone, PartialEq)]
pub struct Palette {
    pub inside: [u8; 3],
    pub boundary: [u8; 3],
    pub undefined: [u8; 3],
    /// Colour of band `k`: outside cells with `levels[k-1] <= eps < levels[k]`, cycled.
    pub bands: Vec<[u8; 3]>,
    /// Outside cells above every level.
    pub far: [u8; 3],
}

impl Default for Palette {
    fn default() -> Self {
        Palette {
            inside: [20, 20, 20],
            boundary: [220, 40, 40],
            undefined: [255, 0, 255],
            bands: vec![[90, 90, 170], [130, 150, 210], [180, 200, 235]],
            far: [255, 255, 255],
        }
    }
}

impl Palette {
    pub fn color(&self, cell: &Cell, levels: &[f64]) -> [u8; 3] {
        match cell.status {
            Status::Inside => self.inside,
            Status::BoundaryCandidate => self.boundary,
            Status::Undefined => self.undefined,
            Status::Outside => {
                let eps = cell.eps.unwrap_or(f64::INFINITY);
                match levels.iter().position(|&l| eps < l) {
                    Some(k) if !self.bands.is_empty() => self.bands[k % self.bands.len()],
                    _ => self.far,
                }
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScanOptions {
    /// Worker threads; `None` uses the global pool.
    pub threads: Option<usize>,
    /// Also evaluate skeleton solvability (box regions only).
    pub skeleton: bool,
    pub tol: Tolerances,
    pub search: CarvedSearch,
}

/// Classifies every cell centre of `window`.
pub fn scan_grid(
    spec: &ProblemSpec,
    region: &Region,
    window: &Window,
    eps_levels: &[f64],
    opts: &ScanOptions,
) -> Result<ScanField> {
    if spec.n() != region.n() {
        return Err(Error::DimensionMismatch {
            expected: spec.n(),
            got: region.n(),
        });
    }
    if opts.skeleton && !region.is_box() {
        return Err(Error::SkeletonUnavailable);
    }
    if eps_levels.iter().any(|&e| !(e > 0.0)) {
        return Err(Error::InvalidArgument("eps levels must be positive".into()));
    }
    let mut levels = eps_levels.to_vec();
    levels.sort_by(f64::total_cmp);

    let total = window.nx * window.ny;
    let run = || -> Vec<Cell> {
        (0..total)
            .into_par_iter()
            .map(|k| {
                let w = window.center(k % window.nx, k / window.nx);
                scan_cell(spec, region, w, opts)
            })
            .collect()
    };
    let cells = match opts.threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t.max(1))
            .build()
            .map_err(|e| Error::InvalidArgument(format!("cannot start {t} worker threads: {e}")))?
            .install(run),
        None => run(),
    };
    Ok(ScanField {
        window: *window,
        cells,
        eps_levels: levels,
    })
}

/// Classification of a single point, as used for every scan cell.
pub fn scan_cell(spec: &ProblemSpec, region: &Region, w: Complex64, opts: &ScanOptions) -> Cell {
    let sys = match spec.linearize(w) {
        Ok(s) => s,
        Err(_) => {
            return Cell {
                w,
                status: Status::Undefined,
                eps: None,
                skeleton: None,
                certified: true,
                converged: true,
            }
        }
    };
    let membership = classify_system(&sys, region, &opts.tol);
    let sol = eps_of_system(&sys, region, &opts.search);
    let skeleton = if opts.skeleton {
        boundary_candidate_system(&sys, region, &opts.tol).ok()
    } else {
        None
    };
    Cell {
        w,
        status: membership.status,
        eps: Some(sol.eps),
        skeleton,
        certified: sol.certified,
        converged: sol.converged,
    }
}
