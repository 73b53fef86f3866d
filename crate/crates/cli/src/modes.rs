//! The five commands. Each writes its files into the output directory and
//! fills in the report.

use std::io::Write;
use std::path::Path;

use specrange_core::enclosure::classify;
use specrange_core::envelope::{grid, EnvelopeKind};
use specrange_core::fmt::g17;
use specrange_core::oracle::{
    random_box_matrices, resolvent_norm, sample_joint_range, sample_wt, HermMatrix,
};
use specrange_core::pseudo::{
    eps_omega, locate_level_crossing, pseudo_membership, resolvent_bound,
};
use specrange_core::scan::{scan_grid, write_atomic};
use specrange_core::{Complex64, Error, Palette, ScanField, ScanOptions, Status};

use crate::build::{self, Context};
use crate::config::{Config, Kind};
use crate::report::Report;
use crate::{CliError, RunOptions};

/// Allowed excess of `||T(w)^-1|| * eps` over 1 in the oracle check.
const RESOLVENT_SLACK: f64 = 1e-6;

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    write_atomic(path, |out| {
        out.write_all(text.as_bytes())?;
        Ok(())
    })
    .map_err(|e| CliError::Io(e.to_string()))
}

fn io(e: Error) -> CliError {
    CliError::Io(e.to_string())
}

fn scan_options(cfg: &Config, ctx: &Context, opts: &RunOptions) -> Result<ScanOptions, CliError> {
    let skeleton = cfg.scan.as_ref().is_some_and(|s| s.skeleton);
    if skeleton && !ctx.region.is_box() {
        return Err(CliError::Config(
            "skeleton scans need a region without constraints".into(),
        ));
    }
    Ok(ScanOptions {
        threads: opts.threads,
        skeleton,
        tol: ctx.tol,
        search: ctx.search,
    })
}

fn run_scan(
    cfg: &Config,
    ctx: &Context,
    opts: &RunOptions,
    rep: &mut Report,
) -> Result<ScanField, CliError> {
    let window = ctx
        .window
        .ok_or_else(|| CliError::Config("this command needs a `window` section".into()))?;
    let levels: Vec<f64> = cfg.eps_levels.iter().map(|d| d.0).collect();
    let so = scan_options(cfg, ctx, opts)?;
    rep.setting(
        "window",
        format!(
            "[{}, {}] x [{}, {}], {} x {} cells",
            window.re_min, window.re_max, window.im_min, window.im_max, window.nx, window.ny
        ),
    );
    rep.setting("eps levels", format!("{levels:?}"));
    rep.setting(
        "threads",
        opts.threads.map_or("all".to_string(), |t| t.to_string()),
    );
    let field = scan_grid(&ctx.spec, &ctx.region, &window, &levels, &so)?;
    for s in [
        Status::Inside,
        Status::BoundaryCandidate,
        Status::Outside,
        Status::Undefined,
    ] {
        rep.result(&format!("cells {}", s.as_str()), field.count(s));
    }
    rep.result(
        "cells uncertified",
        field.cells.iter().filter(|c| !c.certified).count(),
    );
    for &l in &field.eps_levels {
        let n = field
            .cells
            .iter()
            .filter(|c| c.eps.is_some_and(|e| e < l))
            .count();
        rep.result(&format!("cells with eps < {l}"), n);
    }
    if so.skeleton {
        rep.result(
            "cells solvable on the skeleton",
            field
                .cells
                .iter()
                .filter(|c| c.skeleton == Some(true))
                .count(),
        );
    }
    rep.flag("unconverged cells", field.unconverged());
    Ok(field)
}

fn write_field(field: &ScanField, out: &Path, stem: &str) -> Result<(), CliError> {
    field
        .write_csv(&out.join(format!("{stem}.csv")))
        .map_err(io)?;
    field
        .write_ppm(&out.join(format!("{stem}.ppm")), &Palette::default())
        .map_err(io)
}

pub fn scan(
    cfg: &Config,
    ctx: &Context,
    opts: &RunOptions,
    rep: &mut Report,
) -> Result<(), CliError> {
    let field = run_scan(cfg, ctx, opts, rep)?;
    write_field(&field, &opts.out, "scan")
}

pub fn pseudo(
    cfg: &Config,
    ctx: &Context,
    opts: &RunOptions,
    rep: &mut Report,
) -> Result<(), CliError> {
    if cfg.eps_levels.is_empty() {
        return Err(CliError::Config(
            "pseudo needs at least one eps level".into(),
        ));
    }
    let points = cfg
        .pseudo
        .as_ref()
        .map(|p| p.points.clone())
        .unwrap_or_default();
    if ctx.window.is_none() && points.is_empty() {
        return Err(CliError::Config(
            "pseudo needs a window or a list of points".into(),
        ));
    }
    if ctx.window.is_some() {
        let field = run_scan(cfg, ctx, opts, rep)?;
        write_field(&field, &opts.out, "pseudo")?;
    }
    if !points.is_empty() {
        let mut csv = String::from("re,im,eps,bound,certified");
        for l in &cfg.eps_levels {
            csv.push_str(&format!(",member_{}", g17(l.0)));
        }
        csv.push('\n');
        let mut unconverged = 0;
        for p in &points {
            let w = Complex64::new(p[0].0, p[1].0);
            let sol = eps_omega(&ctx.spec, &ctx.region, w)?;
            if !sol.converged {
                unconverged += 1;
            }
            let bound = resolvent_bound(&ctx.spec, &ctx.region, w)?;
            csv.push_str(&format!(
                "{},{},{},{},{}",
                g17(w.re),
                g17(w.im),
                g17(sol.eps),
                g17(bound),
                u8::from(sol.certified)
            ));
            for l in &cfg.eps_levels {
                csv.push_str(&format!(
                    ",{}",
                    u8::from(pseudo_membership(&ctx.spec, &ctx.region, w, l.0)?)
                ));
            }
            csv.push('\n');
        }
        write_text(&opts.out.join("points.csv"), &csv)?;
        rep.result("points", points.len());
        rep.flag("unconverged points", unconverged);
    }
    Ok(())
}

pub fn trace(
    cfg: &Config,
    ctx: &Context,
    opts: &RunOptions,
    rep: &mut Report,
) -> Result<(), CliError> {
    let t = cfg
        .trace
        .as_ref()
        .ok_or_else(|| CliError::Config("trace needs a `trace` section".into()))?;
    rep.setting("level", t.level);
    rep.setting("bisection tol", t.tol);
    let mut csv = String::from("ray,from_re,from_im,to_re,to_im,crossing_re,crossing_im,eps\n");
    let mut found = 0;
    for (k, r) in t.rays.iter().enumerate() {
        let a = Complex64::new(r.from[0].0, r.from[1].0);
        let b = Complex64::new(r.to[0].0, r.to[1].0);
        let hit = locate_level_crossing(&ctx.spec, &ctx.region, a, b, t.level.0, t.tol.0)?;
        let (cre, cim, eps) = match hit {
            Some(x) => {
                found += 1;
                let e = eps_omega(&ctx.spec, &ctx.region, x)?.eps;
                (g17(x.re), g17(x.im), g17(e))
            }
            None => (String::new(), String::new(), String::new()),
        };
        csv.push_str(&format!(
            "{k},{},{},{},{},{cre},{cim},{eps}\n",
            g17(a.re),
            g17(a.im),
            g17(b.re),
            g17(b.im)
        ));
    }
    write_text(&opts.out.join("trace.csv"), &csv)?;
    rep.result("rays", t.rays.len());
    rep.result("rays with a crossing", found);
    Ok(())
}

pub fn envelope(
    cfg: &Config,
    ctx: &Context,
    opts: &RunOptions,
    rep: &mut Report,
) -> Result<(), CliError> {
    let job = cfg
        .envelope
        .as_ref()
        .ok_or_else(|| CliError::Config("envelope needs an `envelope` section".into()))?;
    let src = build::source(cfg.resolve(&job.source)?, &ctx.base)?;
    let kind = match job.kind {
        Kind::Upper => EnvelopeKind::Upper,
        Kind::Lower => EnvelopeKind::Lower,
    };
    let env = src
        .envelope(kind)
        .map_err(|e| CliError::Config(e.to_string()))?;
    let mut table = Vec::new();
    env.write_csv(&mut table)?;
    write_text(
        &opts.out.join("envelope.csv"),
        &String::from_utf8_lossy(&table),
    )?;

    let alphas = grid(job.alpha[0].0, job.alpha[1].0, job.alpha[2].0)
        .map_err(|e| CliError::Config(e.to_string()))?;
    let mut csv = String::from("alpha,value\n");
    let mut nonfinite = 0;
    for a in &alphas {
        let v = env.eval(*a);
        if !v.is_finite() && !env.is_unbounded() {
            nonfinite += 1;
        }
        csv.push_str(&format!("{},{}\n", g17(*a), g17(v)));
    }
    write_text(&opts.out.join("values.csv"), &csv)?;
    rep.setting("envelope", format!("{:?} on {}", env.kind, env.interval));
    rep.result("breakpoints", env.breakpoints.len());
    rep.result("grid points", alphas.len());
    rep.flag("non-finite envelope values", nonfinite);
    Ok(())
}

fn load_matrices(cfg: &Config, ctx: &Context) -> Result<Vec<HermMatrix>, CliError> {
    let o = cfg.oracle.as_ref().expect("checked by caller");
    if o.matrices.is_empty() {
        return random_box_matrices(&ctx.region.bounds, o.dim, ctx.seed)
            .map_err(|e| CliError::Config(e.to_string()));
    }
    o.matrices
        .iter()
        .map(|p| {
            let full = ctx.base.join(p);
            let file = std::fs::File::open(&full).map_err(|e| {
                CliError::Config(format!("cannot open matrix {}: {e}", full.display()))
            })?;
            HermMatrix::read_csv(file)
                .map_err(|e| CliError::Config(format!("{}: {e}", full.display())))
        })
        .collect()
}

pub fn oracle(
    cfg: &Config,
    ctx: &Context,
    opts: &RunOptions,
    rep: &mut Report,
) -> Result<(), CliError> {
    let o = cfg
        .oracle
        .as_ref()
        .ok_or_else(|| CliError::Config("oracle needs an `oracle` section".into()))?;
    let mats = load_matrices(cfg, ctx)?;
    if mats.iter().any(|m| m.dim() != mats[0].dim()) {
        return Err(CliError::Config(
            "oracle matrices differ in dimension".into(),
        ));
    }
    rep.setting(
        "matrices",
        if o.matrices.is_empty() {
            format!("random, dimension {}, W(A_j) = box axis j", o.dim)
        } else {
            o.matrices.join(", ")
        },
    );
    rep.setting("samples", o.samples);

    let pts = sample_joint_range(&mats, o.samples, ctx.seed)?;
    let mut outside_region = 0;
    for p in &pts {
        if !ctx.region.contains(p, ctx.tol.region)? {
            outside_region += 1;
        }
    }
    rep.result("joint range points", pts.len());
    rep.flag("joint range points outside the region", outside_region);

    let sample = match sample_wt(&mats, &ctx.spec, o.samples, ctx.seed) {
        Ok(s) => s,
        Err(Error::NotPolynomial(why)) => {
            rep.result(
                "W(T) roots",
                format!("skipped, coefficients are not polynomial ({why})"),
            );
            return Ok(());
        }
        Err(e) => return Err(e.into()),
    };
    let mut csv = String::from("re,im,backward_error,status\n");
    let mut not_inside = 0;
    let mut resolvent_checked = 0;
    let mut resolvent_bad = 0;
    let mut worst: f64 = 0.0;
    for (k, r) in sample.roots.iter().enumerate() {
        let m = classify(&ctx.spec, &ctx.region, r.root, &ctx.tol)?;
        if m.status != Status::Inside {
            not_inside += 1;
        }
        csv.push_str(&format!(
            "{},{},{},{}\n",
            g17(r.root.re),
            g17(r.root.im),
            g17(r.backward_error),
            m.status.as_str()
        ));
        // a deterministic point near the root, kept if it lies outside
        let angle = 2.399_963_229_728_653 * k as f64;
        let w = r.root + Complex64::from_polar(0.25 * (1.0 + r.root.norm()), angle);
        let eps = eps_omega(&ctx.spec, &ctx.region, w)?;
        if eps.certified && eps.eps > ctx.tol.witness {
            resolvent_checked += 1;
            let prod = resolvent_norm(&mats, &ctx.spec, w)? * eps.eps;
            worst = worst.max(prod);
            if !(prod <= 1.0 + RESOLVENT_SLACK) {
                resolvent_bad += 1;
            }
        }
    }
    write_text(&opts.out.join("roots.csv"), &csv)?;
    rep.result("W(T) roots", sample.roots.len());
    rep.result("zero polynomials", sample.zero_polynomials);
    rep.result(
        "exterior points checked against the resolvent",
        resolvent_checked,
    );
    rep.result("max ||T(w)^-1|| * eps", g17(worst));
    rep.flag("roots not inside", not_inside);
    rep.flag("roots above the backward-error bound", sample.inaccurate);
    rep.flag("resolvent bound violations", resolvent_bad);
    Ok(())
}
