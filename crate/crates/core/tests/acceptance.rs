//! Acceptance criteria, one line each. Runs as a plain binary so every
//! criterion reports even when an earlier one fails, and timings are taken
//! one criterion at a time.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::*;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use specrange_core::enclosure::membership_general;
use specrange_core::envelope::{grid, lower_envelope, upper_envelope, PowerChordFamily};
use specrange_core::lsq::{kkt_residual, solve_box};
use specrange_core::oracle::{
    apply_borel, resolvent_norm, sample_joint_range, sample_wt, HermMatrix,
};
use specrange_core::pseudo::{eps_omega, eps_on_skeleton, pseudo_membership};
use specrange_core::scan::scan_grid;
use specrange_core::{LinearSystem, Palette, Region, ScanOptions, Status, Tolerances, Window};

const C1_BUDGET: Duration = Duration::from_secs(30);
const C2_FAMILY_TOL: f64 = 1e-3;
const C2_SAMPLE_SLACK: f64 = 1e-9;
const C2_BOREL_TOL: f64 = 1e-10;
const C3_SKELETON_TOL: f64 = 1e-10;
const C4_BUDGET: Duration = Duration::from_secs(60);
const C5_SLACK: f64 = 1e-6;
const C6_TOL: f64 = 1e-12;
const C7_KKT_TOL: f64 = 1e-8;
const C7_SCALING_TOL: f64 = 1e-12;
const C8_EPS: f64 = 0.1;

const POOL_SEED: u64 = 20_240_601;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn tol() -> Tolerances {
    Tolerances::default()
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Counts cells at least two cell diagonals from the boundary of the
/// analytic set whose status disagrees with it.
fn margin_mismatches<F, D>(
    field: &specrange_core::ScanField,
    inside: F,
    boundary_dist: D,
) -> (usize, usize)
where
    F: Fn(Complex64) -> bool,
    D: Fn(Complex64) -> f64,
{
    let margin = 2.0 * field.window.cell_diagonal();
    let mut checked = 0;
    let mut bad = 0;
    for cell in &field.cells {
        if boundary_dist(cell.w) < margin {
            continue;
        }
        checked += 1;
        let expected = if inside(cell.w) {
            Status::Inside
        } else {
            Status::Outside
        };
        if cell.status != expected {
            bad += 1;
        }
    }
    (checked, bad)
}

fn c1_sadex_scans() -> Outcome {
    let window = Window::new(-3.0, 3.0, -2.0, 2.0, 600, 400).unwrap();
    let opts = ScanOptions {
        threads: Some(1),
        ..ScanOptions::default()
    };
    let spec = sadex();

    let t0 = Instant::now();
    let field = scan_grid(&spec, &quadrant(), &window, &[], &opts).unwrap();
    let box_time = t0.elapsed();
    // [-1, 0] together with the closed right half-plane
    let seg_dist = |w: Complex64| {
        let x = w.re.clamp(-1.0, 0.0);
        (w - x).norm()
    };
    let (box_checked, box_bad) = margin_mismatches(
        &field,
        |w| w.re >= 0.0 || (w.im == 0.0 && w.re >= -1.0),
        |w| w.re.abs().min(seg_dist(w)),
    );

    let t1 = Instant::now();
    let carved = scan_grid(&spec, &carved_quadrant(), &window, &[], &opts).unwrap();
    let carved_time = t1.elapsed();
    // the ray [-1, inf)
    let ray_dist = |w: Complex64| (w - w.re.max(-1.0)).norm();
    let (carved_checked, carved_bad) =
        margin_mismatches(&carved, |w| w.im == 0.0 && w.re >= -1.0, ray_dist);

    let pass = box_bad == 0 && carved_bad == 0 && box_time < C1_BUDGET && carved_time < C1_BUDGET;
    outcome(
        pass,
        format!(
            "box: {box_bad}/{box_checked} mismatches in {:.2}s; carved: {carved_bad}/{carved_checked} mismatches in {:.2}s (budget {}s each, 1 thread)",
            box_time.as_secs_f64(),
            carved_time.as_secs_f64(),
            C1_BUDGET.as_secs()
        ),
    )
}

/// Worst family-minimum error over `alphas`, with the alphas that miss the tolerance.
fn family_error(alphas: impl Iterator<Item = f64>) -> ((f64, f64), Vec<String>) {
    let fam = PowerChordFamily::new(2.0, 1.0, 4.0).unwrap();
    let mut s_grid = grid(1.0, 8.0, 0.01).unwrap();
    s_grid.extend(grid(-8.0, 0.0, 0.01).unwrap());
    let mut worst = (0.0, 0.0);
    let mut misses = Vec::new();
    for a in alphas {
        let err = (fam.min_at(&s_grid, a).unwrap() - z(a)).abs();
        if err > worst.1 {
            worst = (a, err);
        }
        if err > C2_FAMILY_TOL {
            misses.push(format!("{a:.1}"));
        }
    }
    (worst, misses)
}

fn family_outcome((worst, misses): ((f64, f64), Vec<String>)) -> Outcome {
    outcome(
        misses.is_empty(),
        format!(
            "max |min_s h_s - z| = {:.3e} at alpha = {:.1}; alphas over {C2_FAMILY_TOL:e}: [{}]",
            worst.1,
            worst.0,
            misses.join(", ")
        ),
    )
}

fn c2_family_minimum() -> Outcome {
    family_outcome(family_error((0..=30).map(|k| 1.0 + 0.1 * k as f64)))
}

fn c2_family_interior() -> Outcome {
    family_outcome(family_error((1..30).map(|k| 1.0 + 0.1 * k as f64)))
}

fn c2_joint_range_samples() -> Outcome {
    let (a1, a2) = exmat();
    let pts = sample_joint_range(&[a1, a2], 10_000, 0xb0d).unwrap();
    let violations = pts
        .iter()
        .filter(|p| p[1].abs() > z(p[0]) + C2_SAMPLE_SLACK)
        .count();
    outcome(
        violations == 0,
        format!(
            "{} points, {violations} with |alpha_2| > z(alpha_1) + {C2_SAMPLE_SLACK:e}",
            pts.len()
        ),
    )
}

fn c2_borel() -> Outcome {
    let (a1, _) = exmat();
    let za = apply_borel(&a1, z).unwrap();
    let target = HermMatrix::diag(&[0.0, 1.0, 1.0, 0.0]);
    let mut err: f64 = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            err = err.max((za.at(i, j) - target.at(i, j)).norm());
        }
    }
    outcome(err <= C2_BOREL_TOL, format!("max entry error {err:.3e}"))
}

fn c3_cube() -> Outcome {
    let spec = cube();
    let region = unit_cube();
    let w = c(0.0, 0.5);
    let m = membership_general(&spec, &region, w, &tol()).unwrap();
    let witness_ok = m.witness.as_ref().is_some_and(|a| {
        region.contains(a, 1e-9).unwrap() && spec.eval_t(a, w).unwrap().norm() <= tol().witness
    });
    let skel = eps_on_skeleton(&spec, &region, 1, w).unwrap().eps;

    let window = Window::new(-2.0, 1.0, -1.5, 1.5, 300, 300).unwrap();
    let field = scan_grid(&spec, &region, &window, &[0.2], &ScanOptions::default()).unwrap();
    let inside = field.cells.iter().filter(|c| c.status == Status::Inside);
    let mut inside_count = 0;
    let mut violations = 0;
    for cell in inside {
        inside_count += 1;
        if !pseudo_membership(&spec, &region, cell.w, 0.2).unwrap() {
            violations += 1;
        }
    }
    let pass = m.status == Status::Inside
        && witness_ok
        && skel.abs() <= C3_SKELETON_TOL
        && inside_count > 0
        && violations == 0;
    outcome(
        pass,
        format!(
            "i/2 status {:?}, witness ok {witness_ok}, eps on 1-skeleton {skel:.2e}; {inside_count} inside cells, {violations} outside the 1/5 level",
            m.status
        ),
    )
}

fn c4_containment() -> Outcome {
    let t0 = Instant::now();
    let pool = problem_pool(50, POOL_SEED);
    let mut total = 0;
    let mut violations = 0;
    let mut inaccurate = 0;
    for (k, p) in pool.iter().enumerate() {
        let region = box_region(p);
        let sample = sample_wt(&p.mats, &p.spec, 200, k as u64).unwrap();
        inaccurate += sample.inaccurate;
        for r in sample.roots.iter().take(200) {
            total += 1;
            let m = membership_general(&p.spec, &region, r.root, &tol()).unwrap();
            if m.status != Status::Inside {
                violations += 1;
            }
        }
    }
    let elapsed = t0.elapsed();
    outcome(
        violations == 0 && total == 50 * 200 && elapsed < C4_BUDGET,
        format!(
            "{total} oracle roots, {violations} not inside, {inaccurate} roots above the backward-error bound, {:.2}s (budget {}s)",
            elapsed.as_secs_f64(),
            C4_BUDGET.as_secs()
        ),
    )
}

fn c5_resolvent() -> Outcome {
    let pool = problem_pool(50, POOL_SEED);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut total = 0;
    let mut violations = 0;
    let mut worst: f64 = 0.0;
    for p in &pool {
        let region = box_region(p);
        let roots = sample_wt(&p.mats, &p.spec, 50, 1).unwrap();
        let radius = roots
            .roots
            .iter()
            .map(|r| r.root.norm())
            .fold(1.0, f64::max)
            * 1.5;
        let mut found = 0;
        let mut tries = 0;
        while found < 200 && tries < 200_000 {
            tries += 1;
            let w = c(
                rng.random_range(-radius..radius),
                rng.random_range(-radius..radius),
            );
            let eps = eps_omega(&p.spec, &region, w).unwrap().eps;
            if eps <= tol().witness {
                continue;
            }
            found += 1;
            let r = resolvent_norm(&p.mats, &p.spec, w).unwrap();
            let prod = r * eps;
            worst = worst.max(prod);
            if !(prod <= 1.0 + C5_SLACK) {
                violations += 1;
            }
        }
        total += found;
    }
    outcome(
        violations == 0 && total == 50 * 200,
        format!("{total} exterior points, {violations} with ||T^-1|| eps > 1 + {C5_SLACK:e}; max product {worst:.9}"),
    )
}

fn c6_linear() -> Outcome {
    let spec = linear();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let a = rng.random_range(-3.0..3.0);
        let b = a + rng.random_range(0.0..4.0);
        let region = Region::new_box(vec![iv(a, b)]).unwrap();
        let w = c(rng.random_range(-6.0..6.0), rng.random_range(-4.0..4.0));
        let dist = (w - w.re.clamp(a, b)).norm();
        let eps = eps_omega(&spec, &region, w).unwrap().eps;
        worst = worst.max((eps - dist).abs());
    }
    outcome(
        worst <= C6_TOL,
        format!("max |eps - dist| = {worst:.3e} over 1000 draws"),
    )
}

fn c7_envelopes() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(71);
    let mut bad = 0;
    for _ in 0..200 {
        let count = rng.random_range(2..200);
        let mut xs: Vec<f64> = (0..count).map(|_| rng.random_range(-5.0..5.0)).collect();
        xs.sort_by(f64::total_cmp);
        let pts: Vec<(f64, f64)> = xs
            .iter()
            .map(|&x| {
                (
                    x,
                    x * x * x + x * x - x + 1.0 - 2.0 * (5.0 * x).sin()
                        + rng.random_range(-0.5..0.5),
                )
            })
            .collect();
        let span = iv(xs[0], xs[count - 1]);
        let up = upper_envelope(&pts, span, false).unwrap();
        let lo = lower_envelope(&pts, span).unwrap();
        let scale = pts.iter().map(|p| p.1.abs()).fold(1.0, f64::max);
        for &(x, y) in &pts {
            if lo.eval(x) > y + 1e-12 * scale || up.eval(x) < y - 1e-12 * scale {
                bad += 1;
            }
        }
        if upper_envelope(&up.breakpoints, span, false).unwrap() != up
            || lower_envelope(&lo.breakpoints, span).unwrap() != lo
        {
            bad += 1;
        }
        let second = |bp: &[(f64, f64)], sign: f64| {
            bp.windows(3).all(|w| {
                let s0 = (w[1].1 - w[0].1) / (w[1].0 - w[0].0);
                let s1 = (w[2].1 - w[1].1) / (w[2].0 - w[1].0);
                sign * (s1 - s0) <= 1e-9 * (1.0 + s0.abs().max(s1.abs()))
            })
        };
        if !second(&up.breakpoints, 1.0) || !second(&lo.breakpoints, -1.0) {
            bad += 1;
        }
    }
    outcome(
        bad == 0,
        format!("200 random sample sets, {bad} sandwich/idempotence/curvature failures"),
    )
}

fn random_box<R: Rng>(n: usize, rng: &mut R) -> Region {
    let bounds = (0..n)
        .map(|_| match rng.random_range(0..5) {
            0 => iv(rng.random_range(-2.0..0.0), INF),
            1 => iv(-INF, rng.random_range(0.0..2.0)),
            2 => iv(-INF, INF),
            3 => {
                let a = rng.random_range(-2.0..2.0);
                iv(a, a)
            }
            _ => {
                let a = rng.random_range(-2.0..2.0);
                iv(a, a + rng.random_range(0.1..3.0))
            }
        })
        .collect();
    Region::new_box(bounds).unwrap()
}

fn random_point_in<R: Rng>(r: &Region, rng: &mut R) -> Vec<f64> {
    r.bounds
        .iter()
        .map(|b| {
            let ends = b.finite_endpoints();
            if !ends.is_empty() && rng.random_bool(0.5) {
                ends[rng.random_range(0..ends.len())]
            } else if !b.lo.is_finite() && !b.hi.is_finite() && rng.random_bool(0.3) {
                0.0
            } else {
                let lo = if b.lo.is_finite() {
                    b.lo
                } else {
                    b.hi.min(0.0) - 3.0
                };
                let hi = if b.hi.is_finite() {
                    b.hi
                } else {
                    lo.max(0.0) + 3.0
                };
                if lo < hi {
                    rng.random_range(lo..hi)
                } else {
                    lo
                }
            }
        })
        .collect()
}

fn c7_skeletons() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(72);
    let tol = 1e-9;
    let mut checks = 0;
    let mut bad = 0;
    for _ in 0..2000 {
        let n = rng.random_range(1..=4);
        let r = random_box(n, &mut rng);
        let a = random_point_in(&r, &mut rng);
        for m in -1..n as i32 {
            let here = r.skeleton_contains(m, &a, tol).unwrap();
            if here {
                for m2 in -1..m {
                    checks += 1;
                    if !r.skeleton_contains(m2, &a, tol).unwrap() {
                        bad += 1;
                    }
                }
            }
            if m >= 0 {
                checks += 1;
                let on_face = r
                    .skeleton_faces(m)
                    .unwrap()
                    .iter()
                    .any(|f| f.contains(&a, tol));
                if on_face != here {
                    bad += 1;
                }
            }
        }
    }
    outcome(
        bad == 0,
        format!("{checks} nesting and face-union checks on boxes with n <= 4, {bad} failures"),
    )
}

fn c7_kkt() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(73);
    let mut worst: f64 = 0.0;
    let solves = 20_000;
    for _ in 0..solves {
        let n = rng.random_range(1..=4);
        let mut columns: Vec<[f64; 2]> = (0..n)
            .map(|_| [rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)])
            .collect();
        if n >= 2 && rng.random_bool(0.2) {
            // nearly parallel columns
            let t = rng.random_range(-2.0..2.0);
            columns[1] = [columns[0][0] * t, columns[0][1] * t + 1e-9];
        }
        let sys = LinearSystem {
            columns,
            rhs: [rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0)],
        };
        let r = random_box(n, &mut rng);
        let sol = solve_box(&sys, &r.bounds);
        worst = worst.max(kkt_residual(&sys, &r.bounds, &sol.alpha));
    }
    outcome(
        worst <= C7_KKT_TOL,
        format!("{solves} solves, max scaled KKT residual {worst:.3e}"),
    )
}

fn c7_nesting() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(74);
    let problems = [
        (sadex(), quadrant()),
        (cube(), unit_cube()),
        (sadex(), carved_quadrant()),
    ];
    let mut bad = 0;
    for k in 0..1000 {
        let (spec, region) = &problems[k % problems.len()];
        let w = c(rng.random_range(-3.0..3.0), rng.random_range(-2.0..2.0));
        let e1 = rng.random_range(0.001..2.0);
        let e2 = e1 + rng.random_range(0.0..2.0);
        if pseudo_membership(spec, region, w, e1).unwrap()
            && !pseudo_membership(spec, region, w, e2).unwrap()
        {
            bad += 1;
        }
    }
    outcome(bad == 0, format!("1000 draws, {bad} nesting violations"))
}

fn c7_scaling() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(75);
    let pool = problem_pool(20, 7);
    let mut worst: f64 = 0.0;
    for k in 0..1000 {
        let p = &pool[k % pool.len()];
        let region = box_region(p);
        let cc = c(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
        let w = c(rng.random_range(-4.0..4.0), rng.random_range(-4.0..4.0));
        let e = eps_omega(&p.spec, &region, w).unwrap().eps;
        let es = eps_omega(&p.spec.scaled(cc), &region, w).unwrap().eps;
        let expected = cc.norm() * e;
        let scale = expected.max(1e-300);
        if expected > 1e-12 {
            worst = worst.max((es - expected).abs() / scale);
        }
    }
    outcome(
        worst <= C7_SCALING_TOL,
        format!("1000 draws, max relative error {worst:.3e}"),
    )
}

fn c7_parallel() -> Outcome {
    let window = Window::new(-2.0, 1.0, -1.5, 1.5, 120, 90).unwrap();
    let mut same = true;
    let cases = [(cube(), unit_cube()), (sadex(), carved_quadrant())];
    for (spec, region) in &cases {
        let mut outs = Vec::new();
        for threads in [1, 4] {
            let opts = ScanOptions {
                threads: Some(threads),
                ..ScanOptions::default()
            };
            let field = scan_grid(spec, region, &window, &[0.2, 0.5], &opts).unwrap();
            let mut csv = Vec::new();
            field.write_csv_to(&mut csv).unwrap();
            let mut ppm = Vec::new();
            field.write_ppm_to(&mut ppm, &Palette::default()).unwrap();
            outs.push((csv, ppm));
        }
        same &= outs[0] == outs[1];
    }
    outcome(
        same,
        "1 vs 4 threads, CSV and PPM bytes compared for a box and a carved region",
    )
}

fn c8_skeleton_equality() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut problems: Vec<(specrange_core::ProblemSpec, Region, Vec<Complex64>)> = Vec::new();
    let seeds_near = |spec: &specrange_core::ProblemSpec, mats: &[HermMatrix]| -> Vec<Complex64> {
        sample_wt(mats, spec, 100, 3)
            .unwrap()
            .roots
            .iter()
            .map(|r| r.root)
            .collect()
    };
    {
        let mats = [
            HermMatrix::diag(&[0.0, 1.0]),
            HermMatrix::diag(&[0.0, 1.0]),
            HermMatrix::diag(&[0.0, 1.0]),
        ];
        let roots = seeds_near(&cube(), &mats);
        problems.push((cube(), unit_cube(), roots));
    }
    for p in problem_pool(60, 88)
        .into_iter()
        .filter(|p| p.spec.n() >= 2)
        .take(12)
    {
        let roots = seeds_near(&p.spec, &p.mats);
        let region = box_region(&p);
        problems.push((p.spec, region, roots));
    }
    let mut found = 0;
    let mut bad = 0;
    let mut tries = 0;
    while found < 1000 && tries < 500_000 {
        tries += 1;
        let (spec, region, roots) = &problems[tries % problems.len()];
        let base = roots[rng.random_range(0..roots.len())];
        let w = base
            + Complex64::from_polar(
                rng.random_range(0.0..0.3),
                rng.random_range(0.0..std::f64::consts::TAU),
            );
        let eps = eps_omega(spec, region, w).unwrap().eps;
        if !(eps > 10.0 * tol().witness && eps < C8_EPS) {
            continue;
        }
        found += 1;
        let m = spec.n() as i32 - 2;
        if !(eps_on_skeleton(spec, region, m, w).unwrap().eps < C8_EPS) {
            bad += 1;
        }
    }
    outcome(
        bad == 0 && found == 1000,
        format!("{found} exterior points with eps in (1e-7, {C8_EPS}), {bad} with skeleton eps >= {C8_EPS}"),
    )
}

type Criterion = (&'static str, &'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: Vec<Criterion> = vec![
        ("C1", "saddle example scans, box and carved", c1_sadex_scans),
        (
            "C2.1",
            "bound example family minimum vs z on alpha in {1.0, ..., 4.0}",
            c2_family_minimum,
        ),
        (
            "C2.1i",
            "same, interior alpha in {1.1, ..., 3.9}",
            c2_family_interior,
        ),
        (
            "C2.2",
            "bound example joint range samples under z",
            c2_joint_range_samples,
        ),
        ("C2.3", "z(A_1) = diag(0, 1, 1, 0)", c2_borel),
        (
            "C3",
            "cube polynomial skeleton witness and 1/5 level inclusion",
            c3_cube,
        ),
        ("C4", "containment of oracle W(T) roots", c4_containment),
        ("C5", "resolvent bound against oracle norms", c5_resolvent),
        ("C6", "linear exactness", c6_linear),
        (
            "C7.1",
            "envelope sandwich, idempotence, curvature",
            c7_envelopes,
        ),
        (
            "C7.2",
            "skeleton nesting and face-union equivalence",
            c7_skeletons,
        ),
        ("C7.3", "box least-squares KKT residuals", c7_kkt),
        ("C7.4", "pseudo-membership nesting in eps", c7_nesting),
        ("C7.5", "scaling covariance of eps_omega", c7_scaling),
        ("C7.6", "parallel scan equals serial scan", c7_parallel),
        (
            "C8",
            "skeleton equality near the enclosure",
            c8_skeleton_equality,
        ),
    ];
    let mut failed = 0;
    for (id, title, run) in criteria {
        let t0 = Instant::now();
        let o = run();
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        if !o.pass {
            failed += 1;
        }
        println!(
            "{id:<6} {verdict}  {title}: {} [{:.2}s]",
            o.detail,
            t0.elapsed().as_secs_f64()
        );
    }
    if failed == 0 {
        println!("all acceptance criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("{failed} acceptance criteria failed");
        ExitCode::FAILURE
    }
}
