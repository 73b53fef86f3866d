//! Piecewise-linear concave majorants and convex minorants of sampled
//! functions, chord bounds and pointwise minima of affine bound families.

use std::io::{Read, Write};

use crate::fmt::g17;
use crate::region::Interval;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EnvelopeKind {
    /// Smallest concave majorant.
    Upper,
    /// Largest convex minorant.
    Lower,
}

/// Piecewise-linear envelope on `interval`.
///
/// Between breakpoints the value is linearly interpolated; outside the
/// breakpoint range the first or last segment is extended. An empty
/// breakpoint list stands for the constant `+inf` (upper) or `-inf` (lower)
/// envelope of an unbounded function.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeFn {
    pub interval: Interval,
    pub kind: EnvelopeKind,
    pub breakpoints: Vec<(f64, f64)>,
}

impl EnvelopeFn {
    pub fn unbounded(interval: Interval, kind: EnvelopeKind) -> EnvelopeFn {
        EnvelopeFn {
            interval,
            kind,
            breakpoints: Vec::new(),
        }
    }

    /// The affine envelope `slope * x + intercept`, which is both concave and convex.
    pub fn affine(
        interval: Interval,
        kind: EnvelopeKind,
        slope: f64,
        intercept: f64,
    ) -> EnvelopeFn {
        let (x0, x1) = interval.finite_span();
        EnvelopeFn {
            interval,
            kind,
            breakpoints: vec![(x0, slope * x0 + intercept), (x1, slope * x1 + intercept)],
        }
    }

    pub fn is_unbounded(&self) -> bool {
        self.breakpoints.is_empty()
    }

    pub fn eval(&self, x: f64) -> f64 {
        let bp = &self.breakpoints;
        match bp.len() {
            0 => match self.kind {
                EnvelopeKind::Upper => f64::INFINITY,
                EnvelopeKind::Lower => f64::NEG_INFINITY,
            },
            1 => bp[0].1,
            _ => {
                let k = self.segment(x);
                let (x0, y0) = bp[k];
                let (x1, y1) = bp[k + 1];
                let t = (x - x0) / (x1 - x0);
                y0 + t * (y1 - y0)
            }
        }
    }

    /// Slope of the segment used to evaluate at `x` (right derivative at breakpoints).
    pub fn slope_at(&self, x: f64) -> f64 {
        let bp = &self.breakpoints;
        if bp.len() < 2 {
            return 0.0;
        }
        let k = self.segment(x);
        (bp[k + 1].1 - bp[k].1) / (bp[k + 1].0 - bp[k].0)
    }

    fn segment(&self, x: f64) -> usize {
        let bp = &self.breakpoints;
        let last = bp.len() - 2;
        match bp.binary_search_by(|p| p.0.total_cmp(&x)) {
            Ok(k) => k.min(last),
            Err(0) => 0,
            Err(k) => (k - 1).min(last),
        }
    }

    pub fn min_value(&self) -> f64 {
        if self.is_unbounded() {
            return self.eval(0.0);
        }
        self.breakpoints
            .iter()
            .map(|p| p.1)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["x", "value"])?;
        for &(x, y) in &self.breakpoints {
            w.write_record([g17(x), g17(y)])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads a table written by [`EnvelopeFn::write_csv`]. An empty table
    /// yields the unbounded envelope.
    pub fn read_csv<R: Read>(
        input: R,
        interval: Interval,
        kind: EnvelopeKind,
    ) -> Result<EnvelopeFn> {
        let mut reader = csv::Reader::from_reader(input);
        let headers = reader.headers()?.clone();
        if headers.len() != 2 || &headers[0] != "x" || &headers[1] != "value" {
            return Err(Error::Format(format!(
                "expected header `x,value`, found `{}`",
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut breakpoints = Vec::new();
        for record in reader.records() {
            let record = record?;
            let parse = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Format(format!("bad number `{s}` in envelope table")))
            };
            breakpoints.push((parse(&record[0])?, parse(&record[1])?));
        }
        if breakpoints.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::Format(
                "envelope table x column must be increasing".into(),
            ));
        }
        Ok(EnvelopeFn {
            interval,
            kind,
            breakpoints,
        })
    }
}

fn cross(o: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

fn check_samples(samples: &[(f64, f64)]) -> Result<()> {
    if samples.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "an envelope needs at least 2 samples, got {}",
            samples.len()
        )));
    }
    if let Some(k) = samples.windows(2).position(|w| w[1].0 < w[0].0) {
        return Err(Error::InvalidArgument(format!(
            "samples are not sorted by x at index {}",
            k + 1
        )));
    }
    if samples.iter().any(|p| !p.0.is_finite() || !p.1.is_finite()) {
        return Err(Error::InvalidArgument("samples must be finite".into()));
    }
    Ok(())
}

fn hull_chain(samples: &[(f64, f64)], kind: EnvelopeKind) -> Vec<(f64, f64)> {
    let mut chain: Vec<(f64, f64)> = Vec::with_capacity(samples.len());
    for &p in samples {
        if let Some(last) = chain.last_mut() {
            if last.0 == p.0 {
                let keep = match kind {
                    EnvelopeKind::Upper => p.1 > last.1,
                    EnvelopeKind::Lower => p.1 < last.1,
                };
                if !keep {
                    continue;
                }
                chain.pop();
            }
        }
        while chain.len() >= 2 {
            let c = cross(chain[chain.len() - 2], chain[chain.len() - 1], p);
            let pop = match kind {
                EnvelopeKind::Upper => c >= 0.0,
                EnvelopeKind::Lower => c <= 0.0,
            };
            if !pop {
                break;
            }
            chain.pop();
        }
        chain.push(p);
    }
    chain
}

/// Concave majorant of `samples`; the constant `+inf` envelope when `unbounded`.
pub fn upper_envelope(
    samples: &[(f64, f64)],
    interval: Interval,
    unbounded: bool,
) -> Result<EnvelopeFn> {
    if unbounded {
        return Ok(EnvelopeFn::unbounded(interval, EnvelopeKind::Upper));
    }
    check_samples(samples)?;
    Ok(EnvelopeFn {
        interval,
        kind: EnvelopeKind::Upper,
        breakpoints: hull_chain(samples, EnvelopeKind::Upper),
    })
}

/// Convex minorant of `samples`.
pub fn lower_envelope(samples: &[(f64, f64)], interval: Interval) -> Result<EnvelopeFn> {
    check_samples(samples)?;
    Ok(EnvelopeFn {
        interval,
        kind: EnvelopeKind::Lower,
        breakpoints: hull_chain(samples, EnvelopeKind::Lower),
    })
}

/// `count` equispaced samples of `y` on the finite interval `[a, b]`.
pub fn sample<F: Fn(f64) -> f64>(y: F, a: f64, b: f64, count: usize) -> Result<Vec<(f64, f64)>> {
    if !(a.is_finite() && b.is_finite()) || a > b {
        return Err(Error::InvalidArgument(format!(
            "cannot sample on [{a}, {b}]"
        )));
    }
    if count < 2 {
        return Err(Error::InvalidArgument(
            "need at least 2 sample points".into(),
        ));
    }
    let step = (b - a) / (count - 1) as f64;
    (0..count)
        .map(|k| {
            let x = if k + 1 == count {
                b
            } else {
                a + step * k as f64
            };
            let v = y(x);
            if v.is_finite() {
                Ok((x, v))
            } else {
                Err(Error::Domain(format!("function is not finite at x = {x}")))
            }
        })
        .collect()
}

/// Slope and intercept of the chord of `y` through `(a0, y(a0))` and `(a1, y(a1))`.
pub fn chord_bound<F: Fn(f64) -> f64>(a0: f64, a1: f64, y: F) -> Result<(f64, f64)> {
    if !(a0 < a1) || !a0.is_finite() || !a1.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "chord needs finite a0 < a1, got [{a0}, {a1}]"
        )));
    }
    let (y0, y1) = (y(a0), y(a1));
    if !(y0.is_finite() && y1.is_finite()) {
        return Err(Error::Domain(format!(
            "function is not finite at the chord ends {a0}, {a1}"
        )));
    }
    let d = a1 - a0;
    Ok(((y1 - y0) / d, (y0 * a1 - y1 * a0) / d))
}

/// `min_s h_s(alpha)` over `s_grid`, where `family(s)` returns `(slope, intercept)` of `h_s`.
pub fn affine_family_min<F>(family: F, s_grid: &[f64], alpha: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<(f64, f64)>,
{
    if s_grid.is_empty() {
        return Err(Error::InvalidArgument("empty parameter grid".into()));
    }
    let mut best = f64::INFINITY;
    for &s in s_grid {
        let (slope, intercept) = family(s)?;
        best = best.min(slope * alpha + intercept);
    }
    Ok(best)
}

/// Exact breakpoints of `x -> min_i (m_i x + c_i)` on the finite `[lo, hi]`.
/// The result is concave, so it is its own upper envelope.
pub fn affine_min_table(lines: &[(f64, f64)], lo: f64, hi: f64) -> Result<Vec<(f64, f64)>> {
    if lines.is_empty() {
        return Err(Error::InvalidArgument("no lines given".into()));
    }
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "need a finite interval, got [{lo}, {hi}]"
        )));
    }
    if lines.iter().any(|(m, c)| !m.is_finite() || !c.is_finite()) {
        return Err(Error::Domain("line with a non-finite coefficient".into()));
    }
    let mut sorted = lines.to_vec();
    // steepest first; among equal slopes only the lowest matters
    sorted.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.total_cmp(&b.1)));
    sorted.dedup_by(|b, a| a.0 == b.0);
    let cross = |a: (f64, f64), b: (f64, f64)| (b.1 - a.1) / (a.0 - b.0);
    let mut hull: Vec<(f64, f64)> = Vec::new();
    for l in sorted {
        while hull.len() >= 2
            && cross(hull[hull.len() - 2], l) <= cross(hull[hull.len() - 2], hull[hull.len() - 1])
        {
            hull.pop();
        }
        hull.push(l);
    }
    let value = |x: f64| {
        hull.iter()
            .fold(f64::INFINITY, |acc, (m, c)| acc.min(m * x + c))
    };
    let mut out = vec![(lo, value(lo))];
    for w in hull.windows(2) {
        let x = cross(w[0], w[1]);
        if x > lo && x < hi {
            out.push((x, w[0].0 * x + w[0].1));
        }
    }
    out.push((hi, value(hi)));
    Ok(out)
}

/// Chords of `base^(-s) * x^s` on `[a0, a1]`, the family used for relative
/// bounds of the form `|<Bu,u>| <= base^(-s) <A^s u,u>`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerChordFamily {
    pub base: f64,
    pub a0: f64,
    pub a1: f64,
}

impl PowerChordFamily {
    pub fn new(base: f64, a0: f64, a1: f64) -> Result<PowerChordFamily> {
        if !(base > 0.0) || !(a0 > 0.0) || !(a0 < a1) || !a1.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "power chords need base > 0 and 0 < a0 < a1 < inf, got base {base} on [{a0}, {a1}]"
            )));
        }
        Ok(PowerChordFamily { base, a0, a1 })
    }

    /// `(slope, intercept)` of the member with exponent `s`. Exponents in
    /// `(0, 1)` give concave powers, whose chords are not upper bounds.
    pub fn member(&self, s: f64) -> Result<(f64, f64)> {
        if s > 0.0 && s < 1.0 {
            return Err(Error::InvalidArgument(format!(
                "exponent {s} lies in (0, 1)"
            )));
        }
        let scale = self.base.powf(-s);
        chord_bound(self.a0, self.a1, |x| scale * x.powf(s))
    }

    pub fn min_at(&self, s_grid: &[f64], alpha: f64) -> Result<f64> {
        affine_family_min(|s| self.member(s), s_grid, alpha)
    }

    /// Breakpoints of `alpha -> min_s h_s(alpha)` on `[a0, a1]`.
    pub fn min_table(&self, s_grid: &[f64]) -> Result<Vec<(f64, f64)>> {
        let lines = s_grid
            .iter()
            .map(|&s| self.member(s))
            .collect::<Result<Vec<_>>>()?;
        affine_min_table(&lines, self.a0, self.a1)
    }
}

/// `lo + k * step` for `k = 0, 1, ...` up to `hi` inclusive.
pub fn grid(lo: f64, hi: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !(lo <= hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "bad grid {lo}..{hi} step {step}"
        )));
    }
    let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|k| lo + step * k as f64).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn unit() -> Interval {
        Interval::new(0.0, 1.0).unwrap()
    }

    #[test]
    fn affine_min_table_matches_pointwise_minimum() {
        let fam = PowerChordFamily::new(2.0, 1.0, 4.0).unwrap();
        let mut s_grid = grid(1.0, 8.0, 0.01).unwrap();
        s_grid.extend(grid(-8.0, 0.0, 0.01).unwrap());
        let table = fam.min_table(&s_grid).unwrap();
        let env = upper_envelope(&table, Interval::new(1.0, 4.0).unwrap(), false).unwrap();
        assert_eq!(env.breakpoints.len(), table.len());
        for k in 0..=3000 {
            let a = 1.0 + 0.001 * k as f64;
            let direct = fam.min_at(&s_grid, a).unwrap();
            assert!(
                (env.eval(a) - direct).abs() <= 1e-12 * (1.0 + direct.abs()),
                "alpha {a}"
            );
        }
    }

    #[test]
    fn affine_min_table_edge_cases() {
        assert_eq!(
            affine_min_table(&[(1.0, 0.0)], 0.0, 2.0).unwrap(),
            vec![(0.0, 0.0), (2.0, 2.0)]
        );
        // parallel lines and a line that never wins
        let t = affine_min_table(
            &[(1.0, 0.0), (1.0, -1.0), (-1.0, 2.0), (0.0, 5.0)],
            0.0,
            4.0,
        )
        .unwrap();
        assert_eq!(t, vec![(0.0, -1.0), (1.5, 0.5), (4.0, -2.0)]);
        assert!(affine_min_table(&[], 0.0, 1.0).is_err());
        assert!(affine_min_table(&[(1.0, 0.0)], 1.0, 1.0).is_err());
    }

    #[test]
    fn upper_envelope_of_square_is_chord() {
        let s = sample(|x| x * x, 0.0, 1.0, 1024).unwrap();
        let env = upper_envelope(&s, unit(), false).unwrap();
        assert_eq!(env.breakpoints, vec![(0.0, 0.0), (1.0, 1.0)]);
        for k in 0..=20 {
            let x = k as f64 / 20.0;
            assert!((env.eval(x) - x).abs() < 1e-15);
        }
    }

    #[test]
    fn affine_is_its_own_envelope() {
        let iv = Interval::new(0.0, 3.0).unwrap();
        let s = sample(|x| 2.0 * x + 1.0, 0.0, 3.0, 64).unwrap();
        let up = upper_envelope(&s, iv, false).unwrap();
        let lo = lower_envelope(&s, iv).unwrap();
        for env in [up, lo] {
            for k in 0..=30 {
                let x = k as f64 * 0.1;
                assert!((env.eval(x) - (2.0 * x + 1.0)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn unbounded_flag_gives_infinity() {
        let iv = Interval::new(0.0, f64::INFINITY).unwrap();
        let env = upper_envelope(&[], iv, true).unwrap();
        assert!(env.is_unbounded());
        assert_eq!(env.eval(5.0), f64::INFINITY);
        assert_eq!(env.eval(-1e300), f64::INFINITY);
    }

    #[test]
    fn lower_envelopes() {
        let s = sample(|x| x * x, 0.0, 1.0, 1024).unwrap();
        let env = lower_envelope(&s, unit()).unwrap();
        assert_eq!(env.breakpoints.len(), 1024);
        for k in 0..=1000 {
            let x = k as f64 / 1000.0;
            assert!((env.eval(x) - x * x).abs() < 1e-6);
        }
        let s = sample(|x| -x * x, 0.0, 1.0, 1024).unwrap();
        let env = lower_envelope(&s, unit()).unwrap();
        assert_eq!(env.breakpoints, vec![(0.0, 0.0), (1.0, -1.0)]);
    }

    #[test]
    fn wiggly_minorant_stays_below_samples() {
        let y = |x: f64| x.powi(3) + x * x - x + 1.0 - 2.0 * (5.0 * x).sin();
        let s = sample(y, -2.0, 1.5, 1024).unwrap();
        let env = lower_envelope(&s, Interval::new(-2.0, 1.5).unwrap()).unwrap();
        for &(x, v) in &s {
            assert!(env.eval(x) <= v + 1e-12 * (1.0 + v.abs()));
        }
        assert!(env.breakpoints.len() < s.len());
    }

    #[test]
    fn input_validation() {
        assert!(upper_envelope(&[(0.0, 1.0)], unit(), false).is_err());
        assert!(lower_envelope(&[(1.0, 0.0), (0.0, 0.0)], unit()).is_err());
        assert!(chord_bound(1.0, 1.0, |x| x).is_err());
        assert!(chord_bound(2.0, 1.0, |x| x).is_err());
        assert!(affine_family_min(|_| Ok((1.0, 0.0)), &[], 1.0).is_err());
    }

    #[test]
    fn chord_examples() {
        assert_eq!(chord_bound(0.0, 2.0, |x| x * x).unwrap(), (2.0, 0.0));
        for n in 1..6 {
            assert_eq!(chord_bound(0.0, 1.0, |x| x.powi(n)).unwrap(), (1.0, 0.0));
        }
        assert_eq!(chord_bound(-3.0, 5.0, |_| 7.5).unwrap(), (0.0, 7.5));
    }

    #[test]
    fn family_min_examples() {
        let fam = PowerChordFamily::new(2.0, 1.0, 4.0).unwrap();
        let s_grid = grid(1.0, 8.0, 0.01).unwrap();
        assert_eq!(s_grid.len(), 701);
        let at2 = fam.min_at(&s_grid, 2.0).unwrap();
        assert!((at2 - 1.0).abs() < 1e-12, "{at2}");
        // At the right end h_s(4) = 2^s, so the smallest member on [1, 8] is s = 1.
        let at4 = fam.min_at(&s_grid, 4.0).unwrap();
        assert!((at4 - 2.0).abs() < 1e-12, "{at4}");
        assert_eq!(
            affine_family_min(|_| Ok((1.0, 0.0)), &[0.0], 3.25).unwrap(),
            3.25
        );
        assert!(fam.member(0.5).is_err());
    }

    #[test]
    fn power_family_matches_closed_form() {
        let fam = PowerChordFamily::new(2.0, 1.0, 4.0).unwrap();
        for s in [-3.0, 1.0, 2.5, 8.0] {
            let (slope, intercept) = fam.member(s).unwrap();
            let p = 2f64.powf(s);
            assert!((slope - (p - 1.0 / p) / 3.0).abs() < 1e-12 * p);
            assert!((intercept + (p - 4.0 / p) / 3.0).abs() < 1e-12 * p);
        }
    }

    #[test]
    fn csv_round_trip() {
        let s = sample(|x| (3.0 * x).sin(), 0.0, 1.0, 50).unwrap();
        let env = upper_envelope(&s, unit(), false).unwrap();
        let mut buf = Vec::new();
        env.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8_lossy(&buf).starts_with("x,value\n"));
        let back = EnvelopeFn::read_csv(buf.as_slice(), unit(), EnvelopeKind::Upper).unwrap();
        assert_eq!(back, env);
        assert!(
            EnvelopeFn::read_csv("a,b\n1,2\n".as_bytes(), unit(), EnvelopeKind::Upper).is_err()
        );
    }

    #[test]
    fn dense_chord_dominance() {
        let s = sample(|x| x * x, 0.0, 1.0, 10_000).unwrap();
        let env = upper_envelope(&s, unit(), false).unwrap();
        let (m, c) = chord_bound(0.0, 1.0, |x| x * x).unwrap();
        for k in 0..=997 {
            let x = k as f64 / 997.0;
            assert!((env.eval(x) - (m * x + c)).abs() < 1e-6);
        }
    }

    fn arb_samples() -> impl Strategy<Value = Vec<(f64, f64)>> {
        proptest::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 2..60).prop_map(|mut v| {
            v.sort_by(|a, b| a.0.total_cmp(&b.0));
            v
        })
    }

    fn tol(v: f64) -> f64 {
        1e-12 * (1.0 + v.abs())
    }

    proptest! {
        #[test]
        fn sandwich(s in arb_samples()) {
            let iv = Interval::new(-10.0, 10.0).unwrap();
            let up = upper_envelope(&s, iv, false).unwrap();
            let lo = lower_envelope(&s, iv).unwrap();
            for &(x, y) in &s {
                prop_assert!(lo.eval(x) <= y + tol(y) * 10.0);
                prop_assert!(up.eval(x) >= y - tol(y) * 10.0);
            }
        }

        #[test]
        fn idempotent(s in arb_samples()) {
            let iv = Interval::new(-10.0, 10.0).unwrap();
            let up = upper_envelope(&s, iv, false).unwrap();
            let lo = lower_envelope(&s, iv).unwrap();
            prop_assert_eq!(&upper_envelope(&up.breakpoints, iv, false).unwrap(), &up);
            prop_assert_eq!(&lower_envelope(&lo.breakpoints, iv).unwrap(), &lo);
        }

        #[test]
        fn chains_have_correct_curvature(s in arb_samples()) {
            let iv = Interval::new(-10.0, 10.0).unwrap();
            let up = upper_envelope(&s, iv, false).unwrap();
            let lo = lower_envelope(&s, iv).unwrap();
            for w in up.breakpoints.windows(3) {
                prop_assert!(cross(w[0], w[1], w[2]) < 0.0);
            }
            for w in lo.breakpoints.windows(3) {
                prop_assert!(cross(w[0], w[1], w[2]) > 0.0);
            }
            for w in up.breakpoints.windows(2).chain(lo.breakpoints.windows(2)) {
                prop_assert!(w[0].0 < w[1].0);
            }
        }

        #[test]
        fn family_tracks_closed_form_inside(alpha_k in 12usize..=38) {
            // Interior points; the grid includes negative exponents, which the
            // right part of [1, 4] needs.
            let alpha = alpha_k as f64 / 10.0;
            let fam = PowerChordFamily::new(2.0, 1.0, 4.0).unwrap();
            let mut s_grid = grid(1.0, 8.0, 0.01).unwrap();
            s_grid.extend(grid(-8.0, 0.0, 0.01).unwrap());
            let z = if alpha > 1.6 && alpha <= 2.0 {
                alpha / 2.0
            } else if alpha > 2.0 && alpha < 2.5 {
                1.0
            } else {
                2.0 / 3.0 * ((4.0 - alpha) * (alpha - 1.0)).sqrt()
            };
            let m = fam.min_at(&s_grid, alpha).unwrap();
            prop_assert!((m - z).abs() < 1e-3, "alpha {} min {} z {}", alpha, m, z);
        }
    }
}
