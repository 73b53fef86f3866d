//! Finite-matrix ground truth. Everything here uses its own numerics
//! (Jacobi, LU, inverse iteration, Aberth) and never calls the enclosure
//! routines, so it can check them independently.

pub mod linalg;
pub mod poly;
pub mod roots;

use std::io::{BufRead, BufReader, Read, Write};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::coeffs::{CoeffExpr, ProblemSpec};
use crate::fmt::g17;
use crate::region::Interval;
use crate::{Error, Result};
use linalg::{jacobi_eigen, norm2, CMat, Lu};

/// Hermitian tolerance, relative to `max(1, max |a_ij|)`.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Dense Hermitian matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct HermMatrix {
    dim: usize,
    data: Vec<Complex64>,
}

impl HermMatrix {
    pub fn new(dim: usize, data: Vec<Complex64>) -> Result<HermMatrix> {
        if dim == 0 {
            return Err(Error::InvalidArgument(
                "matrix dimension must be >= 1".into(),
            ));
        }
        if data.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                got: data.len(),
            });
        }
        let scale = data.iter().map(|z| z.norm()).fold(1.0, f64::max);
        let mut dev: f64 = 0.0;
        for i in 0..dim {
            for j in 0..dim {
                dev = dev.max((data[i * dim + j] - data[j * dim + i].conj()).norm());
            }
        }
        if !(dev <= HERMITIAN_TOL * scale) {
            return Err(Error::NotHermitian(dev));
        }
        Ok(HermMatrix { dim, data })
    }

    pub fn diag(values: &[f64]) -> HermMatrix {
        let dim = values.len();
        let mut data = vec![Complex64::new(0.0, 0.0); dim * dim];
        for (i, &v) in values.iter().enumerate() {
            data[i * dim + i] = Complex64::new(v, 0.0);
        }
        HermMatrix { dim, data }
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Result<HermMatrix> {
        let dim = rows.len();
        let mut data = Vec::with_capacity(dim * dim);
        for row in rows {
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: row.len(),
                });
            }
            data.extend(row.iter().map(|&x| Complex64::new(x, 0.0)));
        }
        HermMatrix::new(dim, data)
    }

    pub fn identity(dim: usize) -> HermMatrix {
        HermMatrix::diag(&vec![1.0; dim])
    }

    /// `(X + X^*) / 2` with standard complex Gaussian `X`.
    pub fn random<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> HermMatrix {
        let x: Vec<Complex64> = (0..dim * dim).map(|_| gaussian(rng)).collect();
        let mut data = vec![Complex64::new(0.0, 0.0); dim * dim];
        for i in 0..dim {
            for j in 0..dim {
                data[i * dim + j] = (x[i * dim + j] + x[j * dim + i].conj()) * 0.5;
            }
        }
        HermMatrix { dim, data }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn at(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.dim + j]
    }

    pub fn as_cmat(&self) -> CMat {
        CMat {
            n: self.dim,
            a: self.data.clone(),
        }
    }

    /// `<A u, u>`, real up to rounding; the imaginary part is dropped.
    pub fn quadratic_form(&self, u: &[Complex64]) -> f64 {
        let d = self.dim;
        let mut acc = Complex64::new(0.0, 0.0);
        for (i, ui) in u.iter().enumerate().take(d) {
            let row: Complex64 = self.data[i * d..(i + 1) * d]
                .iter()
                .zip(u)
                .map(|(a, x)| a * x)
                .sum();
            acc += ui.conj() * row;
        }
        acc.re
    }

    /// Eigenvalues in increasing order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        // Each eigenvalue of A appears twice in the real embedding.
        let (mut lam, _) = jacobi_eigen(&self.as_cmat().real_embedding());
        lam.sort_by(f64::total_cmp);
        lam.into_iter().step_by(2).collect()
    }

    /// `[lambda_min, lambda_max]`, the numerical range of a Hermitian matrix.
    pub fn numerical_range(&self) -> Interval {
        let lam = self.eigenvalues();
        Interval {
            lo: lam[0],
            hi: lam[lam.len() - 1],
        }
    }

    pub fn mul(&self, other: &HermMatrix) -> CMat {
        self.as_cmat().mul(&other.as_cmat())
    }

    /// Header `dim=d`, then `d` rows of `2d` interleaved real, imaginary values.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut out = out;
        writeln!(out, "dim={}", self.dim)?;
        let mut w = csv::WriterBuilder::new()
            .has_headers(false)
            .from_writer(out);
        for i in 0..self.dim {
            let row: Vec<String> = (0..self.dim)
                .flat_map(|j| {
                    let z = self.at(i, j);
                    [g17(z.re), g17(z.im)]
                })
                .collect();
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<HermMatrix> {
        let mut reader = BufReader::new(input);
        let mut header = String::new();
        reader.read_line(&mut header)?;
        let dim: usize = header
            .trim()
            .strip_prefix("dim=")
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(|| {
                Error::Format(format!(
                    "expected `dim=d` header, found `{}`",
                    header.trim()
                ))
            })?;
        let mut csv_reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut data = Vec::with_capacity(dim * dim);
        let mut rows = 0;
        for record in csv_reader.records() {
            let record = record?;
            if record.len() != 2 * dim {
                return Err(Error::Format(format!(
                    "row {} has {} fields, expected {}",
                    rows + 1,
                    record.len(),
                    2 * dim
                )));
            }
            let vals = record
                .iter()
                .map(|s| {
                    s.parse::<f64>()
                        .map_err(|_| Error::Format(format!("bad number `{s}`")))
                })
                .collect::<Result<Vec<_>>>()?;
            data.extend(vals.chunks(2).map(|p| Complex64::new(p[0], p[1])));
            rows += 1;
        }
        if rows != dim {
            return Err(Error::Format(format!("expected {dim} rows, found {rows}")));
        }
        HermMatrix::new(dim, data)
    }
}

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Complex Gaussian vector, normalized.
pub fn random_unit_vector<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<Complex64> {
    loop {
        let v: Vec<Complex64> = (0..dim).map(|_| gaussian(rng)).collect();
        let n = norm2(&v);
        if n > 1e-300 {
            return v.into_iter().map(|z| z / n).collect();
        }
    }
}

fn common_dim(mats: &[HermMatrix]) -> Result<usize> {
    let first = mats
        .first()
        .ok_or_else(|| Error::InvalidArgument("no matrices given".into()))?;
    for m in mats {
        if m.dim != first.dim {
            return Err(Error::DimensionMismatch {
                expected: first.dim,
                got: m.dim,
            });
        }
    }
    Ok(first.dim)
}

/// The `d` basis vectors followed by `count` random unit vectors.
fn test_vectors(dim: usize, count: usize, seed: u64) -> Vec<Vec<Complex64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out: Vec<Vec<Complex64>> = (0..dim)
        .map(|k| {
            let mut e = vec![Complex64::new(0.0, 0.0); dim];
            e[k] = Complex64::new(1.0, 0.0);
            e
        })
        .collect();
    out.extend((0..count).map(|_| random_unit_vector(dim, &mut rng)));
    out
}

/// `(<A_1 u,u>, ..., <A_n u,u>)` for `u` in [`test_vectors`] order.
pub fn joint_point(mats: &[HermMatrix], u: &[Complex64]) -> Vec<f64> {
    mats.iter().map(|m| m.quadratic_form(u)).collect()
}

/// Joint numerical range points at the basis vectors and `count` random unit vectors.
pub fn sample_joint_range(mats: &[HermMatrix], count: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    let dim = common_dim(mats)?;
    if count == 0 {
        return Err(Error::InvalidArgument("sample count must be >= 1".into()));
    }
    Ok(test_vectors(dim, count, seed)
        .par_iter()
        .map(|u| joint_point(mats, u))
        .collect())
}

/// One root of `t_{alpha(u)}(w) = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct WtRoot {
    pub alpha: Vec<f64>,
    pub root: Complex64,
    pub backward_error: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct WtSample {
    pub roots: Vec<WtRoot>,
    /// Vectors whose scalar polynomial vanished identically.
    pub zero_polynomials: usize,
    /// Roots whose backward error exceeds [`roots::BACKWARD`].
    pub inaccurate: usize,
}

/// Points of `W(T)` for polynomial coefficients: every root of
/// `g + sum_j <A_j u,u> f_j` for the basis vectors and `count` random `u`.
pub fn sample_wt(
    mats: &[HermMatrix],
    spec: &ProblemSpec,
    count: usize,
    seed: u64,
) -> Result<WtSample> {
    let dim = common_dim(mats)?;
    if mats.len() != spec.n() {
        return Err(Error::DimensionMismatch {
            expected: spec.n(),
            got: mats.len(),
        });
    }
    let g = poly::to_poly(&spec.g)?;
    let f = spec
        .f
        .iter()
        .map(poly::to_poly)
        .collect::<Result<Vec<_>>>()?;
    let per_vector = test_vectors(dim, count, seed)
        .par_iter()
        .map(|u| {
            let alpha = joint_point(mats, u);
            let p = poly::combine(&g, &f, &alpha);
            match roots::roots(&p) {
                Ok(rs) => Ok(Some(
                    rs.into_iter()
                        .map(|z| WtRoot {
                            alpha: alpha.clone(),
                            root: z,
                            backward_error: roots::backward_error(&p, z),
                        })
                        .collect::<Vec<_>>(),
                )),
                Err(Error::ZeroPolynomial) => Ok(None),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out = WtSample::default();
    for item in per_vector {
        match item {
            Some(rs) => out.roots.extend(rs),
            None => out.zero_polynomials += 1,
        }
    }
    if out.zero_polynomials > 0 {
        log::info!(
            "{} sampled vectors gave the zero polynomial",
            out.zero_polynomials
        );
    }
    out.inaccurate = out
        .roots
        .iter()
        .filter(|r| r.backward_error > roots::BACKWARD)
        .count();
    Ok(out)
}

/// `T(w) = g(w) I + sum_j f_j(w) A_j`.
pub fn t_matrix(mats: &[HermMatrix], spec: &ProblemSpec, w: Complex64) -> Result<CMat> {
    let dim = common_dim(mats)?;
    if mats.len() != spec.n() {
        return Err(Error::DimensionMismatch {
            expected: spec.n(),
            got: mats.len(),
        });
    }
    let mut t = CMat::zeros(dim);
    let g = spec.g.eval(w)?;
    for i in 0..dim {
        t.a[i * dim + i] = g;
    }
    for (m, fj) in mats.iter().zip(&spec.f) {
        let c = fj.eval(w)?;
        for (dst, src) in t.a.iter_mut().zip(&m.data) {
            *dst += c * src;
        }
    }
    Ok(t)
}

/// `||T(w)^{-1}|| = 1 / sigma_min(T(w))`; `+inf` when `T(w)` is singular.
///
/// Inverse iteration on `(T^* T)^{-1}` with LU solves; if it stalls, the
/// smallest eigenvalue of `T^* T` from Jacobi is used instead.
pub fn resolvent_norm(mats: &[HermMatrix], spec: &ProblemSpec, w: Complex64) -> Result<f64> {
    let t = t_matrix(mats, spec, w)?;
    let Some(lu) = Lu::factor(&t) else {
        return Ok(f64::INFINITY);
    };
    let d = t.n;
    let mut x: Vec<Complex64> = (0..d)
        .map(|k| Complex64::new(1.0 + 0.1 * k as f64, 0.05 * k as f64))
        .collect();
    let n0 = norm2(&x);
    x.iter_mut().for_each(|z| *z /= n0);
    let mut lambda = 0.0;
    let mut converged = false;
    for _ in 0..2000 {
        let y = lu.solve(&lu.solve_adjoint(&x));
        let ny = norm2(&y);
        if !ny.is_finite() {
            return Ok(f64::INFINITY);
        }
        // Rayleigh quotient of the positive definite (T^* T)^{-1}.
        let next: f64 = x.iter().zip(&y).map(|(a, b)| (a.conj() * b).re).sum();
        x = y.into_iter().map(|z| z / ny).collect();
        if (next - lambda).abs() <= 1e-14 * next.abs() {
            lambda = next;
            converged = true;
            break;
        }
        lambda = next;
    }
    if converged && lambda > 0.0 {
        return Ok(lambda.sqrt());
    }
    let tt = t.adjoint().mul(&t);
    let (lam, _) = jacobi_eigen(&tt.real_embedding());
    let smallest = lam.into_iter().fold(f64::INFINITY, f64::min);
    if smallest <= 0.0 {
        Ok(f64::INFINITY)
    } else {
        Ok(1.0 / smallest.sqrt())
    }
}

/// One random Hermitian matrix per axis, its spectrum mapped affinely onto
/// the axis, so that `W(A_j)` is exactly the (bounded) interval.
pub fn random_box_matrices(bounds: &[Interval], dim: usize, seed: u64) -> Result<Vec<HermMatrix>> {
    if dim == 0 {
        return Err(Error::InvalidArgument(
            "matrix dimension must be >= 1".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    bounds
        .iter()
        .map(|iv| {
            if !iv.is_bounded() {
                return Err(Error::InvalidArgument(format!(
                    "cannot realise the unbounded interval {iv} by a matrix"
                )));
            }
            let a = HermMatrix::random(dim, &mut rng);
            let spec = a.numerical_range();
            let width = spec.hi - spec.lo;
            if width <= 0.0 {
                return Ok(HermMatrix::diag(&vec![0.5 * (iv.lo + iv.hi); dim]));
            }
            apply_borel(&a, |x| {
                let t = ((x - spec.lo) / width).clamp(0.0, 1.0);
                iv.lo + t * (iv.hi - iv.lo)
            })
        })
        .collect()
}

/// `y(A)` by eigendecomposition: `V diag(y(lambda)) V^*`.
pub fn apply_borel<F: Fn(f64) -> f64>(mat: &HermMatrix, y: F) -> Result<HermMatrix> {
    let d = mat.dim;
    let (lam, v) = jacobi_eigen(&mat.as_cmat().real_embedding());
    let mapped = lam
        .iter()
        .map(|&l| {
            let val = y(l);
            if val.is_finite() {
                Ok(val)
            } else {
                Err(Error::Domain(format!(
                    "function is not finite at eigenvalue {l}"
                )))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let m = 2 * d;
    let entry =
        |i: usize, j: usize| -> f64 { (0..m).map(|k| v.at(i, k) * mapped[k] * v.at(j, k)).sum() };
    // The embedding of y(A) is [[Re, -Im], [Im, Re]].
    let mut data = vec![Complex64::new(0.0, 0.0); d * d];
    for i in 0..d {
        for j in 0..d {
            data[i * d + j] = Complex64::new(entry(i, j), entry(i + d, j));
        }
    }
    for i in 0..d {
        for j in 0..=i {
            let s = (data[i * d + j] + data[j * d + i].conj()) * 0.5;
            data[i * d + j] = s;
            data[j * d + i] = s.conj();
        }
    }
    Ok(HermMatrix { dim: d, data })
}

/// A random test problem: Hermitian coefficients with polynomial scalar
/// functions. `g` is monic of degree `deg` and every `f_j` has degree below
/// `deg`, so `t_alpha` never loses its leading term.
#[derive(Debug, Clone)]
pub struct RandomProblem {
    pub spec: ProblemSpec,
    pub mats: Vec<HermMatrix>,
}

impl RandomProblem {
    pub fn generate<R: Rng + ?Sized>(
        n: usize,
        dim: usize,
        deg: u32,
        rng: &mut R,
    ) -> Result<RandomProblem> {
        if n == 0 || dim == 0 || deg == 0 {
            return Err(Error::InvalidArgument(
                "n, dim and degree must be >= 1".into(),
            ));
        }
        let mut g_coeffs: Vec<Complex64> = (0..deg).map(|_| gaussian(rng)).collect();
        g_coeffs.push(Complex64::new(1.0, 0.0));
        let g = poly_expr(&g_coeffs);
        let f = (0..n)
            .map(|_| {
                let c: Vec<Complex64> = (0..deg).map(|_| gaussian(rng)).collect();
                poly_expr(&c)
            })
            .collect();
        let mats = (0..n).map(|_| HermMatrix::random(dim, rng)).collect();
        Ok(RandomProblem {
            spec: ProblemSpec::new(g, f)?,
            mats,
        })
    }

    pub fn numerical_range_box(&self) -> Vec<Interval> {
        self.mats.iter().map(HermMatrix::numerical_range).collect()
    }
}

/// `sum_k c_k w^k` as an expression tree.
pub fn poly_expr(coeffs: &[Complex64]) -> CoeffExpr {
    let mut terms = coeffs.iter().enumerate().map(|(k, &c)| match k {
        0 => CoeffExpr::Const(c),
        1 => CoeffExpr::Mul(Box::new(CoeffExpr::Const(c)), Box::new(CoeffExpr::Var)),
        _ => CoeffExpr::Mul(
            Box::new(CoeffExpr::Const(c)),
            Box::new(CoeffExpr::Pow(Box::new(CoeffExpr::Var), k as u32)),
        ),
    });
    let first = terms
        .next()
        .unwrap_or(CoeffExpr::Const(Complex64::new(0.0, 0.0)));
    terms.fold(first, |acc, t| CoeffExpr::Add(Box::new(acc), Box::new(t)))
}
