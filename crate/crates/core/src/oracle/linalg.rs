//! Small dense kernels: cyclic Jacobi for real symmetric matrices and
//! complex LU with partial pivoting.

use num_complex::Complex64;

/// Row-major real square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct RealMat {
    pub n: usize,
    pub a: Vec<f64>,
}

impl RealMat {
    pub fn zeros(n: usize) -> RealMat {
        RealMat {
            n,
            a: vec![0.0; n * n],
        }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.a[i * self.n + j] = v;
    }

    fn off_norm(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                if i != j {
                    s += self.at(i, j).powi(2);
                }
            }
        }
        s.sqrt()
    }

    fn frobenius(&self) -> f64 {
        self.a.iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

/// Eigen-decomposition `A = V diag(lambda) V^T` of a symmetric matrix by
/// cyclic Jacobi rotations. Columns of the returned matrix are eigenvectors.
///
/// Sweeps stop once the off-diagonal Frobenius norm is at most
/// `1e-12 * max(1, ||A||_F)`.
pub fn jacobi_eigen(mat: &RealMat) -> (Vec<f64>, RealMat) {
    let n = mat.n;
    let mut a = mat.clone();
    let mut v = RealMat::zeros(n);
    for i in 0..n {
        v.set(i, i, 1.0);
    }
    let target = 1e-12 * a.frobenius().max(1.0);
    for _sweep in 0..100 {
        if a.off_norm() <= target {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a.at(p, q);
                if apq == 0.0 {
                    continue;
                }
                let theta = (a.at(q, q) - a.at(p, p)) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a.at(k, p);
                    let akq = a.at(k, q);
                    a.set(k, p, c * akp - s * akq);
                    a.set(k, q, s * akp + c * akq);
                }
                for k in 0..n {
                    let apk = a.at(p, k);
                    let aqk = a.at(q, k);
                    a.set(p, k, c * apk - s * aqk);
                    a.set(q, k, s * apk + c * aqk);
                }
                for k in 0..n {
                    let vkp = v.at(k, p);
                    let vkq = v.at(k, q);
                    v.set(k, p, c * vkp - s * vkq);
                    v.set(k, q, s * vkp + c * vkq);
                }
            }
        }
    }
    ((0..n).map(|i| a.at(i, i)).collect(), v)
}

/// Row-major complex square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CMat {
    pub n: usize,
    pub a: Vec<Complex64>,
}

impl CMat {
    pub fn zeros(n: usize) -> CMat {
        CMat {
            n,
            a: vec![Complex64::new(0.0, 0.0); n * n],
        }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> Complex64 {
        self.a[i * self.n + j]
    }

    pub fn adjoint(&self) -> CMat {
        let mut out = CMat::zeros(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                out.a[j * self.n + i] = self.at(i, j).conj();
            }
        }
        out
    }

    pub fn mul(&self, other: &CMat) -> CMat {
        let n = self.n;
        let mut out = CMat::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let aik = self.at(i, k);
                for j in 0..n {
                    out.a[i * n + j] += aik * other.at(k, j);
                }
            }
        }
        out
    }

    /// Real symmetric `2n x 2n` embedding `[[Re, -Im], [Im, Re]]`.
    pub fn real_embedding(&self) -> RealMat {
        let n = self.n;
        let mut m = RealMat::zeros(2 * n);
        for i in 0..n {
            for j in 0..n {
                let z = self.at(i, j);
                m.set(i, j, z.re);
                m.set(i + n, j + n, z.re);
                m.set(i, j + n, -z.im);
                m.set(i + n, j, z.im);
            }
        }
        m
    }
}

/// `P A = L U` with partial pivoting, stored compactly.
pub struct Lu {
    n: usize,
    lu: Vec<Complex64>,
    perm: Vec<usize>,
}

impl Lu {
    /// `None` when a pivot vanishes.
    pub fn factor(mat: &CMat) -> Option<Lu> {
        let n = mat.n;
        let mut lu = mat.a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let p = (k..n)
                .max_by(|&i, &j| lu[i * n + k].norm().total_cmp(&lu[j * n + k].norm()))
                .expect("nonempty pivot column");
            if lu[p * n + k].norm() == 0.0 {
                return None;
            }
            if p != k {
                for j in 0..n {
                    lu.swap(p * n + j, k * n + j);
                }
                perm.swap(p, k);
            }
            let pivot = lu[k * n + k];
            for i in k + 1..n {
                let l = lu[i * n + k] / pivot;
                lu[i * n + k] = l;
                for j in k + 1..n {
                    let u = lu[k * n + j];
                    lu[i * n + j] -= l * u;
                }
            }
        }
        Some(Lu { n, lu, perm })
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[Complex64]) -> Vec<Complex64> {
        let n = self.n;
        let mut x: Vec<Complex64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            for j in 0..i {
                let l = self.lu[i * n + j];
                x[i] = x[i] - l * x[j];
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                let u = self.lu[i * n + j];
                x[i] = x[i] - u * x[j];
            }
            x[i] /= self.lu[i * n + i];
        }
        x
    }

    /// Solves `A^* x = b`.
    pub fn solve_adjoint(&self, b: &[Complex64]) -> Vec<Complex64> {
        let n = self.n;
        // A = P^T L U, so A^* = U^* L^* P and we solve U^* y = b, L^* z = y, x = P^T z.
        let mut y = b.to_vec();
        for i in 0..n {
            for j in 0..i {
                let u = self.lu[j * n + i].conj();
                y[i] = y[i] - u * y[j];
            }
            y[i] /= self.lu[i * n + i].conj();
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                let l = self.lu[j * n + i].conj();
                y[i] = y[i] - l * y[j];
            }
        }
        let mut x = vec![Complex64::new(0.0, 0.0); n];
        for (k, &p) in self.perm.iter().enumerate() {
            x[p] = y[k];
        }
        x
    }
}

pub fn norm2(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}
