//! Small dense linear algebra: row-major matrices, Householder QR for least
//! squares with rank detection, and a Jacobi eigen-solver for symmetric
//! matrices.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut};

/// Column k is treated as collinear with columns `0..k` when its residual norm
/// after Householder reduction falls below this fraction of its own norm.
pub const RANK_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    /// Panics if `data.len() != rows * cols`.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "matrix data length");
        Matrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self[(r, c)]).collect()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).collect()
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t[(c, r)] = self[(r, c)];
            }
        }
        t
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "matmul dimensions");
        let mut out = Matrix::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(r, k)];
                if a == 0.0 {
                    continue;
                }
                let orow = other.row(k);
                let dst = out.row_mut(r);
                for (d, &b) in dst.iter_mut().zip(orow) {
                    *d += a * b;
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, v.len(), "mul_vec dimensions");
        (0..self.rows)
            .map(|r| self.row(r).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn scale(&mut self, s: f64) {
        for v in &mut self.data {
            *v *= s;
        }
    }

    pub fn trace(&self) -> f64 {
        self.diagonal().iter().sum()
    }

    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| libm::fabs(a - b))
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|v| libm::fabs(*v)).fold(0.0, f64::max)
    }

    /// Adds `w * a b'`.
    pub fn add_outer(&mut self, w: f64, a: &[f64], b: &[f64]) {
        for (i, &ai) in a.iter().enumerate() {
            if ai == 0.0 {
                continue;
            }
            let row = self.row_mut(i);
            for (d, &bj) in row.iter_mut().zip(b) {
                *d += w * ai * bj;
            }
        }
    }

    pub fn symmetrize(&mut self) {
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                let m = 0.5 * (self[(i, j)] + self[(j, i)]);
                self[(i, j)] = m;
                self[(j, i)] = m;
            }
        }
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (r, c): (usize, usize)) -> &f64 {
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut f64 {
        &mut self.data[r * self.cols + c]
    }
}

/// Householder QR of a tall matrix (rows ≥ cols), stored compactly.
#[derive(Debug, Clone)]
pub struct Qr {
    /// Householder vectors below the diagonal, R on and above it.
    packed: Matrix,
    r_diag: Vec<f64>,
    col_norms: Vec<f64>,
}

impl Qr {
    pub fn new(a: &Matrix) -> Qr {
        let (m, n) = (a.rows(), a.cols());
        let mut qr = a.clone();
        let col_norms: Vec<f64> = (0..n)
            .map(|c| libm::sqrt((0..m).map(|r| a[(r, c)] * a[(r, c)]).sum()))
            .collect();
        let mut r_diag = vec![0.0; n];
        for k in 0..n.min(m) {
            let mut nrm = 0.0f64;
            for i in k..m {
                nrm = libm::hypot(nrm, qr[(i, k)]);
            }
            if nrm != 0.0 {
                if qr[(k, k)] < 0.0 {
                    nrm = -nrm;
                }
                for i in k..m {
                    qr[(i, k)] /= nrm;
                }
                qr[(k, k)] += 1.0;
                for j in (k + 1)..n {
                    let mut s = 0.0;
                    for i in k..m {
                        s += qr[(i, k)] * qr[(i, j)];
                    }
                    s = -s / qr[(k, k)];
                    for i in k..m {
                        qr[(i, j)] += s * qr[(i, k)];
                    }
                }
            }
            r_diag[k] = -nrm;
        }
        Qr {
            packed: qr,
            r_diag,
            col_norms,
        }
    }

    pub fn cols(&self) -> usize {
        self.packed.cols()
    }

    /// Indices of columns whose component orthogonal to the preceding columns
    /// is negligible (including all-zero columns).
    pub fn collinear_columns(&self) -> Vec<usize> {
        let n = self.cols();
        if self.packed.rows() < n {
            return (self.packed.rows()..n).collect();
        }
        (0..n)
            .filter(|&k| {
                let scale = self.col_norms[k];
                scale == 0.0 || libm::fabs(self.r_diag[k]) <= RANK_TOLERANCE * scale
            })
            .collect()
    }

    /// Applies `Q'` to `b` in place.
    pub fn apply_qt(&self, b: &mut [f64]) {
        let (m, n) = (self.packed.rows(), self.cols());
        for k in 0..n.min(m) {
            if self.packed[(k, k)] == 0.0 {
                continue;
            }
            let mut s = 0.0;
            for i in k..m {
                s += self.packed[(i, k)] * b[i];
            }
            s = -s / self.packed[(k, k)];
            for i in k..m {
                b[i] += s * self.packed[(i, k)];
            }
        }
    }

    fn r(&self, i: usize, j: usize) -> f64 {
        if i == j {
            self.r_diag[i]
        } else {
            self.packed[(i, j)]
        }
    }

    /// Least-squares solution of `A x ≈ b`; assumes full column rank.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.cols();
        let mut qtb = b.to_vec();
        self.apply_qt(&mut qtb);
        let mut x = vec![0.0; n];
        for k in (0..n).rev() {
            let mut s = qtb[k];
            for j in (k + 1)..n {
                s -= self.r(k, j) * x[j];
            }
            x[k] = s / self.r_diag[k];
        }
        x
    }

    /// Solves `R' w = v` (forward substitution).
    pub fn solve_rt(&self, v: &[f64]) -> Vec<f64> {
        let n = self.cols();
        let mut w = vec![0.0; n];
        for i in 0..n {
            let mut s = v[i];
            for j in 0..i {
                s -= self.r(j, i) * w[j];
            }
            w[i] = s / self.r_diag[i];
        }
        w
    }

    /// `(A'A)^{-1} = R^{-1} R^{-T}`.
    pub fn gram_inverse(&self) -> Matrix {
        let n = self.cols();
        // R^{-1}, upper triangular.
        let mut rinv = Matrix::zeros(n, n);
        for j in 0..n {
            rinv[(j, j)] = 1.0 / self.r_diag[j];
            for i in (0..j).rev() {
                let mut s = 0.0;
                for k in (i + 1)..=j {
                    s += self.r(i, k) * rinv[(k, j)];
                }
                rinv[(i, j)] = -s / self.r_diag[i];
            }
        }
        let mut g = rinv.matmul(&rinv.transpose());
        g.symmetrize();
        g
    }
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
pub fn symmetric_eigenvalues(a: &Matrix) -> Vec<f64> {
    let n = a.rows();
    assert_eq!(n, a.cols(), "square matrix required");
    let mut m = a.clone();
    m.symmetrize();
    for _sweep in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += m[(i, j)] * m[(i, j)];
            }
        }
        let scale: f64 = (0..n).map(|i| m[(i, i)] * m[(i, i)]).sum::<f64>() + off;
        if off <= 1e-30 * scale || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * apq);
                let t = libm::copysign(1.0, theta) / (libm::fabs(theta) + libm::sqrt(theta * theta + 1.0));
                let c = 1.0 / libm::sqrt(t * t + 1.0);
                let s = t * c;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
            }
        }
    }
    let mut ev = m.diagonal();
    ev.sort_by(|a, b| a.partial_cmp(b).unwrap_or(core::cmp::Ordering::Equal));
    ev
}
