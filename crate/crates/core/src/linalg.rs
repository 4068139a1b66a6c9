//! Small dense linear algebra used throughout the crate.
//!
//! Everything here targets desk-scale problems (at most a few hundred rows),
//! so the implementations favour clarity and accuracy over asymptotics:
//! row-major storage, partial-pivot LU, one-sided Jacobi SVD.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Dense row-major matrix of `f64`.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        if rows.is_empty() || rows[0].is_empty() {
            return Err(Error::ParseMatrix("matrix must be non-empty".into()));
        }
        let cols = rows[0].len();
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::ParseMatrix("ragged rows".into()));
        }
        let data: Vec<f64> = rows.iter().flatten().copied().collect();
        Ok(Matrix { rows: rows.len(), cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Matrix::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn diag(values: &[f64]) -> Self {
        let mut m = Matrix::zeros(values.len(), values.len());
        for (i, v) in values.iter().enumerate() {
            m[(i, i)] = *v;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn to_nested(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "matmul dimension mismatch");
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, v.len(), "matvec dimension mismatch");
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn add(&self, other: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(&other.data) {
            *a += b;
        }
        out
    }

    pub fn sub(&self, other: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(&other.data) {
            *a -= b;
        }
        out
    }

    pub fn scale(&self, s: f64) -> Matrix {
        let mut out = self.clone();
        for a in out.data.iter_mut() {
            *a *= s;
        }
        out
    }

    /// Copies `block` into `self` with its top-left corner at `(r0, c0)`.
    pub fn set_block(&mut self, r0: usize, c0: usize, block: &Matrix) {
        assert!(r0 + block.rows <= self.rows && c0 + block.cols <= self.cols);
        for i in 0..block.rows {
            for j in 0..block.cols {
                self[(r0 + i, c0 + j)] = block[(i, j)];
            }
        }
    }

    pub fn block(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> Matrix {
        Matrix::from_fn(rows, cols, |i, j| self[(r0 + i, c0 + j)])
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    /// Solves `self * x = b` by LU with partial pivoting.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let cols = self.solve_many(&Matrix::from_fn(b.len(), 1, |i, _| b[i]))?;
        Ok((0..b.len()).map(|i| cols[(i, 0)]).collect())
    }

    /// Solves `self * X = B` column-wise by LU with partial pivoting.
    pub fn solve_many(&self, b: &Matrix) -> Result<Matrix> {
        assert!(self.is_square() && self.rows == b.rows);
        let n = self.rows;
        let mut lu = self.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (piv, piv_val) = (k..n)
                .map(|i| (i, lu[(i, k)].abs()))
                .fold((k, -1.0), |acc, cur| if cur.1 > acc.1 { cur } else { acc });
            if piv_val <= f64::EPSILON * self.max_abs().max(1.0) * n as f64 {
                return Err(Error::SingularMatrix);
            }
            if piv != k {
                for j in 0..n {
                    let tmp = lu[(k, j)];
                    lu[(k, j)] = lu[(piv, j)];
                    lu[(piv, j)] = tmp;
                }
                perm.swap(k, piv);
            }
            for i in k + 1..n {
                let factor = lu[(i, k)] / lu[(k, k)];
                lu[(i, k)] = factor;
                for j in k + 1..n {
                    lu[(i, j)] -= factor * lu[(k, j)];
                }
            }
        }
        let mut x = Matrix::zeros(n, b.cols);
        for col in 0..b.cols {
            // forward substitution on permuted rhs
            let mut y = vec![0.0; n];
            for i in 0..n {
                let mut s = b[(perm[i], col)];
                for j in 0..i {
                    s -= lu[(i, j)] * y[j];
                }
                y[i] = s;
            }
            // back substitution
            for i in (0..n).rev() {
                let mut s = y[i];
                for j in i + 1..n {
                    s -= lu[(i, j)] * x[(j, col)];
                }
                x[(i, col)] = s / lu[(i, i)];
            }
        }
        Ok(x)
    }

    pub fn inverse(&self) -> Result<Matrix> {
        self.solve_many(&Matrix::identity(self.rows))
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

/// Determinant of a square complex matrix by LU with partial pivoting.
/// Entries are given row-major.
pub fn complex_det(data: &mut [Complex64], n: usize) -> Complex64 {
    assert_eq!(data.len(), n * n);
    let mut det = Complex64::new(1.0, 0.0);
    for k in 0..n {
        let (piv, piv_norm) = (k..n)
            .map(|i| (i, data[i * n + k].norm_sqr()))
            .fold((k, -1.0), |acc, cur| if cur.1 > acc.1 { cur } else { acc });
        if piv_norm == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        if piv != k {
            for j in 0..n {
                data.swap(k * n + j, piv * n + j);
            }
            det = -det;
        }
        let pivot = data[k * n + k];
        det *= pivot;
        for i in k + 1..n {
            let factor = data[i * n + k] / pivot;
            for j in k + 1..n {
                let sub = factor * data[k * n + j];
                data[i * n + j] -= sub;
            }
        }
    }
    det
}

/// Singular value decomposition `A = U diag(s) V^T` with full square `U`
/// (m by m) and `V` (n by n); `s` holds min(m, n) values sorted descending.
#[derive(Clone, Debug)]
pub struct Svd {
    pub u: Matrix,
    pub singular_values: Vec<f64>,
    pub v: Matrix,
}

/// One-sided Jacobi SVD. Rotates column pairs of a working copy until all
/// columns are mutually orthogonal; singular values are the column norms.
pub fn svd(a: &Matrix) -> Svd {
    if a.rows() < a.cols() {
        let t = svd(&a.transpose());
        return Svd { u: t.v, singular_values: t.singular_values, v: t.u };
    }
    let m = a.rows();
    let n = a.cols();
    let mut w = a.clone();
    let mut v = Matrix::identity(n);

    let tol = 1e-15;
    let max_sweeps = 60;
    for _ in 0..max_sweeps {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in p + 1..n {
                let mut app = 0.0;
                let mut aqq = 0.0;
                let mut apq = 0.0;
                for i in 0..m {
                    app += w[(i, p)] * w[(i, p)];
                    aqq += w[(i, q)] * w[(i, q)];
                    apq += w[(i, p)] * w[(i, q)];
                }
                let denom = (app * aqq).sqrt();
                if denom == 0.0 || apq.abs() <= tol * denom {
                    continue;
                }
                off = off.max(apq.abs() / denom);
                let zeta = (aqq - app) / (2.0 * apq);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..m {
                    let wp = w[(i, p)];
                    let wq = w[(i, q)];
                    w[(i, p)] = c * wp - s * wq;
                    w[(i, q)] = s * wp + c * wq;
                }
                for i in 0..n {
                    let vp = v[(i, p)];
                    let vq = v[(i, q)];
                    v[(i, p)] = c * vp - s * vq;
                    v[(i, q)] = s * vp + c * vq;
                }
            }
        }
        if off <= tol {
            break;
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let norms: Vec<f64> = (0..n)
        .map(|j| (0..m).map(|i| w[(i, j)] * w[(i, j)]).sum::<f64>().sqrt())
        .collect();
    order.sort_by(|&a, &b| norms[b].partial_cmp(&norms[a]).unwrap());

    let singular_values: Vec<f64> = order.iter().map(|&j| norms[j]).collect();
    let v_sorted = Matrix::from_fn(n, n, |i, j| v[(i, order[j])]);

    // Left singular vectors: normalized columns of W for non-negligible
    // singular values, then an orthonormal completion for the rest of R^m.
    let mut u = Matrix::zeros(m, m);
    let scale = singular_values.first().copied().unwrap_or(0.0);
    let mut filled = 0;
    for (j, &col) in order.iter().enumerate() {
        if singular_values[j] > 1e-14 * scale.max(1.0) {
            for i in 0..m {
                u[(i, filled)] = w[(i, col)] / norms[col];
            }
            filled += 1;
        }
    }
    complete_orthonormal(&mut u, filled);

    Svd { u, singular_values, v: v_sorted }
}

/// Extends the first `filled` orthonormal columns of `u` to a full basis
/// by Gram-Schmidt against standard basis vectors.
fn complete_orthonormal(u: &mut Matrix, mut filled: usize) {
    let m = u.rows();
    let mut cand = 0;
    while filled < m && cand < m {
        let mut vec: Vec<f64> = (0..m).map(|i| if i == cand { 1.0 } else { 0.0 }).collect();
        // two rounds of Gram-Schmidt for numerical orthogonality
        for _ in 0..2 {
            for j in 0..filled {
                let proj: f64 = (0..m).map(|i| vec[i] * u[(i, j)]).sum();
                for i in 0..m {
                    vec[i] -= proj * u[(i, j)];
                }
            }
        }
        let nrm = norm(&vec);
        if nrm > 1e-8 {
            for i in 0..m {
                u[(i, filled)] = vec[i] / nrm;
            }
            filled += 1;
        }
        cand += 1;
    }
    assert_eq!(filled, m, "orthonormal completion failed");
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matmul_identity() {
        let a = Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let i = Matrix::identity(2);
        assert_eq!(a.matmul(&i), a);
    }

    #[test]
    fn solve_known_system() {
        let a = Matrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 3.0]]).unwrap();
        let x = a.solve(&[5.0, 10.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-12);
        assert!((x[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn inverse_roundtrip() {
        let a = Matrix::from_rows(&[
            vec![4.0, -2.0, 1.0],
            vec![0.5, 3.0, -1.0],
            vec![2.0, 0.0, 5.0],
        ])
        .unwrap();
        let prod = a.matmul(&a.inverse().unwrap());
        assert!(prod.max_abs_diff(&Matrix::identity(3)) < 1e-12);
    }

    #[test]
    fn singular_solve_errors() {
        let a = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]).unwrap();
        assert!(a.solve(&[1.0, 2.0]).is_err());
    }

    #[test]
    fn complex_det_matches_real() {
        let mut data = vec![
            Complex64::new(2.0, 0.0),
            Complex64::new(1.0, 0.0),
            Complex64::new(1.0, 0.0),
            Complex64::new(3.0, 0.0),
        ];
        let d = complex_det(&mut data, 2);
        assert!((d.re - 5.0).abs() < 1e-12 && d.im.abs() < 1e-14);
    }

    #[test]
    fn svd_diagonal() {
        let a = Matrix::diag(&[3.0, 1.0]);
        let s = svd(&a);
        assert!((s.singular_values[0] - 3.0).abs() < 1e-12);
        assert!((s.singular_values[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn svd_reconstructs_rectangular() {
        // fixed 4x3 matrix with rank 3
        let a = Matrix::from_rows(&[
            vec![1.0, 2.0, 0.5],
            vec![-1.0, 0.3, 2.2],
            vec![0.7, -0.4, 1.9],
            vec![2.5, 1.1, -0.6],
        ])
        .unwrap();
        let s = svd(&a);
        let mut sigma = Matrix::zeros(4, 3);
        for (i, v) in s.singular_values.iter().enumerate() {
            sigma[(i, i)] = *v;
        }
        let rec = s.u.matmul(&sigma).matmul(&s.v.transpose());
        assert!(rec.max_abs_diff(&a) < 1e-10 * a.frobenius_norm());
        // orthogonality of U and V
        assert!(s.u.transpose().matmul(&s.u).max_abs_diff(&Matrix::identity(4)) < 1e-12);
        assert!(s.v.transpose().matmul(&s.v).max_abs_diff(&Matrix::identity(3)) < 1e-12);
    }

    #[test]
    fn svd_rank_deficient() {
        // rank-1 outer product
        let a = Matrix::from_fn(3, 3, |i, j| (i as f64 + 1.0) * (j as f64 - 1.0));
        let s = svd(&a);
        assert!(s.singular_values[0] > 1.0);
        assert!(s.singular_values[1].abs() < 1e-12 * s.singular_values[0]);
        assert!(s.u.transpose().matmul(&s.u).max_abs_diff(&Matrix::identity(3)) < 1e-10);
    }
}
