//! Dense row-major matrices sized for desk-scale work (k <= 8, minor
//! matrices up to ~70x70). Everything is plain f64 with partial pivoting;
//! no attempt is made at high-performance kernels.

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InvalidArgument("empty matrix".into()));
        }
        let cols = rows[0].len();
        if cols == 0 || rows.iter().any(|r| r.len() != cols) {
            return Err(Error::InvalidArgument("ragged or empty matrix rows".into()));
        }
        let data: Vec<f64> = rows.iter().flatten().copied().collect();
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("non-finite matrix entry".into()));
        }
        Ok(Mat { rows: rows.len(), cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Mat::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
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

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn set_column(&mut self, j: usize, col: &[f64]) {
        assert_eq!(col.len(), self.rows);
        for i in 0..self.rows {
            self[(i, j)] = col[i];
        }
    }

    pub fn transpose(&self) -> Mat {
        Mat::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn mul(&self, other: &Mat) -> Mat {
        assert_eq!(self.cols, other.rows, "dimension mismatch in matrix product");
        let mut out = Mat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for l in 0..self.cols {
                let a = self[(i, l)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(l, j)];
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self[(i, j)] * v[j]).sum())
            .collect()
    }

    pub fn sub(&self, other: &Mat) -> Mat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Mat { rows: self.rows, cols: self.cols, data }
    }

    pub fn scale(&self, s: f64) -> Mat {
        let data = self.data.iter().map(|a| a * s).collect();
        Mat { rows: self.rows, cols: self.cols, data }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |acc, x| acc.max(x.abs()))
    }

    /// Determinant by LU with partial pivoting.
    pub fn det(&self) -> f64 {
        assert!(self.is_square());
        let n = self.rows;
        let mut a = self.clone();
        let mut det = 1.0;
        for col in 0..n {
            let mut pivot = col;
            for r in col + 1..n {
                if a[(r, col)].abs() > a[(pivot, col)].abs() {
                    pivot = r;
                }
            }
            if a[(pivot, col)] == 0.0 {
                return 0.0;
            }
            if pivot != col {
                for j in 0..n {
                    let t = a[(col, j)];
                    a[(col, j)] = a[(pivot, j)];
                    a[(pivot, j)] = t;
                }
                det = -det;
            }
            det *= a[(col, col)];
            for r in col + 1..n {
                let factor = a[(r, col)] / a[(col, col)];
                for j in col..n {
                    a[(r, j)] -= factor * a[(col, j)];
                }
            }
        }
        det
    }

    /// Inverse by Gauss-Jordan with partial pivoting.
    pub fn inverse(&self) -> Result<Mat> {
        assert!(self.is_square());
        let n = self.rows;
        let mut a = self.clone();
        let mut inv = Mat::identity(n);
        for col in 0..n {
            let mut pivot = col;
            for r in col + 1..n {
                if a[(r, col)].abs() > a[(pivot, col)].abs() {
                    pivot = r;
                }
            }
            let p = a[(pivot, col)];
            if p.abs() < 1e-300 {
                return Err(Error::RankDeficient(format!(
                    "pivot {:e} at column {col} while inverting",
                    p
                )));
            }
            if pivot != col {
                for j in 0..n {
                    a.data.swap(col * n + j, pivot * n + j);
                    inv.data.swap(col * n + j, pivot * n + j);
                }
            }
            let d = a[(col, col)];
            for j in 0..n {
                a[(col, j)] /= d;
                inv[(col, j)] /= d;
            }
            for r in 0..n {
                if r == col {
                    continue;
                }
                let factor = a[(r, col)];
                if factor == 0.0 {
                    continue;
                }
                for j in 0..n {
                    a[(r, j)] -= factor * a[(col, j)];
                    inv[(r, j)] -= factor * inv[(col, j)];
                }
            }
        }
        Ok(inv)
    }

    /// Minor sub-determinant on the given rows and columns.
    pub fn minor(&self, row_set: &[usize], col_set: &[usize]) -> f64 {
        assert_eq!(row_set.len(), col_set.len());
        let j = row_set.len();
        let sub = Mat::from_fn(j, j, |r, c| self[(row_set[r], col_set[c])]);
        sub.det()
    }

    /// Singular values in decreasing order, via Jacobi iteration on A^T A.
    pub fn singular_values(&self) -> Vec<f64> {
        let gram = self.transpose().mul(self);
        let mut eig = jacobi_eigenvalues_symmetric(&gram);
        eig.sort_by(|a, b| b.partial_cmp(a).unwrap());
        eig.into_iter().map(|l| l.max(0.0).sqrt()).collect()
    }

    /// Operator (spectral) norm.
    pub fn op_norm(&self) -> f64 {
        self.singular_values()[0]
    }

    /// 2-norm condition number; infinite when numerically singular.
    pub fn condition_number(&self) -> f64 {
        let sv = self.singular_values();
        let smax = sv[0];
        let smin = *sv.last().unwrap();
        if smin <= 0.0 {
            f64::INFINITY
        } else {
            smax / smin
        }
    }

    /// Assemble a k x k matrix from blocks [[a, b], [c, d]] where a is m x m.
    pub fn from_blocks(a: &Mat, b: &Mat, c: &Mat, d: &Mat) -> Mat {
        let m = a.rows();
        let n = d.rows();
        assert!(a.is_square() && d.is_square());
        assert_eq!((b.rows(), b.cols()), (m, n));
        assert_eq!((c.rows(), c.cols()), (n, m));
        Mat::from_fn(m + n, m + n, |i, j| match (i < m, j < m) {
            (true, true) => a[(i, j)],
            (true, false) => b[(i, j - m)],
            (false, true) => c[(i - m, j)],
            (false, false) => d[(i - m, j - m)],
        })
    }

    /// Extract the blocks (a, b, c, d) with a of size m x m.
    pub fn to_blocks(&self, m: usize) -> (Mat, Mat, Mat, Mat) {
        assert!(self.is_square() && m < self.rows);
        let n = self.rows - m;
        let a = Mat::from_fn(m, m, |i, j| self[(i, j)]);
        let b = Mat::from_fn(m, n, |i, j| self[(i, j + m)]);
        let c = Mat::from_fn(n, m, |i, j| self[(i + m, j)]);
        let d = Mat::from_fn(n, n, |i, j| self[(i + m, j + m)]);
        (a, b, c, d)
    }
}

impl std::ops::Index<(usize, usize)> for Mat {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Mat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations.
pub fn jacobi_eigenvalues_symmetric(m: &Mat) -> Vec<f64> {
    assert!(m.is_square());
    let n = m.rows();
    let mut a = m.clone();
    let scale = a.max_abs().max(1e-300);
    for _sweep in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                off += a[(i, j)] * a[(i, j)];
            }
        }
        if off.sqrt() < 1e-14 * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for i in 0..n {
                    let aip = a[(i, p)];
                    let aiq = a[(i, q)];
                    a[(i, p)] = c * aip - s * aiq;
                    a[(i, q)] = s * aip + c * aiq;
                }
                for i in 0..n {
                    let api = a[(p, i)];
                    let aqi = a[(q, i)];
                    a[(p, i)] = c * api - s * aqi;
                    a[(q, i)] = s * api + c * aqi;
                }
            }
        }
    }
    (0..n).map(|i| a[(i, i)]).collect()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn det_and_inverse_roundtrip() {
        let m = Mat::from_rows(&[vec![2.0, 1.0], vec![1.0, 1.0]]).unwrap();
        assert!((m.det() - 1.0).abs() < 1e-12);
        let inv = m.inverse().unwrap();
        let prod = m.mul(&inv);
        assert!(prod.sub(&Mat::identity(2)).frobenius_norm() < 1e-12);
    }

    #[test]
    fn det_of_permutation_is_signed() {
        let m = Mat::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert!((m.det() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn singular_values_of_diagonal() {
        let m = Mat::from_rows(&[vec![3.0, 0.0], vec![0.0, 0.5]]).unwrap();
        let sv = m.singular_values();
        assert!((sv[0] - 3.0).abs() < 1e-10);
        assert!((sv[1] - 0.5).abs() < 1e-10);
        assert!((m.op_norm() - 3.0).abs() < 1e-10);
    }

    #[test]
    fn minor_matches_block_det() {
        let m = Mat::from_rows(&[
            vec![1.0, 2.0, 3.0],
            vec![4.0, 5.0, 6.0],
            vec![7.0, 8.0, 10.0],
        ])
        .unwrap();
        // rows {0,2}, cols {1,2}: det [[2,3],[8,10]] = 20 - 24 = -4
        assert!((m.minor(&[0, 2], &[1, 2]) + 4.0).abs() < 1e-12);
    }

    #[test]
    fn blocks_roundtrip() {
        let m = Mat::from_rows(&[
            vec![1.0, 2.0, 3.0],
            vec![4.0, 5.0, 6.0],
            vec![7.0, 8.0, 9.0],
        ])
        .unwrap();
        let (a, b, c, d) = m.to_blocks(2);
        assert_eq!(Mat::from_blocks(&a, &b, &c, &d), m);
    }
}
