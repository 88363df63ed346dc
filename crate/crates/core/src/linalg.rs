//! Dense linear algebra for matrices up to 4×4.
//!
//! Everything here is stack allocated and `Copy`; the metric code calls these
//! routines in tight integration loops.

use std::fmt;
use std::ops::{Index, IndexMut};

pub const MAX_DIM: usize = 4;

/// Square matrix of dimension `n ≤ 4` stored in a fixed 4×4 array.
#[derive(Clone, Copy, PartialEq)]
pub struct Matrix {
    n: usize,
    a: [[f64; MAX_DIM]; MAX_DIM],
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<&[f64]> = (0..self.n).map(|i| &self.a[i][..self.n]).collect();
        f.debug_struct("Matrix").field("n", &self.n).field("rows", &rows).finish()
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.n && j < self.n);
        &self.a[i][j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.n && j < self.n);
        &mut self.a[i][j]
    }
}

impl Matrix {
    pub fn zeros(n: usize) -> Self {
        assert!((1..=MAX_DIM).contains(&n), "matrix dimension {n} out of range");
        Matrix { n, a: [[0.0; MAX_DIM]; MAX_DIM] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.a[i][i] = 1.0;
        }
        m
    }

    pub fn diag(d: &[f64]) -> Self {
        let mut m = Self::zeros(d.len());
        for (i, v) in d.iter().enumerate() {
            m.a[i][i] = *v;
        }
        m
    }

    /// Builds a matrix from row slices. Panics if the rows are ragged.
    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let n = rows.len();
        let mut m = Self::zeros(n);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), n, "row {i} has wrong length");
            m.a[i][..n].copy_from_slice(row);
        }
        m
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| self.a[i][..self.n].to_vec()).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = *self;
        for i in 0..self.n {
            for j in 0..self.n {
                t.a[i][j] = self.a[j][i];
            }
        }
        t
    }

    pub fn mul(&self, other: &Matrix) -> Self {
        assert_eq!(self.n, other.n);
        let mut r = Self::zeros(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                let mut s = 0.0;
                for k in 0..self.n {
                    s += self.a[i][k] * other.a[k][j];
                }
                r.a[i][j] = s;
            }
        }
        r
    }

    pub fn scale(&self, c: f64) -> Self {
        let mut r = *self;
        for i in 0..self.n {
            for j in 0..self.n {
                r.a[i][j] *= c;
            }
        }
        r
    }

    pub fn add(&self, other: &Matrix) -> Self {
        assert_eq!(self.n, other.n);
        let mut r = *self;
        for i in 0..self.n {
            for j in 0..self.n {
                r.a[i][j] += other.a[i][j];
            }
        }
        r
    }

    pub fn sub(&self, other: &Matrix) -> Self {
        self.add(&other.scale(-1.0))
    }

    pub fn mat_vec(&self, v: &[f64]) -> [f64; MAX_DIM] {
        assert_eq!(v.len(), self.n);
        let mut out = [0.0; MAX_DIM];
        for i in 0..self.n {
            out[i] = (0..self.n).map(|k| self.a[i][k] * v[k]).sum();
        }
        out
    }

    /// `vᵀ A v`.
    pub fn quad_form(&self, v: &[f64]) -> f64 {
        assert_eq!(v.len(), self.n);
        let mut s = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                s += self.a[i][j] * v[i] * v[j];
            }
        }
        s
    }

    /// `J A Jᵀ`.
    pub fn congruence(&self, j: &Matrix) -> Self {
        j.mul(self).mul(&j.transpose())
    }

    /// Lower-right block obtained by deleting row and column 0.
    pub fn spatial_block(&self) -> Self {
        assert!(self.n >= 2);
        let k = self.n - 1;
        let mut s = Self::zeros(k);
        for i in 0..k {
            for j in 0..k {
                s.a[i][j] = self.a[i + 1][j + 1];
            }
        }
        s
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        let mut m: f64 = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                m = m.max(self.a[i][j].abs());
            }
        }
        m
    }

    pub fn is_finite(&self) -> bool {
        (0..self.n).all(|i| (0..self.n).all(|j| self.a[i][j].is_finite()))
    }

    pub fn asymmetry(&self) -> f64 {
        let mut m: f64 = 0.0;
        for i in 0..self.n {
            for j in 0..i {
                m = m.max((self.a[i][j] - self.a[j][i]).abs());
            }
        }
        m
    }

    /// Determinant. Closed forms up to 3×3, pivoted elimination for 4×4.
    pub fn det(&self) -> f64 {
        let a = &self.a;
        match self.n {
            1 => a[0][0],
            2 => a[0][0] * a[1][1] - a[0][1] * a[1][0],
            3 => {
                a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
                    - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
                    + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
            }
            _ => {
                let (lu, _, sign) = match self.lu() {
                    Some(v) => v,
                    None => return 0.0,
                };
                let mut d = sign;
                for i in 0..self.n {
                    d *= lu.a[i][i];
                }
                d
            }
        }
    }

    /// In-place LU with partial pivoting. `None` when a pivot is exactly zero.
    fn lu(&self) -> Option<(Matrix, [usize; MAX_DIM], f64)> {
        let n = self.n;
        let mut m = *self;
        let mut perm = [0, 1, 2, 3];
        let mut sign = 1.0;
        for col in 0..n {
            let p = (col..n)
                .max_by(|&i, &j| m.a[i][col].abs().total_cmp(&m.a[j][col].abs()))
                .unwrap();
            if m.a[p][col] == 0.0 {
                return None;
            }
            if p != col {
                m.a.swap(p, col);
                perm.swap(p, col);
                sign = -sign;
            }
            for r in col + 1..n {
                let f = m.a[r][col] / m.a[col][col];
                m.a[r][col] = f;
                for c in col + 1..n {
                    m.a[r][c] -= f * m.a[col][c];
                }
            }
        }
        Some((m, perm, sign))
    }

    /// Inverse by Gauss–Jordan elimination with partial pivoting.
    /// Returns `None` if a pivot falls below `1e-300` in magnitude.
    pub fn inverse(&self) -> Option<Matrix> {
        let n = self.n;
        let mut m = *self;
        let mut inv = Self::identity(n);
        for col in 0..n {
            let p = (col..n)
                .max_by(|&i, &j| m.a[i][col].abs().total_cmp(&m.a[j][col].abs()))
                .unwrap();
            if m.a[p][col].abs() < 1e-300 {
                return None;
            }
            m.a.swap(p, col);
            inv.a.swap(p, col);
            let piv = m.a[col][col];
            for c in 0..n {
                m.a[col][c] /= piv;
                inv.a[col][c] /= piv;
            }
            for r in 0..n {
                if r != col {
                    let f = m.a[r][col];
                    if f != 0.0 {
                        for c in 0..n {
                            m.a[r][c] -= f * m.a[col][c];
                            inv.a[r][c] -= f * inv.a[col][c];
                        }
                    }
                }
            }
        }
        Some(inv)
    }

    /// Solves `A x = b` by partial-pivoting elimination.
    pub fn solve(&self, b: &[f64]) -> Option<[f64; MAX_DIM]> {
        let inv = self.inverse()?;
        Some(inv.mat_vec(b))
    }

    /// Leading principal minors `det A[0..k, 0..k]`, k = 1..n.
    pub fn leading_minors(&self) -> Vec<f64> {
        (1..=self.n)
            .map(|k| {
                let mut s = Self::zeros(k);
                for i in 0..k {
                    for j in 0..k {
                        s.a[i][j] = self.a[i][j];
                    }
                }
                s.det()
            })
            .collect()
    }

    /// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations,
    /// sorted in descending order.
    pub fn sym_eigenvalues(&self) -> Vec<f64> {
        let n = self.n;
        let mut a = *self;
        let scale = a.max_abs().max(f64::MIN_POSITIVE);
        for _sweep in 0..64 {
            let mut off = 0.0;
            for i in 0..n {
                for j in 0..i {
                    off += a.a[i][j] * a.a[i][j];
                }
            }
            if off.sqrt() <= 1e-15 * scale {
                break;
            }
            for p in 0..n {
                for q in p + 1..n {
                    let apq = a.a[p][q];
                    if apq.abs() <= 1e-300 {
                        continue;
                    }
                    let theta = (a.a[q][q] - a.a[p][p]) / (2.0 * apq);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let t = if theta == 0.0 { 1.0 } else { t };
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let akp = a.a[k][p];
                        let akq = a.a[k][q];
                        a.a[k][p] = c * akp - s * akq;
                        a.a[k][q] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let apk = a.a[p][k];
                        let aqk = a.a[q][k];
                        a.a[p][k] = c * apk - s * aqk;
                        a.a[q][k] = s * apk + c * aqk;
                    }
                }
            }
        }
        let mut ev: Vec<f64> = (0..n).map(|i| a.a[i][i]).collect();
        ev.sort_by(|x, y| y.total_cmp(x));
        ev
    }
}

/// Sylvester test for negative definiteness: the k-th leading minor of a
/// negative definite matrix has sign (−1)^k. `tol` is relative to the matrix
/// scale raised to k; minors inside the band return `None` (degenerate).
pub fn negative_definite_by_minors(m: &Matrix, tol: f64) -> Option<bool> {
    let scale = m.max_abs().max(f64::MIN_POSITIVE);
    let mut verdict = true;
    for (k, d) in m.leading_minors().iter().enumerate() {
        let band = tol * scale.powi(k as i32 + 1);
        if d.abs() <= band {
            return None;
        }
        let want_positive = (k + 1) % 2 == 0;
        if (*d > 0.0) != want_positive {
            verdict = false;
        }
    }
    Some(verdict)
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn cross2(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

#[inline]
pub fn normalize2(v: [f64; 2]) -> [f64; 2] {
    let n = v[0].hypot(v[1]);
    [v[0] / n, v[1] / n]
}
