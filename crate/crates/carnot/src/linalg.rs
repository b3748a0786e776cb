//! Small dense linear algebra kernels over exact rationals, over
//! polynomials, and over f64.
//!
//! Everything here is desk scale (n ≤ 8); plain Gaussian elimination with
//! exact pivoting is the right tool and keeps rational results exact.

use crate::polyfields::{PolyError, Polynomial};
use crate::rational::Rat;
use num::{One, Zero};
use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum LinalgError {
    #[error("matrix is singular")]
    Singular,
    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

/// Dense column-major-free rational matrix, row index first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RatMat {
    pub rows: usize,
    pub cols: usize,
    data: Vec<Rat>,
}

impl RatMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        RatMat {
            rows,
            cols,
            data: vec![Rat::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            *m.at_mut(i, i) = Rat::one();
        }
        m
    }

    pub fn from_columns(cols: &[Vec<Rat>]) -> Self {
        let rows = cols.first().map_or(0, Vec::len);
        let mut m = Self::zeros(rows, cols.len());
        for (j, c) in cols.iter().enumerate() {
            assert_eq!(c.len(), rows, "ragged columns");
            for (i, x) in c.iter().enumerate() {
                *m.at_mut(i, j) = x.clone();
            }
        }
        m
    }

    pub fn at(&self, i: usize, j: usize) -> &Rat {
        &self.data[i * self.cols + j]
    }

    pub fn at_mut(&mut self, i: usize, j: usize) -> &mut Rat {
        &mut self.data[i * self.cols + j]
    }

    pub fn mul(&self, other: &RatMat) -> RatMat {
        assert_eq!(self.cols, other.rows, "shape mismatch");
        let mut out = RatMat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                if self.at(i, k).is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let add = self.at(i, k).clone() * other.at(k, j).clone();
                    *out.at_mut(i, j) += add;
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[Rat]) -> Vec<Rat> {
        assert_eq!(self.cols, v.len(), "shape mismatch");
        (0..self.rows)
            .map(|i| {
                let mut acc = Rat::zero();
                for j in 0..self.cols {
                    acc += self.at(i, j).clone() * v[j].clone();
                }
                acc
            })
            .collect()
    }

    /// Solves `A x = b` exactly. `A` must be square and invertible.
    pub fn solve(&self, b: &[Rat]) -> Result<Vec<Rat>, LinalgError> {
        if self.rows != self.cols {
            return Err(LinalgError::Dimension(format!(
                "solve needs square matrix, got {}x{}",
                self.rows, self.cols
            )));
        }
        if b.len() != self.rows {
            return Err(LinalgError::Dimension(format!(
                "rhs length {} vs {} rows",
                b.len(),
                self.rows
            )));
        }
        let n = self.rows;
        let mut a = self.data.clone();
        let mut rhs = b.to_vec();
        for col in 0..n {
            let pivot_row = (col..n)
                .find(|&r| !a[r * n + col].is_zero())
                .ok_or(LinalgError::Singular)?;
            if pivot_row != col {
                for j in 0..n {
                    a.swap(col * n + j, pivot_row * n + j);
                }
                rhs.swap(col, pivot_row);
            }
            let pivot = a[col * n + col].clone();
            for r in (col + 1)..n {
                if a[r * n + col].is_zero() {
                    continue;
                }
                let factor = a[r * n + col].clone() / pivot.clone();
                for j in col..n {
                    let sub = factor.clone() * a[col * n + j].clone();
                    a[r * n + j] -= sub;
                }
                let sub = factor * rhs[col].clone();
                rhs[r] -= sub;
            }
        }
        let mut x = vec![Rat::zero(); n];
        for row in (0..n).rev() {
            let mut acc = rhs[row].clone();
            for j in (row + 1)..n {
                acc -= a[row * n + j].clone() * x[j].clone();
            }
            x[row] = acc / a[row * n + row].clone();
        }
        Ok(x)
    }

    /// Exact inverse via column-by-column solves.
    pub fn inverse(&self) -> Result<RatMat, LinalgError> {
        let n = self.rows;
        let mut out = RatMat::zeros(n, n);
        for j in 0..n {
            let mut e = vec![Rat::zero(); n];
            e[j] = Rat::one();
            let col = self.solve(&e)?;
            for i in 0..n {
                *out.at_mut(i, j) = col[i].clone();
            }
        }
        Ok(out)
    }

    pub fn is_invertible(&self) -> bool {
        if self.rows != self.cols {
            return false;
        }
        let e = vec![Rat::zero(); self.rows];
        // solve with the zero rhs exercises exactly the elimination path
        self.solve(&e).is_ok()
    }
}

/// Determinant of a square polynomial matrix by minor expansion.
///
/// Exponential in n; intended for frame matrices with n ≤ 8.
pub fn poly_det(m: &[Vec<Polynomial>]) -> Result<Polynomial, PolyError> {
    let n = m.len();
    assert!(n > 0 && m.iter().all(|r| r.len() == n), "square matrix");
    let active: Vec<usize> = (0..n).collect();
    det_rec(m, 0, &active)
}

fn det_rec(m: &[Vec<Polynomial>], row: usize, cols: &[usize]) -> Result<Polynomial, PolyError> {
    let zero = m[0][0].zero_like();
    if cols.is_empty() {
        return Ok(zero.add_scalar(&Rat::one()));
    }
    let mut acc = zero;
    for (k, &j) in cols.iter().enumerate() {
        if m[row][j].is_zero() {
            continue;
        }
        let rest: Vec<usize> = cols
            .iter()
            .copied()
            .filter(|&c| c != j)
            .collect();
        let minor = det_rec(m, row + 1, &rest)?;
        let term = m[row][j].mul(&minor)?;
        if k % 2 == 0 {
            acc = acc.add(&term);
        } else {
            acc = acc.sub(&term);
        }
    }
    Ok(acc)
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum PolySolveError {
    #[error("polynomial matrix is singular (zero determinant)")]
    Singular,
    #[error("solution is not polynomial: {0}")]
    NotPolynomial(String),
    #[error(transparent)]
    Poly(#[from] PolyError),
}

/// Solves `A x = b` with polynomial entries by Cramer's rule, requiring the
/// solution itself to be polynomial (each cofactor determinant exactly
/// divisible by `det A`).
pub fn poly_solve(
    a: &[Vec<Polynomial>],
    b: &[Polynomial],
) -> Result<Vec<Polynomial>, PolySolveError> {
    let n = a.len();
    assert_eq!(b.len(), n, "rhs length");
    let det = poly_det(a)?;
    if det.is_zero() {
        return Err(PolySolveError::Singular);
    }
    let mut out = Vec::with_capacity(n);
    for j in 0..n {
        let mut replaced: Vec<Vec<Polynomial>> = a.to_vec();
        for i in 0..n {
            replaced[i][j] = b[i].clone();
        }
        let num = poly_det(&replaced)?;
        let q = num
            .div_exact(&det)
            .map_err(|e| PolySolveError::NotPolynomial(format!("column {}: {e}", j + 1)))?;
        out.push(q);
    }
    Ok(out)
}

/// f64 linear solve with partial pivoting, for the numeric chart module.
pub fn f64_solve(a: &[Vec<f64>], b: &[f64]) -> Result<Vec<f64>, LinalgError> {
    let n = a.len();
    if b.len() != n || a.iter().any(|r| r.len() != n) {
        return Err(LinalgError::Dimension("f64_solve shape".to_string()));
    }
    let mut m: Vec<f64> = a.iter().flatten().copied().collect();
    let mut rhs = b.to_vec();
    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&r, &s| {
                m[r * n + col]
                    .abs()
                    .partial_cmp(&m[s * n + col].abs())
                    .unwrap()
            })
            .unwrap();
        if m[pivot_row * n + col] == 0.0 {
            return Err(LinalgError::Singular);
        }
        if pivot_row != col {
            for j in 0..n {
                m.swap(col * n + j, pivot_row * n + j);
            }
            rhs.swap(col, pivot_row);
        }
        let pivot = m[col * n + col];
        for r in (col + 1)..n {
            let factor = m[r * n + col] / pivot;
            if factor == 0.0 {
                continue;
            }
            for j in col..n {
                m[r * n + j] -= factor * m[col * n + j];
            }
            rhs[r] -= factor * rhs[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = rhs[row];
        for j in (row + 1)..n {
            acc -= m[row * n + j] * x[j];
        }
        x[row] = acc / m[row * n + row];
    }
    Ok(x)
}

/// Destructive in-place f64 solve on a flattened row-major matrix; returns
/// false when singular.  Allocation-free, for integrator hot paths.
pub fn f64_solve_inplace(a: &mut [f64], rhs: &mut [f64], n: usize) -> bool {
    debug_assert_eq!(a.len(), n * n);
    debug_assert_eq!(rhs.len(), n);
    for col in 0..n {
        let mut pivot_row = col;
        let mut best = a[col * n + col].abs();
        for r in (col + 1)..n {
            let mag = a[r * n + col].abs();
            if mag > best {
                best = mag;
                pivot_row = r;
            }
        }
        if best == 0.0 {
            return false;
        }
        if pivot_row != col {
            for j in 0..n {
                a.swap(col * n + j, pivot_row * n + j);
            }
            rhs.swap(col, pivot_row);
        }
        let pivot = a[col * n + col];
        for r in (col + 1)..n {
            let factor = a[r * n + col] / pivot;
            if factor == 0.0 {
                continue;
            }
            for j in col..n {
                a[r * n + j] -= factor * a[col * n + j];
            }
            rhs[r] -= factor * rhs[col];
        }
    }
    for row in (0..n).rev() {
        let mut acc = rhs[row];
        for j in (row + 1)..n {
            acc -= a[row * n + j] * rhs[j];
        }
        rhs[row] = acc / a[row * n + row];
    }
    true
}

/// f64 matrix inverse, column by column.
pub fn f64_inverse(a: &[Vec<f64>]) -> Result<Vec<Vec<f64>>, LinalgError> {
    let n = a.len();
    let mut out = vec![vec![0.0; n]; n];
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        let col = f64_solve(a, &e)?;
        for i in 0..n {
            out[i][j] = col[i];
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{rat, rat_int};

    #[test]
    fn exact_solve_2x2() {
        let mut a = RatMat::zeros(2, 2);
        *a.at_mut(0, 0) = rat_int(1);
        *a.at_mut(0, 1) = rat(1, 2);
        *a.at_mut(1, 0) = rat_int(0);
        *a.at_mut(1, 1) = rat_int(3);
        let x = a.solve(&[rat_int(2), rat_int(6)]).unwrap();
        assert_eq!(x, vec![rat_int(1), rat_int(2)]);
    }

    #[test]
    fn singular_matrix_reported() {
        let mut a = RatMat::zeros(2, 2);
        *a.at_mut(0, 0) = rat_int(1);
        *a.at_mut(0, 1) = rat_int(2);
        *a.at_mut(1, 0) = rat_int(2);
        *a.at_mut(1, 1) = rat_int(4);
        assert_eq!(a.solve(&[rat_int(1), rat_int(1)]), Err(LinalgError::Singular));
        assert!(!a.is_invertible());
    }

    #[test]
    fn inverse_times_matrix_is_identity() {
        let mut a = RatMat::zeros(3, 3);
        let entries = [
            (0, 0, rat_int(2)),
            (0, 1, rat_int(1)),
            (0, 2, rat(1, 3)),
            (1, 1, rat_int(1)),
            (1, 2, rat_int(5)),
            (2, 0, rat_int(-1)),
            (2, 2, rat_int(4)),
        ];
        for (i, j, v) in entries {
            *a.at_mut(i, j) = v;
        }
        let inv = a.inverse().unwrap();
        assert_eq!(inv.mul(&a), RatMat::identity(3));
    }

    #[test]
    fn f64_solve_matches_exact() {
        let a = vec![vec![2.0, 1.0], vec![1.0, 3.0]];
        let x = f64_solve(&a, &[5.0, 10.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-12);
        assert!((x[1] - 3.0).abs() < 1e-12);
    }
}
