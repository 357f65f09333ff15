//! Small dense vector and matrix helpers.
//!
//! Everything in this crate lives in dimension ≤ a few dozen, so plain
//! `Vec<f64>` storage with row-major matrices is all that is needed.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point, direction or dual vector. Entries are expected to be finite.
pub type Vector = Vec<f64>;

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub fn sub(a: &[f64], b: &[f64]) -> Vector {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn add(a: &[f64], b: &[f64]) -> Vector {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn scale(a: &[f64], s: f64) -> Vector {
    a.iter().map(|x| x * s).collect()
}

/// `a + s * b`
pub fn axpy(a: &[f64], s: f64, b: &[f64]) -> Vector {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x + s * y).collect()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

pub fn unit(dim: usize, i: usize) -> Vector {
    let mut e = vec![0.0; dim];
    e[i] = 1.0;
    e
}

pub fn all_finite(a: &[f64]) -> bool {
    a.iter().all(|x| x.is_finite())
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

/// Dense row-major matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
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

    pub fn diag(entries: &[f64]) -> Self {
        let mut m = Matrix::zeros(entries.len(), entries.len());
        for (i, v) in entries.iter().enumerate() {
            m[(i, i)] = *v;
        }
        m
    }

    /// Builds a matrix from equally long rows. An empty row list gives a
    /// `0 x cols` matrix, so the column count has to be passed explicitly.
    pub fn from_rows(rows: &[Vec<f64>], cols: usize) -> Result<Self> {
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            check_dim(cols, r.len())?;
            data.extend_from_slice(r);
        }
        Ok(Matrix {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_vecs(&self) -> Vec<Vector> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn is_finite(&self) -> bool {
        all_finite(&self.data)
    }

    pub fn matvec(&self, x: &[f64]) -> Vector {
        debug_assert_eq!(x.len(), self.cols);
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }

    /// `self^T y`
    pub fn tr_matvec(&self, y: &[f64]) -> Vector {
        debug_assert_eq!(y.len(), self.rows);
        let mut out = vec![0.0; self.cols];
        for (i, yi) in y.iter().enumerate() {
            for (o, a) in out.iter_mut().zip(self.row(i)) {
                *o += a * yi;
            }
        }
        out
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        debug_assert_eq!(self.cols, other.rows);
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

    pub fn transpose(&self) -> Matrix {
        let mut out = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)];
            }
        }
        out
    }

    /// Frobenius norm, an upper bound of the operator 2-norm.
    pub fn frobenius(&self) -> f64 {
        norm(&self.data)
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

/// Solves the square system `a x = b` by Gaussian elimination with partial
/// pivoting. Returns `None` when a pivot falls below `1e-12` relative to the
/// largest entry.
pub fn solve(a: &Matrix, b: &[f64]) -> Option<Vector> {
    let n = a.rows();
    debug_assert_eq!(n, a.cols());
    debug_assert_eq!(n, b.len());
    let scale = a.data.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    let mut m = a.clone();
    let mut rhs = b.to_vec();
    for col in 0..n {
        let (piv, pmax) = (col..n)
            .map(|r| (r, m[(r, col)].abs()))
            .fold((col, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if pmax <= 1e-12 * scale {
            return None;
        }
        if piv != col {
            for j in 0..n {
                m.data.swap(piv * n + j, col * n + j);
            }
            rhs.swap(piv, col);
        }
        for r in col + 1..n {
            let factor = m[(r, col)] / m[(col, col)];
            if factor == 0.0 {
                continue;
            }
            for j in col..n {
                let v = m[(col, j)];
                m[(r, j)] -= factor * v;
            }
            rhs[r] -= factor * rhs[col];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = rhs[i];
        for j in i + 1..n {
            s -= m[(i, j)] * x[j];
        }
        x[i] = s / m[(i, i)];
    }
    Some(x)
}

/// Greedily selects a linearly independent subset of `rows` (modified
/// Gram-Schmidt with relative threshold `tol`). Returns the kept indices.
pub fn independent_rows(rows: &[&[f64]], tol: f64) -> Vec<usize> {
    let mut basis: Vec<Vector> = Vec::new();
    let mut kept = Vec::new();
    for (idx, r) in rows.iter().enumerate() {
        let rn = norm(r);
        if rn <= tol {
            continue;
        }
        let mut v = r.to_vec();
        for q in &basis {
            let c = dot(&v, q);
            v = axpy(&v, -c, q);
        }
        let vn = norm(&v);
        if vn > tol * rn {
            basis.push(scale(&v, 1.0 / vn));
            kept.push(idx);
        }
    }
    kept
}

/// Least-squares coefficients of `b` on the given columns, by modified
/// Gram-Schmidt with one reorthogonalization pass. Columns that are
/// numerically dependent on earlier ones get coefficient zero.
pub fn lstsq(cols: &[&[f64]], b: &[f64]) -> Vector {
    let k = cols.len();
    let mut q: Vec<Vector> = Vec::with_capacity(k);
    let mut r = Matrix::zeros(k, k);
    let mut live = vec![false; k];
    for (j, c) in cols.iter().enumerate() {
        let cn = norm(c);
        let mut v = c.to_vec();
        for _ in 0..2 {
            for (i, qi) in q.iter().enumerate() {
                if !live[i] {
                    continue;
                }
                let h = dot(qi, &v);
                r[(i, j)] += h;
                v = axpy(&v, -h, qi);
            }
        }
        let vn = norm(&v);
        live[j] = cn > 0.0 && vn > 1e-12 * cn;
        r[(j, j)] = if live[j] { vn } else { 0.0 };
        q.push(if live[j] { scale(&v, 1.0 / vn) } else { vec![0.0; b.len()] });
    }
    let qb: Vector = q.iter().map(|qi| dot(qi, b)).collect();
    let mut x = vec![0.0; k];
    for i in (0..k).rev() {
        if !live[i] {
            continue;
        }
        let mut s = qb[i];
        for j in i + 1..k {
            s -= r[(i, j)] * x[j];
        }
        x[i] = s / r[(i, i)];
    }
    x
}

/// Nonnegative least squares `min ‖Σ xⱼ colⱼ − b‖, x ≥ 0` (Lawson–Hanson).
pub fn nnls(cols: &[Vector], b: &[f64]) -> Vector {
    let k = cols.len();
    let scale_b = 1.0 + norm(b);
    let tol = 1e-13 * scale_b * cols.iter().map(|c| norm(c)).fold(1.0, f64::max);
    let residual = |x: &[f64]| {
        let mut r = b.to_vec();
        for (c, xj) in cols.iter().zip(x) {
            if *xj != 0.0 {
                r = axpy(&r, -xj, c);
            }
        }
        r
    };
    let mut x = vec![0.0; k];
    let mut passive = vec![false; k];
    for _ in 0..3 * k + 10 {
        let r = residual(&x);
        let w: Vector = cols.iter().map(|c| dot(c, &r)).collect();
        let Some(t) = (0..k)
            .filter(|&j| !passive[j] && w[j] > tol)
            .max_by(|&a, &b| w[a].total_cmp(&w[b]))
        else {
            break;
        };
        passive[t] = true;
        for _ in 0..3 * k + 10 {
            let idx: Vec<usize> = (0..k).filter(|&j| passive[j]).collect();
            let sub: Vec<&[f64]> = idx.iter().map(|&j| cols[j].as_slice()).collect();
            let zp = lstsq(&sub, b);
            let mut z = vec![0.0; k];
            for (a, &j) in idx.iter().enumerate() {
                z[j] = zp[a];
            }
            if idx.iter().all(|&j| z[j] > 0.0) {
                x = z;
                break;
            }
            let alpha = idx
                .iter()
                .filter(|&&j| z[j] <= 0.0)
                .map(|&j| x[j] / (x[j] - z[j]))
                .fold(f64::INFINITY, f64::min);
            for j in 0..k {
                x[j] += alpha * (z[j] - x[j]);
                if passive[j] && x[j] <= 1e-15 * scale_b {
                    passive[j] = false;
                    x[j] = 0.0;
                }
            }
        }
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nnls_clips_negative_coefficients() {
        let cols = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let x = nnls(&cols, &[2.0, -3.0]);
        assert_eq!(x, vec![2.0, 0.0]);
        let cols = vec![vec![1.0, 1.0], vec![1.0, -1.0], vec![2.0, 2.0]];
        let x = nnls(&cols, &[3.0, 1.0]);
        let fit = axpy(&axpy(&scale(&cols[0], x[0]), x[1], &cols[1]), x[2], &cols[2]);
        assert!(dist(&fit, &[3.0, 1.0]) < 1e-12, "{x:?}");
    }

    #[test]
    fn solve_small_system() {
        let a = Matrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 3.0]], 2).unwrap();
        let x = solve(&a, &[3.0, 5.0]).unwrap();
        assert!((x[0] - 0.8).abs() < 1e-12);
        assert!((x[1] - 1.4).abs() < 1e-12);
    }

    #[test]
    fn singular_system_is_rejected() {
        let a = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]], 2).unwrap();
        assert!(solve(&a, &[1.0, 2.0]).is_none());
    }

    #[test]
    fn dependent_rows_are_dropped() {
        let r0 = [1.0, 0.0, 0.0];
        let r1 = [2.0, 0.0, 0.0];
        let r2 = [1.0, 1.0, 0.0];
        assert_eq!(independent_rows(&[&r0, &r1, &r2], 1e-10), vec![0, 2]);
    }

    #[test]
    fn transpose_product_matches_explicit_transpose() {
        let a = Matrix::from_rows(&[vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]], 3).unwrap();
        let y = [1.0, -1.0];
        assert_eq!(a.tr_matvec(&y), a.transpose().matvec(&y));
    }

    #[test]
    fn ragged_rows_fail() {
        assert!(Matrix::from_rows(&[vec![1.0], vec![1.0, 2.0]], 1).is_err());
    }
}
