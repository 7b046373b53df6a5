//! Dense matrices, rank and null spaces, and subspaces.

pub(crate) mod exact;
mod subspace;

use std::fmt;
use std::ops::{Index, IndexMut};

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub use subspace::{sum_dim, Subspace};

/// Row-major dense matrix.
#[derive(Clone, PartialEq)]
pub struct Mat<S> {
    rows: usize,
    cols: usize,
    data: Vec<S>,
}

impl<S: fmt::Debug> fmt::Debug for Mat<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Mat {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", &self.data[i * self.cols..(i + 1) * self.cols])?;
        }
        write!(f, "]")
    }
}

impl<S> Index<(usize, usize)> for Mat<S> {
    type Output = S;
    fn index(&self, (i, j): (usize, usize)) -> &S {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl<S> IndexMut<(usize, usize)> for Mat<S> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut S {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl<S> Mat<S> {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn as_slice(&self) -> &[S] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[S] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn is_empty(&self) -> bool {
        self.rows == 0 || self.cols == 0
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> S) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Mat { rows, cols, data }
    }

    pub fn map<T>(&self, f: impl FnMut(&S) -> T) -> Mat<T> {
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(f).collect(),
        }
    }
}

impl<S: Clone> Mat<S> {
    pub fn new(rows: usize, cols: usize, data: Vec<S>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Mat { rows, cols, data })
    }

    /// Builds from rows; all rows must have the same length. `cols` fixes the
    /// width when there are no rows.
    pub fn from_rows(rows: Vec<Vec<S>>, cols: usize) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(cols, Vec::len);
        if let Some((i, bad)) = rows.iter().enumerate().find(|(_, row)| row.len() != c) {
            return Err(Error::Dimension(format!(
                "row {} has {} entries, expected {c}",
                i + 1,
                bad.len()
            )));
        }
        Ok(Mat {
            rows: r,
            cols: c,
            data: rows.into_iter().flatten().collect(),
        })
    }

    pub fn col(&self, j: usize) -> Vec<S> {
        (0..self.rows).map(|i| self[(i, j)].clone()).collect()
    }

    pub fn column_vector(v: Vec<S>) -> Self {
        Mat {
            rows: v.len(),
            cols: 1,
            data: v,
        }
    }

    pub fn row_vector(v: Vec<S>) -> Self {
        Mat {
            rows: 1,
            cols: v.len(),
            data: v,
        }
    }

    pub fn transpose(&self) -> Self {
        Mat::from_fn(self.cols, self.rows, |i, j| self[(j, i)].clone())
    }

    pub fn select_cols(&self, idx: &[usize]) -> Self {
        Mat::from_fn(self.rows, idx.len(), |i, j| self[(i, idx[j])].clone())
    }

    pub fn select_rows(&self, idx: &[usize]) -> Self {
        Mat::from_fn(idx.len(), self.cols, |i, j| self[(idx[i], j)].clone())
    }

    /// Rows `r0..r1`, columns `c0..c1`.
    pub fn block(&self, r0: usize, r1: usize, c0: usize, c1: usize) -> Self {
        Mat::from_fn(r1 - r0, c1 - c0, |i, j| self[(r0 + i, c0 + j)].clone())
    }

    /// Horizontal concatenation. All parts must have `rows` rows.
    pub fn hcat(rows: usize, parts: &[&Mat<S>]) -> Result<Self> {
        if let Some(p) = parts.iter().find(|p| p.rows != rows) {
            return Err(Error::Dimension(format!(
                "hcat: block with {} rows, expected {rows}",
                p.rows
            )));
        }
        let cols = parts.iter().map(|p| p.cols).sum();
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for p in parts {
                data.extend_from_slice(p.row(i));
            }
        }
        Ok(Mat { rows, cols, data })
    }

    /// Vertical concatenation. All parts must have `cols` columns.
    pub fn vcat(cols: usize, parts: &[&Mat<S>]) -> Result<Self> {
        if let Some(p) = parts.iter().find(|p| p.cols != cols) {
            return Err(Error::Dimension(format!(
                "vcat: block with {} columns, expected {cols}",
                p.cols
            )));
        }
        let rows = parts.iter().map(|p| p.rows).sum();
        let data = parts.iter().flat_map(|p| p.data.iter().cloned()).collect();
        Ok(Mat { rows, cols, data })
    }
}

impl<S: Scalar> Mat<S> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat::from_fn(rows, cols, |_, _| S::zero())
    }

    pub fn identity(n: usize) -> Self {
        Mat::from_fn(n, n, |i, j| if i == j { S::one() } else { S::zero() })
    }

    /// Parses integer/rational literals row by row (test and fixture helper).
    pub fn parse(rows: &[&[&str]]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.len());
        let parsed = rows
            .iter()
            .enumerate()
            .map(|(i, r)| {
                r.iter()
                    .enumerate()
                    .map(|(j, s)| {
                        S::parse_entry(s).ok_or_else(|| Error::Parse {
                            what: "matrix".into(),
                            row: i + 1,
                            col: j + 1,
                            detail: format!("invalid entry {s:?}"),
                        })
                    })
                    .collect::<Result<Vec<S>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Mat::from_rows(parsed, cols)
    }

    pub fn from_i64_rows(rows: &[&[i64]]) -> Self {
        let cols = rows.first().map_or(0, |r| r.len());
        let data: Vec<Vec<S>> = rows
            .iter()
            .map(|r| r.iter().map(|&v| S::from_i64(v)).collect())
            .collect();
        Mat::from_rows(data, cols).expect("ragged integer rows")
    }

    pub fn mul(&self, rhs: &Mat<S>) -> Mat<S> {
        assert_eq!(self.cols, rhs.rows, "matrix product shape mismatch");
        let mut out: Mat<S> = Mat::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..rhs.cols {
                    let prod = a.clone() * rhs[(k, j)].clone();
                    out[(i, j)] = out[(i, j)].clone() + prod;
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[S]) -> Vec<S> {
        assert_eq!(self.cols, v.len(), "matrix-vector shape mismatch");
        (0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(v)
                    .fold(S::zero(), |acc, (a, b)| acc + a.clone() * b.clone())
            })
            .collect()
    }

    pub fn add(&self, rhs: &Mat<S>) -> Mat<S> {
        assert_eq!(self.shape(), rhs.shape(), "matrix sum shape mismatch");
        Mat::from_fn(self.rows, self.cols, |i, j| {
            self[(i, j)].clone() + rhs[(i, j)].clone()
        })
    }

    pub fn sub(&self, rhs: &Mat<S>) -> Mat<S> {
        assert_eq!(self.shape(), rhs.shape(), "matrix difference shape mismatch");
        Mat::from_fn(self.rows, self.cols, |i, j| {
            self[(i, j)].clone() - rhs[(i, j)].clone()
        })
    }

    pub fn scale(&self, s: &S) -> Mat<S> {
        self.map(|v| v.clone() * s.clone())
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Zero::is_zero)
    }

    /// Largest absolute entry, as a float.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |acc, v| acc.max(v.to_f64().abs()))
    }

    pub fn to_f64(&self) -> Mat<f64> {
        self.map(|v| v.to_f64())
    }

    pub fn rank(&self, tol: f64) -> usize {
        S::rank_of(self, tol)
    }

    pub fn rank_default(&self) -> usize {
        S::rank_of(self, S::DEFAULT_TOL)
    }

    pub fn nullspace(&self, tol: f64) -> Mat<S> {
        S::nullspace_of(self, tol)
    }

    pub fn nullspace_default(&self) -> Mat<S> {
        S::nullspace_of(self, S::DEFAULT_TOL)
    }

    /// Absolute pivot threshold for elimination on this matrix.
    fn pivot_tol(&self) -> f64 {
        if S::EXACT {
            0.0
        } else {
            1e-13 * self.max_abs().max(f64::MIN_POSITIVE) * self.rows.max(self.cols) as f64
        }
    }

    /// LU with partial pivoting; returns `(lu, perm, sign)` or `None` when
    /// singular.
    fn lu(&self) -> Option<(Mat<S>, Vec<usize>, bool)> {
        assert_eq!(self.rows, self.cols, "LU of a non-square matrix");
        let n = self.rows;
        let tol = self.pivot_tol();
        let mut a = self.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut odd = false;
        for k in 0..n {
            let p = (k..n).max_by(|&x, &y| {
                a[(x, k)]
                    .abs()
                    .partial_cmp(&a[(y, k)].abs())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })?;
            if a[(p, k)].is_negligible(tol) {
                return None;
            }
            if p != k {
                for j in 0..n {
                    a.data.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
                odd = !odd;
            }
            let pivot = a[(k, k)].clone();
            for i in k + 1..n {
                if a[(i, k)].is_zero() {
                    continue;
                }
                let factor = a[(i, k)].clone() / pivot.clone();
                for j in k + 1..n {
                    let delta = factor.clone() * a[(k, j)].clone();
                    a[(i, j)] = a[(i, j)].clone() - delta;
                }
                a[(i, k)] = factor;
            }
        }
        Some((a, perm, odd))
    }

    pub fn det(&self) -> S {
        assert_eq!(self.rows, self.cols, "determinant of a non-square matrix");
        match self.lu() {
            None => S::zero(),
            Some((lu, _, odd)) => {
                let d = (0..self.rows).fold(S::one(), |acc, i| acc * lu[(i, i)].clone());
                if odd {
                    -d
                } else {
                    d
                }
            }
        }
    }

    /// Solves `self * X = rhs` for square nonsingular `self`.
    pub fn solve(&self, rhs: &Mat<S>) -> Option<Mat<S>> {
        assert_eq!(self.rows, rhs.rows, "solve shape mismatch");
        let n = self.rows;
        let (lu, perm, _) = self.lu()?;
        let mut x = rhs.select_rows(&perm);
        for c in 0..rhs.cols {
            for i in 0..n {
                let mut acc = x[(i, c)].clone();
                for k in 0..i {
                    acc = acc - lu[(i, k)].clone() * x[(k, c)].clone();
                }
                x[(i, c)] = acc;
            }
            for i in (0..n).rev() {
                let mut acc = x[(i, c)].clone();
                for k in i + 1..n {
                    acc = acc - lu[(i, k)].clone() * x[(k, c)].clone();
                }
                x[(i, c)] = acc / lu[(i, i)].clone();
            }
        }
        Some(x)
    }

    pub fn inverse(&self) -> Option<Mat<S>> {
        self.solve(&Mat::identity(self.rows))
    }

    /// Reduced row echelon form and pivot columns.
    pub fn rref(&self, tol: f64) -> (Mat<S>, Vec<usize>) {
        let abs_tol = if S::EXACT {
            0.0
        } else {
            tol.max(1e-13) * self.max_abs() * self.rows.max(self.cols) as f64
        };
        let mut a = self.clone();
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..a.cols {
            if r == a.rows {
                break;
            }
            let Some(p) = (r..a.rows)
                .filter(|&i| !a[(i, c)].is_negligible(abs_tol))
                .max_by(|&x, &y| {
                    a[(x, c)]
                        .abs()
                        .partial_cmp(&a[(y, c)].abs())
                        .unwrap_or(std::cmp::Ordering::Equal)
                })
            else {
                continue;
            };
            for j in 0..a.cols {
                a.data.swap(r * a.cols + j, p * a.cols + j);
            }
            let pivot = a[(r, c)].clone();
            for j in 0..a.cols {
                a[(r, j)] = a[(r, j)].clone() / pivot.clone();
            }
            for i in 0..a.rows {
                if i == r || a[(i, c)].is_zero() {
                    continue;
                }
                let factor = a[(i, c)].clone();
                for j in 0..a.cols {
                    let delta = factor.clone() * a[(r, j)].clone();
                    a[(i, j)] = a[(i, j)].clone() - delta;
                }
            }
            pivots.push(c);
            r += 1;
        }
        (a, pivots)
    }

    /// Some solution of `self * x = b`, or `None` when inconsistent.
    pub fn solve_consistent(&self, b: &[S], tol: f64) -> Option<Vec<S>> {
        let aug = Mat::hcat(self.rows, &[self, &Mat::column_vector(b.to_vec())]).ok()?;
        let (r, pivots) = aug.rref(tol);
        if pivots.last() == Some(&self.cols) {
            return None;
        }
        let mut x = vec![S::zero(); self.cols];
        for (row, &c) in pivots.iter().enumerate() {
            x[c] = r[(row, self.cols)].clone();
        }
        Some(x)
    }

    /// Minimum Euclidean-norm solution of `self * x = b` (exact in rational
    /// mode), or `None` when inconsistent.
    pub fn min_norm_solve(&self, b: &[S], tol: f64) -> Option<Vec<S>> {
        let x = self.solve_consistent(b, tol)?;
        let null = self.nullspace(tol);
        if null.cols() == 0 {
            return Some(x);
        }
        // Remove the component of x in the null space: x - N (NᵀN)⁻¹ Nᵀ x.
        let nt = null.transpose();
        let gram = nt.mul(&null);
        let coeff = gram.solve(&Mat::column_vector(nt.mul_vec(&x)))?;
        let proj = null.mul(&coeff);
        Some(x.iter().zip(proj.col(0)).map(|(a, p)| a.clone() - p).collect())
    }

    /// Indices of a maximal set of linearly independent columns, chosen
    /// greedily from the left.
    pub fn independent_columns(&self, tol: f64) -> Vec<usize> {
        if S::EXACT {
            return self.rref(tol).1;
        }
        let mut chosen: Vec<usize> = Vec::new();
        for j in 0..self.cols {
            let mut trial = chosen.clone();
            trial.push(j);
            if self.select_cols(&trial).rank(tol) == trial.len() {
                chosen = trial;
            }
        }
        chosen
    }
}

/// Largest absolute entry of a vector, as a float.
pub fn vec_max_abs<S: Scalar>(v: &[S]) -> f64 {
    v.iter().fold(0.0, |acc, x| acc.max(x.to_f64().abs()))
}
