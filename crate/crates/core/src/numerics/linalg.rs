use std::fmt;
use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Dense row-major matrix.
#[derive(Clone, PartialEq)]
pub struct Matrix<S> {
    rows: usize,
    cols: usize,
    data: Vec<S>,
}

impl<S: Scalar> Matrix<S> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![S::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = S::one();
        }
        m
    }

    /// Panics if rows have unequal lengths.
    pub fn from_rows(rows: &[Vec<S>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            assert_eq!(r.len(), cols, "ragged matrix rows");
            data.extend_from_slice(r);
        }
        Self {
            rows: rows.len(),
            cols,
            data,
        }
    }

    /// Matrix with `cols` columns and no rows.
    pub fn empty(cols: usize) -> Self {
        Self::zeros(0, cols)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[S] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [S] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// Appends a row; panics on length mismatch.
    pub fn push_row(&mut self, row: &[S]) {
        assert_eq!(row.len(), self.cols);
        self.data.extend_from_slice(row);
        self.rows += 1;
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "matmul shape mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == S::zero() {
                    continue;
                }
                let src = other.row(k);
                for (o, &b) in out.row_mut(i).iter_mut().zip(src) {
                    *o = *o + a * b;
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[S]) -> Vec<S> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).fold(S::zero(), |acc, (a, b)| acc + *a * *b))
            .collect()
    }

    /// Infinity norm: largest absolute row sum.
    pub fn norm_inf(&self) -> S {
        (0..self.rows)
            .map(|i| self.row(i).iter().fold(S::zero(), |acc, x| acc + x.abs()))
            .fold(S::zero(), S::max)
    }

    /// `max |self - other|` entrywise.
    pub fn max_abs_diff(&self, other: &Self) -> S {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .fold(S::zero(), |acc, (a, b)| acc.max((*a - *b).abs()))
    }
}

impl<S> Index<(usize, usize)> for Matrix<S> {
    type Output = S;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &S {
        &self.data[i * self.cols + j]
    }
}

impl<S> IndexMut<(usize, usize)> for Matrix<S> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut S {
        &mut self.data[i * self.cols + j]
    }
}

impl<S: fmt::Debug> fmt::Debug for Matrix<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{}", self.rows, self.cols)?;
        for i in 0..self.rows {
            let row: Vec<String> = self.data[i * self.cols..(i + 1) * self.cols]
                .iter()
                .map(|x| format!("{x:>10.4?}"))
                .collect();
            writeln!(f, "  [{}]", row.join(" "))?;
        }
        Ok(())
    }
}

/// Rank by Gaussian elimination with partial pivoting, using the default
/// threshold `1e-8 * |M|_inf * max(p, q)` on pivot magnitudes.
pub fn matrix_rank<S: Scalar>(m: &Matrix<S>) -> usize {
    let scale = S::lit(1e-8 * S::tolerance_scale()) * m.norm_inf()
        * S::lit(m.rows().max(m.cols()) as f64);
    matrix_rank_with_tol(m, scale)
}

/// Number of pivots whose magnitude exceeds `tol` under column-by-column
/// Gaussian elimination with partial (row) pivoting.
pub fn matrix_rank_with_tol<S: Scalar>(m: &Matrix<S>, tol: S) -> usize {
    let (p, q) = (m.rows(), m.cols());
    if p == 0 || q == 0 {
        return 0;
    }
    let mut a = m.clone();
    let mut rank = 0;
    for c in 0..q {
        if rank == p {
            break;
        }
        let (piv, best) = (rank..p)
            .map(|i| (i, a[(i, c)].abs()))
            .fold((rank, S::zero()), |acc, x| if x.1 > acc.1 { x } else { acc });
        if best <= tol {
            continue;
        }
        swap_rows(&mut a, rank, piv);
        let pivot = a[(rank, c)];
        for i in rank + 1..p {
            let f = a[(i, c)] / pivot;
            if f == S::zero() {
                continue;
            }
            for j in c..q {
                let v = a[(rank, j)];
                a[(i, j)] = a[(i, j)] - f * v;
            }
        }
        rank += 1;
    }
    rank
}

fn swap_rows<S: Scalar>(a: &mut Matrix<S>, i: usize, j: usize) {
    if i == j {
        return;
    }
    let cols = a.cols();
    for k in 0..cols {
        a.data.swap(i * cols + k, j * cols + k);
    }
}

/// Inverse by Gauss-Jordan elimination with partial pivoting; `None` when a
/// pivot falls below `tol`.
pub fn invert<S: Scalar>(m: &Matrix<S>, tol: S) -> Option<Matrix<S>> {
    let n = m.rows();
    assert_eq!(n, m.cols(), "invert needs a square matrix");
    let mut a = m.clone();
    let mut inv = Matrix::identity(n);
    for c in 0..n {
        let (piv, best) = (c..n)
            .map(|i| (i, a[(i, c)].abs()))
            .fold((c, S::zero()), |acc, x| if x.1 > acc.1 { x } else { acc });
        if best <= tol {
            return None;
        }
        swap_rows(&mut a, c, piv);
        swap_rows(&mut inv, c, piv);
        let p = a[(c, c)];
        for j in 0..n {
            a[(c, j)] = a[(c, j)] / p;
            inv[(c, j)] = inv[(c, j)] / p;
        }
        for i in 0..n {
            if i == c {
                continue;
            }
            let f = a[(i, c)];
            if f == S::zero() {
                continue;
            }
            for j in 0..n {
                let (ac, ic) = (a[(c, j)], inv[(c, j)]);
                a[(i, j)] = a[(i, j)] - f * ac;
                inv[(i, j)] = inv[(i, j)] - f * ic;
            }
        }
    }
    Some(inv)
}

/// Right inverse `M^T (M M^T)^{-1}` of a full-row-rank matrix, with the Gram
/// matrix inverted by Gauss-Jordan elimination with partial pivoting.
pub fn right_inverse<S: Scalar>(m: &Matrix<S>) -> Result<Matrix<S>> {
    let p = m.rows();
    let rank = matrix_rank(m);
    if rank < p {
        return Err(Error::RankDeficient { rank, rows: p });
    }
    let mt = m.transpose();
    let gram = m.matmul(&mt);
    let tol = S::epsilon() * gram.norm_inf() * S::lit(p.max(1) as f64);
    let ginv = invert(&gram, tol).ok_or(Error::RankDeficient { rank: p - 1, rows: p })?;
    Ok(mt.matmul(&ginv))
}
