//! Minimal complex linear algebra: a row-major dense matrix, a CSR sparse
//! matrix and the handful of vector kernels the propagators need.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut};

use crate::math::abs_c;
use crate::{Error, Result, C64};

/// Row-major dense complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![C64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn matmul(&self, rhs: &Self) -> Result<Self> {
        if self.cols != rhs.rows {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                found: rhs.rows,
            });
        }
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..rhs.cols {
                    out.data[i * rhs.cols + j] += a * rhs[(k, j)];
                }
            }
        }
        Ok(out)
    }

    /// Largest entry modulus of `self − other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| abs_c(*a - *b))
            .fold(0.0, f64::max)
    }

    /// Max-norm of `A − A†`; zero for a Hermitian matrix.
    pub fn hermiticity_error(&self) -> f64 {
        let mut err = 0.0f64;
        for i in 0..self.rows {
            for j in i..self.cols {
                err = err.max(abs_c(self[(i, j)] - self[(j, i)].conj()));
            }
        }
        err
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = C64;

    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Compressed-sparse-row complex square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    dim: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<C64>,
}

impl SparseMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            indptr: vec![0; dim + 1],
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let mut b = SparseBuilder::new(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            b.push(i, i, C64::new(d, 0.0));
        }
        b.build()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Iterates over stored `(row, col, value)` entries in row order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.dim).flat_map(move |r| {
            (self.indptr[r]..self.indptr[r + 1]).map(move |p| (r, self.indices[p], self.values[p]))
        })
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        let range = self.indptr[row]..self.indptr[row + 1];
        match self.indices[range.clone()].binary_search(&col) {
            Ok(p) => self.values[range.start + p],
            Err(_) => C64::new(0.0, 0.0),
        }
    }

    /// `out = A·x`
    pub fn matvec(&self, x: &[C64], out: &mut [C64]) {
        for v in out.iter_mut() {
            *v = C64::new(0.0, 0.0);
        }
        self.matvec_add(C64::new(1.0, 0.0), x, out);
    }

    /// `out += alpha·A·x`
    pub fn matvec_add(&self, alpha: C64, x: &[C64], out: &mut [C64]) {
        debug_assert_eq!(x.len(), self.dim);
        debug_assert_eq!(out.len(), self.dim);
        for (r, o) in out.iter_mut().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for p in self.indptr[r]..self.indptr[r + 1] {
                acc += self.values[p] * x[self.indices[p]];
            }
            *o += alpha * acc;
        }
    }

    pub fn adjoint(&self) -> Self {
        let mut b = SparseBuilder::new(self.dim);
        for (r, c, v) in self.iter() {
            b.push(c, r, v.conj());
        }
        b.build()
    }

    pub fn scale(&self, s: C64) -> Self {
        let mut m = self.clone();
        for v in &mut m.values {
            *v *= s;
        }
        m
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        let mut b = SparseBuilder::new(self.dim);
        b.extend(self.iter());
        b.extend(other.iter());
        Ok(b.build())
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        let mut b = SparseBuilder::new(self.dim);
        for (r, k, a) in self.iter() {
            for p in other.indptr[k]..other.indptr[k + 1] {
                b.push(r, other.indices[p], a * other.values[p]);
            }
        }
        Ok(b.build())
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut d = DenseMatrix::zeros(self.dim, self.dim);
        for (r, c, v) in self.iter() {
            d[(r, c)] += v;
        }
        d
    }

    /// Max-norm of `A − A†`.
    pub fn hermiticity_error(&self) -> f64 {
        let mut err = 0.0f64;
        for (r, c, v) in self.iter() {
            err = err.max(abs_c(v - self.get(c, r).conj()));
        }
        err
    }

    /// Max-norm of `self − other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let diff = other.scale(C64::new(-1.0, 0.0));
        match self.add(&diff) {
            Ok(d) => d.values.iter().map(|v| abs_c(*v)).fold(0.0, f64::max),
            Err(_) => f64::INFINITY,
        }
    }
}

/// Coordinate-format accumulator; duplicate entries are summed and exact
/// zeros are dropped on [`SparseBuilder::build`].
#[derive(Debug, Clone)]
pub struct SparseBuilder {
    dim: usize,
    triplets: Vec<(usize, usize, C64)>,
}

impl SparseBuilder {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            triplets: Vec::new(),
        }
    }

    pub fn push(&mut self, row: usize, col: usize, value: C64) {
        debug_assert!(row < self.dim && col < self.dim);
        if value != C64::new(0.0, 0.0) {
            self.triplets.push((row, col, value));
        }
    }

    pub fn extend(&mut self, it: impl IntoIterator<Item = (usize, usize, C64)>) {
        for (r, c, v) in it {
            self.push(r, c, v);
        }
    }

    pub fn is_empty(&self) -> bool {
        self.triplets.is_empty()
    }

    pub fn build(mut self) -> SparseMatrix {
        self.triplets.sort_by_key(|a| (a.0, a.1));
        let mut indptr = vec![0usize; self.dim + 1];
        let mut indices = Vec::with_capacity(self.triplets.len());
        let mut values: Vec<C64> = Vec::with_capacity(self.triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in self.triplets {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                indices.push(c);
                values.push(v);
                indptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..self.dim {
            indptr[r + 1] += indptr[r];
        }
        let mut m = SparseMatrix {
            dim: self.dim,
            indptr,
            indices,
            values,
        };
        m.prune();
        m
    }
}

impl SparseMatrix {
    fn prune(&mut self) {
        if self.values.iter().all(|v| *v != C64::new(0.0, 0.0)) {
            return;
        }
        let mut indptr = vec![0usize; self.dim + 1];
        let mut indices = Vec::with_capacity(self.indices.len());
        let mut values = Vec::with_capacity(self.values.len());
        for r in 0..self.dim {
            for p in self.indptr[r]..self.indptr[r + 1] {
                if self.values[p] != C64::new(0.0, 0.0) {
                    indices.push(self.indices[p]);
                    values.push(self.values[p]);
                }
            }
            indptr[r + 1] = indices.len();
        }
        self.indptr = indptr;
        self.indices = indices;
        self.values = values;
    }
}

/// `⟨a|b⟩`, conjugating the first argument.
pub fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm_sqr(a: &[C64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum()
}

pub fn norm(a: &[C64]) -> f64 {
    crate::math::sqrt(norm_sqr(a))
}
