//! Compressed-row sparse matrices over `f64`.
//!
//! Values are always real; products against complex vectors go through
//! [`SparseMatrix::apply`], which is generic over [`Scalar`].

use rayon::prelude::*;

use super::dense::DenseMatrix;
use super::scalar::Scalar;
use crate::error::{ensure_dims, Error, Result};

/// Entries with magnitude below this are dropped on finalization.
pub const DROP_TOLERANCE: f64 = 1e-300;

const PAR_ROWS: usize = 4096;

#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

/// Coordinate-format accumulator. Duplicate entries are summed in insertion
/// order when converted, so the result does not depend on anything but the
/// sequence of `push` calls.
#[derive(Debug, Clone)]
pub struct TripletBuilder {
    nrows: usize,
    ncols: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl TripletBuilder {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            entries: Vec::new(),
        }
    }

    pub fn with_capacity(nrows: usize, ncols: usize, cap: usize) -> Self {
        Self {
            nrows,
            ncols,
            entries: Vec::with_capacity(cap),
        }
    }

    pub fn push(&mut self, row: usize, col: usize, value: f64) {
        debug_assert!(row < self.nrows && col < self.ncols);
        self.entries.push((row, col, value));
    }

    pub fn build(mut self) -> SparseMatrix {
        // stable: duplicates keep insertion order for the summation
        self.entries.sort_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0usize; self.nrows + 1];
        let mut col_idx = Vec::with_capacity(self.entries.len());
        let mut values: Vec<f64> = Vec::with_capacity(self.entries.len());
        let mut last: Option<(usize, usize)> = None;
        let mut rows_of = Vec::with_capacity(self.entries.len());
        for (r, c, v) in self.entries {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(c);
                values.push(v);
                rows_of.push(r);
                last = Some((r, c));
            }
        }
        let mut keep_cols = Vec::with_capacity(col_idx.len());
        let mut keep_vals = Vec::with_capacity(values.len());
        for ((r, c), v) in rows_of.into_iter().zip(col_idx).zip(values) {
            if v.abs() >= DROP_TOLERANCE {
                row_ptr[r + 1] += 1;
                keep_cols.push(c);
                keep_vals.push(v);
            }
        }
        for i in 0..self.nrows {
            row_ptr[i + 1] += row_ptr[i];
        }
        SparseMatrix {
            nrows: self.nrows,
            ncols: self.ncols,
            row_ptr,
            col_idx: keep_cols,
            values: keep_vals,
        }
    }
}

impl SparseMatrix {
    /// Builds from raw CSR arrays, validating the layout invariants.
    pub fn from_csr(
        nrows: usize,
        ncols: usize,
        row_ptr: Vec<usize>,
        col_idx: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        ensure_dims!(
            row_ptr.len() == nrows + 1,
            "row_ptr has length {}, expected {}",
            row_ptr.len(),
            nrows + 1
        );
        ensure_dims!(
            col_idx.len() == values.len() && *row_ptr.last().unwrap() == values.len(),
            "column/value arrays do not match row_ptr"
        );
        if row_ptr[0] != 0 {
            return Err(Error::InvalidArgument("row_ptr must start at 0".into()));
        }
        for i in 0..nrows {
            if row_ptr[i] > row_ptr[i + 1] {
                return Err(Error::InvalidArgument("row_ptr must be nondecreasing".into()));
            }
            let cols = &col_idx[row_ptr[i]..row_ptr[i + 1]];
            if cols.iter().any(|&c| c >= ncols) {
                return Err(Error::InvalidArgument(format!("column index out of range in row {i}")));
            }
            if cols.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidArgument(format!(
                    "column indices not strictly increasing in row {i}"
                )));
            }
        }
        let mut b = TripletBuilder::with_capacity(nrows, ncols, values.len());
        for i in 0..nrows {
            for k in row_ptr[i]..row_ptr[i + 1] {
                b.push(i, col_idx[k], values[k]);
            }
        }
        Ok(b.build())
    }

    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        TripletBuilder::new(nrows, ncols).build()
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diagonal(&vec![1.0; n])
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        let mut b = TripletBuilder::with_capacity(d.len(), d.len(), d.len());
        for (i, &v) in d.iter().enumerate() {
            b.push(i, i, v);
        }
        b.build()
    }

    pub fn from_dense(a: &DenseMatrix<f64>) -> Self {
        let mut b = TripletBuilder::new(a.nrows(), a.ncols());
        for i in 0..a.nrows() {
            for j in 0..a.ncols() {
                b.push(i, j, a[(i, j)]);
            }
        }
        b.build()
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[r.clone()], &self.values[r])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(k) => vals[k],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.nrows.min(self.ncols)).map(|i| self.get(i, i)).collect()
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nrows).flat_map(move |i| {
            let (cols, vals) = self.row(i);
            cols.iter().zip(vals).map(move |(&j, &v)| (i, j, v))
        })
    }

    /// `y = A x`, summing each row in ascending column order.
    pub fn spmv(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.apply(x)
    }

    /// Real matrix times a real or complex vector.
    pub fn apply<T: Scalar>(&self, x: &[T]) -> Result<Vec<T>> {
        ensure_dims!(
            x.len() == self.ncols,
            "matrix has {} columns, vector has length {}",
            self.ncols,
            x.len()
        );
        let mut y = vec![T::zero(); self.nrows];
        self.apply_into(x, &mut y);
        Ok(y)
    }

    /// Unchecked variant of [`apply`](Self::apply) writing into `y`.
    pub(crate) fn apply_into<T: Scalar>(&self, x: &[T], y: &mut [T]) {
        let row_kernel = |i: usize, yi: &mut T| {
            let mut acc = T::zero();
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += x[self.col_idx[k]].scale(self.values[k]);
            }
            *yi = acc;
        };
        if self.nrows >= PAR_ROWS {
            y.par_iter_mut().enumerate().for_each(|(i, yi)| row_kernel(i, yi));
        } else {
            y.iter_mut().enumerate().for_each(|(i, yi)| row_kernel(i, yi));
        }
    }

    pub fn transpose(&self) -> SparseMatrix {
        let mut b = TripletBuilder::with_capacity(self.ncols, self.nrows, self.nnz());
        for (i, j, v) in self.triplets() {
            b.push(j, i, v);
        }
        b.build()
    }

    pub fn scaled(&self, alpha: f64) -> SparseMatrix {
        let mut b = TripletBuilder::with_capacity(self.nrows, self.ncols, self.nnz());
        for (i, j, v) in self.triplets() {
            b.push(i, j, alpha * v);
        }
        b.build()
    }

    /// `alpha * self + beta * other`.
    pub fn add(&self, alpha: f64, other: &SparseMatrix, beta: f64) -> Result<SparseMatrix> {
        ensure_dims!(
            self.nrows == other.nrows && self.ncols == other.ncols,
            "cannot add {}x{} and {}x{}",
            self.nrows,
            self.ncols,
            other.nrows,
            other.ncols
        );
        let mut b = TripletBuilder::with_capacity(self.nrows, self.ncols, self.nnz() + other.nnz());
        for (i, j, v) in self.triplets() {
            b.push(i, j, alpha * v);
        }
        for (i, j, v) in other.triplets() {
            b.push(i, j, beta * v);
        }
        Ok(b.build())
    }

    /// Sparse product `self * other`.
    pub fn matmul(&self, other: &SparseMatrix) -> Result<SparseMatrix> {
        ensure_dims!(
            self.ncols == other.nrows,
            "cannot multiply {}x{} by {}x{}",
            self.nrows,
            self.ncols,
            other.nrows,
            other.ncols
        );
        let mut b = TripletBuilder::new(self.nrows, other.ncols);
        let mut acc = vec![0.0; other.ncols];
        let mut touched: Vec<usize> = Vec::new();
        let mut mark = vec![false; other.ncols];
        for i in 0..self.nrows {
            let (cols, vals) = self.row(i);
            for (&k, &a) in cols.iter().zip(vals) {
                let (ocols, ovals) = other.row(k);
                for (&j, &v) in ocols.iter().zip(ovals) {
                    if !mark[j] {
                        mark[j] = true;
                        touched.push(j);
                    }
                    acc[j] += a * v;
                }
            }
            touched.sort_unstable();
            for &j in &touched {
                b.push(i, j, acc[j]);
                acc[j] = 0.0;
                mark[j] = false;
            }
            touched.clear();
        }
        Ok(b.build())
    }

    pub fn to_dense(&self) -> DenseMatrix<f64> {
        let mut d = DenseMatrix::zeros(self.nrows, self.ncols);
        for (i, j, v) in self.triplets() {
            d[(i, j)] = v;
        }
        d
    }

    /// Dense submatrix on the given row and column index lists.
    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> DenseMatrix<f64> {
        let mut d = DenseMatrix::zeros(rows.len(), cols.len());
        for (a, &i) in rows.iter().enumerate() {
            for (b, &j) in cols.iter().enumerate() {
                d[(a, b)] = self.get(i, j);
            }
        }
        d
    }

    /// Largest entry magnitude.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// `max |self - other|` entrywise.
    pub fn max_abs_diff(&self, other: &SparseMatrix) -> Result<f64> {
        Ok(self.add(1.0, other, -1.0)?.max_abs())
    }
}

/// Kronecker product `coeffs ⊗ k`: block `(i, j)` equals `coeffs[i][j] * k`.
/// Zero coefficients contribute no structural entries.
pub fn kron_sparse(coeffs: &DenseMatrix<f64>, k: &SparseMatrix) -> SparseMatrix {
    let (s, t) = (coeffs.nrows(), coeffs.ncols());
    let (n, m) = (k.nrows(), k.ncols());
    let mut b = TripletBuilder::new(s * n, t * m);
    for bi in 0..s {
        for r in 0..n {
            let (cols, vals) = k.row(r);
            for bj in 0..t {
                let a = coeffs[(bi, bj)];
                if a == 0.0 {
                    continue;
                }
                for (&c, &v) in cols.iter().zip(vals) {
                    b.push(bi * n + r, bj * m + c, a * v);
                }
            }
        }
    }
    b.build()
}
