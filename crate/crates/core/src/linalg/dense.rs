//! Row-major dense matrices and partial-pivoted LU.

use std::ops::{Index, IndexMut};

use num_complex::Complex64;

use super::scalar::Scalar;
use crate::error::{ensure_dims, Error, Result};

/// Relative pivot threshold below which LU reports a singular matrix.
pub const PIVOT_TOLERANCE: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix<T> {
    nrows: usize,
    ncols: usize,
    values: Vec<T>,
}

pub type ComplexDenseMatrix = DenseMatrix<Complex64>;

impl<T: Scalar> DenseMatrix<T> {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            values: vec![T::zero(); nrows * ncols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_row_major(nrows: usize, ncols: usize, values: Vec<T>) -> Result<Self> {
        ensure_dims!(
            values.len() == nrows * ncols,
            "{} values for a {}x{} matrix",
            values.len(),
            nrows,
            ncols
        );
        Ok(Self {
            nrows,
            ncols,
            values,
        })
    }

    /// Panics on ragged input; intended for literals.
    pub fn from_rows(rows: &[Vec<T>]) -> Self {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == ncols), "ragged rows");
        Self {
            nrows,
            ncols,
            values: rows.iter().flatten().copied().collect(),
        }
    }

    pub fn from_fn(nrows: usize, ncols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut values = Vec::with_capacity(nrows * ncols);
        for i in 0..nrows {
            for j in 0..ncols {
                values.push(f(i, j));
            }
        }
        Self {
            nrows,
            ncols,
            values,
        }
    }

    pub fn from_diagonal(d: &[T]) -> Self {
        let mut m = Self::zeros(d.len(), d.len());
        for (i, &v) in d.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    /// Builds a matrix whose `j`-th column is `cols[j]`.
    pub fn from_columns(nrows: usize, cols: &[Vec<T>]) -> Result<Self> {
        ensure_dims!(
            cols.iter().all(|c| c.len() == nrows),
            "columns must all have length {nrows}"
        );
        Ok(Self::from_fn(nrows, cols.len(), |i, j| cols[j][i]))
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn is_square(&self) -> bool {
        self.nrows == self.ncols
    }

    pub fn as_slice(&self) -> &[T] {
        &self.values
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.values[i * self.ncols..(i + 1) * self.ncols]
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.nrows).map(|i| self[(i, j)]).collect()
    }

    pub fn set_column(&mut self, j: usize, col: &[T]) {
        for (i, &v) in col.iter().enumerate() {
            self[(i, j)] = v;
        }
    }

    pub fn diagonal(&self) -> Vec<T> {
        (0..self.nrows.min(self.ncols)).map(|i| self[(i, i)]).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.ncols, self.nrows, |i, j| self[(j, i)])
    }

    pub fn conj_transpose(&self) -> Self {
        Self::from_fn(self.ncols, self.nrows, |i, j| self[(j, i)].conj())
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(T) -> U) -> DenseMatrix<U> {
        DenseMatrix {
            nrows: self.nrows,
            ncols: self.ncols,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn scaled(&self, alpha: T) -> Self {
        self.map(|v| v * alpha)
    }

    /// `alpha * self + beta * other`.
    pub fn add(&self, alpha: T, other: &Self, beta: T) -> Result<Self> {
        ensure_dims!(
            self.nrows == other.nrows && self.ncols == other.ncols,
            "cannot add {}x{} and {}x{}",
            self.nrows,
            self.ncols,
            other.nrows,
            other.ncols
        );
        Ok(Self {
            nrows: self.nrows,
            ncols: self.ncols,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| alpha * a + beta * b)
                .collect(),
        })
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        ensure_dims!(
            self.ncols == other.nrows,
            "cannot multiply {}x{} by {}x{}",
            self.nrows,
            self.ncols,
            other.nrows,
            other.ncols
        );
        let mut out = Self::zeros(self.nrows, other.ncols);
        for i in 0..self.nrows {
            let orow = &mut out.values[i * other.ncols..(i + 1) * other.ncols];
            for k in 0..self.ncols {
                let a = self.values[i * self.ncols + k];
                if a == T::zero() {
                    continue;
                }
                let brow = &other.values[k * other.ncols..(k + 1) * other.ncols];
                for (o, &b) in orow.iter_mut().zip(brow) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn matvec(&self, x: &[T]) -> Result<Vec<T>> {
        ensure_dims!(
            x.len() == self.ncols,
            "matrix has {} columns, vector has length {}",
            self.ncols,
            x.len()
        );
        Ok((0..self.nrows)
            .map(|i| self.row(i).iter().zip(x).map(|(&a, &b)| a * b).sum())
            .collect())
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.modulus()))
    }

    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        Ok(self.add(T::one(), other, -T::one())?.max_abs())
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.nrows)
            .map(|i| self.row(i).iter().map(|v| v.modulus()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn trace(&self) -> T {
        self.diagonal().into_iter().sum()
    }

    /// Copy of the block `rows × cols` starting at `(r0, c0)`.
    pub fn block(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> Self {
        Self::from_fn(rows, cols, |i, j| self[(r0 + i, c0 + j)])
    }

    pub fn lu(&self) -> Result<LuFactors<T>> {
        LuFactors::new(self)
    }
}

impl DenseMatrix<f64> {
    pub fn to_complex(&self) -> ComplexDenseMatrix {
        self.map(|v| Complex64::new(v, 0.0))
    }
}

impl<T> Index<(usize, usize)> for DenseMatrix<T> {
    type Output = T;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        debug_assert!(i < self.nrows && j < self.ncols);
        &self.values[i * self.ncols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for DenseMatrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        debug_assert!(i < self.nrows && j < self.ncols);
        &mut self.values[i * self.ncols + j]
    }
}

/// Partial-pivoted LU factors `P A = L U`, stored packed.
#[derive(Debug, Clone)]
pub struct LuFactors<T> {
    n: usize,
    lu: Vec<T>,
    perm: Vec<usize>,
    swaps: usize,
}

impl<T: Scalar> LuFactors<T> {
    pub fn new(a: &DenseMatrix<T>) -> Result<Self> {
        ensure_dims!(a.is_square(), "LU of non-square {}x{} matrix", a.nrows, a.ncols);
        let n = a.nrows;
        let threshold = PIVOT_TOLERANCE * a.norm_inf();
        let mut lu = a.values.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut swaps = 0;
        for k in 0..n {
            let (p, pmax) = (k..n)
                .map(|i| (i, lu[i * n + k].modulus()))
                .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if pmax <= threshold || pmax == 0.0 {
                return Err(Error::Singular(format!(
                    "pivot {pmax:.3e} in column {k} is below {threshold:.3e}"
                )));
            }
            if p != k {
                for j in 0..n {
                    lu.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
                swaps += 1;
            }
            let pivot = lu[k * n + k];
            for i in k + 1..n {
                let f = lu[i * n + k] / pivot;
                lu[i * n + k] = f;
                if f == T::zero() {
                    continue;
                }
                for j in k + 1..n {
                    let u = lu[k * n + j];
                    lu[i * n + j] -= f * u;
                }
            }
        }
        Ok(Self { n, lu, perm, swaps })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve(&self, b: &[T]) -> Result<Vec<T>> {
        ensure_dims!(b.len() == self.n, "rhs length {} for {}x{} system", b.len(), self.n, self.n);
        let mut x: Vec<T> = self.perm.iter().map(|&p| b[p]).collect();
        self.solve_permuted_in_place(&mut x);
        Ok(x)
    }

    /// Solves in place; `x` holds the right-hand side on entry.
    pub fn solve_in_place(&self, x: &mut [T]) {
        debug_assert_eq!(x.len(), self.n);
        let b: Vec<T> = self.perm.iter().map(|&p| x[p]).collect();
        x.copy_from_slice(&b);
        self.solve_permuted_in_place(x);
    }

    fn solve_permuted_in_place(&self, x: &mut [T]) {
        let n = self.n;
        for i in 0..n {
            let row = &self.lu[i * n..i * n + i];
            let s: T = row.iter().zip(&x[..i]).map(|(&l, &v)| l * v).sum();
            x[i] -= s;
        }
        for i in (0..n).rev() {
            let row = &self.lu[i * n + i + 1..(i + 1) * n];
            let s: T = row.iter().zip(&x[i + 1..]).map(|(&u, &v)| u * v).sum();
            x[i] = (x[i] - s) / self.lu[i * n + i];
        }
    }

    /// Solves for every column of `b`.
    pub fn solve_matrix(&self, b: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
        ensure_dims!(b.nrows == self.n, "rhs has {} rows for {}x{} system", b.nrows, self.n, self.n);
        let mut out = DenseMatrix::zeros(b.nrows, b.ncols);
        for j in 0..b.ncols {
            let x = self.solve(&b.column(j))?;
            out.set_column(j, &x);
        }
        Ok(out)
    }

    pub fn inverse(&self) -> DenseMatrix<T> {
        self.solve_matrix(&DenseMatrix::identity(self.n))
            .expect("identity conforms")
    }

    pub fn determinant(&self) -> T {
        let n = self.n;
        let mut d = (0..n).fold(T::one(), |acc, i| acc * self.lu[i * n + i]);
        if self.swaps % 2 == 1 {
            d = -d;
        }
        d
    }
}

/// Solves `A X = B` by partial-pivoted LU.
pub fn dense_lu_solve<T: Scalar>(a: &DenseMatrix<T>, b: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
    a.lu()?.solve_matrix(b)
}
