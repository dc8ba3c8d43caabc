//! Oracles shared by the integration tests. Nothing here calls into the
//! library's own solvers: matrices are rebuilt densely with nalgebra.

#![allow(dead_code)]

use nalgebra::{Complex, DMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stagemg::linalg::{ComplexDenseMatrix, DenseMatrix, SparseMatrix};

pub type C64 = Complex<f64>;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

pub fn na_real(a: &DenseMatrix<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)])
}

pub fn na_sparse(a: &SparseMatrix) -> DMatrix<f64> {
    let mut d = DMatrix::zeros(a.nrows(), a.ncols());
    for (i, j, v) in a.triplets() {
        d[(i, j)] += v;
    }
    d
}

pub fn na_complex(a: &ComplexDenseMatrix) -> DMatrix<C64> {
    DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| {
        let v = a[(i, j)];
        C64::new(v.re, v.im)
    })
}

/// Dense `A ⊗ B`.
pub fn kron(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let (p, q) = b.shape();
    DMatrix::from_fn(a.nrows() * p, a.ncols() * q, |r, c| a[(r / p, c / q)] * b[(r % p, c % q)])
}

/// Dense stage matrix `I ⊗ M + Δt A ⊗ K`.
pub fn stage_matrix(a: &DMatrix<f64>, m: &DMatrix<f64>, k: &DMatrix<f64>, dt: f64) -> DMatrix<f64> {
    let s = a.nrows();
    kron(&DMatrix::identity(s, s), m) + kron(a, k) * dt
}

/// Diagonal blocks of `(X⁻¹ ⊗ I) Y (X ⊗ I)`, and the largest off-diagonal
/// block entry.
pub fn similarity_blocks(y: &DMatrix<f64>, x: &DMatrix<C64>) -> (Vec<DMatrix<C64>>, f64) {
    let s = x.nrows();
    let n = y.nrows() / s;
    let xinv = x.clone().try_inverse().expect("invertible eigenvector matrix");
    let yb = |k: usize, l: usize| y.view((k * n, l * n), (n, n)).map(|v| C64::new(v, 0.0));
    let mut diag = Vec::new();
    let mut off: f64 = 0.0;
    for i in 0..s {
        for j in 0..s {
            let mut acc = DMatrix::<C64>::zeros(n, n);
            for k in 0..s {
                for l in 0..s {
                    let w = xinv[(i, k)] * x[(l, j)];
                    if w != C64::new(0.0, 0.0) {
                        acc += yb(k, l) * w;
                    }
                }
            }
            if i == j {
                diag.push(acc);
            } else {
                off = off.max(acc.iter().map(|v| v.norm()).fold(0.0, f64::max));
            }
        }
    }
    (diag, off)
}

pub fn max_abs_real(a: &DMatrix<f64>) -> f64 {
    a.iter().fold(0.0, |m: f64, v| m.max(v.abs()))
}

pub fn max_abs_complex(a: &DMatrix<C64>) -> f64 {
    a.iter().fold(0.0, |m: f64, v| m.max(v.norm()))
}
