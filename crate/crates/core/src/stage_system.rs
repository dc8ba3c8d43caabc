//! The stage-coupled operator `B = I ⊗ M + Δt A ⊗ K` of an implicit
//! Runge–Kutta step, its right-hand side, the solution update, and the
//! single-stage pencils `M + z K`.
//!
//! Stage vectors are stored stage-major: entry `i * N + d` is dof `d` of
//! stage `i`.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{ensure_dims, Error, Result};
use crate::fem::{assemble_load, FunctionSpace, Point};
use crate::linalg::{kron_sparse, ComplexDenseMatrix, DenseMatrix, LuFactors, Scalar, SparseMatrix};
use crate::tableau::ButcherTableau;

/// Largest stage-operator dimension [`StageSystem::materialize`] accepts.
pub const MATERIALIZE_CAP: usize = 20_000;

/// `I ⊗ M + Δt A ⊗ K`, kept in factored form.
#[derive(Debug, Clone)]
pub struct StageSystem {
    m: Arc<SparseMatrix>,
    k: Arc<SparseMatrix>,
    tableau: ButcherTableau,
    dt: f64,
}

impl StageSystem {
    pub fn new(m: Arc<SparseMatrix>, k: Arc<SparseMatrix>, tableau: ButcherTableau, dt: f64) -> Result<Self> {
        let n = m.nrows();
        ensure_dims!(
            m.ncols() == n && k.nrows() == n && k.ncols() == n,
            "M is {}x{}, K is {}x{}",
            m.nrows(),
            m.ncols(),
            k.nrows(),
            k.ncols()
        );
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidArgument(format!("time step must be positive, got {dt}")));
        }
        Ok(Self { m, k, tableau, dt })
    }

    pub fn m(&self) -> &Arc<SparseMatrix> {
        &self.m
    }

    pub fn k(&self) -> &Arc<SparseMatrix> {
        &self.k
    }

    pub fn tableau(&self) -> &ButcherTableau {
        &self.tableau
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn stages(&self) -> usize {
        self.tableau.stages()
    }

    /// Spatial dof count `N`.
    pub fn ndof(&self) -> usize {
        self.m.nrows()
    }

    /// Operator dimension `sN`.
    pub fn dim(&self) -> usize {
        self.stages() * self.ndof()
    }

    /// `y_i = M x_i + Δt Σ_j A_ij K x_j`, without forming `B`.
    pub fn apply<T: Scalar>(&self, x: &[T]) -> Result<Vec<T>> {
        let (s, n) = (self.stages(), self.ndof());
        ensure_dims!(x.len() == s * n, "stage vector has length {}, expected {}", x.len(), s * n);
        let kx: Vec<Vec<T>> = x
            .par_chunks(n)
            .map(|xj| {
                let mut y = vec![T::zero(); n];
                self.k.apply_into(xj, &mut y);
                y
            })
            .collect();
        let mut y = vec![T::zero(); s * n];
        y.par_chunks_mut(n).enumerate().for_each(|(i, yi)| {
            self.m.apply_into(&x[i * n..(i + 1) * n], yi);
            for (j, kxj) in kx.iter().enumerate() {
                let a = self.dt * self.tableau.a[(i, j)];
                if a != 0.0 {
                    for (yv, &kv) in yi.iter_mut().zip(kxj) {
                        *yv += kv.scale(a);
                    }
                }
            }
        });
        Ok(y)
    }

    /// Explicit sparse `I ⊗ M + Δt A ⊗ K`, refused above [`MATERIALIZE_CAP`].
    pub fn materialize(&self) -> Result<SparseMatrix> {
        self.materialize_with_cap(MATERIALIZE_CAP)
    }

    pub fn materialize_with_cap(&self, cap: usize) -> Result<SparseMatrix> {
        if self.dim() > cap {
            return Err(Error::CapExceeded {
                what: "stage operator",
                dim: self.dim(),
                cap,
            });
        }
        let s = self.stages();
        let eye = kron_sparse(&DenseMatrix::identity(s), &self.m);
        let coupling = kron_sparse(&self.tableau.a.scaled(self.dt), &self.k);
        eye.add(1.0, &coupling, 1.0)
    }

    /// Right-hand side `f − 1 ⊗ (K uⁿ)` of the stage equations, where `f` is
    /// the stacked stage load from [`stage_rhs`].
    pub fn step_rhs(&self, load: &[f64], u_n: &[f64]) -> Result<Vec<f64>> {
        let (s, n) = (self.stages(), self.ndof());
        ensure_dims!(load.len() == s * n, "load has length {}, expected {}", load.len(), s * n);
        let ku = self.k.apply(u_n)?;
        Ok(load
            .chunks(n)
            .flat_map(|fi| fi.iter().zip(&ku).map(|(&f, &k)| f - k))
            .collect())
    }
}

/// Applies `I_s ⊗ mat` to a stage-major vector.
pub fn apply_per_stage<T: Scalar>(mat: &SparseMatrix, x: &[T], stages: usize) -> Result<Vec<T>> {
    let (nr, nc) = (mat.nrows(), mat.ncols());
    ensure_dims!(
        x.len() == stages * nc,
        "stage vector has length {}, expected {}",
        x.len(),
        stages * nc
    );
    let mut y = vec![T::zero(); stages * nr];
    for (yi, xi) in y.chunks_mut(nr.max(1)).zip(x.chunks(nc.max(1))) {
        mat.apply_into(xi, yi);
    }
    Ok(y)
}

/// Space-time forcing `f(x, t)` on a function space.
#[derive(Clone)]
pub struct ForcingSpec {
    pub f: Arc<dyn Fn(Point, f64) -> f64 + Send + Sync>,
    pub space: Arc<FunctionSpace>,
}

impl ForcingSpec {
    pub fn new(space: Arc<FunctionSpace>, f: impl Fn(Point, f64) -> f64 + Send + Sync + 'static) -> Self {
        Self { f: Arc::new(f), space }
    }
}

impl std::fmt::Debug for ForcingSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ForcingSpec").field("ndof", &self.space.ndof()).finish_non_exhaustive()
    }
}

/// Stacked stage loads: block `i` is the load at `t_n + c_i Δt` with boundary
/// entries zeroed.
pub fn stage_rhs(fs: &ForcingSpec, t_n: f64, tableau: &ButcherTableau, dt: f64) -> Result<Vec<f64>> {
    let space = &fs.space;
    let mut out = Vec::with_capacity(tableau.stages() * space.ndof());
    for &c in &tableau.c {
        let mut block = assemble_load(space, |p, t| (fs.f)(p, t), t_n + c * dt)?;
        for &d in space.boundary_dofs() {
            block[d] = 0.0;
        }
        out.extend(block);
    }
    Ok(out)
}

/// `uⁿ⁺¹ = uⁿ + Δt Σ_i b_i kⁱ`.
pub fn rk_update(u_n: &[f64], k: &[f64], tableau: &ButcherTableau, dt: f64) -> Result<Vec<f64>> {
    let n = u_n.len();
    let s = tableau.stages();
    ensure_dims!(k.len() == s * n, "stage vector has length {}, expected {}", k.len(), s * n);
    let mut u = u_n.to_vec();
    for (i, ki) in k.chunks(n.max(1)).enumerate() {
        let w = dt * tableau.b[i];
        for (uv, &kv) in u.iter_mut().zip(ki) {
            *uv += w * kv;
        }
    }
    Ok(u)
}

/// `A⁻¹ ⊗ M + Δt I ⊗ K`, the stage operator premultiplied by `A⁻¹ ⊗ I`.
#[derive(Debug, Clone)]
pub struct TransformedStageOperator {
    ainv: DenseMatrix<f64>,
    m: Arc<SparseMatrix>,
    k: Arc<SparseMatrix>,
    dt: f64,
}

impl TransformedStageOperator {
    pub fn a_inverse(&self) -> &DenseMatrix<f64> {
        &self.ainv
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        let s = self.ainv.nrows();
        let n = self.m.nrows();
        ensure_dims!(x.len() == s * n, "stage vector has length {}, expected {}", x.len(), s * n);
        let mx = apply_per_stage(&self.m, x, s)?;
        let mut y = apply_per_stage(&self.k, x, s)?;
        y.iter_mut().for_each(|v| *v *= self.dt);
        for i in 0..s {
            for j in 0..s {
                let a = self.ainv[(i, j)];
                if a != 0.0 {
                    for d in 0..n {
                        y[i * n + d] += a * mx[j * n + d];
                    }
                }
            }
        }
        Ok(y)
    }
}

/// Applies `coeffs ⊗ I` to a stage-major vector.
pub fn apply_stage_coefficients<T: Scalar>(coeffs: &DenseMatrix<T>, x: &[T]) -> Result<Vec<T>> {
    let s = coeffs.nrows();
    ensure_dims!(
        coeffs.ncols() == s && s > 0 && x.len() % s == 0,
        "cannot apply {}x{} stage coefficients to length {}",
        coeffs.nrows(),
        coeffs.ncols(),
        x.len()
    );
    let n = x.len() / s;
    let mut y = vec![T::zero(); x.len()];
    for i in 0..s {
        for j in 0..s {
            let a = coeffs[(i, j)];
            if a != T::zero() {
                for d in 0..n {
                    y[i * n + d] += a * x[j * n + d];
                }
            }
        }
    }
    Ok(y)
}

/// Equivalent system `(A⁻¹ ⊗ M + Δt I ⊗ K) k = (A⁻¹ ⊗ I) f`.
pub fn butcher_transform(sys: &StageSystem, rhs: &[f64]) -> Result<(TransformedStageOperator, Vec<f64>)> {
    ensure_dims!(rhs.len() == sys.dim(), "rhs has length {}, expected {}", rhs.len(), sys.dim());
    let ainv = LuFactors::new(&sys.tableau.a)
        .map_err(|e| Error::Singular(format!("Butcher matrix is not invertible: {e}")))?
        .inverse();
    let frhs = apply_stage_coefficients(&ainv, rhs)?;
    Ok((
        TransformedStageOperator {
            ainv,
            m: Arc::clone(&sys.m),
            k: Arc::clone(&sys.k),
            dt: sys.dt,
        },
        frhs,
    ))
}

/// Single-stage pencil `M + z K` with complex `z`.
#[derive(Debug, Clone)]
pub struct ComplexPencil {
    pub m: Arc<SparseMatrix>,
    pub k: Arc<SparseMatrix>,
    pub z: Complex64,
}

impl ComplexPencil {
    pub fn ndof(&self) -> usize {
        self.m.nrows()
    }

    /// `M x + z (K x)`.
    pub fn apply(&self, x: &[Complex64]) -> Result<Vec<Complex64>> {
        let mut y = self.m.apply(x)?;
        let kx = self.k.apply(x)?;
        for (yv, kv) in y.iter_mut().zip(kx) {
            *yv += self.z * kv;
        }
        Ok(y)
    }

    /// Dense `M + z K`.
    pub fn to_dense(&self) -> ComplexDenseMatrix {
        self.submatrix(&(0..self.ndof()).collect::<Vec<_>>())
    }

    /// `M_pp + z K_pp` on the index set `p`.
    pub fn submatrix(&self, p: &[usize]) -> ComplexDenseMatrix {
        let mp = self.m.submatrix(p, p);
        let kp = self.k.submatrix(p, p);
        ComplexDenseMatrix::from_fn(p.len(), p.len(), |a, b| {
            Complex64::new(mp[(a, b)], 0.0) + self.z * kp[(a, b)]
        })
    }

    /// Dense LU of the whole pencil.
    pub fn factor(&self) -> Result<LuFactors<Complex64>> {
        self.to_dense().lu()
    }
}

/// The characteristic-stage pencil `M + λΔt K`.
pub fn characteristic_pencil(
    m: &Arc<SparseMatrix>,
    k: &Arc<SparseMatrix>,
    lambda: Complex64,
    dt: f64,
) -> ComplexPencil {
    ComplexPencil {
        m: Arc::clone(m),
        k: Arc::clone(k),
        z: lambda * dt,
    }
}
