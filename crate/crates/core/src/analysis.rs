//! Numerical verification of the characteristic decomposition: monolithicity
//! of operators, and `ρ(T) = max_i ρ(T_i)` for the coupled multigrid error
//! propagation operator `T` against single-stage complex operators `T_i`
//! built independently from the pencils `M + λ_i Δt K`.

use std::io::Write;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{ensure_dims, Error, Result};
use crate::linalg::scalar::norm2;
use crate::linalg::{spectral_radius, ComplexDenseMatrix, DenseMatrix, LuFactors, Scalar, SparseMatrix};
use crate::multigrid::{build_hierarchy, cycle, MgConfig, MgLevel, SmootherKind};
use crate::smoothers::{vertex_star_patches, Preconditioner};
use crate::stage_system::{characteristic_pencil, ComplexPencil, StageSystem};
use crate::tableau::{eig_decompose, Family, SpectralDecomposition};

/// Largest dimension [`densify_operator`] accepts.
pub const DENSIFY_CAP: usize = 3_000;

/// Default threshold on relative off-diagonal characteristic blocks.
pub const MONOLITHIC_TOL: f64 = 1e-9;

/// Column `j` is `op(e_j)`. Columns are computed in parallel.
pub fn densify_operator<T: Scalar>(op: impl Fn(&[T]) -> Result<Vec<T>> + Sync, dim: usize) -> Result<DenseMatrix<T>> {
    if dim > DENSIFY_CAP {
        return Err(Error::CapExceeded {
            what: "densified operator",
            dim,
            cap: DENSIFY_CAP,
        });
    }
    let cols = (0..dim)
        .into_par_iter()
        .map(|j| {
            let mut e = vec![T::zero(); dim];
            e[j] = T::one();
            let c = op(&e)?;
            ensure_dims!(c.len() == dim, "operator returned length {} for dimension {dim}", c.len());
            Ok(c)
        })
        .collect::<Result<Vec<_>>>()?;
    DenseMatrix::from_columns(dim, &cols)
}

/// Dense `W⁻¹` of a preconditioner.
pub fn preconditioner_inverse_matrix(prec: &Preconditioner) -> Result<DenseMatrix<f64>> {
    densify_operator(|r: &[f64]| prec.apply_inverse(r), prec.stages() * prec.ndof())
}

/// The `s × s` grid of `N × N` blocks of `(X⁻¹ ⊗ I) Y (X ⊗ I)`.
#[derive(Debug, Clone)]
pub struct CharacteristicBlocks {
    pub stages: usize,
    pub ndof: usize,
    /// Row-major over the block grid.
    pub blocks: Vec<ComplexDenseMatrix>,
}

impl CharacteristicBlocks {
    pub fn block(&self, i: usize, j: usize) -> &ComplexDenseMatrix {
        &self.blocks[i * self.stages + j]
    }

    /// `(X ⊗ I) W (X⁻¹ ⊗ I)`, undoing [`characteristic_transform`].
    pub fn reassemble(&self, x: &ComplexDenseMatrix) -> Result<ComplexDenseMatrix> {
        let xinv = invert_eigenvectors(x)?;
        let (s, n) = (self.stages, self.ndof);
        let blocks: Vec<Vec<ComplexDenseMatrix>> =
            (0..s).map(|i| (0..s).map(|j| self.block(i, j).clone()).collect()).collect();
        let out = similarity_blocks(s, n, |k, l| &blocks[k][l], &xinv, x);
        Ok(join_blocks(s, n, &out))
    }
}

fn invert_eigenvectors(x: &ComplexDenseMatrix) -> Result<ComplexDenseMatrix> {
    Ok(LuFactors::new(x)
        .map_err(|e| Error::Singular(format!("eigenvector matrix: {e}")))?
        .inverse())
}

/// Blocks `Σ_{k,l} L_ik Y_kl R_lj` for `s × s` coefficient matrices `L`, `R`.
fn similarity_blocks<'a>(
    s: usize,
    n: usize,
    y: impl Fn(usize, usize) -> &'a ComplexDenseMatrix,
    right: &ComplexDenseMatrix,
    left: &ComplexDenseMatrix,
) -> Vec<ComplexDenseMatrix> {
    // Z_kj = Σ_l Y_kl R_lj
    let mut z = Vec::with_capacity(s * s);
    for k in 0..s {
        for j in 0..s {
            let mut acc = vec![Complex64::new(0.0, 0.0); n * n];
            for l in 0..s {
                let c = right[(l, j)];
                if c != Complex64::new(0.0, 0.0) {
                    for (a, &v) in acc.iter_mut().zip(y(k, l).as_slice()) {
                        *a += c * v;
                    }
                }
            }
            z.push(acc);
        }
    }
    let mut out = Vec::with_capacity(s * s);
    for i in 0..s {
        for j in 0..s {
            let mut acc = vec![Complex64::new(0.0, 0.0); n * n];
            for k in 0..s {
                let c = left[(i, k)];
                if c != Complex64::new(0.0, 0.0) {
                    for (a, &v) in acc.iter_mut().zip(&z[k * s + j]) {
                        *a += c * v;
                    }
                }
            }
            out.push(ComplexDenseMatrix::from_row_major(n, n, acc).expect("block shape"));
        }
    }
    out
}

fn join_blocks(s: usize, n: usize, blocks: &[ComplexDenseMatrix]) -> ComplexDenseMatrix {
    ComplexDenseMatrix::from_fn(s * n, s * n, |r, c| blocks[(r / n) * s + c / n][(r % n, c % n)])
}

/// `(X⁻¹ ⊗ I) Y (X ⊗ I)`, computed block by block.
pub fn characteristic_transform<T: Scalar>(y: &DenseMatrix<T>, x: &ComplexDenseMatrix) -> Result<CharacteristicBlocks> {
    let s = x.nrows();
    ensure_dims!(
        x.is_square() && s > 0 && y.is_square() && y.nrows() % s == 0,
        "cannot transform a {}x{} operator by a {}x{} eigenvector matrix",
        y.nrows(),
        y.ncols(),
        x.nrows(),
        x.ncols()
    );
    let n = y.nrows() / s;
    let xinv = invert_eigenvectors(x)?;
    let yblocks: Vec<ComplexDenseMatrix> = (0..s * s)
        .map(|b| {
            let (k, l) = (b / s, b % s);
            ComplexDenseMatrix::from_fn(n, n, |r, c| {
                let v = y[(k * n + r, l * n + c)];
                Complex64::new(v.re(), v.im())
            })
        })
        .collect();
    let blocks = similarity_blocks(s, n, |k, l| &yblocks[k * s + l], x, &xinv);
    Ok(CharacteristicBlocks { stages: s, ndof: n, blocks })
}

#[derive(Debug, Clone)]
pub struct MonolithicityReport {
    pub is_monolithic: bool,
    /// Largest off-diagonal block entry relative to `max |Y|`.
    pub max_offdiag: f64,
    /// Diagonal characteristic blocks `Y_i`.
    pub blocks: Vec<ComplexDenseMatrix>,
    pub tol: f64,
}

pub fn monolithicity_check<T: Scalar>(y: &DenseMatrix<T>, x: &ComplexDenseMatrix, tol: f64) -> Result<MonolithicityReport> {
    let cb = characteristic_transform(y, x)?;
    let s = cb.stages;
    let scale = y.max_abs();
    let offdiag = (0..s)
        .flat_map(|i| (0..s).filter(move |&j| j != i).map(move |j| (i, j)))
        .map(|(i, j)| cb.block(i, j).max_abs())
        .fold(0.0, f64::max);
    let max_offdiag = if scale > 0.0 { offdiag / scale } else { offdiag };
    let blocks = (0..s).map(|i| cb.block(i, i).clone()).collect();
    Ok(MonolithicityReport {
        is_monolithic: max_offdiag <= tol,
        max_offdiag,
        blocks,
        tol,
    })
}

#[derive(Debug, Clone)]
enum ComplexFactors {
    Diagonal(Vec<Complex64>),
    Patches {
        patches: Vec<Vec<usize>>,
        lus: Vec<LuFactors<Complex64>>,
        uncovered: Vec<usize>,
    },
}

/// Single-stage smoother for the pencil `M + z K`: the pencil diagonal for
/// block Jacobi, `diag(M) + aΔt diag(K)` for point Jacobi when
/// `diag(A) = a I`, and additive Schwarz over vertex stars.
#[derive(Debug, Clone)]
pub struct CharacteristicSmoother {
    ndof: usize,
    factors: ComplexFactors,
}

impl CharacteristicSmoother {
    pub fn new(kind: SmootherKind, pencil: &ComplexPencil, level: &MgLevel) -> Result<Self> {
        let n = pencil.ndof();
        let factors = match kind {
            SmootherKind::PointJacobi => {
                let sys = &level.sys;
                let a11 = point_jacobi_stage_coefficient(sys).ok_or_else(|| {
                    Error::InvalidArgument("point Jacobi is not monolithic for a Butcher matrix with unequal diagonal".into())
                })?;
                let (md, kd) = (pencil.m.diagonal(), pencil.k.diagonal());
                let z = Complex64::new(a11 * sys.dt(), 0.0);
                ComplexFactors::Diagonal(md.iter().zip(&kd).map(|(&m, &k)| m + z * k).collect())
            }
            SmootherKind::BlockJacobi => {
                let (md, kd) = (pencil.m.diagonal(), pencil.k.diagonal());
                ComplexFactors::Diagonal(md.iter().zip(&kd).map(|(&m, &k)| m + pencil.z * k).collect())
            }
            SmootherKind::AsmStar => {
                let pd = vertex_star_patches(&level.space);
                let lus = pd
                    .patches()
                    .iter()
                    .enumerate()
                    .map(|(id, p)| {
                        pencil
                            .submatrix(p)
                            .lu()
                            .map_err(|e| Error::Singular(format!("characteristic patch {id}: {e}")))
                    })
                    .collect::<Result<Vec<_>>>()?;
                let mut covered = vec![false; n];
                pd.patches().iter().flatten().for_each(|&d| covered[d] = true);
                ComplexFactors::Patches {
                    patches: pd.patches().to_vec(),
                    lus,
                    uncovered: (0..n).filter(|&d| !covered[d]).collect(),
                }
            }
        };
        Ok(Self { ndof: n, factors })
    }

    pub fn apply_inverse(&self, r: &[Complex64]) -> Result<Vec<Complex64>> {
        ensure_dims!(r.len() == self.ndof, "residual has length {}, expected {}", r.len(), self.ndof);
        match &self.factors {
            ComplexFactors::Diagonal(d) => Ok(r.iter().zip(d).map(|(&v, &w)| v / w).collect()),
            ComplexFactors::Patches {
                patches,
                lus,
                uncovered,
            } => {
                let mut out = vec![Complex64::new(0.0, 0.0); self.ndof];
                for &d in uncovered {
                    out[d] = r[d];
                }
                for (p, lu) in patches.iter().zip(lus) {
                    let mut local: Vec<Complex64> = p.iter().map(|&d| r[d]).collect();
                    lu.solve_in_place(&mut local);
                    for (&d, v) in p.iter().zip(local) {
                        out[d] += v;
                    }
                }
                Ok(out)
            }
        }
    }
}

/// Point Jacobi uses `diag(A)`, which survives the similarity by `X` only
/// when it is a multiple `a I` of the identity; returns that `a`.
fn point_jacobi_stage_coefficient(sys: &StageSystem) -> Option<f64> {
    let d = sys.tableau().a.diagonal();
    let a = d[0];
    d.iter().all(|&v| (v - a).abs() <= 1e-14 * a.abs()).then_some(a)
}

/// Whether the smoother of `levels` has single-stage counterparts.
pub fn has_characteristic_smoother(levels: &[MgLevel]) -> bool {
    levels
        .iter()
        .all(|l| l.smoother != SmootherKind::PointJacobi || point_jacobi_stage_coefficient(&l.sys).is_some())
}

/// One level of a single-stage complex hierarchy.
#[derive(Debug, Clone)]
pub struct CharacteristicLevel {
    pub pencil: ComplexPencil,
    pub smoother: CharacteristicSmoother,
    pub p: Option<SparseMatrix>,
    coarse_lu: Option<LuFactors<Complex64>>,
}

/// Builds the characteristic-stage hierarchy for eigenvalue `lambda` from
/// the meshes, mass/stiffness matrices and transfers of `levels`.
pub fn characteristic_hierarchy(levels: &[MgLevel], lambda: Complex64) -> Result<Vec<CharacteristicLevel>> {
    levels
        .iter()
        .enumerate()
        .map(|(l, level)| {
            let sys: &StageSystem = &level.sys;
            let pencil = characteristic_pencil(sys.m(), sys.k(), lambda, sys.dt());
            let smoother = CharacteristicSmoother::new(level.smoother, &pencil, level)?;
            let coarse_lu = if l == 0 {
                Some(
                    pencil
                        .factor()
                        .map_err(|e| Error::Singular(format!("coarse pencil for λ = {lambda}: {e}")))?,
                )
            } else {
                None
            };
            Ok(CharacteristicLevel {
                p: level.p.clone(),
                pencil,
                smoother,
                coarse_lu,
            })
        })
        .collect()
}

fn characteristic_smooth(
    level: &CharacteristicLevel,
    x: &mut [Complex64],
    b: &[Complex64],
    nu: usize,
    omega: f64,
) -> Result<()> {
    for _ in 0..nu {
        let bx = level.pencil.apply(x)?;
        let r: Vec<Complex64> = bx.iter().zip(b).map(|(&u, &v)| u - v).collect();
        let z = level.smoother.apply_inverse(&r)?;
        for (xv, zv) in x.iter_mut().zip(z) {
            *xv -= zv * omega;
        }
    }
    Ok(())
}

/// The single-stage counterpart of [`crate::multigrid::cycle`].
pub fn characteristic_cycle(
    levels: &[CharacteristicLevel],
    cfg: &MgConfig,
    idx: usize,
    x: &[Complex64],
    b: &[Complex64],
) -> Result<Vec<Complex64>> {
    let level = &levels[idx];
    if idx == 0 {
        return level
            .coarse_lu
            .as_ref()
            .ok_or_else(|| Error::InvalidArgument("level has no direct solver".into()))?
            .solve(b);
    }
    let coarse = &levels[idx - 1];
    let p = coarse
        .p
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("coarse level has no prolongation".into()))?;
    let mut x = x.to_vec();
    characteristic_smooth(level, &mut x, b, cfg.nu_pre, cfg.omega)?;
    let bx = level.pencil.apply(&x)?;
    let r: Vec<Complex64> = b.iter().zip(&bx).map(|(&u, &v)| u - v).collect();
    // Pᵀ r without forming Pᵀ
    let mut rc = vec![Complex64::new(0.0, 0.0); p.ncols()];
    for (i, j, v) in p.triplets() {
        rc[j] += r[i] * v;
    }
    let mut ec = vec![Complex64::new(0.0, 0.0); rc.len()];
    for _ in 0..cfg.gamma {
        ec = characteristic_cycle(levels, cfg, idx - 1, &ec, &rc)?;
    }
    let e = p.apply(&ec)?;
    x.iter_mut().zip(&e).for_each(|(xv, ev)| *xv += ev);
    characteristic_smooth(level, &mut x, b, cfg.nu_post, cfg.omega)?;
    Ok(x)
}

/// Dense error propagation `T` of one coupled cycle on the finest level.
pub fn coupled_cycle_operator(levels: &[MgLevel], cfg: &MgConfig) -> Result<DenseMatrix<f64>> {
    let top = levels.len().checked_sub(1).ok_or_else(|| Error::InvalidArgument("empty hierarchy".into()))?;
    let dim = levels[top].sys.dim();
    let zero = vec![0.0; dim];
    densify_operator(|e: &[f64]| cycle(levels, cfg, top, e, &zero), dim)
}

/// Dense single-stage error propagation `T_i` for eigenvalue `lambda`.
pub fn characteristic_cycle_operator(levels: &[MgLevel], cfg: &MgConfig, lambda: Complex64) -> Result<ComplexDenseMatrix> {
    let clevels = characteristic_hierarchy(levels, lambda)?;
    let top = clevels.len() - 1;
    let n = clevels[top].pencil.ndof();
    let zero = vec![Complex64::new(0.0, 0.0); n];
    densify_operator(|e: &[Complex64]| characteristic_cycle(&clevels, cfg, top, e, &zero), n)
}

/// `T_i = (I − P B_{H,λΔt}⁻¹ Pᵀ B_{h,λΔt}) S_i^ν` for a pair of levels.
pub fn build_characteristic_two_grid(
    fine: &MgLevel,
    coarse: &MgLevel,
    cfg: &MgConfig,
    lambda: Complex64,
) -> Result<ComplexDenseMatrix> {
    characteristic_cycle_operator(&[coarse.clone(), fine.clone()], cfg, lambda)
}

#[derive(Debug, Clone)]
pub struct SpectralReport {
    pub rho_coupled: f64,
    pub rho_blocks: Vec<f64>,
    pub max_block_rho: f64,
    /// `|rho_coupled − max_block_rho|`
    pub discrepancy: f64,
    /// Off-diagonal characteristic blocks of the coupled `T`, relative.
    pub max_offdiag: f64,
    /// `max_i ‖(X⁻¹TX)_ii − T_i‖_max / ‖T‖_max`.
    pub block_mismatch: f64,
}

/// Compares the spectral radius of the coupled cycle with those of the
/// independently built characteristic cycles. When the smoother has no
/// single-stage counterpart (point Jacobi with unequal `A_ii`), the
/// characteristic quantities are NaN.
pub fn verify_spectral_theorem(levels: &[MgLevel], cfg: &MgConfig, dec: &SpectralDecomposition) -> Result<SpectralReport> {
    let t = coupled_cycle_operator(levels, cfg)?;
    let mono = monolithicity_check(&t, &dec.x, MONOLITHIC_TOL)?;
    let rho_coupled = spectral_radius(&t)?;
    if !has_characteristic_smoother(levels) {
        return Ok(SpectralReport {
            rho_coupled,
            rho_blocks: vec![f64::NAN; dec.stages()],
            max_block_rho: f64::NAN,
            discrepancy: f64::NAN,
            max_offdiag: mono.max_offdiag,
            block_mismatch: f64::NAN,
        });
    }
    let blocks = dec
        .lambdas
        .par_iter()
        .map(|&l| characteristic_cycle_operator(levels, cfg, l))
        .collect::<Result<Vec<_>>>()?;
    let scale = t.max_abs().max(f64::MIN_POSITIVE);
    let block_mismatch = mono
        .blocks
        .iter()
        .zip(&blocks)
        .map(|(a, b)| a.max_abs_diff(b).map(|d| d / scale))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    let rho_blocks = blocks.par_iter().map(spectral_radius).collect::<Result<Vec<_>>>()?;
    let max_block_rho = rho_blocks.iter().copied().fold(0.0, f64::max);
    Ok(SpectralReport {
        rho_coupled,
        max_block_rho,
        discrepancy: (rho_coupled - max_block_rho).abs(),
        rho_blocks,
        max_offdiag: mono.max_offdiag,
        block_mismatch,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CycleShape {
    TwoGrid,
    /// Three-level V-cycle.
    VCycle3,
}

impl CycleShape {
    pub fn name(self) -> &'static str {
        match self {
            CycleShape::TwoGrid => "two-grid",
            CycleShape::VCycle3 => "v3",
        }
    }

    pub fn levels(self) -> usize {
        match self {
            CycleShape::TwoGrid => 2,
            CycleShape::VCycle3 => 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyCase {
    pub family: Family,
    pub stages: usize,
    pub degree: usize,
    pub smoother: SmootherKind,
    pub cycle: CycleShape,
}

impl VerifyCase {
    pub fn label(&self) -> String {
        format!(
            "p{}-{}{}-{}-{}",
            self.degree,
            self.family.name().to_ascii_lowercase(),
            self.stages,
            self.smoother.name(),
            self.cycle.name()
        )
    }
}

#[derive(Debug, Clone)]
pub struct VerifySettings {
    pub base_n: usize,
    pub dt: f64,
    pub cfg: MgConfig,
    /// Bound on `|ρ(T) − max_i ρ(T_i)|`.
    pub tol: f64,
    /// Bound on the relative off-diagonal blocks of `T`.
    pub monolithic_tol: f64,
    pub seed: u64,
}

impl Default for VerifySettings {
    fn default() -> Self {
        Self {
            base_n: 2,
            dt: 0.25,
            cfg: MgConfig::default(),
            tol: 1e-8,
            monolithic_tol: 1e-8,
            seed: 0,
        }
    }
}

/// {RadauIIA 1–3, Gauss–Legendre 1–2} × {block Jacobi, vertex-star ASM} ×
/// {two-grid, 3-level V} × {P1, P2}.
pub fn default_verify_cases() -> Vec<VerifyCase> {
    let tableaux = [
        (Family::RadauIIA, 1),
        (Family::RadauIIA, 2),
        (Family::RadauIIA, 3),
        (Family::GaussLegendre, 1),
        (Family::GaussLegendre, 2),
    ];
    let mut cases = Vec::new();
    for degree in [1, 2] {
        for &(family, stages) in &tableaux {
            for smoother in [SmootherKind::BlockJacobi, SmootherKind::AsmStar] {
                for cycle in [CycleShape::TwoGrid, CycleShape::VCycle3] {
                    cases.push(VerifyCase {
                        family,
                        stages,
                        degree,
                        smoother,
                        cycle,
                    });
                }
            }
        }
    }
    cases
}

#[derive(Debug, Clone)]
pub struct VerifyRow {
    pub case: VerifyCase,
    pub report: SpectralReport,
    /// Reasons the case failed; empty when it passed.
    pub failures: Vec<String>,
}

impl VerifyRow {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Builds the case hierarchy, checks the spectral theorem, monolithicity of
/// `T`, `ρ(T) < 1`, and that an exact solution is a fixed point of the cycle
/// (probed with a seeded random vector).
pub fn run_verify_case(case: &VerifyCase, settings: &VerifySettings, probe_seed: u64) -> Result<VerifyRow> {
    settings.cfg.validate()?;
    let tableau = case.family.tableau(case.stages)?;
    let dec = eig_decompose(&tableau)?;
    let levels = build_hierarchy(
        settings.base_n,
        case.cycle.levels(),
        case.degree,
        &tableau,
        settings.dt,
        case.smoother,
    )?;
    let report = verify_spectral_theorem(&levels, &settings.cfg, &dec)?;
    let mut failures = Vec::new();
    if !(report.discrepancy <= settings.tol) {
        failures.push(format!("spectral discrepancy {:.3e} > {:.1e}", report.discrepancy, settings.tol));
    }
    if !(report.max_offdiag <= settings.monolithic_tol) {
        failures.push(format!(
            "coupled cycle is not monolithic: off-diagonal {:.3e} > {:.1e}",
            report.max_offdiag, settings.monolithic_tol
        ));
    }
    if !(report.block_mismatch <= settings.tol) {
        failures.push(format!(
            "characteristic blocks differ from single-stage cycles by {:.3e}",
            report.block_mismatch
        ));
    }
    if !(report.rho_coupled < 1.0) {
        failures.push(format!("coupled cycle diverges: rho = {:.6}", report.rho_coupled));
    }
    let top = levels.len() - 1;
    let sys = &levels[top].sys;
    let mut rng = ChaCha8Rng::seed_from_u64(probe_seed);
    let xs: Vec<f64> = (0..sys.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let b = sys.apply(&xs)?;
    let x1 = cycle(&levels, &settings.cfg, top, &xs, &b)?;
    let drift = norm2(&x1.iter().zip(&xs).map(|(a, b)| a - b).collect::<Vec<_>>()) / norm2(&xs);
    if !(drift <= 1e-11) {
        failures.push(format!("exact solution drifts by {drift:.3e} under one cycle"));
    }
    Ok(VerifyRow {
        case: *case,
        report,
        failures,
    })
}

/// Runs every case in parallel; rows keep the order of `cases`.
pub fn verify_sweep(cases: &[VerifyCase], settings: &VerifySettings) -> Result<Vec<VerifyRow>> {
    cases
        .par_iter()
        .enumerate()
        .map(|(i, c)| run_verify_case(c, settings, settings.seed.wrapping_add(i as u64)))
        .collect()
}

pub const VERIFY_CSV_HEADER: &str = "case,s,family,smoother,cycle,rho_coupled,max_block_rho,discrepancy,max_offdiag";

pub fn write_verify_csv<W: Write>(rows: &[VerifyRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{VERIFY_CSV_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{:.16e},{:.16e},{:.16e},{:.16e}",
            r.case.label(),
            r.case.stages,
            r.case.family,
            r.case.smoother,
            r.case.cycle.name(),
            r.report.rho_coupled,
            r.report.max_block_rho,
            r.report.discrepancy,
            r.report.max_offdiag
        )?;
    }
    Ok(())
}
