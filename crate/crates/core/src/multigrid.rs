//! Monolithic two-grid and recursive multigrid cycles over nested meshes.
//!
//! Levels are ordered coarse to fine: `levels[0]` is solved directly and
//! `levels[l].p` prolongs from level `l` to level `l + 1`, applied to every
//! stage (`I ⊗ P`). Restriction is `I ⊗ Pᵀ`.

use std::cell::RefCell;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{ensure_dims, Error, Result};
use crate::fem::{apply_dirichlet, assemble, prolongation, refine, unit_square_mesh, FunctionSpace};
use crate::linalg::{gmres, GmresOptions, GmresStats, LuFactors, SparseMatrix, TripletBuilder};
use crate::smoothers::{point_jacobi, smooth_apply, stage_asm, stage_block_jacobi, vertex_star_patches, Preconditioner};
use crate::stage_system::{apply_per_stage, StageSystem};
use crate::tableau::ButcherTableau;

/// Largest coarsest-level stage dimension factored densely.
pub const COARSE_DENSE_CAP: usize = 4_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SmootherKind {
    PointJacobi,
    BlockJacobi,
    AsmStar,
}

impl SmootherKind {
    pub fn name(self) -> &'static str {
        match self {
            SmootherKind::PointJacobi => "point-jacobi",
            SmootherKind::BlockJacobi => "block-jacobi",
            SmootherKind::AsmStar => "asm-star",
        }
    }

    /// Builds this smoother for `sys` posed on `space`.
    pub fn build(self, sys: &StageSystem, space: &Arc<FunctionSpace>) -> Result<Preconditioner> {
        match self {
            SmootherKind::PointJacobi => point_jacobi(sys),
            SmootherKind::BlockJacobi => stage_block_jacobi(sys),
            SmootherKind::AsmStar => stage_asm(sys, &vertex_star_patches(space)),
        }
    }
}

impl fmt::Display for SmootherKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SmootherKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "point-jacobi" => Ok(SmootherKind::PointJacobi),
            "block-jacobi" => Ok(SmootherKind::BlockJacobi),
            "asm-star" => Ok(SmootherKind::AsmStar),
            _ => Err(Error::Parse(format!(
                "unknown smoother '{s}' (expected point-jacobi, block-jacobi or asm-star)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MgConfig {
    pub nu_pre: usize,
    pub nu_post: usize,
    /// Coarse-level recursions per visit: 1 for a V-cycle, 2 for a W-cycle.
    pub gamma: usize,
    pub omega: f64,
}

impl Default for MgConfig {
    fn default() -> Self {
        Self {
            nu_pre: 2,
            nu_post: 2,
            gamma: 1,
            omega: 2.0 / 3.0,
        }
    }
}

impl MgConfig {
    pub fn validate(&self) -> Result<()> {
        if self.nu_pre + self.nu_post == 0 {
            return Err(Error::InvalidArgument("at least one smoothing sweep is required".into()));
        }
        if !(1..=2).contains(&self.gamma) {
            return Err(Error::InvalidArgument(format!("gamma must be 1 or 2, got {}", self.gamma)));
        }
        if !(self.omega > 0.0 && self.omega <= 1.0) {
            return Err(Error::InvalidArgument(format!("omega must lie in (0, 1], got {}", self.omega)));
        }
        Ok(())
    }
}

/// One level of the hierarchy.
#[derive(Debug, Clone)]
pub struct MgLevel {
    pub space: Arc<FunctionSpace>,
    pub sys: StageSystem,
    pub prec: Preconditioner,
    pub smoother: SmootherKind,
    /// Prolongation to the next finer level (absent on the finest).
    pub p: Option<SparseMatrix>,
    pt: Option<SparseMatrix>,
    coarse_lu: Option<LuFactors<f64>>,
}

impl MgLevel {
    /// Restriction `Pᵀ` to this level from the next finer one.
    pub fn restriction(&self) -> Option<&SparseMatrix> {
        self.pt.as_ref()
    }

    /// Dense LU of the materialized stage operator (coarsest level only).
    pub fn coarse_factors(&self) -> Option<&LuFactors<f64>> {
        self.coarse_lu.as_ref()
    }

    fn coarse_solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        self.coarse_lu
            .as_ref()
            .ok_or_else(|| Error::InvalidArgument("level has no direct solver".into()))?
            .solve(b)
    }
}

/// Prolongation between the homogeneous-Dirichlet subspaces: the inclusion
/// matrix with the columns of coarse boundary dofs removed. Rows of fine
/// boundary dofs are then zero as well, since interior coarse basis
/// functions vanish on the boundary.
pub fn dirichlet_prolongation(coarse: &FunctionSpace, fine: &FunctionSpace) -> Result<SparseMatrix> {
    let p = prolongation(coarse, fine)?;
    let mut b = TripletBuilder::with_capacity(p.nrows(), p.ncols(), p.nnz());
    for (i, j, v) in p.triplets() {
        if !coarse.is_boundary_dof(j) {
            b.push(i, j, v);
        }
    }
    Ok(b.build())
}

/// Refines `unit_square_mesh(coarse_n)` `levels − 1` times and assembles the
/// Dirichlet-constrained stage system, smoother and transfers on each level.
/// A single level yields a direct solver.
pub fn build_hierarchy(
    coarse_n: usize,
    levels: usize,
    degree: usize,
    tableau: &ButcherTableau,
    dt: f64,
    smoother: SmootherKind,
) -> Result<Vec<MgLevel>> {
    if levels == 0 {
        return Err(Error::InvalidArgument("a hierarchy needs at least one level".into()));
    }
    let mut meshes = vec![Arc::new(unit_square_mesh(coarse_n)?)];
    for _ in 1..levels {
        let fine = refine(meshes.last().expect("nonempty"));
        meshes.push(Arc::new(fine));
    }
    let spaces = meshes
        .into_iter()
        .map(|m| FunctionSpace::new(m, degree).map(Arc::new))
        .collect::<Result<Vec<_>>>()?;
    let mut out = Vec::with_capacity(levels);
    for (l, space) in spaces.iter().enumerate() {
        let forms = apply_dirichlet(&assemble(space)?);
        let sys = StageSystem::new(Arc::new(forms.m), Arc::new(forms.k), tableau.clone(), dt)?;
        let prec = smoother.build(&sys, space)?;
        let p = match spaces.get(l + 1) {
            Some(fine) => Some(dirichlet_prolongation(space, fine)?),
            None => None,
        };
        let coarse_lu = if l == 0 {
            if sys.dim() > COARSE_DENSE_CAP {
                return Err(Error::CapExceeded {
                    what: "coarsest stage operator",
                    dim: sys.dim(),
                    cap: COARSE_DENSE_CAP,
                });
            }
            Some(sys.materialize()?.to_dense().lu()?)
        } else {
            None
        };
        out.push(MgLevel {
            space: Arc::clone(space),
            pt: p.as_ref().map(SparseMatrix::transpose),
            p,
            sys,
            prec,
            smoother,
            coarse_lu,
        });
    }
    Ok(out)
}

fn residual(sys: &StageSystem, x: &[f64], b: &[f64]) -> Result<Vec<f64>> {
    let bx = sys.apply(x)?;
    Ok(b.iter().zip(&bx).map(|(&u, &v)| u - v).collect())
}

/// Shared body of the two-grid step and the recursive cycle: pre-smooth,
/// restrict the residual, obtain a coarse correction from `coarse_correct`,
/// prolong it, post-smooth.
fn correction_scheme(
    fine: &MgLevel,
    coarse: &MgLevel,
    cfg: &MgConfig,
    x: &[f64],
    b: &[f64],
    coarse_correct: impl FnOnce(&[f64]) -> Result<Vec<f64>>,
) -> Result<Vec<f64>> {
    let s = fine.sys.stages();
    let p = coarse
        .p
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("coarse level has no prolongation".into()))?;
    let pt = coarse.pt.as_ref().expect("restriction accompanies prolongation");
    ensure_dims!(
        p.nrows() == fine.sys.ndof() && p.ncols() == coarse.sys.ndof(),
        "prolongation is {}x{} between levels of size {} and {}",
        p.nrows(),
        p.ncols(),
        fine.sys.ndof(),
        coarse.sys.ndof()
    );
    let mut x = smooth_apply(&fine.prec, &fine.sys, x, b, cfg.nu_pre, cfg.omega)?;
    let rc = apply_per_stage(pt, &residual(&fine.sys, &x, b)?, s)?;
    let ec = coarse_correct(&rc)?;
    let e = apply_per_stage(p, &ec, s)?;
    x.iter_mut().zip(&e).for_each(|(xv, ev)| *xv += ev);
    smooth_apply(&fine.prec, &fine.sys, &x, b, cfg.nu_post, cfg.omega)
}

/// One two-grid iteration with an exact coarse solve on `coarse`.
pub fn two_grid_step(fine: &MgLevel, coarse: &MgLevel, cfg: &MgConfig, x: &[f64], b: &[f64]) -> Result<Vec<f64>> {
    correction_scheme(fine, coarse, cfg, x, b, |rc| coarse.coarse_solve(rc))
}

fn cycle_counted(
    levels: &[MgLevel],
    cfg: &MgConfig,
    idx: usize,
    x: &[f64],
    b: &[f64],
    sweeps: &RefCell<Vec<usize>>,
) -> Result<Vec<f64>> {
    let level = levels
        .get(idx)
        .ok_or_else(|| Error::InvalidArgument(format!("level {idx} of {}", levels.len())))?;
    ensure_dims!(
        x.len() == level.sys.dim() && b.len() == level.sys.dim(),
        "cycle on level {idx} of dimension {} got vectors of length {} and {}",
        level.sys.dim(),
        x.len(),
        b.len()
    );
    if idx == 0 {
        return level.coarse_solve(b);
    }
    sweeps.borrow_mut()[idx] += cfg.nu_pre + cfg.nu_post;
    correction_scheme(level, &levels[idx - 1], cfg, x, b, |rc| {
        let mut ec = vec![0.0; rc.len()];
        for _ in 0..cfg.gamma {
            ec = cycle_counted(levels, cfg, idx - 1, &ec, rc, sweeps)?;
        }
        Ok(ec)
    })
}

/// One multigrid cycle on `levels[level_index]` from initial guess `x`.
pub fn cycle(levels: &[MgLevel], cfg: &MgConfig, level_index: usize, x: &[f64], b: &[f64]) -> Result<Vec<f64>> {
    let sweeps = RefCell::new(vec![0; levels.len()]);
    cycle_counted(levels, cfg, level_index, x, b, &sweeps)
}

/// Per-solve counters.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveTelemetry {
    pub iterations: usize,
    /// Last preconditioned relative residual.
    pub final_residual: f64,
    pub true_residual: f64,
    pub converged: bool,
    /// Smoothing sweeps performed on each level, coarse to fine.
    pub sweeps_per_level: Vec<usize>,
}

/// GMRES on the finest level, preconditioned by one cycle from a zero guess.
pub fn mg_preconditioned_gmres(
    levels: &[MgLevel],
    cfg: &MgConfig,
    b: &[f64],
    opts: &GmresOptions,
) -> Result<(Vec<f64>, GmresStats, SolveTelemetry)> {
    cfg.validate()?;
    let top = levels
        .len()
        .checked_sub(1)
        .ok_or_else(|| Error::InvalidArgument("empty hierarchy".into()))?;
    let fine = &levels[top];
    let sweeps = RefCell::new(vec![0; levels.len()]);
    let zero = vec![0.0; fine.sys.dim()];
    let (x, stats) = gmres(
        |v: &[f64]| fine.sys.apply(v),
        |r: &[f64]| cycle_counted(levels, cfg, top, &zero, r, &sweeps),
        b,
        opts,
    )?;
    let telemetry = SolveTelemetry {
        iterations: stats.iterations,
        final_residual: stats.final_residual(),
        true_residual: stats.true_residual,
        converged: stats.converged,
        sweeps_per_level: sweeps.into_inner(),
    };
    Ok((x, stats, telemetry))
}

/// Stationary multigrid: repeated cycles until `‖b − Bx‖ ≤ tol ‖b‖` or
/// `max_iter` cycles. Returns the iterate and the relative residual history
/// (starting with the initial one).
pub fn mg_stationary_solve(
    levels: &[MgLevel],
    cfg: &MgConfig,
    b: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, Vec<f64>)> {
    cfg.validate()?;
    let top = levels
        .len()
        .checked_sub(1)
        .ok_or_else(|| Error::InvalidArgument("empty hierarchy".into()))?;
    let sys = &levels[top].sys;
    let bnorm = crate::linalg::scalar::norm2(b);
    let mut x = vec![0.0; sys.dim()];
    let mut history = vec![if bnorm > 0.0 { 1.0 } else { 0.0 }];
    while history.last().copied().unwrap_or(0.0) > tol && history.len() <= max_iter {
        x = cycle(levels, cfg, top, &x, b)?;
        history.push(crate::linalg::scalar::norm2(&residual(sys, &x, b)?) / bnorm);
    }
    Ok((x, history))
}
