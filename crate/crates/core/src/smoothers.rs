//! Stage-coupled preconditioners `W` and the damped smoothing iteration
//! `x ← x − ω W⁻¹ (B x − b)`.

use std::fmt::Write as _;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{ensure_dims, Error, Result};
use crate::fem::FunctionSpace;
use crate::linalg::{DenseMatrix, LuFactors};
use crate::stage_system::StageSystem;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PatchKind {
    VertexStar,
    SingleDof,
    Custom,
}

/// Index sets of interior dofs whose union covers every interior dof.
#[derive(Debug, Clone)]
pub struct PatchDecomposition {
    patches: Vec<Vec<usize>>,
    space: Arc<FunctionSpace>,
    kind: PatchKind,
}

impl PatchDecomposition {
    /// Sorts each patch and checks that patches are nonempty, avoid boundary
    /// dofs, and cover all interior dofs.
    pub fn new(space: Arc<FunctionSpace>, mut patches: Vec<Vec<usize>>, kind: PatchKind) -> Result<Self> {
        let n = space.ndof();
        let mut covered = vec![false; n];
        for (id, p) in patches.iter_mut().enumerate() {
            p.sort_unstable();
            p.dedup();
            if p.is_empty() {
                return Err(Error::InvalidArgument(format!("patch {id} is empty")));
            }
            for &d in p.iter() {
                if d >= n {
                    return Err(Error::InvalidArgument(format!("patch {id} references dof {d} of {n}")));
                }
                if space.is_boundary_dof(d) {
                    return Err(Error::InvalidArgument(format!("patch {id} contains boundary dof {d}")));
                }
                covered[d] = true;
            }
        }
        if let Some(d) = (0..n).find(|&d| !covered[d] && !space.is_boundary_dof(d)) {
            return Err(Error::InvalidArgument(format!("interior dof {d} is in no patch")));
        }
        Ok(Self { patches, space, kind })
    }

    pub fn patches(&self) -> &[Vec<usize>] {
        &self.patches
    }

    pub fn space(&self) -> &Arc<FunctionSpace> {
        &self.space
    }

    pub fn kind(&self) -> PatchKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.patches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patches.is_empty()
    }

    /// One line of space-separated dof indices per patch.
    pub fn to_lines(&self) -> String {
        let mut out = String::new();
        for p in &self.patches {
            let line: Vec<String> = p.iter().map(usize::to_string).collect();
            let _ = writeln!(out, "{}", line.join(" "));
        }
        out
    }
}

/// One patch per interior dof.
pub fn single_dof_patches(space: &Arc<FunctionSpace>) -> PatchDecomposition {
    let patches = space.interior_dofs().into_iter().map(|d| vec![d]).collect();
    PatchDecomposition::new(Arc::clone(space), patches, PatchKind::SingleDof).expect("interior singletons are valid")
}

/// One patch per interior vertex: the vertex dof plus, for P2, the midpoint
/// dofs of the edges incident to the vertex. Interior dofs left uncovered
/// (P2 midpoints of interior edges joining two boundary vertices) are added
/// as singleton patches after the stars.
pub fn vertex_star_patches(space: &Arc<FunctionSpace>) -> PatchDecomposition {
    let mesh = space.mesh();
    let nv = mesh.num_vertices();
    let mut stars: Vec<Vec<usize>> = vec![Vec::new(); nv];
    for v in 0..nv {
        if !space.is_boundary_dof(v) {
            stars[v].push(v);
        }
    }
    if space.degree() == 2 {
        for (e, &[a, b]) in mesh.edges().iter().enumerate() {
            for v in [a, b] {
                if !space.is_boundary_dof(v) {
                    stars[v].push(nv + e);
                }
            }
        }
    }
    let mut patches: Vec<Vec<usize>> = stars.into_iter().filter(|p| !p.is_empty()).collect();
    let mut covered = vec![false; space.ndof()];
    patches.iter().flatten().for_each(|&d| covered[d] = true);
    patches.extend(
        (0..space.ndof())
            .filter(|&d| !covered[d] && !space.is_boundary_dof(d))
            .map(|d| vec![d]),
    );
    PatchDecomposition::new(Arc::clone(space), patches, PatchKind::VertexStar).expect("vertex stars are valid")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PreconditionerKind {
    PointJacobi,
    StageBlockJacobi,
    StageAsm,
}

#[derive(Debug, Clone)]
enum Factors {
    /// Diagonal of `B`.
    Diagonal(Vec<f64>),
    /// One `s × s` block per spatial dof.
    DofBlocks(Vec<LuFactors<f64>>),
    /// One `sp × sp` block per patch; dofs in no patch are left unchanged.
    Patches {
        patches: Vec<Vec<usize>>,
        lus: Vec<LuFactors<f64>>,
        uncovered: Vec<usize>,
    },
}

/// Applies `W⁻¹` for a stage system of fixed shape.
#[derive(Debug, Clone)]
pub struct Preconditioner {
    kind: PreconditionerKind,
    stages: usize,
    ndof: usize,
    factors: Factors,
}

impl Preconditioner {
    pub fn kind(&self) -> PreconditionerKind {
        self.kind
    }

    pub fn stages(&self) -> usize {
        self.stages
    }

    pub fn ndof(&self) -> usize {
        self.ndof
    }

    /// Patches of an additive Schwarz preconditioner.
    pub fn patches(&self) -> Option<&[Vec<usize>]> {
        match &self.factors {
            Factors::Patches { patches, .. } => Some(patches),
            _ => None,
        }
    }

    pub fn apply_inverse(&self, r: &[f64]) -> Result<Vec<f64>> {
        let (s, n) = (self.stages, self.ndof);
        ensure_dims!(r.len() == s * n, "residual has length {}, expected {}", r.len(), s * n);
        match &self.factors {
            Factors::Diagonal(d) => Ok(r.iter().zip(d).map(|(&v, &w)| v / w).collect()),
            Factors::DofBlocks(lus) => {
                let mut out = vec![0.0; s * n];
                let mut local = vec![0.0; s];
                for (dof, lu) in lus.iter().enumerate() {
                    for i in 0..s {
                        local[i] = r[i * n + dof];
                    }
                    lu.solve_in_place(&mut local);
                    for i in 0..s {
                        out[i * n + dof] = local[i];
                    }
                }
                Ok(out)
            }
            Factors::Patches {
                patches,
                lus,
                uncovered,
            } => {
                let solved: Vec<Vec<f64>> = patches
                    .par_iter()
                    .zip(lus)
                    .map(|(p, lu)| {
                        let mut local: Vec<f64> = (0..s).flat_map(|i| p.iter().map(move |&d| r[i * n + d])).collect();
                        lu.solve_in_place(&mut local);
                        local
                    })
                    .collect();
                let mut out = vec![0.0; s * n];
                for &d in uncovered {
                    for i in 0..s {
                        out[i * n + d] = r[i * n + d];
                    }
                }
                for (p, local) in patches.iter().zip(&solved) {
                    for i in 0..s {
                        for (a, &d) in p.iter().enumerate() {
                            out[i * n + d] += local[i * p.len() + a];
                        }
                    }
                }
                Ok(out)
            }
        }
    }
}

/// `W = diag(I ⊗ M + Δt A ⊗ K)`.
pub fn point_jacobi(sys: &StageSystem) -> Result<Preconditioner> {
    let (s, n) = (sys.stages(), sys.ndof());
    let (md, kd) = (sys.m().diagonal(), sys.k().diagonal());
    let a = &sys.tableau().a;
    let mut diag = Vec::with_capacity(s * n);
    for i in 0..s {
        for d in 0..n {
            let w = md[d] + sys.dt() * a[(i, i)] * kd[d];
            if w == 0.0 {
                return Err(Error::Singular(format!("zero diagonal at stage {i}, dof {d}")));
            }
            diag.push(w);
        }
    }
    Ok(Preconditioner {
        kind: PreconditionerKind::PointJacobi,
        stages: s,
        ndof: n,
        factors: Factors::Diagonal(diag),
    })
}

/// `W = I ⊗ diag(M) + Δt A ⊗ diag(K)`: one dense `s × s` block
/// `m_dd I + Δt k_dd A` per spatial dof.
pub fn stage_block_jacobi(sys: &StageSystem) -> Result<Preconditioner> {
    let (s, n) = (sys.stages(), sys.ndof());
    let (md, kd) = (sys.m().diagonal(), sys.k().diagonal());
    let a = &sys.tableau().a;
    let lus = (0..n)
        .map(|d| {
            let block = DenseMatrix::from_fn(s, s, |i, j| {
                let mass = if i == j { md[d] } else { 0.0 };
                mass + sys.dt() * kd[d] * a[(i, j)]
            });
            block
                .lu()
                .map_err(|e| Error::Singular(format!("stage block of dof {d}: {e}")))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Preconditioner {
        kind: PreconditionerKind::StageBlockJacobi,
        stages: s,
        ndof: n,
        factors: Factors::DofBlocks(lus),
    })
}

/// Additive Schwarz over the stage products of the patches:
/// `W⁻¹ = Σ_p R_pᵀ B_pp⁻¹ R_p`, with `B_pp = I ⊗ M_pp + Δt A ⊗ K_pp`
/// extracted from the assembled matrices. Dofs outside every patch (the
/// boundary) pass through unchanged.
pub fn stage_asm(sys: &StageSystem, pd: &PatchDecomposition) -> Result<Preconditioner> {
    let (s, n) = (sys.stages(), sys.ndof());
    ensure_dims!(
        pd.space().ndof() == n,
        "patch space has {} dofs, stage system has {}",
        pd.space().ndof(),
        n
    );
    let a = &sys.tableau().a;
    let dt = sys.dt();
    let lus = pd
        .patches()
        .par_iter()
        .enumerate()
        .map(|(id, p)| {
            let np = p.len();
            let mp = sys.m().submatrix(p, p);
            let kp = sys.k().submatrix(p, p);
            let block = DenseMatrix::from_fn(s * np, s * np, |r, c| {
                let (i, u) = (r / np, r % np);
                let (j, v) = (c / np, c % np);
                let mass = if i == j { mp[(u, v)] } else { 0.0 };
                mass + dt * a[(i, j)] * kp[(u, v)]
            });
            block
                .lu()
                .map_err(|e| Error::Singular(format!("patch {id}: {e}")))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut covered = vec![false; n];
    pd.patches().iter().flatten().for_each(|&d| covered[d] = true);
    Ok(Preconditioner {
        kind: PreconditionerKind::StageAsm,
        stages: s,
        ndof: n,
        factors: Factors::Patches {
            patches: pd.patches().to_vec(),
            lus,
            uncovered: (0..n).filter(|&d| !covered[d]).collect(),
        },
    })
}

/// `nu` sweeps of `x ← x − ω W⁻¹ (B x − b)`.
pub fn smooth_apply(
    prec: &Preconditioner,
    sys: &StageSystem,
    x: &[f64],
    b: &[f64],
    nu: usize,
    omega: f64,
) -> Result<Vec<f64>> {
    ensure_dims!(
        x.len() == sys.dim() && b.len() == sys.dim(),
        "iterate {} and rhs {} must have length {}",
        x.len(),
        b.len(),
        sys.dim()
    );
    let mut x = x.to_vec();
    for _ in 0..nu {
        let bx = sys.apply(&x)?;
        let r: Vec<f64> = bx.iter().zip(b).map(|(&v, &w)| v - w).collect();
        let z = prec.apply_inverse(&r)?;
        for (xv, zv) in x.iter_mut().zip(z) {
            *xv -= omega * zv;
        }
    }
    Ok(x)
}
