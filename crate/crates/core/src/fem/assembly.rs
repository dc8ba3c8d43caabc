use std::sync::Arc;

use super::mesh::Point;
use super::space::{basis_ref_gradients, basis_values, FunctionSpace};
use crate::error::{Error, Result};
use crate::linalg::{DenseMatrix, SparseMatrix, TripletBuilder};

/// Symmetric six-point rule on the reference triangle, exact for degree 4.
/// Entries are `(ξ, η, weight)` with weights summing to one; multiply by the
/// triangle area.
pub const TRIANGLE_RULE: [(f64, f64, f64); 6] = {
    const A1: f64 = 0.445_948_490_915_964_886_318_329_253_883;
    const A2: f64 = 0.091_576_213_509_770_743_459_571_463_402_2;
    const W1: f64 = 0.223_381_589_678_011_465_695_007_008_433;
    const W2: f64 = 0.109_951_743_655_321_867_638_326_324_9;
    [
        (A1, A1, W1),
        (A1, 1.0 - 2.0 * A1, W1),
        (1.0 - 2.0 * A1, A1, W1),
        (A2, A2, W2),
        (A2, 1.0 - 2.0 * A2, W2),
        (1.0 - 2.0 * A2, A2, W2),
    ]
};

/// Mass and stiffness matrices of a function space.
#[derive(Debug, Clone)]
pub struct AssembledForms {
    pub m: SparseMatrix,
    pub k: SparseMatrix,
    pub space: Arc<FunctionSpace>,
}

struct AffineMap {
    origin: Point,
    jac: [[f64; 2]; 2],
    /// `J^{-T}`
    inv_t: [[f64; 2]; 2],
    area: f64,
}

impl AffineMap {
    fn new(p: [Point; 3]) -> Result<Self> {
        let jac = [[p[1][0] - p[0][0], p[2][0] - p[0][0]], [p[1][1] - p[0][1], p[2][1] - p[0][1]]];
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        if !(det.abs() > 0.0) {
            return Err(Error::InvalidArgument(format!("degenerate triangle {p:?}")));
        }
        let inv_t = [[jac[1][1] / det, -jac[1][0] / det], [-jac[0][1] / det, jac[0][0] / det]];
        Ok(Self {
            origin: p[0],
            jac,
            inv_t,
            area: 0.5 * det.abs(),
        })
    }

    fn map(&self, xi: f64, eta: f64) -> Point {
        [
            self.origin[0] + self.jac[0][0] * xi + self.jac[0][1] * eta,
            self.origin[1] + self.jac[1][0] * xi + self.jac[1][1] * eta,
        ]
    }

    fn grad(&self, g: [f64; 2]) -> [f64; 2] {
        [
            self.inv_t[0][0] * g[0] + self.inv_t[0][1] * g[1],
            self.inv_t[1][0] * g[0] + self.inv_t[1][1] * g[1],
        ]
    }
}

/// Local mass and stiffness matrices on the triangle with vertices `p`.
pub fn element_matrices(degree: usize, p: [Point; 3]) -> Result<(DenseMatrix<f64>, DenseMatrix<f64>)> {
    let map = AffineMap::new(p)?;
    let nloc = super::space::local_dim(degree);
    let mut m = DenseMatrix::zeros(nloc, nloc);
    let mut k = DenseMatrix::zeros(nloc, nloc);
    for &(xi, eta, w) in &TRIANGLE_RULE {
        let l = [1.0 - xi - eta, xi, eta];
        let phi = basis_values(degree, l);
        let rg = basis_ref_gradients(degree, l);
        let grads: Vec<[f64; 2]> = rg[..nloc].iter().map(|&g| map.grad(g)).collect();
        let wt = w * map.area;
        for a in 0..nloc {
            for b in 0..nloc {
                m[(a, b)] += wt * (phi[a] * phi[b]);
                k[(a, b)] += wt * (grads[a][0] * grads[b][0] + grads[a][1] * grads[b][1]);
            }
        }
    }
    Ok((m, k))
}

fn cell_points(space: &FunctionSpace, t: usize) -> [Point; 3] {
    let mesh = space.mesh();
    mesh.triangles()[t].map(|v| mesh.vertices()[v])
}

/// Mass `M_ij = (φ_j, φ_i)` and stiffness `K_ij = (∇φ_j, ∇φ_i)`, without
/// boundary conditions.
pub fn assemble(space: &Arc<FunctionSpace>) -> Result<AssembledForms> {
    let n = space.ndof();
    let nloc = space.local_dim();
    let ncell = space.mesh().num_triangles();
    let mut mb = TripletBuilder::with_capacity(n, n, ncell * nloc * nloc);
    let mut kb = TripletBuilder::with_capacity(n, n, ncell * nloc * nloc);
    for t in 0..ncell {
        let (me, ke) = element_matrices(space.degree(), cell_points(space, t))?;
        let dofs = space.cell_dofs(t);
        for a in 0..nloc {
            for b in 0..nloc {
                mb.push(dofs[a], dofs[b], me[(a, b)]);
                kb.push(dofs[a], dofs[b], ke[(a, b)]);
            }
        }
    }
    Ok(AssembledForms {
        m: mb.build(),
        k: kb.build(),
        space: Arc::clone(space),
    })
}

/// `F_i = ∫ f(x, t) φ_i dx`.
pub fn assemble_load(space: &FunctionSpace, f: impl Fn(Point, f64) -> f64, time: f64) -> Result<Vec<f64>> {
    let mut out = vec![0.0; space.ndof()];
    let nloc = space.local_dim();
    for t in 0..space.mesh().num_triangles() {
        let map = AffineMap::new(cell_points(space, t))?;
        let dofs = space.cell_dofs(t);
        for &(xi, eta, w) in &TRIANGLE_RULE {
            let phi = basis_values(space.degree(), [1.0 - xi - eta, xi, eta]);
            let fx = f(map.map(xi, eta), time) * w * map.area;
            for a in 0..nloc {
                out[dofs[a]] += fx * phi[a];
            }
        }
    }
    Ok(out)
}

/// `‖u_h − u‖_{L²}` for the finite element function with coefficients
/// `coeffs`, by the assembly quadrature rule.
pub fn l2_error(space: &FunctionSpace, coeffs: &[f64], u: impl Fn(Point) -> f64) -> Result<f64> {
    if coeffs.len() != space.ndof() {
        return Err(Error::DimensionMismatch(format!(
            "coefficient vector has length {}, space has {} dofs",
            coeffs.len(),
            space.ndof()
        )));
    }
    let mut acc = 0.0;
    for t in 0..space.mesh().num_triangles() {
        let map = AffineMap::new(cell_points(space, t))?;
        for &(xi, eta, w) in &TRIANGLE_RULE {
            let d = space.evaluate(coeffs, t, [1.0 - xi - eta, xi, eta]) - u(map.map(xi, eta));
            acc += w * map.area * d * d;
        }
    }
    Ok(acc.sqrt())
}

/// Homogeneous Dirichlet conditions by symmetric elimination: boundary rows
/// and columns are cleared in both matrices, then `M_ii = 1`, `K_ii = 0`.
/// Every pencil `M + z K` then acts as the identity on boundary dofs.
pub fn apply_dirichlet(forms: &AssembledForms) -> AssembledForms {
    let space = &forms.space;
    let filter = |a: &SparseMatrix, diag: f64| {
        let mut b = TripletBuilder::with_capacity(a.nrows(), a.ncols(), a.nnz());
        for (i, j, v) in a.triplets() {
            if !space.is_boundary_dof(i) && !space.is_boundary_dof(j) {
                b.push(i, j, v);
            }
        }
        for &i in space.boundary_dofs() {
            b.push(i, i, diag);
        }
        b.build()
    };
    AssembledForms {
        m: filter(&forms.m, 1.0),
        k: filter(&forms.k, 0.0),
        space: Arc::clone(space),
    }
}
