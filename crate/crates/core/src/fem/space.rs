use std::sync::Arc;

use super::mesh::{on_unit_square_boundary, Mesh, Point};
use crate::error::{Error, Result};

/// Continuous Lagrange space of degree 1 or 2 on a triangulation.
///
/// Dofs are numbered vertices first, then (for P2) one per mesh edge in edge
/// order. Local dofs on a triangle are its three vertices followed by the
/// edges (0,1), (1,2), (2,0).
#[derive(Debug, Clone)]
pub struct FunctionSpace {
    mesh: Arc<Mesh>,
    degree: usize,
    dof_coords: Vec<Point>,
    cell_dofs: Vec<usize>,
    is_boundary: Vec<bool>,
    boundary_dofs: Vec<usize>,
}

impl FunctionSpace {
    pub fn new(mesh: Arc<Mesh>, degree: usize) -> Result<Self> {
        if !(1..=2).contains(&degree) {
            return Err(Error::InvalidArgument(format!("unsupported degree {degree}")));
        }
        let nv = mesh.num_vertices();
        let mut dof_coords: Vec<Point> = mesh.vertices().to_vec();
        if degree == 2 {
            for &[a, b] in mesh.edges() {
                let (p, q) = (mesh.vertices()[a], mesh.vertices()[b]);
                dof_coords.push([0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])]);
            }
        }
        let nloc = local_dim(degree);
        let mut cell_dofs = Vec::with_capacity(nloc * mesh.num_triangles());
        for (tri, te) in mesh.triangles().iter().zip(mesh.triangle_edges()) {
            cell_dofs.extend_from_slice(tri);
            if degree == 2 {
                cell_dofs.extend(te.iter().map(|&e| nv + e));
            }
        }
        let is_boundary: Vec<bool> = dof_coords.iter().map(|&p| on_unit_square_boundary(p)).collect();
        let boundary_dofs = (0..dof_coords.len()).filter(|&i| is_boundary[i]).collect();
        Ok(Self {
            mesh,
            degree,
            dof_coords,
            cell_dofs,
            is_boundary,
            boundary_dofs,
        })
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn ndof(&self) -> usize {
        self.dof_coords.len()
    }

    pub fn dof_coords(&self) -> &[Point] {
        &self.dof_coords
    }

    pub fn local_dim(&self) -> usize {
        local_dim(self.degree)
    }

    /// Global dofs of triangle `t` in local order.
    pub fn cell_dofs(&self, t: usize) -> &[usize] {
        let n = self.local_dim();
        &self.cell_dofs[t * n..(t + 1) * n]
    }

    pub fn boundary_dofs(&self) -> &[usize] {
        &self.boundary_dofs
    }

    pub fn is_boundary_dof(&self, i: usize) -> bool {
        self.is_boundary[i]
    }

    pub fn interior_dofs(&self) -> Vec<usize> {
        (0..self.ndof()).filter(|&i| !self.is_boundary[i]).collect()
    }

    /// Evaluates the finite element function with coefficients `coeffs` at
    /// barycentric point `bary` of triangle `t`.
    pub fn evaluate(&self, coeffs: &[f64], t: usize, bary: [f64; 3]) -> f64 {
        let phi = basis_values(self.degree, bary);
        self.cell_dofs(t)
            .iter()
            .zip(&phi)
            .map(|(&d, &p)| coeffs[d] * p)
            .sum()
    }

    /// Nodal interpolant of `f`.
    pub fn interpolate(&self, f: impl Fn(Point) -> f64) -> Vec<f64> {
        self.dof_coords.iter().map(|&p| f(p)).collect()
    }
}

pub fn local_dim(degree: usize) -> usize {
    if degree == 1 {
        3
    } else {
        6
    }
}

const LOCAL_EDGES: [(usize, usize); 3] = [(0, 1), (1, 2), (2, 0)];

/// Local basis values at barycentric point `l`; entries past
/// [`local_dim`] are zero.
pub fn basis_values(degree: usize, l: [f64; 3]) -> [f64; 6] {
    let mut out = [0.0; 6];
    if degree == 1 {
        out[..3].copy_from_slice(&l);
    } else {
        for i in 0..3 {
            out[i] = l[i] * (2.0 * l[i] - 1.0);
        }
        for (k, &(i, j)) in LOCAL_EDGES.iter().enumerate() {
            out[3 + k] = 4.0 * l[i] * l[j];
        }
    }
    out
}

/// Gradients with respect to the reference coordinates `(ξ, η)`, where
/// `λ = (1 - ξ - η, ξ, η)`.
pub fn basis_ref_gradients(degree: usize, l: [f64; 3]) -> [[f64; 2]; 6] {
    const DL: [[f64; 2]; 3] = [[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]];
    let mut out = [[0.0; 2]; 6];
    if degree == 1 {
        out[..3].copy_from_slice(&DL);
    } else {
        for i in 0..3 {
            let f = 4.0 * l[i] - 1.0;
            out[i] = [f * DL[i][0], f * DL[i][1]];
        }
        for (k, &(i, j)) in LOCAL_EDGES.iter().enumerate() {
            out[3 + k] = [
                4.0 * (l[j] * DL[i][0] + l[i] * DL[j][0]),
                4.0 * (l[j] * DL[i][1] + l[i] * DL[j][1]),
            ];
        }
    }
    out
}

/// Barycentric coordinates of local dof `k`.
pub(crate) fn local_dof_barycentric(k: usize) -> [f64; 3] {
    match k {
        0 => [1.0, 0.0, 0.0],
        1 => [0.0, 1.0, 0.0],
        2 => [0.0, 0.0, 1.0],
        3 => [0.5, 0.5, 0.0],
        4 => [0.0, 0.5, 0.5],
        _ => [0.5, 0.0, 0.5],
    }
}
