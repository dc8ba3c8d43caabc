use std::sync::Arc;

use super::mesh::child_vertex_barycentrics;
use super::space::{basis_values, local_dof_barycentric, FunctionSpace};
use crate::error::{Error, Result};
use crate::linalg::{SparseMatrix, TripletBuilder};

/// Matrix of the inclusion `V_H ⊂ V_h`: column `j` holds the nodal values of
/// coarse basis function `j` at the fine dofs.
pub fn prolongation(coarse: &FunctionSpace, fine: &FunctionSpace) -> Result<SparseMatrix> {
    if coarse.degree() != fine.degree() {
        return Err(Error::InvalidArgument(format!(
            "degrees differ: coarse {} vs fine {}",
            coarse.degree(),
            fine.degree()
        )));
    }
    let nested = fine
        .mesh()
        .parent()
        .is_some_and(|p| Arc::ptr_eq(&p.coarse, coarse.mesh()) || *p.coarse == **coarse.mesh());
    if !nested {
        return Err(Error::InvalidArgument(
            "fine mesh is not a refinement of the coarse mesh".into(),
        ));
    }
    let nloc = coarse.local_dim();
    let mut assigned = vec![false; fine.ndof()];
    let mut b = TripletBuilder::new(fine.ndof(), coarse.ndof());
    for t in 0..coarse.mesh().num_triangles() {
        let cdofs = coarse.cell_dofs(t);
        for child in 0..4 {
            let corners = child_vertex_barycentrics(child);
            let fdofs = fine.cell_dofs(4 * t + child);
            for (k, &fd) in fdofs.iter().enumerate() {
                if assigned[fd] {
                    continue;
                }
                assigned[fd] = true;
                // child-local barycentrics -> parent barycentrics
                let lc = local_dof_barycentric(k);
                let mut l = [0.0; 3];
                for (w, corner) in lc.iter().zip(&corners) {
                    for d in 0..3 {
                        l[d] += w * corner[d];
                    }
                }
                let phi = basis_values(coarse.degree(), l);
                for a in 0..nloc {
                    b.push(fd, cdofs[a], phi[a]);
                }
            }
        }
    }
    Ok(b.build())
}
