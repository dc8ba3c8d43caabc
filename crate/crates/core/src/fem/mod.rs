//! Lagrange finite elements on nested triangulations of the unit square.

pub mod assembly;
pub mod mesh;
pub mod space;
pub mod transfer;

pub use assembly::{apply_dirichlet, assemble, assemble_load, element_matrices, l2_error, AssembledForms};
pub use mesh::{refine, unit_square_mesh, Mesh, Point, Refinement, VertexOrigin};
pub use space::FunctionSpace;
pub use transfer::prolongation;
