//! Real and complex linear algebra kernels.

pub mod dense;
pub mod eigen;
pub mod gmres;
pub mod market;
pub mod scalar;
pub mod sparse;

pub use dense::{dense_lu_solve, ComplexDenseMatrix, DenseMatrix, LuFactors};
pub use eigen::{dense_eigenvalues, spectral_radius};
pub use gmres::{gmres, GmresOptions, GmresStats};
pub use market::{from_matrix_market, read_matrix_market, to_matrix_market, write_matrix_market};
pub use scalar::Scalar;
pub use sparse::{kron_sparse, SparseMatrix, TripletBuilder};
