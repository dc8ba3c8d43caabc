//! Monolithic multigrid for the stage-coupled linear systems of fully
//! implicit Runge–Kutta methods applied to finite element heat problems.
//!
//! The stage system `(I ⊗ M + Δt A ⊗ K) k = f` is smoothed with
//! stage-coupled preconditioners and corrected on nested meshes. The
//! [`analysis`] module checks numerically that the coupled iteration is
//! similar, through the Butcher eigenvector matrix, to independent
//! single-stage iterations with complex time steps `λ_i Δt`.

pub mod analysis;
pub mod cli;
pub mod error;
pub mod fem;
pub mod linalg;
pub mod multigrid;
pub mod smoothers;
pub mod stage_system;
pub mod tableau;

pub use error::{Error, Result};
