//! Finite elements for the Poisson equation with rough Dirichlet data on
//! domains with a reentrant corner.
//!
//! The domain is the square `(-1, 1)^2` cut to the sector `0 <= theta <= omega`
//! around the origin. Two remedies for the corner singularity are provided:
//! meshes graded toward the corner ([`mesh::refine_to_graded`]) and the dual
//! singular complement method on quasi-uniform meshes ([`dscm`]).

pub mod dscm;
pub mod error;
pub mod fem;
pub mod geometry;
pub mod mesh;
pub mod quadrature;
pub mod singular;
pub mod sparse;
pub mod study;
pub mod trace;

pub use dscm::{dscm_solve, DscmSettings, DscmSolution, DualSingularComplement};
pub use error::{Error, Result};
pub use fem::{LinearSolver, NodalField};
pub use mesh::{GradingParams, Mesh};
pub use singular::SingularExponent;
pub use sparse::SparseMatrix;
pub use trace::{Regularization, TraceField};
