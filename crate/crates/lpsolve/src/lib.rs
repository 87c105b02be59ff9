//! Sparse linear programming for energy system models.
//!
//! [`LpModel`] holds a minimization problem with bounded variables and
//! `<=`, `=`, `>=` rows. [`solve`] runs a bounded revised simplex with a
//! sparse LU basis factorization and supports warm starts through
//! [`Basis`]. Models can be exchanged with other solvers as MPS files.

mod backend;
mod error;
mod lu;
mod model;
pub mod mps;
mod scaling;
mod simplex;
mod solution;
mod sparse;

pub use backend::{LpBackend, SimplexBackend};
pub use error::{ModelError, MpsError, SolveError};
pub use model::{CscMatrix, LpModel, Row, RowId, Sense, VarId, Variable};
pub use simplex::solve;
pub use solution::{Basis, BasisStatus, LpSolution, SolveOptions, SolveStats, Status};
