//! Conic programs (linear, second-order cone and semidefinite constraints)
//! and the interior-point solver used by the optimizers.

pub(crate) mod cones;
pub mod complex;
pub mod dump;
pub mod program;
pub mod solver;

pub use complex::{embed_hermitian, CAffine, VarAlloc};
pub use dump::dump_program;
pub use program::{AffineForm, ConicProgram, SocConstraint, SymAffine};
pub use solver::{solve, solve_with, ConicSolution, SolveStatus, SolverSettings};
