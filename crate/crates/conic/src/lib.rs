//! Mixed-integer second-order-cone programming.
//!
//! Programs are built with [`ConicProgram`], solved through a [`Solver`]
//! (continuous relaxation, branch-and-bound, or fix-and-dualize), and
//! inspected with [`soc_exactness`]. Row duals always follow the convention
//! `dual = ∂ objective / ∂ rhs`.

pub mod backend;
pub mod bnb;
pub mod error;
pub mod exactness;
pub mod program;
pub mod solution;
pub mod solver;
pub mod text;

pub use backend::{ClarabelBackend, ConicBackend};
pub use bnb::BnbReport;
pub use error::{ConicError, Result};
pub use exactness::{soc_exactness, ConeResidual, ExactnessReport};
pub use program::{AffineExpr, Cone, ConeId, ConeKind, ConicProgram, LinearConstraint, RowId, Sense, VarId, VarKind, Variable};
pub use solution::{ConicSolution, Status, Tolerances};
pub use solver::Solver;
