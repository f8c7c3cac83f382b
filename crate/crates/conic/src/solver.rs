use std::fmt;
use std::sync::Arc;

use crate::backend::{ClarabelBackend, ConicBackend};
use crate::bnb::{self, BnbReport};
use crate::error::{ConicError, Result};
use crate::program::{ConicProgram, VarId};
use crate::solution::{ConicSolution, Status, Tolerances};

/// Entry point for every solve: a backend plus tolerances and limits.
#[derive(Clone)]
pub struct Solver {
    backend: Arc<dyn ConicBackend>,
    pub tolerances: Tolerances,
    pub max_iter: u32,
    pub node_limit: usize,
    /// Evaluate sibling branch-and-bound nodes concurrently.
    pub parallel: bool,
}

impl fmt::Debug for Solver {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Solver")
            .field("tolerances", &self.tolerances)
            .field("max_iter", &self.max_iter)
            .field("node_limit", &self.node_limit)
            .field("parallel", &self.parallel)
            .finish()
    }
}

impl Default for Solver {
    fn default() -> Self {
        Solver::new()
    }
}

impl Solver {
    pub fn new() -> Self {
        Solver::with_backend(Arc::new(ClarabelBackend))
    }

    pub fn with_backend(backend: Arc<dyn ConicBackend>) -> Self {
        Solver {
            backend,
            tolerances: Tolerances::default(),
            max_iter: 200,
            node_limit: 10_000,
            parallel: false,
        }
    }

    pub fn serial(mut self, serial: bool) -> Self {
        self.parallel = !serial;
        self
    }

    /// Solves the continuous relaxation and returns whatever status results.
    pub fn solve_raw(&self, program: &ConicProgram) -> ConicSolution {
        self.backend.solve(program, &self.tolerances, self.max_iter)
    }

    /// Solves the continuous relaxation (binaries relaxed to `[0, 1]`).
    pub fn solve_relaxation(&self, program: &ConicProgram) -> Result<ConicSolution> {
        into_result(self.solve_raw(program))
    }

    pub fn solve_mixed_integer(&self, program: &ConicProgram) -> Result<BnbReport> {
        bnb::branch_and_bound(self, program)
    }

    /// Fixes every binary to its assigned value and re-solves the continuous
    /// program at `polish_tol`, returning primal values and duals for every
    /// tagged row. Falls back to the regular tolerances if the tight solve
    /// does not converge.
    pub fn refix_and_dualize(
        &self,
        program: &ConicProgram,
        assignment: &[(VarId, bool)],
    ) -> Result<ConicSolution> {
        for b in program.binaries() {
            if !assignment.iter().any(|&(v, _)| v == b) {
                return Err(ConicError::IncompleteAssignment(program.variable(b).name.clone()));
            }
        }
        let fixed = program.with_fixed_binaries(assignment)?;
        let mut tight = self.tolerances;
        tight.feas_tol = tight.feas_tol.min(tight.polish_tol);
        tight.gap_tol = tight.gap_tol.min(tight.polish_tol);
        let sol = self.backend.solve(&fixed, &tight, self.max_iter);
        match sol.status {
            Status::IterationLimit | Status::NumericalError => self.solve_relaxation(&fixed),
            _ => into_result(sol),
        }
    }
}

pub(crate) fn into_result(sol: ConicSolution) -> Result<ConicSolution> {
    match sol.status {
        Status::Optimal => Ok(sol),
        Status::Infeasible => Err(ConicError::Infeasible { tags: sol.certificate }),
        Status::Unbounded => Err(ConicError::Unbounded),
        Status::IterationLimit => Err(ConicError::IterationLimit(sol.iterations)),
        Status::NumericalError => Err(ConicError::Numerical(format!(
            "no convergence after {} iterations",
            sol.iterations
        ))),
    }
}
