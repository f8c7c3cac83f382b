use crate::program::{ConicProgram, RowId, VarId};

/// Numerical tolerances shared by the continuous solver, branch-and-bound
/// and the exactness report. All values are on the program's own scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub feas_tol: f64,
    pub gap_tol: f64,
    pub int_tol: f64,
    pub abs_gap: f64,
    /// Relative pruning gap, applied as `max(abs_gap, rel_gap·|incumbent|)`.
    pub rel_gap: f64,
    pub exactness_tol: f64,
    /// Feasibility and gap tolerance of the final fixed-binary solve that
    /// prices the incumbent.
    pub polish_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            feas_tol: 1e-8,
            gap_tol: 1e-8,
            int_tol: 1e-6,
            abs_gap: 1e-6,
            rel_gap: 1e-7,
            exactness_tol: 1e-6,
            polish_tol: 1e-10,
        }
    }
}

impl Tolerances {
    pub fn prune_gap(&self, incumbent: f64) -> f64 {
        self.abs_gap.max(self.rel_gap * incumbent.abs())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Status {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
    NumericalError,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConicSolution {
    pub status: Status,
    /// One value per program variable, fixed variables included.
    pub primal: Vec<f64>,
    /// One value per linear row: `∂ objective / ∂ rhs`.
    pub row_duals: Vec<f64>,
    /// Dual vector of each cone, in the solver's standard-cone coordinates.
    pub cone_duals: Vec<Vec<f64>>,
    pub objective_value: f64,
    pub dual_objective: f64,
    /// `|primal − dual| / (1 + |primal|)`.
    pub gap: f64,
    pub iterations: u32,
    /// Converged only to the solver's reduced tolerances.
    pub reduced_accuracy: bool,
    /// Row/cone/bound labels carrying weight in an infeasibility certificate.
    pub certificate: Vec<String>,
}

impl ConicSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == Status::Optimal
    }

    pub fn value(&self, v: VarId) -> f64 {
        self.primal[v.0]
    }

    pub fn dual(&self, r: RowId) -> f64 {
        self.row_duals[r.0]
    }

    pub fn dual_by_tag(&self, program: &ConicProgram, tag: &str) -> Option<f64> {
        program.row_by_tag(tag).map(|r| self.row_duals[r.0])
    }

    pub(crate) fn empty(status: Status, program: &ConicProgram) -> Self {
        ConicSolution {
            status,
            primal: vec![f64::NAN; program.num_variables()],
            row_duals: vec![0.0; program.num_constraints()],
            cone_duals: program.cones().iter().map(|c| vec![0.0; c.members.len()]).collect(),
            objective_value: f64::NAN,
            dual_objective: f64::NAN,
            gap: f64::NAN,
            iterations: 0,
            reduced_accuracy: false,
            certificate: Vec::new(),
        }
    }
}
