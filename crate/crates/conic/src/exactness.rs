use crate::program::ConicProgram;
use crate::solution::ConicSolution;

#[derive(Debug, Clone, PartialEq)]
pub struct ConeResidual {
    pub tag: String,
    /// `t² − ‖x‖²` (or `2uv − ‖x‖²`) at the solution.
    pub slack: f64,
    pub inexact: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExactnessReport {
    pub cones: Vec<ConeResidual>,
    pub max_slack: f64,
}

impl ExactnessReport {
    pub fn inexact(&self) -> impl Iterator<Item = &ConeResidual> {
        self.cones.iter().filter(|c| c.inexact)
    }

    pub fn is_exact(&self) -> bool {
        self.cones.iter().all(|c| !c.inexact)
    }
}

/// Slack of every cone marked `relaxed`; a slack above `tol` means the
/// relaxation is not tight there and the solution is not physically exact.
pub fn soc_exactness(program: &ConicProgram, solution: &ConicSolution, tol: f64) -> ExactnessReport {
    let cones: Vec<ConeResidual> = program
        .cones()
        .iter()
        .filter(|c| c.relaxed)
        .map(|c| {
            let slack = c.slack(&solution.primal);
            ConeResidual { tag: c.tag.clone(), slack, inexact: slack > tol }
        })
        .collect();
    let max_slack = cones.iter().map(|c| c.slack).fold(0.0, f64::max);
    ExactnessReport { cones, max_slack }
}
