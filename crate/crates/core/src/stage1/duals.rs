//! Finite-difference check of nodal prices on the binary-fixed program.

use equiflex_conic::Solver;
use serde::{Deserialize, Serialize};

use super::ClearedMarket;
use crate::error::Result;
use crate::grid::NetworkCase;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualCheck {
    pub bus: usize,
    pub t: usize,
    /// $/kWh
    pub dlmp: f64,
    pub fd_up: f64,
    pub fd_down: f64,
    /// One-sided slopes differ: the price sits on a kink.
    pub degenerate: bool,
    /// Relative error against the central difference.
    pub rel_err: f64,
}

impl DualCheck {
    /// Passes when the price matches the central slope, or lies between the
    /// one-sided slopes on a kink.
    pub fn passes(&self, tol: f64) -> bool {
        if self.degenerate {
            let (lo, hi) = (self.fd_up.min(self.fd_down), self.fd_up.max(self.fd_down));
            let slack = tol * self.dlmp.abs().max(1e-6);
            self.dlmp >= lo - slack && self.dlmp <= hi + slack
        } else {
            self.rel_err <= tol
        }
    }
}

/// Perturbs the active demand at each `(bus, t)` by ±`eps_kw` and re-solves.
pub fn perturbation_check(
    case: &NetworkCase,
    market: &ClearedMarket,
    solver: &Solver,
    samples: &[(usize, usize)],
    eps_kw: f64,
    kink_tol: f64,
) -> Result<Vec<DualCheck>> {
    let eps = case.base.power_to_pu(eps_kw);
    let per_kwh = eps_kw * case.dt;
    let base_obj = market.solution.objective_value;
    let mut out = Vec::with_capacity(samples.len());
    for &(bus, t) in samples {
        let bi = case.bus_index(bus).ok_or_else(|| crate::Error::Validation(format!("no bus {bus}")))?;
        let row = market.model.balance[bi][t];
        let rhs = market.fixed_program.constraint(row).rhs;
        let solve = |delta: f64| -> Result<f64> {
            let mut p = market.fixed_program.clone();
            p.set_rhs(row, rhs + delta);
            Ok(solver.solve_relaxation(&p)?.objective_value)
        };
        let up = (solve(eps)? - base_obj) / per_kwh;
        let down = (base_obj - solve(-eps)?) / per_kwh;
        let central = 0.5 * (up + down);
        let dlmp = market.dlmp.lambda[bi][t];
        let degenerate = (up - down).abs() > kink_tol * central.abs().max(1e-6);
        out.push(DualCheck {
            bus,
            t,
            dlmp,
            fd_up: up,
            fd_down: down,
            degenerate,
            rel_err: (dlmp - central).abs() / central.abs().max(1e-9),
        });
    }
    Ok(out)
}
