//! Day-ahead MISOCP: assembly, branch-and-bound, re-fix and nodal prices.

use std::collections::BTreeMap;

use equiflex_conic::{soc_exactness, ConicProgram, ConicSolution, RowId, Solver, VarId};
use serde::{Deserialize, Serialize};

use super::ActorTable;
use crate::ders::{
    emit_dg, emit_energy_floors, emit_flexload, emit_pv, emit_storage, DerPortfolio, DgVars, FlexVars, PvVars,
    StageOneValues, StorageTrace, StorageVars,
};
use crate::error::{Error, Result};
use crate::grid::{emit_balances, emit_network, Injections, NetworkCase, NetworkVars, PowerFlowState};

/// Everything stage 1 consumes.
#[derive(Debug, Clone)]
pub struct MarketInputs {
    pub case: NetworkCase,
    pub portfolio: DerPortfolio,
    pub actors: ActorTable,
    /// Upstream price, $/kWh per interval.
    pub ug_price: Vec<f64>,
}

impl MarketInputs {
    pub fn validate(&self) -> Result<()> {
        if self.ug_price.len() != self.case.horizon {
            return Err(Error::Dimension(format!(
                "{} upstream prices for horizon {}",
                self.ug_price.len(),
                self.case.horizon
            )));
        }
        if let Some(t) = self.ug_price.iter().position(|p| !p.is_finite()) {
            return Err(Error::Validation(format!("upstream price at t={t} is not finite")));
        }
        self.actors.validate(&self.case)?;
        let owners = self.actors.ids();
        let owners = (!self.actors.actors.is_empty()).then_some(&owners);
        self.portfolio.validate(&self.case, owners)
    }

    /// $ per p.u. of power held for one interval.
    pub fn cost_scale(&self) -> f64 {
        self.case.base.base_kw() * self.case.dt
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Stage1Options {
    /// Solve the continuous relaxation only and price from its duals.
    pub relax_binaries: bool,
}

/// The assembled day-ahead program and handles into it.
#[derive(Debug, Clone)]
pub struct Stage1Model {
    pub program: ConicProgram,
    pub net: NetworkVars,
    /// `[bus][t]`
    pub balance: Vec<Vec<RowId>>,
    pub qbalance: Vec<Vec<RowId>>,
    pub pv: Vec<PvVars>,
    pub dg: Vec<DgVars>,
    pub storage: Vec<StorageVars>,
    pub flex: Vec<FlexVars>,
    pub floors: Vec<Option<RowId>>,
}

pub fn assemble_stage1(inputs: &MarketInputs) -> Result<Stage1Model> {
    inputs.validate()?;
    let case = &inputs.case;
    let (base, dt, horizon) = (&case.base, case.dt, case.horizon);
    let intervals: Vec<usize> = (0..horizon).collect();
    let scale = inputs.cost_scale();
    let bus = |id: usize| case.bus_index(id).expect("validated bus");

    let mut program = ConicProgram::new();
    let net = emit_network(&mut program, case, &intervals)?;
    let mut inj = Injections::with_fixed_loads(case, &intervals);

    for ps in &net.p_ug {
        for (t, &p) in ps.iter().enumerate() {
            program.add_objective_term(p, inputs.ug_price[t] * scale);
        }
    }

    let mut pv = Vec::new();
    for u in &inputs.portfolio.pv {
        let v = emit_pv(&mut program, u, base, horizon)?;
        for t in 0..horizon {
            inj.add_p(bus(u.bus), t, v.p[t], 1.0);
            inj.add_q(bus(u.bus), t, v.q[t], 1.0);
        }
        pv.push(v);
    }
    let mut dg = Vec::new();
    for u in &inputs.portfolio.dg {
        let v = emit_dg(&mut program, u, base, dt, horizon)?;
        for t in 0..horizon {
            inj.add_p(bus(u.bus), t, v.p[t], 1.0);
            program.add_objective_term(v.p[t], u.cost * scale);
        }
        dg.push(v);
    }
    let mut storage = Vec::new();
    for m in inputs.portfolio.storage_models(horizon) {
        let v = emit_storage(&mut program, &m, base, dt, horizon)?;
        for (t, s) in v.steps.iter().enumerate() {
            if let Some(s) = s {
                inj.add_p(bus(m.bus), t, s.p_dch, 1.0);
                inj.add_p(bus(m.bus), t, s.p_ch, -1.0);
                program.add_objective_term(s.p_ch, m.cost * scale);
                program.add_objective_term(s.p_dch, m.cost * scale);
            }
        }
        storage.push(v);
    }
    let mut flex = Vec::new();
    for u in &inputs.portfolio.flex {
        let v = emit_flexload(&mut program, u, base, horizon)?;
        for t in 0..horizon {
            inj.add_p(bus(u.bus), t, v.p[t], -1.0);
            program.add_objective_term(v.plus[t], u.cost * scale);
            program.add_objective_term(v.minus[t], u.cost * scale);
        }
        flex.push(v);
    }
    let floors = emit_energy_floors(&mut program, case, &inputs.portfolio, &flex)?;
    let (balance, qbalance) = emit_balances(&mut program, case, &net, &inj)?;
    Ok(Stage1Model { program, net, balance, qbalance, pv, dg, storage, flex, floors })
}

/// Nodal prices in $/kWh, `[bus index][t]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DlmpSchedule {
    pub bus_ids: Vec<usize>,
    pub lambda: Vec<Vec<f64>>,
    /// Reactive balance duals, $/kvarh; reported, not settled.
    pub lambda_q: Vec<Vec<f64>>,
}

impl DlmpSchedule {
    pub fn at(&self, bus: usize, t: usize) -> Option<f64> {
        let i = self.bus_ids.iter().position(|&b| b == bus)?;
        self.lambda[i].get(t).copied()
    }

    fn from_duals(case: &NetworkCase, model: &Stage1Model, sol: &ConicSolution) -> Self {
        let per_kwh = 1.0 / (case.base.base_kw() * case.dt);
        let read = |rows: &Vec<Vec<RowId>>| -> Vec<Vec<f64>> {
            rows.iter().map(|r| r.iter().map(|&row| sol.dual(row) * per_kwh).collect()).collect()
        };
        DlmpSchedule {
            bus_ids: case.buses.iter().map(|b| b.id).collect(),
            lambda: read(&model.balance),
            lambda_q: read(&model.qbalance),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DispatchResult {
    pub values: StageOneValues,
    pub flow: PowerFlowState,
    /// kW per interval, summed over PCCs.
    pub p_ug: Vec<f64>,
    /// $
    pub total_cost: f64,
    pub nodes_explored: usize,
    pub proven_optimal: bool,
    pub relaxed_binaries: bool,
    /// Binary assignment by variable name.
    pub binaries: BTreeMap<String, bool>,
    /// Largest slack of a relaxed branch cone, p.u.².
    pub max_cone_slack: f64,
    pub inexact_cones: Vec<String>,
}

impl DispatchResult {
    /// Flat `(unit, t, quantity, value)` rows in kW/kWh; `v_sq` in p.u.
    pub fn rows(&self, case: &NetworkCase) -> Vec<(String, usize, &'static str, f64)> {
        let mut out = Vec::new();
        for (t, &p) in self.p_ug.iter().enumerate() {
            out.push(("grid".to_string(), t, "p_ug", p));
        }
        let mut series = |unit: &String, name: &'static str, v: &[f64]| {
            for (t, &x) in v.iter().enumerate() {
                out.push((unit.clone(), t, name, x));
            }
        };
        for (id, v) in &self.values.pv {
            series(id, "p", v);
        }
        for (id, v) in &self.values.pv_q {
            series(id, "q", v);
        }
        for (id, v) in &self.values.dg {
            series(id, "p", v);
        }
        for (id, tr) in &self.values.storage {
            series(id, "p_ch", &tr.p_ch);
            series(id, "p_dch", &tr.p_dch);
            series(id, "soc", &tr.soc);
        }
        for (id, v) in &self.values.flex {
            series(id, "p", v);
        }
        for (bi, b) in case.buses.iter().enumerate() {
            series(&format!("bus:{}", b.id), "v_sq", &self.flow.v_sq[bi]);
        }
        let kw = |x: &Vec<f64>| x.iter().map(|&p| case.base.power_from_pu(p)).collect::<Vec<_>>();
        for (li, l) in case.lines.iter().enumerate() {
            let unit = format!("line:{}", l.label());
            series(&unit, "p_flow", &kw(&self.flow.p_flow[li]));
            series(&unit, "q_flow", &kw(&self.flow.q_flow[li]));
            series(&unit, "i_sq", &self.flow.i_sq[li]);
        }
        out
    }
}

/// Reads unit values (kW/kWh) from a solution of `model`.
pub fn extract_values(inputs: &MarketInputs, model: &Stage1Model, sol: &ConicSolution) -> StageOneValues {
    let base = &inputs.case.base;
    let kw = |vars: &[VarId]| vars.iter().map(|&v| base.power_from_pu(sol.value(v))).collect::<Vec<_>>();
    let mut out = StageOneValues::default();
    for (u, v) in inputs.portfolio.pv.iter().zip(&model.pv) {
        out.pv.insert(u.id.clone(), kw(&v.p));
        out.pv_q.insert(u.id.clone(), kw(&v.q));
    }
    for (u, v) in inputs.portfolio.dg.iter().zip(&model.dg) {
        out.dg.insert(u.id.clone(), kw(&v.p));
    }
    for v in &model.storage {
        let m = &v.model;
        let mut tr = StorageTrace::default();
        let mut soc = m.initial;
        for s in &v.steps {
            match s {
                Some(s) => {
                    tr.p_ch.push(base.power_from_pu(sol.value(s.p_ch)));
                    tr.p_dch.push(base.power_from_pu(sol.value(s.p_dch)));
                    tr.x_ch.push(sol.value(s.x_ch) > 0.5);
                    tr.x_dch.push(sol.value(s.x_dch) > 0.5);
                    // energies are p.u.·h on the same base as power
                    soc = base.power_from_pu(sol.value(s.soc));
                }
                None => {
                    tr.p_ch.push(0.0);
                    tr.p_dch.push(0.0);
                    tr.x_ch.push(false);
                    tr.x_dch.push(false);
                }
            }
            tr.soc.push(soc);
        }
        out.storage.insert(m.id.clone(), tr);
    }
    for (u, v) in inputs.portfolio.flex.iter().zip(&model.flex) {
        out.flex.insert(u.id.clone(), kw(&v.p));
    }
    out
}

/// Solved day-ahead market: the model, the priced solution and the report.
#[derive(Debug, Clone)]
pub struct ClearedMarket {
    pub model: Stage1Model,
    /// Program with binaries fixed, the one the prices come from.
    pub fixed_program: ConicProgram,
    pub solution: ConicSolution,
    pub dispatch: DispatchResult,
    pub dlmp: DlmpSchedule,
}

pub fn clear_energy_market(inputs: &MarketInputs, solver: &Solver, opts: Stage1Options) -> Result<ClearedMarket> {
    let model = assemble_stage1(inputs)?;
    let (fixed_program, solution, nodes, proven, assignment) = if opts.relax_binaries {
        let sol = solver.solve_relaxation(&model.program)?;
        (model.program.clone(), sol, 1, true, Vec::new())
    } else {
        let report = solver.solve_mixed_integer(&model.program)?;
        if !report.proven_optimal {
            log::warn!(
                "stage 1: node limit hit after {} nodes; using incumbent with bound {}",
                report.nodes_explored,
                report.best_bound
            );
        }
        let fixed = model.program.with_fixed_binaries(&report.fixed_binaries)?;
        let sol = solver.refix_and_dualize(&model.program, &report.fixed_binaries)?;
        (fixed, sol, report.nodes_explored, report.proven_optimal, report.fixed_binaries)
    };
    let exact = soc_exactness(&fixed_program, &solution, solver.tolerances.exactness_tol);
    for c in exact.inexact() {
        log::warn!("stage 1: relaxed cone {} not tight (slack {:e})", c.tag, c.slack);
    }
    let flow = PowerFlowState::extract(&model.net, &solution);
    let case = &inputs.case;
    let dispatch = DispatchResult {
        values: extract_values(inputs, &model, &solution),
        p_ug: flow.p_ug.iter().map(|&p| case.base.power_from_pu(p)).collect(),
        flow,
        total_cost: solution.objective_value,
        nodes_explored: nodes,
        proven_optimal: proven,
        relaxed_binaries: opts.relax_binaries,
        binaries: assignment
            .iter()
            .map(|&(v, b)| (model.program.variable(v).name.clone(), b))
            .collect(),
        max_cone_slack: exact.max_slack,
        inexact_cones: exact.inexact().map(|c| c.tag.clone()).collect(),
    };
    let dlmp = DlmpSchedule::from_duals(case, &model, &solution);
    Ok(ClearedMarket { model, fixed_program, solution, dispatch, dlmp })
}
