//! Real-time flexibility market: a fresh branch-flow state at the disturbed
//! intervals, unit flexibility around the day-ahead point, and per-actor
//! curtailment traded off against its spread.

use equiflex_conic::{soc_exactness, AffineExpr, ConeKind, ConicProgram, ConicSolution, Sense, Solver, VarId};
use serde::{Deserialize, Serialize};

use super::Disturbance;
use crate::ders::{emit_flex_envelopes, DerKind, FlexEnvelope, StageOneValues};
use crate::error::{Error, Result};
use crate::grid::{emit_balances, emit_network, Injections, NetworkCase, NetworkVars, PowerFlowState};
use crate::stage1::{DispatchResult, MarketInputs};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FairnessMode {
    /// Sum of absolute pairwise differences of prorated curtailment.
    #[default]
    Pairwise,
    /// Largest minus smallest prorated curtailment.
    Spread,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stage2Options {
    pub w: f64,
    pub mode: FairnessMode,
    /// False fixes every UF/DF to zero.
    pub flex_enabled: bool,
    /// Objective weight per p.u. of line loss.
    pub loss_weight: f64,
    /// Objective weight per p.u. of UF + DF.
    pub flex_weight: f64,
}

impl Default for Stage2Options {
    fn default() -> Self {
        Stage2Options { w: 1.0, mode: FairnessMode::Pairwise, flex_enabled: true, loss_weight: 0.1, flex_weight: 1e-3 }
    }
}

/// Stage-2 program and handles. `k` indexes `intervals`.
#[derive(Debug, Clone)]
pub struct Stage2Model {
    pub program: ConicProgram,
    pub intervals: Vec<usize>,
    pub net: NetworkVars,
    pub envelopes: Vec<FlexEnvelope>,
    /// `[actor][k]`, `None` when the actor cannot be curtailed.
    pub curtail: Vec<Vec<Option<VarId>>>,
    /// Rows of the objective split: curtailment, fairness and tie-break terms.
    pub curtail_terms: Vec<(VarId, f64)>,
    pub fairness_terms: Vec<(VarId, f64)>,
    pub tiebreak_terms: Vec<(VarId, f64)>,
}

fn stage1_net_injection(inputs: &MarketInputs, values: &StageOneValues, bus: usize, t: usize) -> Result<f64> {
    let missing = |id: &str| Error::MissingStageOne(id.to_string());
    let get = |m: &std::collections::BTreeMap<String, Vec<f64>>, id: &str| {
        m.get(id).and_then(|v| v.get(t)).copied().ok_or_else(|| missing(id))
    };
    let p = &inputs.portfolio;
    let mut kw = 0.0;
    for u in p.pv.iter().filter(|u| u.bus == bus) {
        kw += get(&values.pv, &u.id)?;
    }
    for u in p.dg.iter().filter(|u| u.bus == bus) {
        kw += get(&values.dg, &u.id)?;
    }
    for m in p.storage_models(inputs.case.horizon).iter().filter(|m| m.bus == bus) {
        let tr = values.storage.get(&m.id).ok_or_else(|| missing(&m.id))?;
        kw += tr.p_dch.get(t).copied().ok_or_else(|| missing(&m.id))?;
        kw -= tr.p_ch.get(t).copied().ok_or_else(|| missing(&m.id))?;
    }
    for u in p.flex.iter().filter(|u| u.bus == bus) {
        kw -= get(&values.flex, &u.id)?;
    }
    Ok(kw)
}

/// Curtailment cap of each actor: its share of the post-disturbance load.
pub fn curtailment_cap(inputs: &MarketInputs, dist: &Disturbance, actor: usize, t: usize) -> f64 {
    let a = &inputs.actors.actors[actor];
    let bi = inputs.case.bus_index(a.bus).expect("validated");
    (a.baseline[t] + a.share * dist.delta[bi][t]).max(0.0)
}

pub fn assemble_stage2(
    inputs: &MarketInputs,
    dispatch: &DispatchResult,
    dist: &Disturbance,
    opts: &Stage2Options,
) -> Result<Stage2Model> {
    let case = &inputs.case;
    dist.validate(case)?;
    if !(opts.w >= 0.0 && opts.w.is_finite()) {
        return Err(Error::Config(format!("fairness weight must be nonnegative, got {}", opts.w)));
    }
    let base = &case.base;
    let intervals = dist.affected();
    let mut program = ConicProgram::new();
    let net = emit_network(&mut program, case, &intervals)?;
    let mut inj = Injections::new(case.buses.len(), intervals.len());
    for (bi, b) in case.buses.iter().enumerate() {
        for (k, &t) in intervals.iter().enumerate() {
            let load = b.fixed_load[t] + dist.delta[bi][t];
            let s1 = stage1_net_injection(inputs, &dispatch.values, b.id, t)?;
            inj.p_demand[bi][k] = base.power_to_pu(load - s1);
            inj.q_demand[bi][k] = base.power_to_pu(load * b.q_ratio());
        }
    }

    let envelopes =
        emit_flex_envelopes(&mut program, case, &inputs.portfolio, &dispatch.values, &intervals, opts.flex_enabled)?;
    let mut tiebreak_terms = Vec::new();
    let kpos = |t: usize| intervals.iter().position(|&x| x == t).expect("affected interval");
    for env in &envelopes {
        let (bi, k) = (case.bus_index(env.bounds.bus).expect("validated"), kpos(env.bounds.t));
        if let Some(uf) = env.uf {
            inj.add_p(bi, k, uf, 1.0);
            tiebreak_terms.push((uf, opts.flex_weight));
        }
        if let Some(df) = env.df {
            inj.add_p(bi, k, df, -1.0);
            tiebreak_terms.push((df, opts.flex_weight));
        }
    }
    // PV reactive support around the curtailed active output
    for u in &inputs.portfolio.pv {
        let bi = case.bus_index(u.bus).expect("validated");
        let p1 = dispatch.values.pv.get(&u.id).ok_or_else(|| Error::MissingStageOne(u.id.clone()))?;
        for (k, &t) in intervals.iter().enumerate() {
            let q = program.add_free(format!("qpv2:{},t={t}", u.id))?;
            let df = envelopes
                .iter()
                .find(|e| e.bounds.der == u.id && e.bounds.t == t)
                .and_then(|e| e.df);
            let p = AffineExpr::with_terms(df.map(|d| (d, -1.0)), base.power_to_pu(p1[t]));
            program.add_cone(
                format!("pvcap2:{},t={t}", u.id),
                ConeKind::SecondOrder,
                vec![AffineExpr::constant(base.power_to_pu(u.capacity)), p, AffineExpr::var(q)],
                false,
            )?;
            inj.add_q(bi, k, q, 1.0);
        }
    }

    let total_fixed: f64 = intervals.iter().map(|&t| case.total_fixed_load(t)).sum();
    let mut curtail = vec![vec![None; intervals.len()]; inputs.actors.actors.len()];
    let mut curtail_terms = Vec::new();
    for (a, actor) in inputs.actors.actors.iter().enumerate() {
        let bi = case.bus_index(actor.bus).expect("validated");
        let q_ratio = case.buses[bi].q_ratio();
        for (k, &t) in intervals.iter().enumerate() {
            let cap = curtailment_cap(inputs, dist, a, t);
            if cap <= 0.0 {
                continue;
            }
            let c = program.add_continuous(format!("curt:{},t={t}", actor.id), 0.0, base.power_to_pu(cap))?;
            inj.add_p(bi, k, c, 1.0);
            inj.add_q(bi, k, c, q_ratio);
            if total_fixed > 0.0 {
                curtail_terms.push((c, 1.0 / base.power_to_pu(total_fixed)));
            }
            curtail[a][k] = Some(c);
        }
    }

    let mut fairness_terms = Vec::new();
    for (k, &t) in intervals.iter().enumerate() {
        // prorated curtailment as an affine function of the curtailment variable
        let members: Vec<(usize, Option<VarId>, f64)> = inputs
            .actors
            .actors
            .iter()
            .enumerate()
            .filter(|(_, a)| a.baseline[t] > 0.0)
            .map(|(a, x)| (a, curtail[a][k], 1.0 / base.power_to_pu(x.baseline[t])))
            .collect();
        let ratio = |m: &(usize, Option<VarId>, f64)| -> Vec<(VarId, f64)> { m.1.map(|v| (v, m.2)).into_iter().collect() };
        match opts.mode {
            FairnessMode::Pairwise => {
                for i in 0..members.len() {
                    for j in i + 1..members.len() {
                        let (ri, rj) = (ratio(&members[i]), ratio(&members[j]));
                        if ri.is_empty() && rj.is_empty() {
                            continue;
                        }
                        let (ai, aj) = (&inputs.actors.actors[members[i].0].id, &inputs.actors.actors[members[j].0].id);
                        let d = program.add_continuous(format!("fair:{ai}|{aj},t={t}"), 0.0, f64::INFINITY)?;
                        let diff: Vec<(VarId, f64)> =
                            ri.iter().copied().chain(rj.iter().map(|&(v, c)| (v, -c))).collect();
                        let mut up = vec![(d, 1.0)];
                        up.extend(diff.iter().map(|&(v, c)| (v, -c)));
                        let mut down = vec![(d, 1.0)];
                        down.extend(diff.iter().copied());
                        program.add_constraint(format!("fairpos:{ai}|{aj},t={t}"), up, Sense::Ge, 0.0)?;
                        program.add_constraint(format!("fairneg:{ai}|{aj},t={t}"), down, Sense::Ge, 0.0)?;
                        fairness_terms.push((d, opts.w));
                    }
                }
            }
            FairnessMode::Spread => {
                if members.is_empty() {
                    continue;
                }
                let hi = program.add_continuous(format!("rmax:t={t}"), 0.0, f64::INFINITY)?;
                let lo = program.add_continuous(format!("rmin:t={t}"), 0.0, f64::INFINITY)?;
                for m in &members {
                    let id = &inputs.actors.actors[m.0].id;
                    let r = ratio(m);
                    let mut a = vec![(hi, 1.0)];
                    a.extend(r.iter().map(|&(v, c)| (v, -c)));
                    let mut b = vec![(lo, 1.0)];
                    b.extend(r.iter().map(|&(v, c)| (v, -c)));
                    program.add_constraint(format!("rmax:{id},t={t}"), a, Sense::Ge, 0.0)?;
                    program.add_constraint(format!("rmin:{id},t={t}"), b, Sense::Le, 0.0)?;
                }
                fairness_terms.push((hi, opts.w));
                fairness_terms.push((lo, -opts.w));
            }
        }
    }
    for (li, line) in case.lines.iter().enumerate() {
        for &l in &net.l[li] {
            tiebreak_terms.push((l, opts.loss_weight * line.r));
        }
    }
    for &(v, c) in curtail_terms.iter().chain(&fairness_terms).chain(&tiebreak_terms) {
        program.add_objective_term(v, c);
    }
    emit_balances(&mut program, case, &net, &inj)?;
    Ok(Stage2Model { program, intervals, net, envelopes, curtail, curtail_terms, fairness_terms, tiebreak_terms })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlexValue {
    pub der: String,
    pub kind: DerKind,
    pub bus: usize,
    pub t: usize,
    /// kW
    pub uf: f64,
    pub df: f64,
    pub uf_max: f64,
    pub df_max: f64,
    pub y_uf: Option<bool>,
    pub y_df: Option<bool>,
}

/// Curtailment in kW over the full horizon, zero outside the disturbed
/// intervals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurtailmentPlan {
    /// `[actor][t]`
    pub actor: Vec<Vec<f64>>,
    /// `[bus index][t]`
    pub bus: Vec<Vec<f64>>,
    /// Import change against stage 1, `[t]`.
    pub delta_ug: Vec<f64>,
    /// Active flow change per line, `[line][t]`.
    pub delta_flow: Vec<Vec<f64>>,
}

impl CurtailmentPlan {
    pub fn total(&self) -> f64 {
        self.actor.iter().flatten().sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ObjectiveBreakdown {
    pub curtailment: f64,
    pub fairness: f64,
    pub tiebreak: f64,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlexibilityResult {
    pub options: Stage2Options,
    pub intervals: Vec<usize>,
    pub flex: Vec<FlexValue>,
    pub plan: CurtailmentPlan,
    /// State at `intervals`.
    pub flow: PowerFlowState,
    pub objective: ObjectiveBreakdown,
    /// kW over the disturbed intervals.
    pub total_curtailment: f64,
    /// Curtailment over pre-disturbance fixed load at the disturbed intervals.
    pub curtailment_fraction: f64,
    pub nodes_explored: usize,
    pub proven_optimal: bool,
    pub max_cone_slack: f64,
    pub inexact_cones: Vec<String>,
}

fn empty_result(inputs: &MarketInputs, opts: &Stage2Options) -> FlexibilityResult {
    let case = &inputs.case;
    let h = case.horizon;
    FlexibilityResult {
        options: *opts,
        intervals: Vec::new(),
        flex: Vec::new(),
        plan: CurtailmentPlan {
            actor: vec![vec![0.0; h]; inputs.actors.actors.len()],
            bus: vec![vec![0.0; h]; case.buses.len()],
            delta_ug: vec![0.0; h],
            delta_flow: vec![vec![0.0; h]; case.lines.len()],
        },
        flow: PowerFlowState::default(),
        objective: ObjectiveBreakdown::default(),
        total_curtailment: 0.0,
        curtailment_fraction: 0.0,
        nodes_explored: 0,
        proven_optimal: true,
        max_cone_slack: 0.0,
        inexact_cones: Vec::new(),
    }
}

fn read_result(
    inputs: &MarketInputs,
    dispatch: &DispatchResult,
    model: &Stage2Model,
    sol: &ConicSolution,
    opts: &Stage2Options,
    exactness_tol: f64,
) -> FlexibilityResult {
    let case = &inputs.case;
    let kw = |v: VarId| case.base.power_from_pu(sol.value(v));
    let mut out = empty_result(inputs, opts);
    out.intervals = model.intervals.clone();
    for env in &model.envelopes {
        let b = &env.bounds;
        out.flex.push(FlexValue {
            der: b.der.clone(),
            kind: b.kind,
            bus: b.bus,
            t: b.t,
            uf: env.uf.map_or(0.0, kw),
            df: env.df.map_or(0.0, kw),
            uf_max: b.uf_max,
            df_max: b.df_max,
            y_uf: env.y_uf.map(|y| sol.value(y) > 0.5),
            y_df: env.y_df.map(|y| sol.value(y) > 0.5),
        });
    }
    for (a, actor) in inputs.actors.actors.iter().enumerate() {
        let bi = case.bus_index(actor.bus).expect("validated");
        for (k, &t) in model.intervals.iter().enumerate() {
            if let Some(c) = model.curtail[a][k] {
                let x = kw(c).max(0.0);
                out.plan.actor[a][t] = x;
                out.plan.bus[bi][t] += x;
            }
        }
    }
    let flow = PowerFlowState::extract(&model.net, sol);
    for (k, &t) in model.intervals.iter().enumerate() {
        out.plan.delta_ug[t] = case.base.power_from_pu(flow.p_ug[k]) - dispatch.p_ug[t];
        for li in 0..case.lines.len() {
            out.plan.delta_flow[li][t] =
                case.base.power_from_pu(flow.p_flow[li][k] - dispatch.flow.p_flow[li][t]);
        }
    }
    out.flow = flow;
    let eval = |terms: &[(VarId, f64)]| terms.iter().map(|&(v, c)| c * sol.value(v)).sum::<f64>();
    out.objective = ObjectiveBreakdown {
        curtailment: eval(&model.curtail_terms),
        fairness: eval(&model.fairness_terms),
        tiebreak: eval(&model.tiebreak_terms),
        total: sol.objective_value,
    };
    out.total_curtailment = out.plan.total();
    let fixed: f64 = model.intervals.iter().map(|&t| case.total_fixed_load(t)).sum();
    out.curtailment_fraction = if fixed > 0.0 { out.total_curtailment / fixed } else { 0.0 };
    let exact = soc_exactness(&model.program, sol, exactness_tol);
    out.max_cone_slack = exact.max_slack;
    out.inexact_cones = exact.inexact().map(|c| c.tag.clone()).collect();
    for c in exact.inexact() {
        log::warn!("stage 2: relaxed cone {} not tight (slack {:e})", c.tag, c.slack);
    }
    out
}

pub fn clear_flex_market(
    inputs: &MarketInputs,
    dispatch: &DispatchResult,
    dist: &Disturbance,
    opts: &Stage2Options,
    solver: &Solver,
) -> Result<FlexibilityResult> {
    let model = assemble_stage2(inputs, dispatch, dist, opts)?;
    if model.intervals.is_empty() {
        return Ok(empty_result(inputs, opts));
    }
    let report = solver.solve_mixed_integer(&model.program)?;
    if !report.proven_optimal {
        log::warn!("stage 2: node limit hit after {} nodes", report.nodes_explored);
    }
    let sol = solver.refix_and_dualize(&model.program, &report.fixed_binaries)?;
    let mut out = read_result(inputs, dispatch, &model, &sol, opts, solver.tolerances.exactness_tol);
    out.nodes_explored = report.nodes_explored;
    out.proven_optimal = report.proven_optimal;
    Ok(out)
}

/// The same market with every unit's flexibility held at zero.
pub fn baseline_no_flex(
    inputs: &MarketInputs,
    dispatch: &DispatchResult,
    dist: &Disturbance,
    opts: &Stage2Options,
    solver: &Solver,
) -> Result<FlexibilityResult> {
    let opts = Stage2Options { flex_enabled: false, ..*opts };
    clear_flex_market(inputs, dispatch, dist, &opts, solver)
}

/// Names every flexibility value outside its envelope or direction rule.
pub fn replay_check(result: &FlexibilityResult, tol: f64) -> Vec<String> {
    let mut out = Vec::new();
    for f in &result.flex {
        let tag = format!("{} t={}", f.der, f.t);
        if f.uf < -tol || f.uf > f.uf_max + tol {
            out.push(format!("{tag}: UF {} outside [0, {}]", f.uf, f.uf_max));
        }
        if f.df < -tol || f.df > f.df_max + tol {
            out.push(format!("{tag}: DF {} outside [0, {}]", f.df, f.df_max));
        }
        if f.uf > tol && f.df > tol {
            out.push(format!("{tag}: UF and DF both active"));
        }
    }
    out
}

pub fn network_check(case: &NetworkCase, result: &FlexibilityResult, tol: f64) -> Vec<String> {
    if result.intervals.is_empty() {
        return Vec::new();
    }
    result.flow.check(case, tol)
}
