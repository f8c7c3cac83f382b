//! Branch-flow constraints on a rooted radial feeder.
//!
//! Per line (parent k → child n) and interval:
//! `v_k − v_n − 2(r P + x Q) + (r² + x²) ℓ = 0`, `v_k ℓ ≥ P² + Q²` (relaxed),
//! `P² + Q² ≤ s_max²`. Balance rows are emitted last so DER injections can be
//! collected first.

use equiflex_conic::{AffineExpr, ConeKind, ConicProgram, ConicSolution, RowId, Sense, VarId};

use super::{NetworkCase, PowerFlowState};
use crate::error::Result;

#[derive(Debug, Clone)]
pub struct NetworkVars {
    pub intervals: Vec<usize>,
    /// `[bus][k]`
    pub v: Vec<Vec<VarId>>,
    /// `[line][k]`
    pub l: Vec<Vec<VarId>>,
    pub p: Vec<Vec<VarId>>,
    pub q: Vec<Vec<VarId>>,
    /// Bus index of each PCC, parallel to `p_ug`/`q_ug`.
    pub pcc: Vec<usize>,
    /// `[pcc][k]`
    pub p_ug: Vec<Vec<VarId>>,
    pub q_ug: Vec<Vec<VarId>>,
}

pub fn emit_network(program: &mut ConicProgram, case: &NetworkCase, intervals: &[usize]) -> Result<NetworkVars> {
    let topo = case.topology();
    let nk = intervals.len();
    let mut v = vec![Vec::with_capacity(nk); case.buses.len()];
    for (bi, b) in case.buses.iter().enumerate() {
        for &t in intervals {
            let (lo, hi) = match b.v_setpoint {
                Some(s) => (s * s, s * s),
                None => (b.v_min * b.v_min, b.v_max * b.v_max),
            };
            v[bi].push(program.add_continuous(format!("v:bus={},t={t}", b.id), lo, hi)?);
        }
    }
    let nl = case.lines.len();
    let (mut l, mut p, mut q) = (vec![Vec::new(); nl], vec![Vec::new(); nl], vec![Vec::new(); nl]);
    for (li, line) in case.lines.iter().enumerate() {
        let (k, n) = (topo.line_parent[li], topo.line_child[li]);
        let (kid, nid) = (case.buses[k].id, case.buses[n].id);
        let vk_min = case.buses[k].v_setpoint.unwrap_or(case.buses[k].v_min);
        let l_max = line.s_max * line.s_max / (vk_min * vk_min);
        for (ki, &t) in intervals.iter().enumerate() {
            let name = format!("{kid}-{nid},t={t}");
            let lv = program.add_continuous(format!("l:{name}"), 0.0, l_max)?;
            let pv = program.add_free(format!("pf:{name}"))?;
            let qv = program.add_free(format!("qf:{name}"))?;
            program.add_constraint(
                format!("vdrop:{name}"),
                [
                    (v[k][ki], 1.0),
                    (v[n][ki], -1.0),
                    (pv, -2.0 * line.r),
                    (qv, -2.0 * line.x),
                    (lv, line.z_sq()),
                ],
                Sense::Eq,
                0.0,
            )?;
            program.add_cone(
                format!("branch:{name}"),
                ConeKind::RotatedSecondOrder,
                vec![AffineExpr::scaled(v[k][ki], 0.5), AffineExpr::var(lv), AffineExpr::var(pv), AffineExpr::var(qv)],
                true,
            )?;
            program.add_cone(
                format!("rating:{name}"),
                ConeKind::SecondOrder,
                vec![AffineExpr::constant(line.s_max), AffineExpr::var(pv), AffineExpr::var(qv)],
                false,
            )?;
            l[li].push(lv);
            p[li].push(pv);
            q[li].push(qv);
        }
    }
    let limit = case.import_limit_kw.map(|kw| case.base.power_to_pu(kw));
    let mut pcc = Vec::new();
    let (mut p_ug, mut q_ug) = (Vec::new(), Vec::new());
    for &id in &case.pcc_buses {
        let bi = case.bus_index(id).expect("validated PCC");
        pcc.push(bi);
        let mut ps = Vec::with_capacity(nk);
        let mut qs = Vec::with_capacity(nk);
        for &t in intervals {
            let (lo, hi) = limit.map_or((f64::NEG_INFINITY, f64::INFINITY), |lim| (-lim, lim));
            ps.push(program.add_continuous(format!("pug:bus={id},t={t}"), lo, hi)?);
            qs.push(program.add_free(format!("qug:bus={id},t={t}"))?);
        }
        p_ug.push(ps);
        q_ug.push(qs);
    }
    Ok(NetworkVars { intervals: intervals.to_vec(), v, l, p, q, pcc, p_ug, q_ug })
}

/// Nodal injection terms and fixed demand, `[bus][k]`, all in p.u.
#[derive(Debug, Clone)]
pub struct Injections {
    pub p: Vec<Vec<Vec<(VarId, f64)>>>,
    pub q: Vec<Vec<Vec<(VarId, f64)>>>,
    pub p_demand: Vec<Vec<f64>>,
    pub q_demand: Vec<Vec<f64>>,
}

impl Injections {
    pub fn new(buses: usize, intervals: usize) -> Self {
        Injections {
            p: vec![vec![Vec::new(); intervals]; buses],
            q: vec![vec![Vec::new(); intervals]; buses],
            p_demand: vec![vec![0.0; intervals]; buses],
            q_demand: vec![vec![0.0; intervals]; buses],
        }
    }

    /// Fixed loads of the case at the given intervals.
    pub fn with_fixed_loads(case: &NetworkCase, intervals: &[usize]) -> Self {
        let mut inj = Injections::new(case.buses.len(), intervals.len());
        for (bi, b) in case.buses.iter().enumerate() {
            for (k, &t) in intervals.iter().enumerate() {
                inj.p_demand[bi][k] = case.base.power_to_pu(b.fixed_load[t]);
                inj.q_demand[bi][k] = case.base.power_to_pu(b.reactive_load(t));
            }
        }
        inj
    }

    /// Generation-side term: positive `coef` injects power.
    pub fn add_p(&mut self, bus: usize, k: usize, var: VarId, coef: f64) {
        self.p[bus][k].push((var, coef));
    }

    pub fn add_q(&mut self, bus: usize, k: usize, var: VarId, coef: f64) {
        self.q[bus][k].push((var, coef));
    }
}

pub fn balance_tag(bus: usize, t: usize) -> String {
    format!("balance:bus={bus},t={t}")
}

/// Emits active and reactive balance rows, returning `[bus][k]` row ids. The
/// active row's dual is `∂ objective / ∂ demand`.
pub fn emit_balances(
    program: &mut ConicProgram,
    case: &NetworkCase,
    net: &NetworkVars,
    inj: &Injections,
) -> Result<(Vec<Vec<RowId>>, Vec<Vec<RowId>>)> {
    let topo = case.topology();
    let mut prow = vec![Vec::new(); case.buses.len()];
    let mut qrow = vec![Vec::new(); case.buses.len()];
    for (bi, b) in case.buses.iter().enumerate() {
        for (k, &t) in net.intervals.iter().enumerate() {
            let mut pt: Vec<(VarId, f64)> = Vec::new();
            let mut qt: Vec<(VarId, f64)> = Vec::new();
            if let Some(li) = topo.feeder_line[bi] {
                let line = &case.lines[li];
                pt.extend([(net.p[li][k], 1.0), (net.l[li][k], -line.r)]);
                qt.extend([(net.q[li][k], 1.0), (net.l[li][k], -line.x)]);
            }
            for &li in &topo.child_lines[bi] {
                pt.push((net.p[li][k], -1.0));
                qt.push((net.q[li][k], -1.0));
            }
            if let Some(j) = net.pcc.iter().position(|&x| x == bi) {
                pt.push((net.p_ug[j][k], 1.0));
                qt.push((net.q_ug[j][k], 1.0));
            }
            pt.extend_from_slice(&inj.p[bi][k]);
            qt.extend_from_slice(&inj.q[bi][k]);
            prow[bi].push(program.add_constraint(balance_tag(b.id, t), pt, Sense::Eq, inj.p_demand[bi][k])?);
            qrow[bi].push(program.add_constraint(
                format!("qbalance:bus={},t={t}", b.id),
                qt,
                Sense::Eq,
                inj.q_demand[bi][k],
            )?);
        }
    }
    Ok((prow, qrow))
}

impl PowerFlowState {
    pub fn extract(net: &NetworkVars, sol: &ConicSolution) -> Self {
        let grab = |vars: &Vec<Vec<VarId>>| -> Vec<Vec<f64>> {
            vars.iter().map(|row| row.iter().map(|&v| sol.value(v)).collect()).collect()
        };
        let nk = net.intervals.len();
        let sum = |vars: &Vec<Vec<VarId>>| -> Vec<f64> {
            (0..nk).map(|k| vars.iter().map(|row| sol.value(row[k])).sum()).collect()
        };
        PowerFlowState {
            intervals: net.intervals.clone(),
            v_sq: grab(&net.v),
            i_sq: grab(&net.l),
            p_flow: grab(&net.p),
            q_flow: grab(&net.q),
            p_ug: sum(&net.p_ug),
            q_ug: sum(&net.q_ug),
        }
    }
}
