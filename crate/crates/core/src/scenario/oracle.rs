//! Brute-force references for the optimizer on small instances.

use equiflex_conic::{ConicProgram, Solver, VarId};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ders::DgUnit;
use crate::error::{Error, Result};
use crate::grid::NetworkCase;

pub const MAX_ENUMERATED_BINARIES: usize = 12;
pub const MAX_GRID_DOF: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    /// `None` when no candidate is feasible.
    pub objective: Option<f64>,
    /// Binary values (enumeration) or DG outputs in kW (grid search).
    pub assignment: Vec<f64>,
    pub candidates: usize,
    pub feasible: usize,
}

/// Solves the relaxation under every binary assignment.
pub fn enumerate_oracle(program: &ConicProgram, solver: &Solver) -> Result<OracleResult> {
    let bins = program.binaries();
    if bins.len() > MAX_ENUMERATED_BINARIES {
        return Err(Error::Oracle(format!(
            "{} binaries exceed the enumeration limit {MAX_ENUMERATED_BINARIES}",
            bins.len()
        )));
    }
    let n = 1usize << bins.len();
    let eval = |mask: usize| -> Option<(f64, usize)> {
        let assignment: Vec<(VarId, bool)> = bins.iter().enumerate().map(|(i, &v)| (v, mask >> i & 1 == 1)).collect();
        let fixed = program.with_fixed_binaries(&assignment).ok()?;
        solver.solve_relaxation(&fixed).ok().map(|s| (s.objective_value, mask))
    };
    let results: Vec<Option<(f64, usize)>> = if solver.parallel {
        (0..n).into_par_iter().map(eval).collect()
    } else {
        (0..n).map(eval).collect()
    };
    // reduction in mask order keeps ties deterministic
    let feasible = results.iter().flatten().count();
    let best = results.into_iter().flatten().fold(None, |acc: Option<(f64, usize)>, c| match acc {
        Some(a) if a.0 <= c.0 => Some(a),
        _ => Some(c),
    });
    Ok(OracleResult {
        objective: best.map(|b| b.0),
        assignment: best
            .map(|(_, mask)| (0..bins.len()).map(|i| (mask >> i & 1) as f64).collect())
            .unwrap_or_default(),
        candidates: n,
        feasible,
    })
}

/// Exact branch-flow state of a chain feeder for given net bus demands.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainFlow {
    /// Squared voltages, root first.
    pub v_sq: Vec<f64>,
    /// Sending-end flows per line, p.u.
    pub p: Vec<f64>,
    pub q: Vec<f64>,
}

/// Walks from the far end toward the root for a trial far-end voltage.
fn sweep(case: &NetworkCase, p_net: &[f64], q_net: &[f64], v_end: f64) -> Option<ChainFlow> {
    let n = case.buses.len();
    let mut v = vec![0.0; n];
    let (mut p, mut q) = (vec![0.0; n - 1], vec![0.0; n - 1]);
    v[n - 1] = v_end;
    let (mut pr, mut qr) = (p_net[n - 1], q_net[n - 1]);
    for li in (0..n - 1).rev() {
        let line = &case.lines[li];
        let l = (pr * pr + qr * qr) / v[li + 1];
        let (ps, qs) = (pr + line.r * l, qr + line.x * l);
        v[li] = v[li + 1] + 2.0 * (line.r * ps + line.x * qs) - line.z_sq() * l;
        if !(v[li] > 0.0) {
            return None;
        }
        p[li] = ps;
        q[li] = qs;
        pr = ps + p_net[li];
        qr = qs + q_net[li];
    }
    Some(ChainFlow { v_sq: v, p, q })
}

/// Solves the nonlinear flow equations of a chain `1 - 2 - …` with the root
/// voltage fixed, by bisection on the far-end voltage (high-voltage branch).
/// `p_net`/`q_net` are per-bus demands minus generation in p.u.; the root
/// entry is ignored.
pub fn chain_power_flow(case: &NetworkCase, p_net: &[f64], q_net: &[f64], v_root_sq: f64) -> Option<ChainFlow> {
    let n = case.buses.len();
    if n == 1 {
        return Some(ChainFlow { v_sq: vec![v_root_sq], p: Vec::new(), q: Vec::new() });
    }
    let root_at = |v_end: f64| sweep(case, p_net, q_net, v_end).map(|f| f.v_sq[0]);
    // the high-voltage solution lies where the root voltage rises with v_end
    let (mut lo, mut hi) = (1e-3 * v_root_sq, 4.0 * v_root_sq);
    let mut best = None;
    // find the turning point of the root voltage by golden search
    let (mut a, mut b) = (lo, hi);
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..200 {
        let c = b - phi * (b - a);
        let d = a + phi * (b - a);
        let (fc, fd) = (root_at(c).unwrap_or(f64::INFINITY), root_at(d).unwrap_or(f64::INFINITY));
        if fc < fd {
            b = d;
        } else {
            a = c;
        }
    }
    let turn = 0.5 * (a + b);
    if root_at(turn).is_none_or(|v| v > v_root_sq) {
        return None;
    }
    lo = lo.max(turn);
    if root_at(hi).is_none_or(|v| v < v_root_sq) {
        return None;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        match root_at(mid) {
            Some(v) if v < v_root_sq => lo = mid,
            _ => hi = mid,
        }
        best = Some(mid);
    }
    best.and_then(|v_end| sweep(case, p_net, q_net, v_end))
}

/// Exhaustive search over DG outputs at one interval of a chain of at most
/// three buses, checked with the exact flow equations. Costs are in $ as in
/// the day-ahead objective.
pub fn grid_search_oracle(
    case: &NetworkCase,
    dg: &[DgUnit],
    ug_price: f64,
    t: usize,
    step_kw: f64,
) -> Result<OracleResult> {
    if case.buses.len() > 3 {
        return Err(Error::Oracle(format!("grid search needs at most 3 buses, got {}", case.buses.len())));
    }
    if dg.len() > MAX_GRID_DOF {
        return Err(Error::Oracle(format!("{} DG units exceed {MAX_GRID_DOF} degrees of freedom", dg.len())));
    }
    if !(step_kw > 0.0) {
        return Err(Error::Oracle("grid step must be positive".into()));
    }
    let chain = case.lines.iter().enumerate().all(|(i, l)| l.from == case.buses[i].id && l.to == case.buses[i + 1].id);
    if !chain || case.pcc_buses != [case.buses[0].id] {
        return Err(Error::Oracle("grid search needs a chain rooted at its first bus".into()));
    }
    let base = &case.base;
    let scale = base.base_kw() * case.dt;
    let v_root = case.buses[0].v_setpoint.unwrap_or(1.0).powi(2);
    let levels: Vec<Vec<f64>> = dg
        .iter()
        .map(|u| {
            let n = ((u.p_max - u.p_min) / step_kw).floor() as usize;
            let mut l: Vec<f64> = (0..=n).map(|k| u.p_min + k as f64 * step_kw).collect();
            if *l.last().expect("non-empty") < u.p_max {
                l.push(u.p_max);
            }
            l
        })
        .collect();
    let total: usize = levels.iter().map(Vec::len).product();
    let bus_pos = |id: usize| case.bus_index(id).expect("validated");
    let limit = case.import_limit_kw.map(|kw| base.power_to_pu(kw));

    let eval = |idx: usize| -> Option<(f64, Vec<f64>)> {
        let mut rem = idx;
        let out: Vec<f64> = levels
            .iter()
            .map(|l| {
                let v = l[rem % l.len()];
                rem /= l.len();
                v
            })
            .collect();
        let mut p_net: Vec<f64> = case.buses.iter().map(|b| base.power_to_pu(b.fixed_load[t])).collect();
        let q_net: Vec<f64> = case.buses.iter().map(|b| base.power_to_pu(b.reactive_load(t))).collect();
        for (u, &p) in dg.iter().zip(&out) {
            p_net[bus_pos(u.bus)] -= base.power_to_pu(p);
        }
        let flow = chain_power_flow(case, &p_net, &q_net, v_root)?;
        for (b, &v) in case.buses.iter().zip(&flow.v_sq).skip(1) {
            if v < b.v_min * b.v_min || v > b.v_max * b.v_max {
                return None;
            }
        }
        for (li, l) in case.lines.iter().enumerate() {
            if flow.p[li].hypot(flow.q[li]) > l.s_max {
                return None;
            }
        }
        let p_ug = flow.p.first().copied().unwrap_or(0.0) + p_net[0];
        if limit.is_some_and(|lim| p_ug.abs() > lim) {
            return None;
        }
        let cost = ug_price * p_ug * scale + dg.iter().zip(&out).map(|(u, &p)| u.cost * p * case.dt).sum::<f64>();
        Some((cost, out))
    };
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut feasible = 0;
    for idx in 0..total {
        if let Some(c) = eval(idx) {
            feasible += 1;
            if best.as_ref().is_none_or(|b| c.0 < b.0) {
                best = Some(c);
            }
        }
    }
    Ok(OracleResult {
        objective: best.as_ref().map(|b| b.0),
        assignment: best.map(|b| b.1).unwrap_or_default(),
        candidates: total,
        feasible,
    })
}
