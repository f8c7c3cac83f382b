//! Day-ahead feasible sets. Every unit is emitted over the whole horizon
//! (`k == t`), in p.u. on the case base; energies are p.u.·h.

use equiflex_conic::{AffineExpr, ConeKind, ConicProgram, RowId, Sense, VarId};

use super::{DerPortfolio, DgUnit, FlexLoad, PvUnit, StorageModel};
use crate::error::Result;
use crate::grid::{NetworkCase, PerUnitBase};

#[derive(Debug, Clone)]
pub struct PvVars {
    pub p: Vec<VarId>,
    pub q: Vec<VarId>,
}

pub fn emit_pv(program: &mut ConicProgram, u: &PvUnit, base: &PerUnitBase, horizon: usize) -> Result<PvVars> {
    let s = base.power_to_pu(u.capacity);
    let (mut p, mut q) = (Vec::with_capacity(horizon), Vec::with_capacity(horizon));
    for t in 0..horizon {
        let cap = u.forecast[t].min(u.power_factor_limit[t] * u.capacity);
        let pv = program.add_continuous(format!("ppv:{},t={t}", u.id), 0.0, base.power_to_pu(cap))?;
        let qv = program.add_free(format!("qpv:{},t={t}", u.id))?;
        program.add_cone(
            format!("pvcap:{},t={t}", u.id),
            ConeKind::SecondOrder,
            vec![AffineExpr::constant(s), AffineExpr::var(pv), AffineExpr::var(qv)],
            false,
        )?;
        p.push(pv);
        q.push(qv);
    }
    Ok(PvVars { p, q })
}

#[derive(Debug, Clone)]
pub struct DgVars {
    pub p: Vec<VarId>,
}

pub fn emit_dg(program: &mut ConicProgram, u: &DgUnit, base: &PerUnitBase, dt: f64, horizon: usize) -> Result<DgVars> {
    let (lo, hi) = (base.power_to_pu(u.p_min), base.power_to_pu(u.p_max));
    let up = base.power_to_pu(u.ramp_up) * dt;
    let down = base.power_to_pu(u.ramp_down) * dt;
    let mut p = Vec::with_capacity(horizon);
    for t in 0..horizon {
        let v = program.add_continuous(format!("pdg:{},t={t}", u.id), lo, hi)?;
        let (terms, offset) = match t {
            0 => (vec![(v, 1.0)], base.power_to_pu(u.initial())),
            _ => (vec![(v, 1.0), (p[t - 1], -1.0)], 0.0),
        };
        program.add_constraint(format!("rampup:{},t={t}", u.id), terms.clone(), Sense::Le, offset + up)?;
        program.add_constraint(format!("rampdown:{},t={t}", u.id), terms, Sense::Ge, offset - down)?;
        p.push(v);
    }
    Ok(DgVars { p })
}

#[derive(Debug, Clone, Copy)]
pub struct StorageStep {
    pub x_ch: VarId,
    pub x_dch: VarId,
    pub p_ch: VarId,
    pub p_dch: VarId,
    pub soc: VarId,
}

#[derive(Debug, Clone)]
pub struct StorageVars {
    pub model: StorageModel,
    /// `None` outside the availability window, where every quantity is zero.
    pub steps: Vec<Option<StorageStep>>,
}

pub fn emit_storage(
    program: &mut ConicProgram,
    m: &StorageModel,
    base: &PerUnitBase,
    dt: f64,
    horizon: usize,
) -> Result<StorageVars> {
    m.check_reachable(dt)?;
    let id = &m.id;
    let (pch, pdch) = (base.power_to_pu(m.p_ch_max), base.power_to_pu(m.p_dch_max));
    let (emin, emax) = (base.energy_to_pu(m.soc_min), base.energy_to_pu(m.soc_max));
    let mut steps = vec![None; horizon];
    let mut prev: Option<VarId> = None;
    for (t, slot) in steps.iter_mut().enumerate().take(m.window.1 + 1).skip(m.window.0) {
        let x_ch = program.add_binary(format!("xch:{id},t={t}"))?;
        let x_dch = program.add_binary(format!("xdch:{id},t={t}"))?;
        let p_ch = program.add_continuous(format!("pch:{id},t={t}"), 0.0, pch)?;
        let p_dch = program.add_continuous(format!("pdch:{id},t={t}"), 0.0, pdch)?;
        let soc = program.add_continuous(format!("soc:{id},t={t}"), emin, emax)?;
        program.add_constraint(format!("mode:{id},t={t}"), [(x_ch, 1.0), (x_dch, 1.0)], Sense::Le, 1.0)?;
        program.add_constraint(format!("chlink:{id},t={t}"), [(p_ch, 1.0), (x_ch, -pch)], Sense::Le, 0.0)?;
        program.add_constraint(format!("dchlink:{id},t={t}"), [(p_dch, 1.0), (x_dch, -pdch)], Sense::Le, 0.0)?;
        let mut terms = vec![(soc, 1.0), (p_ch, -m.eff_ch * dt), (p_dch, dt / m.eff_dch)];
        let rhs = match prev {
            Some(s) => {
                terms.push((s, -1.0));
                0.0
            }
            None => base.energy_to_pu(m.initial),
        };
        program.add_constraint(format!("soc:{id},t={t}"), terms, Sense::Eq, rhs)?;
        prev = Some(soc);
        *slot = Some(StorageStep { x_ch, x_dch, p_ch, p_dch, soc });
    }
    let last = prev.expect("window is non-empty");
    program.add_constraint(format!("terminal:{id}"), [(last, 1.0)], Sense::Ge, base.energy_to_pu(m.terminal))?;
    Ok(StorageVars { model: m.clone(), steps })
}

#[derive(Debug, Clone)]
pub struct FlexVars {
    pub p: Vec<VarId>,
    pub plus: Vec<VarId>,
    pub minus: Vec<VarId>,
}

/// Signed deviation `p = p⁺ − p⁻` with `|p| ≤ p_max`; the caller charges the
/// cost on `p⁺ + p⁻`.
pub fn emit_flexload(program: &mut ConicProgram, u: &FlexLoad, base: &PerUnitBase, horizon: usize) -> Result<FlexVars> {
    let mut out = FlexVars { p: Vec::new(), plus: Vec::new(), minus: Vec::new() };
    for t in 0..horizon {
        let bound = base.power_to_pu(u.p_max[t]);
        let p = program.add_continuous(format!("pfl:{},t={t}", u.id), -bound, bound)?;
        let plus = program.add_continuous(format!("pfl+:{},t={t}", u.id), 0.0, bound)?;
        let minus = program.add_continuous(format!("pfl-:{},t={t}", u.id), 0.0, bound)?;
        program.add_constraint(
            format!("flsplit:{},t={t}", u.id),
            [(p, 1.0), (plus, -1.0), (minus, 1.0)],
            Sense::Eq,
            0.0,
        )?;
        out.p.push(p);
        out.plus.push(plus);
        out.minus.push(minus);
    }
    Ok(out)
}

/// One row per bus hosting flexible loads: fixed plus flexible energy over
/// the horizon covers the bus minimum. `flex` is parallel to `portfolio.flex`.
pub fn emit_energy_floors(
    program: &mut ConicProgram,
    case: &NetworkCase,
    portfolio: &DerPortfolio,
    flex: &[FlexVars],
) -> Result<Vec<Option<RowId>>> {
    let mut rows = Vec::with_capacity(case.buses.len());
    for b in &case.buses {
        let terms: Vec<(VarId, f64)> = portfolio
            .flex
            .iter()
            .zip(flex)
            .filter(|(u, _)| u.bus == b.id)
            .flat_map(|(_, v)| v.p.iter().map(|&p| (p, case.dt)))
            .collect();
        if terms.is_empty() {
            rows.push(None);
            continue;
        }
        let rhs = case.base.energy_to_pu(b.min_energy - b.fixed_energy(case.dt));
        rows.push(Some(program.add_constraint(format!("energy_floor:bus={}", b.id), terms, Sense::Ge, rhs)?));
    }
    Ok(rows)
}
