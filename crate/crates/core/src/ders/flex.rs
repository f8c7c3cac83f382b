//! Real-time flexibility envelopes around a day-ahead dispatch.
//!
//! UF raises a unit's net injection (more generation, more discharge, less
//! charge, less consumption); DF lowers it. Bounds are data computed from the
//! stage-1 values; a direction binary is added only when a unit can move both
//! ways.

use std::collections::BTreeMap;

use equiflex_conic::{ConicProgram, Sense, VarId};
use serde::{Deserialize, Serialize};

use super::{DerKind, DerPortfolio, StorageModel};
use crate::error::{Error, Result};
use crate::grid::NetworkCase;

/// Bounds below this many kW are treated as no headroom.
const HEADROOM_EPS_KW: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct StorageTrace {
    pub p_ch: Vec<f64>,
    pub p_dch: Vec<f64>,
    pub x_ch: Vec<bool>,
    pub x_dch: Vec<bool>,
    /// kWh after each interval; carries the boundary value outside the window.
    pub soc: Vec<f64>,
}

/// Day-ahead unit values in kW / kWh, keyed by unit id.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct StageOneValues {
    pub pv: BTreeMap<String, Vec<f64>>,
    pub pv_q: BTreeMap<String, Vec<f64>>,
    pub dg: BTreeMap<String, Vec<f64>>,
    pub storage: BTreeMap<String, StorageTrace>,
    pub flex: BTreeMap<String, Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeBounds {
    pub der: String,
    pub kind: DerKind,
    pub bus: usize,
    pub t: usize,
    /// kW
    pub uf_max: f64,
    pub df_max: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlexEnvelope {
    pub bounds: EnvelopeBounds,
    pub uf: Option<VarId>,
    pub df: Option<VarId>,
    pub y_uf: Option<VarId>,
    pub y_df: Option<VarId>,
}

fn missing(id: &str) -> Error {
    Error::MissingStageOne(id.to_string())
}

fn at(values: &BTreeMap<String, Vec<f64>>, id: &str, t: usize) -> Result<f64> {
    values.get(id).and_then(|v| v.get(t)).copied().ok_or_else(|| missing(id))
}

fn clean(x: f64) -> f64 {
    if x > HEADROOM_EPS_KW {
        x
    } else {
        0.0
    }
}

fn storage_bounds(m: &StorageModel, tr: &StorageTrace, t: usize, dt: f64) -> Result<(f64, f64)> {
    if !m.in_window(t) {
        return Ok((0.0, 0.0));
    }
    let get = |v: &Vec<f64>| v.get(t).copied().ok_or_else(|| missing(&m.id));
    let getb = |v: &Vec<bool>| v.get(t).copied().ok_or_else(|| missing(&m.id));
    let (p_ch, p_dch, soc) = (get(&tr.p_ch)?, get(&tr.p_dch)?, get(&tr.soc)?);
    let x_ch = if getb(&tr.x_ch)? { 1.0 } else { 0.0 };
    let x_dch = if getb(&tr.x_dch)? { 1.0 } else { 0.0 };
    let df = ((m.p_ch_max * x_ch - p_ch) + p_dch).min((m.soc_max - soc) / dt);
    let uf = ((m.p_dch_max * x_dch - p_dch) + p_ch).min((soc - m.soc_min) / dt);
    Ok((uf, df))
}

/// Envelope bounds of every unit at interval `t`, in portfolio order.
pub fn envelope_bounds(
    case: &NetworkCase,
    portfolio: &DerPortfolio,
    values: &StageOneValues,
    t: usize,
) -> Result<Vec<EnvelopeBounds>> {
    let dt = case.dt;
    let mut out = Vec::new();
    let mut push = |der: &str, kind, bus, uf: f64, df: f64| {
        out.push(EnvelopeBounds { der: der.to_string(), kind, bus, t, uf_max: clean(uf), df_max: clean(df) });
    };
    for u in &portfolio.pv {
        push(&u.id, DerKind::Pv, u.bus, 0.0, at(&values.pv, &u.id, t)?);
    }
    for u in &portfolio.dg {
        let p = at(&values.dg, &u.id, t)?;
        let uf = (u.p_max - p).min(u.ramp_up * dt);
        let df = (p - u.p_min).min(u.ramp_down * dt);
        push(&u.id, DerKind::Dg, u.bus, uf, df);
    }
    for m in portfolio.storage_models(case.horizon) {
        let tr = values.storage.get(&m.id).ok_or_else(|| missing(&m.id))?;
        let (uf, df) = storage_bounds(&m, tr, t, dt)?;
        push(&m.id, m.kind, m.bus, uf, df);
    }
    for u in &portfolio.flex {
        let p = at(&values.flex, &u.id, t)?;
        // only load already shifted into t can be shed again
        push(&u.id, DerKind::Flex, u.bus, p.max(0.0), u.p_max[t] - p);
    }
    Ok(out)
}

/// Emits UF/DF variables for every unit at `intervals`. With `enabled` false
/// the envelopes are returned without variables, i.e. all flexibility is zero.
pub fn emit_flex_envelopes(
    program: &mut ConicProgram,
    case: &NetworkCase,
    portfolio: &DerPortfolio,
    values: &StageOneValues,
    intervals: &[usize],
    enabled: bool,
) -> Result<Vec<FlexEnvelope>> {
    let to_pu = |kw: f64| case.base.power_to_pu(kw);
    let mut out = Vec::new();
    for &t in intervals {
        for b in envelope_bounds(case, portfolio, values, t)? {
            let mut env = FlexEnvelope { uf: None, df: None, y_uf: None, y_df: None, bounds: b };
            if enabled {
                let b = &env.bounds;
                let name = format!("{},t={t}", b.der);
                if b.uf_max > 0.0 {
                    env.uf = Some(program.add_continuous(format!("uf:{name}"), 0.0, to_pu(b.uf_max))?);
                }
                if b.df_max > 0.0 {
                    env.df = Some(program.add_continuous(format!("df:{name}"), 0.0, to_pu(b.df_max))?);
                }
                if let (Some(uf), Some(df)) = (env.uf, env.df) {
                    let yu = program.add_binary(format!("yuf:{name}"))?;
                    let yd = program.add_binary(format!("ydf:{name}"))?;
                    program.add_constraint(format!("ufdir:{name}"), [(uf, 1.0), (yu, -to_pu(b.uf_max))], Sense::Le, 0.0)?;
                    program.add_constraint(format!("dfdir:{name}"), [(df, 1.0), (yd, -to_pu(b.df_max))], Sense::Le, 0.0)?;
                    program.add_constraint(format!("flexmode:{name}"), [(yu, 1.0), (yd, 1.0)], Sense::Le, 1.0)?;
                    env.y_uf = Some(yu);
                    env.y_df = Some(yd);
                }
            }
            out.push(env);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ders::{DgUnit, EvUnit};
    use crate::grid::ieee33_subcase;

    fn ev() -> EvUnit {
        EvUnit {
            id: "ev".into(),
            bus: 2,
            p_ch_max: 7.0,
            p_dch_max: 7.0,
            eff_ch: 0.9,
            eff_dch: 0.9,
            capacity: 40.0,
            soc_min: 4.0,
            soc_max: 38.0,
            soc_init: 10.0,
            trip_energy: 20.0,
            arrival: 17,
            departure: 23,
            cost: 0.0,
            owner: "a".into(),
        }
    }

    fn trace(p_ch: f64, soc: f64) -> StorageTrace {
        let mut tr = StorageTrace {
            p_ch: vec![0.0; 24],
            p_dch: vec![0.0; 24],
            x_ch: vec![false; 24],
            x_dch: vec![false; 24],
            soc: vec![10.0; 24],
        };
        tr.p_ch[18] = p_ch;
        tr.x_ch[18] = p_ch > 0.0;
        tr.soc[18] = soc;
        tr
    }

    fn bounds_for(portfolio: &DerPortfolio, values: &StageOneValues, t: usize) -> EnvelopeBounds {
        let case = ieee33_subcase(3);
        envelope_bounds(&case, portfolio, values, t).unwrap().remove(0)
    }

    #[test]
    fn ev_charging_leaves_charger_headroom() {
        let p = DerPortfolio { ev: vec![ev()], ..Default::default() };
        let mut v = StageOneValues::default();
        v.storage.insert("ev".into(), trace(3.0, 20.0));
        let b = bounds_for(&p, &v, 18);
        assert_eq!(b.df_max, 4.0);
        assert_eq!(b.uf_max, 3.0);
    }

    #[test]
    fn full_ev_has_no_downward_room() {
        let p = DerPortfolio { ev: vec![ev()], ..Default::default() };
        let mut v = StageOneValues::default();
        v.storage.insert("ev".into(), trace(3.0, 38.0));
        assert_eq!(bounds_for(&p, &v, 18).df_max, 0.0);
    }

    #[test]
    fn parked_outside_window_is_zero() {
        let p = DerPortfolio { ev: vec![ev()], ..Default::default() };
        let mut v = StageOneValues::default();
        v.storage.insert("ev".into(), trace(3.0, 20.0));
        let b = bounds_for(&p, &v, 5);
        assert_eq!((b.uf_max, b.df_max), (0.0, 0.0));
    }

    #[test]
    fn dg_at_max_has_no_upward_room() {
        let dg = DgUnit {
            id: "g".into(),
            bus: 2,
            p_min: 10.0,
            p_max: 100.0,
            ramp_up: 30.0,
            ramp_down: 50.0,
            cost: 0.1,
            owner: "a".into(),
            initial_output: None,
        };
        let p = DerPortfolio { dg: vec![dg], ..Default::default() };
        let mut v = StageOneValues::default();
        v.dg.insert("g".into(), vec![100.0; 24]);
        let b = bounds_for(&p, &v, 0);
        assert_eq!((b.uf_max, b.df_max), (0.0, 50.0));
    }

    #[test]
    fn missing_value_is_an_error() {
        let p = DerPortfolio { ev: vec![ev()], ..Default::default() };
        let case = ieee33_subcase(3);
        let err = envelope_bounds(&case, &p, &StageOneValues::default(), 0).unwrap_err();
        assert!(matches!(err, Error::MissingStageOne(ref id) if id == "ev"));
    }
}
