//! DER records and their feasible sets, for day-ahead dispatch and for
//! real-time flexibility envelopes.

mod emit;
mod flex;

pub use emit::{
    emit_dg, emit_energy_floors, emit_flexload, emit_pv, emit_storage, DgVars, FlexVars, PvVars, StorageStep,
    StorageVars,
};
pub use flex::{emit_flex_envelopes, envelope_bounds, EnvelopeBounds, FlexEnvelope, StageOneValues, StorageTrace};

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::NetworkCase;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PvUnit {
    pub id: String,
    pub bus: usize,
    /// inverter kVA
    pub capacity: f64,
    /// kW per interval
    pub forecast: Vec<f64>,
    pub power_factor_limit: Vec<f64>,
    pub owner: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DgUnit {
    pub id: String,
    pub bus: usize,
    /// kW
    pub p_min: f64,
    pub p_max: f64,
    /// kW/h
    pub ramp_up: f64,
    pub ramp_down: f64,
    /// $/kWh
    pub cost: f64,
    pub owner: String,
    /// Output before the first interval; `p_min` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_output: Option<f64>,
}

impl DgUnit {
    pub fn initial(&self) -> f64 {
        self.initial_output.unwrap_or(self.p_min)
    }
}

/// Stationary battery, available every interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StorageUnit {
    pub id: String,
    pub bus: usize,
    pub p_ch_max: f64,
    pub p_dch_max: f64,
    pub eff_ch: f64,
    pub eff_dch: f64,
    /// kWh
    pub energy_init: f64,
    pub capacity: f64,
    pub soc_min: f64,
    pub soc_max: f64,
    /// $/kWh of throughput
    pub cost: f64,
    pub owner: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvUnit {
    pub id: String,
    pub bus: usize,
    pub p_ch_max: f64,
    pub p_dch_max: f64,
    pub eff_ch: f64,
    pub eff_dch: f64,
    pub capacity: f64,
    pub soc_min: f64,
    pub soc_max: f64,
    /// kWh on arrival
    pub soc_init: f64,
    /// kWh needed at departure
    pub trip_energy: f64,
    /// first and last plugged-in interval
    pub arrival: usize,
    pub departure: usize,
    pub cost: f64,
    pub owner: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlexLoad {
    pub id: String,
    pub bus: usize,
    /// kW deviation bound per interval
    pub p_max: Vec<f64>,
    /// $/kWh of absolute deviation
    pub cost: f64,
    pub owner: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DerKind {
    Pv,
    Dg,
    Bess,
    Ev,
    Flex,
}

impl DerKind {
    pub fn as_str(self) -> &'static str {
        match self {
            DerKind::Pv => "pv",
            DerKind::Dg => "dg",
            DerKind::Bess => "bess",
            DerKind::Ev => "ev",
            DerKind::Flex => "flex",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DerPortfolio {
    #[serde(default)]
    pub pv: Vec<PvUnit>,
    #[serde(default)]
    pub dg: Vec<DgUnit>,
    #[serde(default)]
    pub bess: Vec<StorageUnit>,
    #[serde(default)]
    pub ev: Vec<EvUnit>,
    #[serde(default)]
    pub flex: Vec<FlexLoad>,
}

/// Storage parameters common to batteries and EVs, in kW/kWh.
#[derive(Debug, Clone, PartialEq)]
pub struct StorageModel {
    pub id: String,
    pub kind: DerKind,
    pub bus: usize,
    pub p_ch_max: f64,
    pub p_dch_max: f64,
    pub eff_ch: f64,
    pub eff_dch: f64,
    pub soc_min: f64,
    pub soc_max: f64,
    /// Energy before the first window interval.
    pub initial: f64,
    /// Minimum energy at the last window interval.
    pub terminal: f64,
    /// Inclusive interval window.
    pub window: (usize, usize),
    pub cost: f64,
}

impl StorageModel {
    pub fn bess(u: &StorageUnit, horizon: usize) -> Self {
        StorageModel {
            id: u.id.clone(),
            kind: DerKind::Bess,
            bus: u.bus,
            p_ch_max: u.p_ch_max,
            p_dch_max: u.p_dch_max,
            eff_ch: u.eff_ch,
            eff_dch: u.eff_dch,
            soc_min: u.soc_min,
            soc_max: u.soc_max,
            initial: u.energy_init,
            terminal: u.energy_init,
            window: (0, horizon - 1),
            cost: u.cost,
        }
    }

    pub fn ev(u: &EvUnit) -> Self {
        StorageModel {
            id: u.id.clone(),
            kind: DerKind::Ev,
            bus: u.bus,
            p_ch_max: u.p_ch_max,
            p_dch_max: u.p_dch_max,
            eff_ch: u.eff_ch,
            eff_dch: u.eff_dch,
            soc_min: u.soc_min,
            soc_max: u.soc_max,
            initial: u.soc_init,
            terminal: u.trip_energy,
            window: (u.arrival, u.departure),
            cost: u.cost,
        }
    }

    pub fn in_window(&self, t: usize) -> bool {
        (self.window.0..=self.window.1).contains(&t)
    }

    /// Pre-solve check that the terminal requirement can be met at all.
    pub fn check_reachable(&self, dt: f64) -> Result<()> {
        let fail = |reason: String| Err(Error::Unreachable { unit: self.id.clone(), need: self.terminal, reason });
        if self.terminal > self.soc_max {
            return fail(format!("exceeds soc_max {}", self.soc_max));
        }
        let steps = (self.window.1 - self.window.0 + 1) as f64;
        let best = (self.initial + self.eff_ch * self.p_ch_max * dt * steps).min(self.soc_max);
        if best < self.terminal {
            return fail(format!("at most {best} kWh reachable from {} kWh", self.initial));
        }
        Ok(())
    }
}

impl DerPortfolio {
    pub fn is_empty(&self) -> bool {
        self.pv.is_empty() && self.dg.is_empty() && self.bess.is_empty() && self.ev.is_empty() && self.flex.is_empty()
    }

    pub fn storage_models(&self, horizon: usize) -> Vec<StorageModel> {
        self.bess
            .iter()
            .map(|u| StorageModel::bess(u, horizon))
            .chain(self.ev.iter().map(StorageModel::ev))
            .collect()
    }

    /// (kind, id, bus, owner) of every unit, in emission order.
    pub fn units(&self) -> Vec<(DerKind, &str, usize, &str)> {
        let mut out = Vec::new();
        out.extend(self.pv.iter().map(|u| (DerKind::Pv, u.id.as_str(), u.bus, u.owner.as_str())));
        out.extend(self.dg.iter().map(|u| (DerKind::Dg, u.id.as_str(), u.bus, u.owner.as_str())));
        out.extend(self.bess.iter().map(|u| (DerKind::Bess, u.id.as_str(), u.bus, u.owner.as_str())));
        out.extend(self.ev.iter().map(|u| (DerKind::Ev, u.id.as_str(), u.bus, u.owner.as_str())));
        out.extend(self.flex.iter().map(|u| (DerKind::Flex, u.id.as_str(), u.bus, u.owner.as_str())));
        out
    }

    /// Checks unit invariants and bus references; owners are checked against
    /// `owners` when given.
    // negated comparisons so that NaN fails
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self, case: &NetworkCase, owners: Option<&BTreeSet<String>>) -> Result<()> {
        let bad = |msg: String| Err(Error::Portfolio(msg));
        let horizon = case.horizon;
        let mut ids = BTreeSet::new();
        for (kind, id, bus, owner) in self.units() {
            if id.is_empty() || id.chars().any(char::is_whitespace) {
                return bad(format!("{} unit id `{id}` must be non-empty without whitespace", kind.as_str()));
            }
            if !ids.insert(id.to_string()) {
                return bad(format!("unit id {id} used twice"));
            }
            if case.bus(bus).is_none() {
                return bad(format!("{id}: bus {bus} is not in the case"));
            }
            if let Some(o) = owners {
                if !o.contains(owner) {
                    return bad(format!("{id}: owner {owner} is not an actor"));
                }
            }
        }
        let len_ok = |v: &Vec<f64>| v.len() == horizon;
        for u in &self.pv {
            if !len_ok(&u.forecast) || !len_ok(&u.power_factor_limit) {
                return bad(format!("{}: profiles must have {horizon} points", u.id));
            }
            if !(u.capacity > 0.0) || u.forecast.iter().any(|&f| !(f >= 0.0)) {
                return bad(format!("{}: capacity must be positive and forecast nonnegative", u.id));
            }
            if u.power_factor_limit.iter().any(|&pf| !(pf > 0.0 && pf <= 1.0)) {
                return bad(format!("{}: power factor limit outside (0, 1]", u.id));
            }
        }
        for u in &self.dg {
            if !(0.0 <= u.p_min && u.p_min <= u.p_max) {
                return bad(format!("{}: need 0 <= p_min <= p_max", u.id));
            }
            if !(u.ramp_up > 0.0 && u.ramp_down > 0.0) || !(u.cost >= 0.0) {
                return bad(format!("{}: ramps must be positive and cost nonnegative", u.id));
            }
            if !(u.p_min..=u.p_max).contains(&u.initial()) {
                return bad(format!("{}: initial output outside [p_min, p_max]", u.id));
            }
        }
        for u in &self.bess {
            if !(u.soc_min <= u.energy_init && u.energy_init <= u.soc_max && u.soc_max <= u.capacity) {
                return bad(format!("{}: need soc_min <= energy_init <= soc_max <= capacity", u.id));
            }
        }
        for u in &self.ev {
            if !(u.arrival < u.departure && u.departure < horizon) {
                return bad(format!("{}: need arrival < departure < horizon", u.id));
            }
            if !(u.soc_min <= u.soc_init && u.soc_init <= u.soc_max && u.soc_max <= u.capacity) {
                return bad(format!("{}: need soc_min <= soc_init <= soc_max <= capacity", u.id));
            }
        }
        for m in self.storage_models(horizon) {
            let eff_ok = |e: f64| e > 0.0 && e <= 1.0;
            if !eff_ok(m.eff_ch) || !eff_ok(m.eff_dch) {
                return bad(format!("{}: efficiencies must lie in (0, 1]", m.id));
            }
            if !(m.p_ch_max >= 0.0 && m.p_dch_max >= 0.0 && m.cost >= 0.0) {
                return bad(format!("{}: power limits and cost must be nonnegative", m.id));
            }
            m.check_reachable(case.dt)?;
        }
        for u in &self.flex {
            if !len_ok(&u.p_max) || u.p_max.iter().any(|&p| !(p >= 0.0)) || !(u.cost >= 0.0) {
                return bad(format!("{}: p_max needs {horizon} nonnegative points and cost >= 0", u.id));
            }
        }
        // energy floors must be reachable with full upward deviation
        for b in &case.buses {
            let flex_up: f64 =
                self.flex.iter().filter(|f| f.bus == b.id).map(|f| f.p_max.iter().sum::<f64>() * case.dt).sum();
            if b.min_energy > b.fixed_energy(case.dt) + flex_up + 1e-9 {
                return bad(format!(
                    "bus {}: min_energy {} exceeds fixed plus flexible energy {}",
                    b.id,
                    b.min_energy,
                    b.fixed_energy(case.dt) + flex_up
                ));
            }
        }
        Ok(())
    }
}

pub fn parse_portfolio(text: &str) -> Result<DerPortfolio> {
    serde_json::from_str(text).map_err(|e| Error::Parse { what: "portfolio".into(), msg: e.to_string() })
}

pub fn load_portfolio(path: impl AsRef<Path>) -> Result<DerPortfolio> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.display().to_string(), source })?;
    parse_portfolio(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev() -> EvUnit {
        EvUnit {
            id: "ev1".into(),
            bus: 2,
            p_ch_max: 7.0,
            p_dch_max: 7.0,
            eff_ch: 0.9,
            eff_dch: 0.9,
            capacity: 40.0,
            soc_min: 4.0,
            soc_max: 38.0,
            soc_init: 10.0,
            trip_energy: 30.0,
            arrival: 17,
            departure: 23,
            cost: 0.01,
            owner: "a2".into(),
        }
    }

    #[test]
    fn trip_above_soc_max_is_unreachable() {
        let mut u = ev();
        u.trip_energy = 39.0;
        assert!(matches!(StorageModel::ev(&u).check_reachable(1.0), Err(Error::Unreachable { .. })));
    }

    #[test]
    fn short_window_is_unreachable() {
        let mut u = ev();
        u.arrival = 22;
        // 10 + 0.9·7·2 = 22.6 < 30
        let err = StorageModel::ev(&u).check_reachable(1.0).unwrap_err();
        assert!(err.to_string().contains("22.6"), "{err}");
        assert!(StorageModel::ev(&ev()).check_reachable(1.0).is_ok());
    }

    #[test]
    fn json_round_trip() {
        let p = DerPortfolio { ev: vec![ev()], ..Default::default() };
        let text = serde_json::to_string(&p).unwrap();
        assert_eq!(parse_portfolio(&text).unwrap(), p);
    }
}
