//! Radial feeder data: buses, lines, per-unit base, topology and the
//! branch-flow constraints shared by both market stages.

mod case;
mod chain;
mod ieee33;
mod network;
mod topology;

pub use case::{load_case, parse_case, save_case, to_json, BaseFile, BusFile, CaseFile, LineFile};
pub use chain::chain_feeder;
pub use ieee33::{builtin_ieee33, ieee33_subcase, DEFAULT_LOAD_SHAPE, IEEE33_LINES, IEEE33_LOADS};
pub use network::{balance_tag, emit_balances, emit_network, Injections, NetworkVars};
pub use topology::{validate_topology, TopologyReport};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default power factor for buses that give neither reactive load nor a factor.
pub const DEFAULT_POWER_FACTOR: f64 = 0.95;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerUnitBase {
    /// MVA
    pub base_power: f64,
    /// line-to-line kV
    pub base_voltage: f64,
}

impl PerUnitBase {
    pub fn new(base_power: f64, base_voltage: f64) -> Result<Self> {
        let base = PerUnitBase { base_power, base_voltage };
        base.check()?;
        Ok(base)
    }

    pub fn check(&self) -> Result<()> {
        if !(self.base_power.is_finite() && self.base_power > 0.0) {
            return Err(Error::Base(format!("base_power must be positive, got {}", self.base_power)));
        }
        if !(self.base_voltage.is_finite() && self.base_voltage > 0.0) {
            return Err(Error::Base(format!("base_voltage must be positive, got {}", self.base_voltage)));
        }
        Ok(())
    }

    /// Ω
    pub fn z_base(&self) -> f64 {
        self.base_voltage * self.base_voltage / self.base_power
    }

    pub fn base_kw(&self) -> f64 {
        self.base_power * 1000.0
    }

    pub fn impedance_to_pu(&self, ohm: f64) -> f64 {
        ohm / self.z_base()
    }

    pub fn impedance_from_pu(&self, pu: f64) -> f64 {
        pu * self.z_base()
    }

    /// kW, kVar or kVA to p.u.
    pub fn power_to_pu(&self, kw: f64) -> f64 {
        kw / self.base_kw()
    }

    pub fn power_from_pu(&self, pu: f64) -> f64 {
        pu * self.base_kw()
    }

    /// kWh to p.u.·h
    pub fn energy_to_pu(&self, kwh: f64) -> f64 {
        kwh / self.base_kw()
    }
}

impl Default for PerUnitBase {
    fn default() -> Self {
        PerUnitBase { base_power: 1.0, base_voltage: 12.66 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BusKind {
    Pcc,
    Load,
}

/// Bus data. Loads stay in kW; voltage limits are in p.u.
#[derive(Debug, Clone, PartialEq)]
pub struct BusSpec {
    pub id: usize,
    pub kind: BusKind,
    pub v_min: f64,
    pub v_max: f64,
    /// Fixes the squared voltage at a PCC when set.
    pub v_setpoint: Option<f64>,
    /// kW per interval
    pub fixed_load: Vec<f64>,
    pub load_power_factor: f64,
    /// kWh over the horizon, fixed plus flexible consumption
    pub min_energy: f64,
}

impl BusSpec {
    /// tan φ of the lagging load.
    pub fn q_ratio(&self) -> f64 {
        let pf = self.load_power_factor;
        (1.0 - pf * pf).max(0.0).sqrt() / pf
    }

    pub fn reactive_load(&self, t: usize) -> f64 {
        self.fixed_load[t] * self.q_ratio()
    }

    pub fn fixed_energy(&self, dt: f64) -> f64 {
        self.fixed_load.iter().sum::<f64>() * dt
    }
}

/// Line data. The `*_ohm`/`s_max_kva` fields are what files carry; `r`, `x`
/// and `s_max` are their per-unit images.
#[derive(Debug, Clone, PartialEq)]
pub struct LineSpec {
    pub from: usize,
    pub to: usize,
    pub r_ohm: f64,
    pub x_ohm: f64,
    pub s_max_kva: f64,
    pub r: f64,
    pub x: f64,
    pub s_max: f64,
}

impl LineSpec {
    pub fn new(from: usize, to: usize, r_ohm: f64, x_ohm: f64, s_max_kva: f64, base: &PerUnitBase) -> Self {
        LineSpec {
            from,
            to,
            r_ohm,
            x_ohm,
            s_max_kva,
            r: base.impedance_to_pu(r_ohm),
            x: base.impedance_to_pu(x_ohm),
            s_max: base.power_to_pu(s_max_kva),
        }
    }

    pub fn z_sq(&self) -> f64 {
        self.r * self.r + self.x * self.x
    }

    pub fn label(&self) -> String {
        format!("{}-{}", self.from, self.to)
    }
}

/// A validated radial feeder. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkCase {
    pub name: String,
    pub base: PerUnitBase,
    pub buses: Vec<BusSpec>,
    pub lines: Vec<LineSpec>,
    pub horizon: usize,
    /// hours
    pub dt: f64,
    /// Ids of the substation buses.
    pub pcc_buses: Vec<usize>,
    /// Per-PCC import/export limit in kW, none for unlimited.
    pub import_limit_kw: Option<f64>,
    pub allow_multiple_pcc: bool,
    topology: TopologyReport,
}

impl NetworkCase {
    /// Validates everything and computes the rooted orientation.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        name: impl Into<String>,
        base: PerUnitBase,
        buses: Vec<BusSpec>,
        lines: Vec<LineSpec>,
        horizon: usize,
        dt: f64,
        import_limit_kw: Option<f64>,
        allow_multiple_pcc: bool,
    ) -> Result<Self> {
        base.check()?;
        let pcc_buses: Vec<usize> = buses.iter().filter(|b| b.kind == BusKind::Pcc).map(|b| b.id).collect();
        let mut case = NetworkCase {
            name: name.into(),
            base,
            buses,
            lines,
            horizon,
            dt,
            pcc_buses,
            import_limit_kw,
            allow_multiple_pcc,
            topology: TopologyReport::default(),
        };
        case.validate_data()?;
        let report = validate_topology(&case);
        if !report.violations.is_empty() {
            return Err(Error::Validation(report.violations.join("; ")));
        }
        case.topology = report;
        Ok(case)
    }

    fn validate_data(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Validation(msg));
        if self.horizon == 0 {
            return bad("horizon must be at least 1".into());
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return bad(format!("dt must be positive, got {}", self.dt));
        }
        if self.buses.is_empty() {
            return bad("case has no buses".into());
        }
        let mut seen = std::collections::BTreeSet::new();
        for b in &self.buses {
            if !seen.insert(b.id) {
                return bad(format!("bus {} declared twice", b.id));
            }
            if !(b.v_min > 0.0 && b.v_min.is_finite()) {
                return bad(format!("bus {}: v_min {} must be positive", b.id, b.v_min));
            }
            if !(b.v_min < b.v_max && b.v_max.is_finite()) {
                return bad(format!("bus {}: v_max {} must exceed v_min {}", b.id, b.v_max, b.v_min));
            }
            if let Some(s) = b.v_setpoint {
                if b.kind != BusKind::Pcc {
                    return bad(format!("bus {}: only a PCC may carry v_setpoint", b.id));
                }
                if !(b.v_min..=b.v_max).contains(&s) {
                    return bad(format!("bus {}: v_setpoint {s} outside [{}, {}]", b.id, b.v_min, b.v_max));
                }
            }
            if b.fixed_load.len() != self.horizon {
                return bad(format!(
                    "bus {}: load profile has {} points, horizon is {}",
                    b.id,
                    b.fixed_load.len(),
                    self.horizon
                ));
            }
            if let Some((t, v)) = b.fixed_load.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v >= 0.0)) {
                return bad(format!("bus {}: fixed load {v} at t={t} must be finite and nonnegative", b.id));
            }
            if !(b.load_power_factor > 0.0 && b.load_power_factor <= 1.0) {
                return bad(format!("bus {}: power factor {} outside (0, 1]", b.id, b.load_power_factor));
            }
            if !(b.min_energy.is_finite() && b.min_energy >= 0.0) {
                return bad(format!("bus {}: min_energy {} must be finite and nonnegative", b.id, b.min_energy));
            }
        }
        match self.pcc_buses.len() {
            0 => return bad("no PCC bus".into()),
            1 => {}
            n if !self.allow_multiple_pcc => {
                return bad(format!("{n} PCC buses {:?} but multiple PCCs are not enabled", self.pcc_buses))
            }
            _ => {}
        }
        if let Some(l) = self.import_limit_kw {
            if !(l.is_finite() && l >= 0.0) {
                return bad(format!("import limit {l} must be finite and nonnegative"));
            }
        }
        for (i, l) in self.lines.iter().enumerate() {
            let name = format!("line #{i} ({}-{})", l.from, l.to);
            if l.from == l.to {
                return bad(format!("{name}: from and to are the same bus"));
            }
            if !seen.contains(&l.from) || !seen.contains(&l.to) {
                return bad(format!("{name}: references an unknown bus"));
            }
            if !(l.r >= 0.0 && l.x >= 0.0 && l.r.is_finite() && l.x.is_finite()) {
                return bad(format!("{name}: r and x must be finite and nonnegative"));
            }
            if !(l.s_max > 0.0 && l.s_max.is_finite()) {
                return bad(format!("{name}: s_max must be positive"));
            }
        }
        Ok(())
    }

    pub fn topology(&self) -> &TopologyReport {
        &self.topology
    }

    pub fn bus_index(&self, id: usize) -> Option<usize> {
        self.buses.iter().position(|b| b.id == id)
    }

    pub fn bus(&self, id: usize) -> Option<&BusSpec> {
        self.buses.iter().find(|b| b.id == id)
    }

    pub fn is_pcc(&self, id: usize) -> bool {
        self.pcc_buses.contains(&id)
    }

    pub fn total_fixed_load(&self, t: usize) -> f64 {
        self.buses.iter().map(|b| b.fixed_load[t]).sum()
    }

    pub fn peak_load(&self) -> f64 {
        (0..self.horizon).map(|t| self.total_fixed_load(t)).fold(0.0, f64::max)
    }

    /// Copy with one bus's fixed load changed; used by perturbation checks.
    pub fn with_fixed_load(&self, bus: usize, t: usize, kw: f64) -> Result<Self> {
        let mut c = self.clone();
        let i = c.bus_index(bus).ok_or_else(|| Error::Validation(format!("no bus {bus}")))?;
        c.buses[i].fixed_load[t] = kw;
        c.validate_data()?;
        Ok(c)
    }

    /// Copy with a different substation limit.
    pub fn with_import_limit(&self, limit_kw: Option<f64>) -> Result<Self> {
        let mut c = self.clone();
        c.import_limit_kw = limit_kw;
        c.validate_data()?;
        Ok(c)
    }
}

/// Branch-flow state in p.u., indexed `[bus or line][t]` with `t` running
/// over the intervals the state was solved for.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PowerFlowState {
    pub intervals: Vec<usize>,
    pub v_sq: Vec<Vec<f64>>,
    pub i_sq: Vec<Vec<f64>>,
    pub p_flow: Vec<Vec<f64>>,
    pub q_flow: Vec<Vec<f64>>,
    /// Substation import summed over PCCs.
    pub p_ug: Vec<f64>,
    pub q_ug: Vec<f64>,
}

impl PowerFlowState {
    /// `v·ℓ − (P² + Q²)` per line per interval, with `v` at the sending end.
    pub fn soc_residuals(&self, case: &NetworkCase) -> Vec<Vec<f64>> {
        let topo = case.topology();
        (0..case.lines.len())
            .map(|li| {
                let parent = topo.line_parent[li];
                (0..self.intervals.len())
                    .map(|k| {
                        self.v_sq[parent][k] * self.i_sq[li][k]
                            - (self.p_flow[li][k].powi(2) + self.q_flow[li][k].powi(2))
                    })
                    .collect()
            })
            .collect()
    }

    /// Names every violated voltage, capacity or cone condition.
    pub fn check(&self, case: &NetworkCase, tol: f64) -> Vec<String> {
        let mut out = Vec::new();
        for (bi, b) in case.buses.iter().enumerate() {
            for (k, &t) in self.intervals.iter().enumerate() {
                let v = self.v_sq[bi][k];
                if v < b.v_min * b.v_min - tol || v > b.v_max * b.v_max + tol {
                    out.push(format!("bus {} t={t}: v_sq {v} outside bounds", b.id));
                }
            }
        }
        let res = self.soc_residuals(case);
        for (li, l) in case.lines.iter().enumerate() {
            for (k, &t) in self.intervals.iter().enumerate() {
                let s2 = self.p_flow[li][k].powi(2) + self.q_flow[li][k].powi(2);
                if s2.sqrt() > l.s_max + tol {
                    out.push(format!("line {} t={t}: flow exceeds s_max", l.label()));
                }
                if res[li][k] < -tol {
                    out.push(format!("line {} t={t}: cone residual {}", l.label(), res[li][k]));
                }
            }
        }
        out
    }
}
