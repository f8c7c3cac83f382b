//! JSON case files. Everything on disk is SI (kW, kVar, kVA, Ω, kV, MVA).

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{BusKind, BusSpec, LineSpec, NetworkCase, PerUnitBase, DEFAULT_POWER_FACTOR};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaseFile {
    pub power_mva: f64,
    pub voltage_kv: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BusFile {
    pub id: usize,
    pub kind: BusKind,
    pub v_min: f64,
    pub v_max: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v_setpoint: Option<f64>,
    /// Nominal load, scaled by the case `load_shape`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_kw: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q_kvar: Option<f64>,
    /// Explicit profile; overrides `p_kw`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile_kw: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub power_factor: Option<f64>,
    /// Defaults to the fixed energy over the horizon.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_energy_kwh: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LineFile {
    pub from: usize,
    pub to: usize,
    pub r_ohm: f64,
    pub x_ohm: f64,
    pub s_max_kva: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseFile {
    #[serde(default)]
    pub name: String,
    pub base: BaseFile,
    pub horizon: usize,
    pub dt: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub load_shape: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pcc_import_limit_kw: Option<f64>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub multiple_pcc: bool,
    pub buses: Vec<BusFile>,
    pub lines: Vec<LineFile>,
}

impl CaseFile {
    pub fn into_case(self) -> Result<NetworkCase> {
        let base = PerUnitBase::new(self.base.power_mva, self.base.voltage_kv)?;
        let shape = match &self.load_shape {
            Some(s) if s.len() != self.horizon => {
                return Err(Error::Validation(format!(
                    "load_shape has {} points, horizon is {}",
                    s.len(),
                    self.horizon
                )))
            }
            Some(s) => s.clone(),
            None => vec![1.0; self.horizon],
        };
        let mut buses = Vec::with_capacity(self.buses.len());
        for b in self.buses {
            let fixed_load = match (&b.profile_kw, b.p_kw) {
                (Some(p), _) => p.clone(),
                (None, Some(p)) => shape.iter().map(|s| p * s).collect(),
                (None, None) => vec![0.0; self.horizon],
            };
            let load_power_factor = match (b.power_factor, b.p_kw, b.q_kvar) {
                (Some(pf), ..) => pf,
                (None, Some(p), Some(q)) if p > 0.0 => p / p.hypot(q),
                _ => DEFAULT_POWER_FACTOR,
            };
            let min_energy = b.min_energy_kwh.unwrap_or_else(|| fixed_load.iter().sum::<f64>() * self.dt);
            buses.push(BusSpec {
                id: b.id,
                kind: b.kind,
                v_min: b.v_min,
                v_max: b.v_max,
                v_setpoint: b.v_setpoint,
                fixed_load,
                load_power_factor,
                min_energy,
            });
        }
        let lines = self
            .lines
            .iter()
            .map(|l| LineSpec::new(l.from, l.to, l.r_ohm, l.x_ohm, l.s_max_kva, &base))
            .collect();
        NetworkCase::new(
            self.name,
            base,
            buses,
            lines,
            self.horizon,
            self.dt,
            self.pcc_import_limit_kw,
            self.multiple_pcc,
        )
    }

    /// Fully explicit file: every bus carries its own profile and factor.
    pub fn from_case(case: &NetworkCase) -> Self {
        CaseFile {
            name: case.name.clone(),
            base: BaseFile { power_mva: case.base.base_power, voltage_kv: case.base.base_voltage },
            horizon: case.horizon,
            dt: case.dt,
            load_shape: None,
            pcc_import_limit_kw: case.import_limit_kw,
            multiple_pcc: case.allow_multiple_pcc,
            buses: case
                .buses
                .iter()
                .map(|b| BusFile {
                    id: b.id,
                    kind: b.kind,
                    v_min: b.v_min,
                    v_max: b.v_max,
                    v_setpoint: b.v_setpoint,
                    p_kw: None,
                    q_kvar: None,
                    profile_kw: Some(b.fixed_load.clone()),
                    power_factor: Some(b.load_power_factor),
                    min_energy_kwh: Some(b.min_energy),
                })
                .collect(),
            lines: case
                .lines
                .iter()
                .map(|l| LineFile { from: l.from, to: l.to, r_ohm: l.r_ohm, x_ohm: l.x_ohm, s_max_kva: l.s_max_kva })
                .collect(),
        }
    }
}

pub fn parse_case(text: &str) -> Result<NetworkCase> {
    let file: CaseFile =
        serde_json::from_str(text).map_err(|e| Error::Parse { what: "case".into(), msg: e.to_string() })?;
    file.into_case()
}

pub fn load_case(path: impl AsRef<Path>) -> Result<NetworkCase> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.display().to_string(), source })?;
    parse_case(&text).map_err(|e| match e {
        Error::Parse { msg, .. } => Error::Parse { what: path.display().to_string(), msg },
        other => other,
    })
}

pub fn to_json(case: &NetworkCase) -> String {
    serde_json::to_string_pretty(&CaseFile::from_case(case)).expect("case serializes")
}

pub fn save_case(case: &NetworkCase, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, to_json(case)).map_err(|source| Error::Io { path: path.display().to_string(), source })
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWO_BUS: &str = r#"{
        "name": "two",
        "base": {"power_mva": 1.0, "voltage_kv": 12.66},
        "horizon": 2, "dt": 1.0,
        "load_shape": [0.5, 1.0],
        "buses": [
            {"id": 1, "kind": "pcc", "v_min": 0.95, "v_max": 1.05, "v_setpoint": 1.0},
            {"id": 2, "kind": "load", "v_min": 0.9, "v_max": 1.05, "p_kw": 100.0, "q_kvar": 0.0}
        ],
        "lines": [{"from": 1, "to": 2, "r_ohm": 1.60276, "x_ohm": 0.0, "s_max_kva": 500.0}]
    }"#;

    #[test]
    fn shape_and_factor_are_applied() {
        let c = parse_case(TWO_BUS).unwrap();
        assert_eq!(c.bus(2).unwrap().fixed_load, vec![50.0, 100.0]);
        assert_eq!(c.bus(2).unwrap().load_power_factor, 1.0);
        assert_eq!(c.bus(2).unwrap().min_energy, 150.0);
        assert!((c.lines[0].r - 0.01).abs() < 1e-6);
    }

    #[test]
    fn round_trip_is_bit_identical() {
        let c = parse_case(TWO_BUS).unwrap();
        let back = parse_case(&to_json(&c)).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.lines[0].r.to_bits(), c.lines[0].r.to_bits());
    }

    #[test]
    fn inverted_voltage_names_the_bus() {
        let text = TWO_BUS.replace(r#""v_min": 0.9, "v_max": 1.05"#, r#""v_min": 1.05, "v_max": 0.9"#);
        let err = parse_case(&text).unwrap_err().to_string();
        assert!(err.contains("bus 2"), "{err}");
    }

    #[test]
    fn malformed_json_is_a_parse_error() {
        assert!(matches!(parse_case("{"), Err(Error::Parse { .. })));
    }
}
