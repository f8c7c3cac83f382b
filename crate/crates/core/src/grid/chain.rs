use super::{BusKind, BusSpec, LineSpec, NetworkCase, PerUnitBase};
use crate::error::Result;

/// Chain feeder `1 - 2 - … - n+1` with bus 1 as PCC at 1.0 p.u. and one
/// load profile per downstream bus, all lines sharing one impedance.
pub fn chain_feeder(loads_kw: &[Vec<f64>], r_ohm: f64, x_ohm: f64, s_max_kva: f64, power_factor: f64) -> Result<NetworkCase> {
    let base = PerUnitBase::default();
    let horizon = loads_kw.first().map_or(1, Vec::len);
    let mut buses = vec![BusSpec {
        id: 1,
        kind: BusKind::Pcc,
        v_min: 0.95,
        v_max: 1.05,
        v_setpoint: Some(1.0),
        fixed_load: vec![0.0; horizon],
        load_power_factor: 1.0,
        min_energy: 0.0,
    }];
    let mut lines = Vec::new();
    for (i, load) in loads_kw.iter().enumerate() {
        let id = i + 2;
        buses.push(BusSpec {
            id,
            kind: BusKind::Load,
            v_min: 0.90,
            v_max: 1.05,
            v_setpoint: None,
            fixed_load: load.clone(),
            load_power_factor: power_factor,
            min_energy: load.iter().sum(),
        });
        lines.push(LineSpec::new(id - 1, id, r_ohm, x_ohm, s_max_kva, &base));
    }
    NetworkCase::new(format!("chain{}", buses.len()), base, buses, lines, horizon, 1.0, None, false)
}
