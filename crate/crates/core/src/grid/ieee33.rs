//! The 33-bus Baran–Wu feeder.

use super::{BusKind, BusSpec, LineSpec, NetworkCase, PerUnitBase};

/// (from, to, r Ω, x Ω)
pub const IEEE33_LINES: [(usize, usize, f64, f64); 32] = [
    (1, 2, 0.0922, 0.0470),
    (2, 3, 0.4930, 0.2511),
    (3, 4, 0.3660, 0.1864),
    (4, 5, 0.3811, 0.1941),
    (5, 6, 0.8190, 0.7070),
    (6, 7, 0.1872, 0.6188),
    (7, 8, 0.7114, 0.2351),
    (8, 9, 1.0300, 0.7400),
    (9, 10, 1.0440, 0.7400),
    (10, 11, 0.1966, 0.0650),
    (11, 12, 0.3744, 0.1238),
    (12, 13, 1.4680, 1.1550),
    (13, 14, 0.5416, 0.7129),
    (14, 15, 0.5910, 0.5260),
    (15, 16, 0.7463, 0.5450),
    (16, 17, 1.2890, 1.7210),
    (17, 18, 0.7320, 0.5740),
    (2, 19, 0.1640, 0.1565),
    (19, 20, 1.5042, 1.3554),
    (20, 21, 0.4095, 0.4784),
    (21, 22, 0.7089, 0.9373),
    (3, 23, 0.4512, 0.3083),
    (23, 24, 0.8980, 0.7091),
    (24, 25, 0.8960, 0.7011),
    (6, 26, 0.2030, 0.1034),
    (26, 27, 0.2842, 0.1447),
    (27, 28, 1.0590, 0.9337),
    (28, 29, 0.8042, 0.7006),
    (29, 30, 0.5075, 0.2585),
    (30, 31, 0.9744, 0.9630),
    (31, 32, 0.3105, 0.3619),
    (32, 33, 0.3410, 0.5302),
];

/// (bus, P kW, Q kVar) at nominal peak.
pub const IEEE33_LOADS: [(usize, f64, f64); 33] = [
    (1, 0.0, 0.0),
    (2, 100.0, 60.0),
    (3, 90.0, 40.0),
    (4, 120.0, 80.0),
    (5, 60.0, 30.0),
    (6, 60.0, 20.0),
    (7, 200.0, 100.0),
    (8, 200.0, 100.0),
    (9, 60.0, 20.0),
    (10, 60.0, 20.0),
    (11, 45.0, 30.0),
    (12, 60.0, 35.0),
    (13, 60.0, 35.0),
    (14, 120.0, 80.0),
    (15, 60.0, 10.0),
    (16, 60.0, 20.0),
    (17, 60.0, 20.0),
    (18, 90.0, 40.0),
    (19, 90.0, 40.0),
    (20, 90.0, 40.0),
    (21, 90.0, 40.0),
    (22, 90.0, 40.0),
    (23, 90.0, 50.0),
    (24, 420.0, 200.0),
    (25, 420.0, 200.0),
    (26, 60.0, 25.0),
    (27, 60.0, 25.0),
    (28, 60.0, 20.0),
    (29, 120.0, 70.0),
    (30, 200.0, 600.0),
    (31, 150.0, 70.0),
    (32, 210.0, 100.0),
    (33, 60.0, 40.0),
];

/// Hourly residential-commercial shape, peak 1.0 at hour 18.
pub const DEFAULT_LOAD_SHAPE: [f64; 24] = [
    0.62, 0.58, 0.55, 0.54, 0.55, 0.60, 0.70, 0.80, 0.85, 0.84, 0.82, 0.80, 0.78, 0.77, 0.78, 0.82, 0.90, 0.97,
    1.00, 0.98, 0.93, 0.85, 0.75, 0.67,
];

/// Uniform rating for every line; the published data carries none.
const LINE_RATING_KVA: f64 = 6000.0;

fn bus_spec(id: usize, p: f64, q: f64, shape: &[f64], dt: f64) -> BusSpec {
    let pcc = id == 1;
    let fixed_load: Vec<f64> = shape.iter().map(|s| p * s).collect();
    let load_power_factor = if p > 0.0 { p / p.hypot(q) } else { 1.0 };
    let min_energy = fixed_load.iter().sum::<f64>() * dt;
    BusSpec {
        id,
        kind: if pcc { BusKind::Pcc } else { BusKind::Load },
        v_min: if pcc { 0.95 } else { 0.90 },
        v_max: 1.05,
        v_setpoint: pcc.then_some(1.0),
        fixed_load,
        load_power_factor,
        min_energy,
    }
}

fn build(buses: &[usize]) -> NetworkCase {
    let base = PerUnitBase::default();
    let specs = IEEE33_LOADS
        .iter()
        .filter(|(id, ..)| buses.contains(id))
        .map(|&(id, p, q)| bus_spec(id, p, q, &DEFAULT_LOAD_SHAPE, 1.0))
        .collect();
    let lines = IEEE33_LINES
        .iter()
        .filter(|(a, b, ..)| buses.contains(a) && buses.contains(b))
        .map(|&(a, b, r, x)| LineSpec::new(a, b, r, x, LINE_RATING_KVA, &base))
        .collect();
    NetworkCase::new("ieee33", base, specs, lines, DEFAULT_LOAD_SHAPE.len(), 1.0, None, false)
        .expect("built-in feeder data is valid")
}

/// The full 33-bus feeder over a 24 h horizon, bus 1 as PCC held at 1.0 p.u.
pub fn builtin_ieee33() -> NetworkCase {
    build(&(1..=33).collect::<Vec<_>>())
}

/// Buses `1..=n` of the main trunk (n ≤ 18), same data otherwise.
pub fn ieee33_subcase(n: usize) -> NetworkCase {
    assert!((2..=18).contains(&n), "trunk subcase needs 2..=18 buses");
    let mut c = build(&(1..=n).collect::<Vec<_>>());
    c.name = format!("ieee33-trunk{n}");
    c
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn published_totals() {
        let p: f64 = IEEE33_LOADS.iter().map(|l| l.1).sum();
        let q: f64 = IEEE33_LOADS.iter().map(|l| l.2).sum();
        assert_eq!(p, 3715.0);
        assert_eq!(q, 2300.0);
    }

    #[test]
    fn builtin_shape() {
        let c = builtin_ieee33();
        assert_eq!((c.buses.len(), c.lines.len(), c.pcc_buses.len()), (33, 32, 1));
        assert!((c.peak_load() - 3715.0).abs() < 1e-9);
        let topo = c.topology();
        assert!(topo.radial && topo.violations.is_empty());
        assert_eq!(topo.depth_of(&c, 18), Some(17));
    }

    #[test]
    fn reactive_load_follows_published_q() {
        let c = builtin_ieee33();
        let b30 = c.bus(30).unwrap();
        let peak = DEFAULT_LOAD_SHAPE.iter().position(|&s| s == 1.0).unwrap();
        assert!((b30.reactive_load(peak) - 600.0).abs() < 1e-9);
    }

    #[test]
    fn subcase_is_a_trunk() {
        let c = ieee33_subcase(5);
        assert_eq!((c.buses.len(), c.lines.len()), (5, 4));
        assert!(c.topology().radial);
    }
}
