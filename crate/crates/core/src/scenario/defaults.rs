//! Synthesis constants. Changing any value changes every synthesized
//! scenario, so bump `DEFAULTS_VERSION` with it.

pub const DEFAULTS_VERSION: u32 = 1;

/// DG share of the combined DG + BESS power.
pub const DG_SHARE: f64 = 0.70;
/// (preferred bus, share of DG power, $/kWh)
pub const DG_SITES: [(usize, f64, f64); 5] =
    [(18, 0.30, 0.11), (33, 0.25, 0.14), (25, 0.20, 0.19), (14, 0.15, 0.26), (7, 0.10, 0.30)];
/// Ramp limit as a fraction of p_max per hour.
pub const DG_RAMP: f64 = 1.0;

pub const BESS_SITES: [usize; 2] = [12, 29];
pub const BESS_HOURS: f64 = 4.0;
pub const BESS_EFF: f64 = 0.95;
pub const BESS_INIT: f64 = 0.5;
pub const BESS_SOC_MIN: f64 = 0.1;
pub const BESS_COST: f64 = 0.01;

pub const PV_UNITS: usize = 5;
/// Inverter rating of each PV unit over peak load.
pub const PV_CAPACITY_FRACTION: f64 = 0.02;
pub const PV_POWER_FACTOR: f64 = 0.9;
/// Sunrise and sunset, hours.
pub const PV_DAYLIGHT: (f64, f64) = (6.0, 19.0);

pub const EV_CHARGER_KW: f64 = 7.0;
pub const EV_BATTERY_KWH: f64 = 60.0;
pub const EV_EFF: f64 = 0.95;
pub const EV_SOC_MIN: f64 = 0.1;
pub const EV_SOC_ARRIVAL: f64 = 0.4;
pub const EV_SOC_DEPARTURE: f64 = 0.8;
/// First and last plugged-in hour.
pub const EV_WINDOW: (usize, usize) = (17, 23);
pub const EV_COST: f64 = 0.005;

pub const FLEX_COST: f64 = 0.02;

/// Daily income per kW of actor peak load, $.
pub const INCOME_LOW: f64 = 25.0;
pub const INCOME_MEDIUM: f64 = 50.0;
pub const INCOME_HIGH: f64 = 130.0;

/// (first hour, last hour, $/kWh)
pub const TOU: [(usize, usize, f64); 4] = [(0, 6, 0.08), (7, 16, 0.12), (17, 21, 0.22), (22, 23, 0.10)];

/// Range of the per-bus multiplier before normalization.
pub const DIST_FACTOR: (f64, f64) = (0.5, 1.5);
pub const DISTURBANCE_MAGNITUDE: f64 = 0.25;

pub const IMPORT_LIMIT_FRACTION: f64 = 0.65;
