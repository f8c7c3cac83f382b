//! Seeded portfolio, actor and disturbance synthesis on a loaded feeder.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::defaults as d;
use super::IncomeTierMap;
use crate::ders::{DerPortfolio, DgUnit, EvUnit, FlexLoad, PvUnit, StorageUnit};
use crate::error::{Error, Result};
use crate::grid::NetworkCase;
use crate::stage1::{Actor, ActorTable};
use crate::stage2::Disturbance;

/// Separate generator streams so that changing one kind of synthesis never
/// shifts another.
const STREAM_PORTFOLIO: u64 = 1;
const STREAM_ACTORS: u64 = 2;
const STREAM_DISTURBANCE: u64 = 3;

fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ActorMode {
    /// One actor per loaded bus.
    #[default]
    Single,
    /// Each bus load split among 2–4 actors.
    Multi,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PenetrationConfig {
    /// DG plus BESS power over peak load.
    pub dg_bess_fraction: f64,
    pub flexible_load_fraction: f64,
    pub ev_actor_fraction: f64,
    pub pv_units: usize,
    /// Substation limit as a fraction of peak load; none leaves it open.
    pub import_limit_fraction: Option<f64>,
    pub actor_mode: ActorMode,
    pub seed: u64,
}

impl Default for PenetrationConfig {
    fn default() -> Self {
        PenetrationConfig {
            dg_bess_fraction: 0.30,
            flexible_load_fraction: 0.15,
            ev_actor_fraction: 0.10,
            pv_units: d::PV_UNITS,
            import_limit_fraction: Some(d::IMPORT_LIMIT_FRACTION),
            actor_mode: ActorMode::Single,
            seed: 0,
        }
    }
}

impl PenetrationConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, x) in [
            ("dg_bess_fraction", self.dg_bess_fraction),
            ("flexible_load_fraction", self.flexible_load_fraction),
            ("ev_actor_fraction", self.ev_actor_fraction),
        ] {
            if !(0.0..=1.0).contains(&x) {
                return Err(Error::Config(format!("{name} {x} outside [0, 1]")));
            }
        }
        if let Some(f) = self.import_limit_fraction {
            if !(f > 0.0 && f.is_finite()) {
                return Err(Error::Config(format!("import_limit_fraction must be positive, got {f}")));
            }
        }
        Ok(())
    }
}

fn loaded_buses(case: &NetworkCase) -> Vec<usize> {
    case.buses.iter().filter(|b| b.fixed_load.iter().any(|&p| p > 0.0)).map(|b| b.id).collect()
}

fn peak_of(profile: &[f64]) -> f64 {
    profile.iter().copied().fold(0.0, f64::max)
}

/// Actors with incomes from the tier map. In multi mode, shares and income
/// factors are drawn per bus.
pub fn synthesize_actors(case: &NetworkCase, tiers: &IncomeTierMap, mode: ActorMode, seed: u64) -> ActorTable {
    let mut r = rng(seed, STREAM_ACTORS);
    let mut actors = Vec::new();
    for id in loaded_buses(case) {
        let b = case.bus(id).expect("listed bus");
        let tier = tiers.tier(id);
        let rate = tiers.rate(tier);
        let n = match mode {
            ActorMode::Single => 1,
            ActorMode::Multi => r.gen_range(2..=4),
        };
        let weights: Vec<f64> = match mode {
            ActorMode::Single => vec![1.0],
            ActorMode::Multi => (0..n).map(|_| r.gen_range(0.5..1.5)).collect(),
        };
        let total: f64 = weights.iter().sum();
        let mut shares: Vec<f64> = weights.iter().map(|w| w / total).collect();
        // shares must sum to exactly one
        let rest: f64 = shares[..n - 1].iter().sum();
        shares[n - 1] = 1.0 - rest;
        for (k, &share) in shares.iter().enumerate() {
            let factor = match mode {
                ActorMode::Single => 1.0,
                ActorMode::Multi => r.gen_range(0.8..1.2),
            };
            let baseline: Vec<f64> = b.fixed_load.iter().map(|p| p * share).collect();
            actors.push(Actor {
                id: if n == 1 { format!("a{id}") } else { format!("a{id}_{k}") },
                bus: id,
                daily_income: rate * peak_of(&baseline) * factor,
                share,
                baseline,
                tier: Some(tier),
                ders: Vec::new(),
            });
        }
    }
    ActorTable { actors }
}

fn pv_shape(t: usize, dt: f64) -> f64 {
    let hour = (t as f64 + 0.5) * dt;
    let (rise, set) = d::PV_DAYLIGHT;
    if hour <= rise || hour >= set {
        0.0
    } else {
        (std::f64::consts::PI * (hour - rise) / (set - rise)).sin()
    }
}

/// Actors from the tier map plus a portfolio sized from the case's peak load.
/// Owners are the first actor at each unit's bus; each actor lists the units
/// it owns.
pub fn synthesize_portfolio(
    case: &NetworkCase,
    tiers: &IncomeTierMap,
    config: &PenetrationConfig,
) -> Result<(DerPortfolio, ActorTable)> {
    let mut actors = synthesize_actors(case, tiers, config.actor_mode, config.seed);
    let portfolio = size_portfolio(case, &mut actors, config)?;
    Ok((portfolio, actors))
}

fn size_portfolio(
    case: &NetworkCase,
    actors: &mut ActorTable,
    config: &PenetrationConfig,
) -> Result<DerPortfolio> {
    config.validate()?;
    let mut r = rng(config.seed, STREAM_PORTFOLIO);
    let peak = case.peak_load();
    let loaded = loaded_buses(case);
    let horizon = case.horizon;
    let mut portfolio = DerPortfolio::default();
    if loaded.is_empty() {
        return Ok(portfolio);
    }
    let owner_at = |bus: usize| -> String {
        actors.actors.iter().find(|a| a.bus == bus).map(|a| a.id.clone()).expect("loaded bus has an actor")
    };
    // fall back to a seeded loaded bus when a preferred site is missing
    let site = |preferred: usize, r: &mut ChaCha8Rng| -> usize {
        if loaded.contains(&preferred) {
            preferred
        } else {
            *loaded.choose(r).expect("non-empty")
        }
    };

    let dg_power = config.dg_bess_fraction * d::DG_SHARE * peak;
    if dg_power > 0.0 {
        for (k, &(bus, frac, cost)) in d::DG_SITES.iter().enumerate() {
            let bus = site(bus, &mut r);
            let p_max = dg_power * frac;
            portfolio.dg.push(DgUnit {
                id: format!("dg{}", k + 1),
                bus,
                p_min: 0.0,
                p_max,
                ramp_up: p_max * d::DG_RAMP,
                ramp_down: p_max * d::DG_RAMP,
                cost,
                owner: owner_at(bus),
                initial_output: None,
            });
        }
    }
    let bess_power = config.dg_bess_fraction * (1.0 - d::DG_SHARE) * peak;
    if bess_power > 0.0 {
        for (k, &bus) in d::BESS_SITES.iter().enumerate() {
            let bus = site(bus, &mut r);
            let p = bess_power / d::BESS_SITES.len() as f64;
            let cap = p * d::BESS_HOURS;
            portfolio.bess.push(StorageUnit {
                id: format!("bess{}", k + 1),
                bus,
                p_ch_max: p,
                p_dch_max: p,
                eff_ch: d::BESS_EFF,
                eff_dch: d::BESS_EFF,
                energy_init: cap * d::BESS_INIT,
                capacity: cap,
                soc_min: cap * d::BESS_SOC_MIN,
                soc_max: cap,
                cost: d::BESS_COST,
                owner: owner_at(bus),
            });
        }
    }
    if config.pv_units > 0 {
        let mut buses = loaded.clone();
        buses.shuffle(&mut r);
        for (k, &bus) in buses.iter().cycle().take(config.pv_units).enumerate() {
            let cap = d::PV_CAPACITY_FRACTION * peak;
            portfolio.pv.push(PvUnit {
                id: format!("pv{}", k + 1),
                bus,
                capacity: cap,
                forecast: (0..horizon).map(|t| cap * pv_shape(t, case.dt)).collect(),
                power_factor_limit: vec![d::PV_POWER_FACTOR; horizon],
                owner: owner_at(bus),
            });
        }
    }
    let n_ev = (config.ev_actor_fraction * actors.actors.len() as f64).round() as usize;
    if n_ev > 0 {
        let mut idx: Vec<usize> = (0..actors.actors.len()).collect();
        idx.shuffle(&mut r);
        let mut chosen: Vec<usize> = idx.into_iter().take(n_ev).collect();
        chosen.sort_unstable();
        let (arrival, departure) = d::EV_WINDOW;
        if departure >= horizon {
            return Err(Error::Config(format!("EV window ends at {departure}, horizon is {horizon}")));
        }
        for (k, a) in chosen.into_iter().enumerate() {
            let actor = &actors.actors[a];
            portfolio.ev.push(EvUnit {
                id: format!("ev{}", k + 1),
                bus: actor.bus,
                p_ch_max: d::EV_CHARGER_KW,
                p_dch_max: d::EV_CHARGER_KW,
                eff_ch: d::EV_EFF,
                eff_dch: d::EV_EFF,
                capacity: d::EV_BATTERY_KWH,
                soc_min: d::EV_BATTERY_KWH * d::EV_SOC_MIN,
                soc_max: d::EV_BATTERY_KWH,
                soc_init: d::EV_BATTERY_KWH * d::EV_SOC_ARRIVAL,
                trip_energy: d::EV_BATTERY_KWH * d::EV_SOC_DEPARTURE,
                arrival,
                departure,
                cost: d::EV_COST,
                owner: actor.id.clone(),
            });
        }
    }
    if config.flexible_load_fraction > 0.0 {
        for &bus in &loaded {
            let b = case.bus(bus).expect("listed");
            portfolio.flex.push(FlexLoad {
                id: format!("fl{bus}"),
                bus,
                p_max: b.fixed_load.iter().map(|p| p * config.flexible_load_fraction).collect(),
                cost: d::FLEX_COST,
                owner: owner_at(bus),
            });
        }
    }
    let mut owned: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for (_, id, _, owner) in portfolio.units() {
        owned.entry(owner.to_string()).or_default().push(id.to_string());
    }
    for a in &mut actors.actors {
        a.ders = owned.remove(&a.id).unwrap_or_default();
    }
    Ok(portfolio)
}

/// Interval with the largest total fixed load, earliest on ties.
pub fn peak_interval(case: &NetworkCase) -> usize {
    (0..case.horizon).fold(0, |best, t| if case.total_fixed_load(t) > case.total_fixed_load(best) { t } else { best })
}

/// Random per-bus load change at `intervals`, scaled so that the change
/// summed over buses is exactly `magnitude` times the fixed load. Load drops
/// are applied uniformly so no bus goes negative.
pub fn gen_disturbance(case: &NetworkCase, magnitude: f64, seed: u64, intervals: &[usize]) -> Result<Disturbance> {
    if !(magnitude >= -1.0 && magnitude.is_finite()) {
        return Err(Error::Config(format!("disturbance magnitude must be at least -1, got {magnitude}")));
    }
    let mut dist = Disturbance::zero(case);
    if magnitude == 0.0 {
        return Ok(dist);
    }
    let mut r = rng(seed, STREAM_DISTURBANCE);
    let factors: Vec<f64> = case
        .buses
        .iter()
        .map(|_| if magnitude > 0.0 { r.gen_range(d::DIST_FACTOR.0..d::DIST_FACTOR.1) } else { 1.0 })
        .collect();
    for &t in intervals {
        if t >= case.horizon {
            return Err(Error::Config(format!("disturbance interval {t} beyond horizon {}", case.horizon)));
        }
        let total = case.total_fixed_load(t);
        let weighted: f64 = case.buses.iter().zip(&factors).map(|(b, f)| b.fixed_load[t] * f).sum();
        if weighted <= 0.0 {
            continue;
        }
        let scale = magnitude * total / weighted;
        for (bi, b) in case.buses.iter().enumerate() {
            dist.delta[bi][t] = b.fixed_load[t] * factors[bi] * scale;
        }
    }
    Ok(dist)
}

/// Time-of-use upstream price over the horizon, $/kWh.
pub fn tou_prices(case: &NetworkCase) -> Vec<f64> {
    (0..case.horizon)
        .map(|t| {
            let hour = ((t as f64 * case.dt) as usize) % 24;
            d::TOU.iter().find(|(lo, hi, _)| (*lo..=*hi).contains(&hour)).map(|x| x.2).expect("TOU covers the day")
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::builtin_ieee33;

    #[test]
    fn tou_follows_the_table() {
        let p = tou_prices(&builtin_ieee33());
        assert_eq!(p.len(), 24);
        assert_eq!((p[0], p[6], p[7], p[16], p[17], p[21], p[22], p[23]), (0.08, 0.08, 0.12, 0.12, 0.22, 0.22, 0.10, 0.10));
    }

    #[test]
    fn streams_are_independent() {
        let case = builtin_ieee33();
        let a = gen_disturbance(&case, 0.25, 7, &[18]).unwrap();
        let b = gen_disturbance(&case, 0.25, 7, &[18]).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, gen_disturbance(&case, 0.25, 8, &[18]).unwrap());
        assert_eq!(gen_disturbance(&case, 0.0, 7, &[18]).unwrap(), Disturbance::zero(&case));
    }

    #[test]
    fn bad_fractions_are_rejected() {
        let c = PenetrationConfig { dg_bess_fraction: 1.5, ..Default::default() };
        assert!(c.validate().is_err());
        let c = PenetrationConfig { import_limit_fraction: Some(0.0), ..Default::default() };
        assert!(c.validate().is_err());
        assert!(PenetrationConfig::default().validate().is_ok());
    }
}
