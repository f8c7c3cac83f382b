//! Energy burden and the revenue-neutral equity price adjustment.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{ActorTable, DlmpSchedule, IncomeTier};
use crate::error::{Error, Result};
use crate::grid::NetworkCase;

/// Relative tolerance on per-bus revenue neutrality.
pub const NEUTRALITY_TOL: f64 = 1e-9;

/// How burden moves prices. `Inverse` lowers the price of high-burden actors;
/// `Direct` scales prices in proportion to burden.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BurdenOrientation {
    Direct,
    #[default]
    Inverse,
}

/// Weighting used for bus and network burden averages.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BurdenAverage {
    #[default]
    LoadWeighted,
    Simple,
}

/// Price the burden is evaluated at.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BurdenPrice {
    #[default]
    Upstream,
    Dlmp,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EquityOptions {
    pub orientation: BurdenOrientation,
    pub average: BurdenAverage,
    pub price: BurdenPrice,
}

/// Burden per actor and its averages, all `[.][t]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BurdenTable {
    pub actor: Vec<Vec<f64>>,
    /// `None` where the bus has no actors.
    pub bus: Vec<Vec<Option<f64>>>,
    pub network: Vec<f64>,
}

/// `price · consumption · Δt` over income per interval.
pub fn compute_energy_burden(
    case: &NetworkCase,
    actors: &ActorTable,
    prices: &[Vec<f64>],
    average: BurdenAverage,
) -> Result<BurdenTable> {
    let horizon = case.horizon;
    if prices.len() != case.buses.len() || prices.iter().any(|p| p.len() != horizon) {
        return Err(Error::Dimension("burden prices must be [bus][t]".into()));
    }
    let actor: Vec<Vec<f64>> = actors
        .actors
        .iter()
        .map(|a| {
            let bi = case.bus_index(a.bus).expect("validated actor bus");
            let income = a.daily_income / horizon as f64;
            (0..horizon).map(|t| prices[bi][t] * a.baseline[t] * case.dt / income).collect()
        })
        .collect();
    let mean = |idx: &[usize], vals: &dyn Fn(usize) -> f64, t: usize| -> Option<f64> {
        if idx.is_empty() {
            return None;
        }
        match average {
            BurdenAverage::Simple => Some(idx.iter().map(|&a| vals(a)).sum::<f64>() / idx.len() as f64),
            BurdenAverage::LoadWeighted => {
                let w: f64 = idx.iter().map(|&a| actors.actors[a].baseline[t]).sum();
                (w > 0.0).then(|| idx.iter().map(|&a| actors.actors[a].baseline[t] * vals(a)).sum::<f64>() / w)
            }
        }
    };
    let all: Vec<usize> = (0..actors.actors.len()).collect();
    let mut bus = Vec::with_capacity(case.buses.len());
    for b in &case.buses {
        let idx: Vec<usize> = actors.at_bus(b.id).map(|(i, _)| i).collect();
        bus.push((0..horizon).map(|t| mean(&idx, &|a| actor[a][t], t)).collect());
    }
    let network = (0..horizon).map(|t| mean(&all, &|a| actor[a][t], t).unwrap_or(0.0)).collect();
    Ok(BurdenTable { actor, bus, network })
}

/// Broadcasts an interval price to every bus.
pub fn uniform_prices(case: &NetworkCase, price: &[f64]) -> Vec<Vec<f64>> {
    vec![price.to_vec(); case.buses.len()]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdjustedPriceTable {
    pub options: EquityOptions,
    pub burden: BurdenTable,
    /// $/kWh `[bus index][t]`
    pub bus: Vec<Vec<f64>>,
    /// $/kWh `[actor][t]`
    pub actor: Vec<Vec<f64>>,
}

/// Rescales nodal prices by relative burden and splits each bus price across
/// its actors so that every bus collects exactly its nodal revenue.
pub fn adjust_prices_equity(
    case: &NetworkCase,
    actors: &ActorTable,
    dlmp: &DlmpSchedule,
    ug_price: &[f64],
    options: EquityOptions,
) -> Result<AdjustedPriceTable> {
    let burden_prices = match options.price {
        BurdenPrice::Upstream => uniform_prices(case, ug_price),
        BurdenPrice::Dlmp => dlmp.lambda.clone(),
    };
    let burden = compute_energy_burden(case, actors, &burden_prices, options.average)?;
    let horizon = case.horizon;
    let inverse = options.orientation == BurdenOrientation::Inverse;
    // index used for scaling: burden itself, or its reciprocal
    let index = |eb: f64| if inverse { 1.0 / eb } else { eb };

    let actor_index: Vec<Vec<f64>> = burden.actor.iter().map(|r| r.iter().map(|&e| index(e)).collect()).collect();
    let weighted = |idx: &[usize], t: usize| -> Option<f64> {
        let vals = idx.iter().map(|&a| actor_index[a][t]);
        match options.average {
            BurdenAverage::Simple => Some(vals.sum::<f64>() / idx.len() as f64),
            BurdenAverage::LoadWeighted => {
                let w: f64 = idx.iter().map(|&a| actors.actors[a].baseline[t]).sum();
                (w > 0.0).then(|| idx.iter().zip(vals).map(|(&a, v)| actors.actors[a].baseline[t] * v).sum::<f64>() / w)
            }
        }
    };
    let all: Vec<usize> = (0..actors.actors.len()).filter(|&a| actors.actors[a].baseline.iter().any(|&p| p > 0.0)).collect();

    let mut bus_price = dlmp.lambda.clone();
    let mut actor_price: Vec<Vec<f64>> = actors
        .actors
        .iter()
        .map(|a| dlmp.lambda[case.bus_index(a.bus).expect("validated")].clone())
        .collect();
    for t in 0..horizon {
        let loaded: Vec<usize> = all.iter().copied().filter(|&a| actors.actors[a].baseline[t] > 0.0).collect();
        if loaded.is_empty() {
            continue;
        }
        let net_index = weighted(&loaded, t).unwrap_or(0.0);
        if !(net_index.is_finite() && net_index > 0.0) {
            return Err(Error::Validation(format!("network energy burden is zero or undefined at t={t}")));
        }
        for (bi, b) in case.buses.iter().enumerate() {
            let idx: Vec<usize> = actors.at_bus(b.id).map(|(i, _)| i).filter(|&a| actors.actors[a].baseline[t] > 0.0).collect();
            if idx.is_empty() {
                continue;
            }
            let bus_index = weighted(&idx, t).unwrap_or(0.0);
            if !(bus_index.is_finite() && bus_index > 0.0) {
                return Err(Error::Validation(format!("energy burden at bus {} is zero or undefined at t={t}", b.id)));
            }
            let lam = dlmp.lambda[bi][t] * bus_index / net_index;
            bus_price[bi][t] = lam;
            for &a in &idx {
                actor_price[a][t] = lam * actor_index[a][t] / bus_index;
            }
            // simple averages do not conserve revenue; restore it per bus
            let load: f64 = idx.iter().map(|&a| actors.actors[a].baseline[t]).sum();
            let paid: f64 = idx.iter().map(|&a| actor_price[a][t] * actors.actors[a].baseline[t]).sum();
            if options.average == BurdenAverage::Simple && paid != 0.0 {
                let k = lam * load / paid;
                for &a in &idx {
                    actor_price[a][t] *= k;
                }
            }
        }
    }
    let table = AdjustedPriceTable { options, burden, bus: bus_price, actor: actor_price };
    check_neutrality(case, actors, &table)?;
    Ok(table)
}

/// Per-bus actor payments equal the adjusted nodal price times bus load.
pub fn check_neutrality(case: &NetworkCase, actors: &ActorTable, table: &AdjustedPriceTable) -> Result<()> {
    for (bi, b) in case.buses.iter().enumerate() {
        for t in 0..case.horizon {
            let (mut load, mut paid) = (0.0, 0.0);
            for (a, actor) in actors.at_bus(b.id) {
                load += actor.baseline[t];
                paid += table.actor[a][t] * actor.baseline[t];
            }
            let expect = table.bus[bi][t] * load;
            let err = (paid - expect).abs() / expect.abs().max(1e-12);
            if load > 0.0 && err > NEUTRALITY_TOL {
                return Err(Error::Neutrality { bus: b.id, t, err });
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActorSettlement {
    pub actor: String,
    pub bus: usize,
    pub tier: Option<IncomeTier>,
    /// kWh over the horizon
    pub energy: f64,
    /// $ at nodal prices
    pub pay_dlmp: f64,
    /// $ at adjusted actor prices
    pub pay_adjusted: f64,
    pub burden_dlmp: f64,
    pub burden_adjusted: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SettlementReport {
    pub actors: Vec<ActorSettlement>,
    pub total_dlmp: f64,
    pub total_adjusted: f64,
    /// Energy-weighted mean adjusted price per tier, $/kWh.
    pub tier_price: BTreeMap<IncomeTier, f64>,
    pub tier_price_dlmp: BTreeMap<IncomeTier, f64>,
}

impl SettlementReport {
    /// Relative change in total collected revenue.
    pub fn revenue_change(&self) -> f64 {
        (self.total_adjusted - self.total_dlmp) / self.total_dlmp.abs().max(1e-12)
    }
}

pub fn settlement_report(
    case: &NetworkCase,
    actors: &ActorTable,
    dlmp: &DlmpSchedule,
    adjusted: &AdjustedPriceTable,
) -> SettlementReport {
    let dt = case.dt;
    let mut rows = Vec::with_capacity(actors.actors.len());
    for (a, actor) in actors.actors.iter().enumerate() {
        let bi = case.bus_index(actor.bus).expect("validated");
        let (mut energy, mut pd, mut pa) = (0.0, 0.0, 0.0);
        for t in 0..case.horizon {
            let e = actor.baseline[t] * dt;
            energy += e;
            pd += dlmp.lambda[bi][t] * e;
            pa += adjusted.actor[a][t] * e;
        }
        rows.push(ActorSettlement {
            actor: actor.id.clone(),
            bus: actor.bus,
            tier: actor.tier,
            energy,
            pay_dlmp: pd,
            pay_adjusted: pa,
            burden_dlmp: pd / actor.daily_income,
            burden_adjusted: pa / actor.daily_income,
        });
    }
    let mut sums: BTreeMap<IncomeTier, (f64, f64, f64)> = BTreeMap::new();
    for r in &rows {
        if let Some(tier) = r.tier {
            let s = sums.entry(tier).or_default();
            s.0 += r.energy;
            s.1 += r.pay_adjusted;
            s.2 += r.pay_dlmp;
        }
    }
    let per_kwh = |pick: fn(&(f64, f64, f64)) -> f64| {
        sums.iter().filter(|(_, s)| s.0 > 0.0).map(|(k, s)| (*k, pick(s) / s.0)).collect()
    };
    SettlementReport {
        total_dlmp: rows.iter().map(|r| r.pay_dlmp).sum(),
        total_adjusted: rows.iter().map(|r| r.pay_adjusted).sum(),
        tier_price: per_kwh(|s| s.1),
        tier_price_dlmp: per_kwh(|s| s.2),
        actors: rows,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::ieee33_subcase;
    use crate::stage1::Actor;

    fn setup() -> (NetworkCase, ActorTable, DlmpSchedule) {
        let case = ieee33_subcase(3);
        let mut actors = Vec::new();
        for b in &case.buses[1..] {
            for (k, (share, income)) in [(0.3, 20.0), (0.7, 200.0)].into_iter().enumerate() {
                actors.push(Actor {
                    id: format!("a{}_{k}", b.id),
                    bus: b.id,
                    daily_income: income,
                    share,
                    baseline: b.fixed_load.iter().map(|p| p * share).collect(),
                    tier: Some(if k == 0 { IncomeTier::Low } else { IncomeTier::High }),
                    ders: Vec::new(),
                });
            }
        }
        let lambda: Vec<Vec<f64>> =
            (0..case.buses.len()).map(|i| (0..case.horizon).map(|t| 0.1 + 0.01 * i as f64 + 0.001 * t as f64).collect()).collect();
        let dlmp = DlmpSchedule {
            bus_ids: case.buses.iter().map(|b| b.id).collect(),
            lambda_q: lambda.clone(),
            lambda,
        };
        (case, ActorTable { actors }, dlmp)
    }

    #[test]
    fn adjustment_is_revenue_neutral_per_bus() {
        let (case, actors, dlmp) = setup();
        let ug = vec![0.1; case.horizon];
        for orientation in [BurdenOrientation::Direct, BurdenOrientation::Inverse] {
            for average in [BurdenAverage::LoadWeighted, BurdenAverage::Simple] {
                let opts = EquityOptions { orientation, average, price: BurdenPrice::Upstream };
                let adj = adjust_prices_equity(&case, &actors, &dlmp, &ug, opts).unwrap();
                check_neutrality(&case, &actors, &adj).unwrap();
            }
        }
    }

    #[test]
    fn inverse_orientation_favours_low_income() {
        let (case, actors, dlmp) = setup();
        let ug = vec![0.1; case.horizon];
        let adj = adjust_prices_equity(&case, &actors, &dlmp, &ug, EquityOptions::default()).unwrap();
        let rep = settlement_report(&case, &actors, &dlmp, &adj);
        assert!(rep.tier_price[&IncomeTier::Low] < rep.tier_price[&IncomeTier::High]);
        let direct = EquityOptions { orientation: BurdenOrientation::Direct, ..Default::default() };
        let adj = adjust_prices_equity(&case, &actors, &dlmp, &ug, direct).unwrap();
        let rep = settlement_report(&case, &actors, &dlmp, &adj);
        assert!(rep.tier_price[&IncomeTier::Low] > rep.tier_price[&IncomeTier::High]);
    }

    #[test]
    fn scaling_all_incomes_leaves_prices_unchanged() {
        let (case, mut actors, dlmp) = setup();
        let ug = vec![0.1; case.horizon];
        let a = adjust_prices_equity(&case, &actors, &dlmp, &ug, EquityOptions::default()).unwrap();
        for x in &mut actors.actors {
            x.daily_income *= 3.0;
        }
        let b = adjust_prices_equity(&case, &actors, &dlmp, &ug, EquityOptions::default()).unwrap();
        for (ra, rb) in a.actor.iter().zip(&b.actor) {
            for (x, y) in ra.iter().zip(rb) {
                assert!((x - y).abs() <= 1e-12 * x.abs());
            }
        }
    }

    #[test]
    fn uniform_burden_keeps_nodal_prices() {
        let (case, mut actors, dlmp) = setup();
        for x in &mut actors.actors {
            x.daily_income = x.baseline.iter().sum();
        }
        let ug = vec![0.1; case.horizon];
        let adj = adjust_prices_equity(&case, &actors, &dlmp, &ug, EquityOptions::default()).unwrap();
        for (bi, row) in adj.bus.iter().enumerate().skip(1) {
            for (t, &p) in row.iter().enumerate() {
                assert!((p - dlmp.lambda[bi][t]).abs() < 1e-12);
            }
        }
    }
}
