use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::defaults as d;
use crate::error::{Error, Result};
use crate::grid::NetworkCase;
use crate::stage1::IncomeTier;

/// Tier of every bus and the daily income per kW of peak load per tier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IncomeTierMap {
    pub tiers: BTreeMap<usize, IncomeTier>,
    pub income_per_kw: BTreeMap<IncomeTier, f64>,
}

impl IncomeTierMap {
    pub fn tier(&self, bus: usize) -> IncomeTier {
        self.tiers[&bus]
    }

    pub fn rate(&self, tier: IncomeTier) -> f64 {
        self.income_per_kw[&tier]
    }
}

pub fn default_income_rates() -> BTreeMap<IncomeTier, f64> {
    BTreeMap::from([
        (IncomeTier::Low, d::INCOME_LOW),
        (IncomeTier::Medium, d::INCOME_MEDIUM),
        (IncomeTier::High, d::INCOME_HIGH),
    ])
}

const LOW: [(usize, usize); 3] = [(2, 5), (14, 19), (28, 33)];
const MEDIUM: [(usize, usize); 2] = [(6, 10), (19, 23)];

fn in_ranges(ranges: &[(usize, usize)], bus: usize) -> bool {
    ranges.iter().any(|&(a, b)| (a..=b).contains(&bus))
}

/// Default map: low at 2–5, 14–19 and 28–33, medium at 6–10 and 20–23, high
/// elsewhere. Bus 19 falls in both a low and a medium range and stays low.
/// A custom map must cover every bus.
pub fn assign_income_tiers(case: &NetworkCase, custom: Option<&BTreeMap<usize, IncomeTier>>) -> Result<IncomeTierMap> {
    let income_per_kw = default_income_rates();
    if let Some(map) = custom {
        let missing: Vec<String> =
            case.buses.iter().filter(|b| !map.contains_key(&b.id)).map(|b| b.id.to_string()).collect();
        if !missing.is_empty() {
            return Err(Error::Config(format!("income tier map misses buses {}", missing.join(", "))));
        }
        let tiers = case.buses.iter().map(|b| (b.id, map[&b.id])).collect();
        return Ok(IncomeTierMap { tiers, income_per_kw });
    }
    let mut tiers = BTreeMap::new();
    for b in &case.buses {
        let low = in_ranges(&LOW, b.id);
        let medium = in_ranges(&MEDIUM, b.id);
        if low && medium {
            log::warn!("bus {} is listed as both low and medium income; using low", b.id);
        }
        let tier = if low {
            IncomeTier::Low
        } else if medium {
            IncomeTier::Medium
        } else {
            IncomeTier::High
        };
        tiers.insert(b.id, tier);
    }
    Ok(IncomeTierMap { tiers, income_per_kw })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::builtin_ieee33;

    #[test]
    fn default_tiers() {
        let m = assign_income_tiers(&builtin_ieee33(), None).unwrap();
        assert_eq!(m.tier(3), IncomeTier::Low);
        assert_eq!(m.tier(7), IncomeTier::Medium);
        assert_eq!(m.tier(12), IncomeTier::High);
        assert_eq!(m.tier(19), IncomeTier::Low);
        assert_eq!(m.tier(21), IncomeTier::Medium);
    }

    #[test]
    fn incomplete_custom_map_is_rejected() {
        let map = BTreeMap::from([(1, IncomeTier::High)]);
        assert!(assign_income_tiers(&builtin_ieee33(), Some(&map)).is_err());
    }
}
