use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::NetworkCase;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IncomeTier {
    Low,
    Medium,
    High,
}

impl IncomeTier {
    pub fn as_str(self) -> &'static str {
        match self {
            IncomeTier::Low => "low",
            IncomeTier::Medium => "medium",
            IncomeTier::High => "high",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Actor {
    pub id: String,
    pub bus: usize,
    /// $ per day
    pub daily_income: f64,
    /// Fraction of the bus fixed load.
    pub share: f64,
    /// kW per interval
    pub baseline: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tier: Option<IncomeTier>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub ders: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ActorTable {
    pub actors: Vec<Actor>,
}

impl ActorTable {
    pub fn ids(&self) -> BTreeSet<String> {
        self.actors.iter().map(|a| a.id.clone()).collect()
    }

    pub fn at_bus(&self, bus: usize) -> impl Iterator<Item = (usize, &Actor)> {
        self.actors.iter().enumerate().filter(move |(_, a)| a.bus == bus)
    }

    /// One actor per loaded bus owning its whole fixed load, id `a<bus>`.
    pub fn one_per_bus(case: &NetworkCase, income: impl Fn(usize) -> (f64, Option<IncomeTier>)) -> Self {
        let actors = case
            .buses
            .iter()
            .filter(|b| b.fixed_load.iter().any(|&p| p > 0.0))
            .map(|b| {
                let (daily_income, tier) = income(b.id);
                Actor {
                    id: format!("a{}", b.id),
                    bus: b.id,
                    daily_income,
                    share: 1.0,
                    baseline: b.fixed_load.clone(),
                    tier,
                    ders: Vec::new(),
                }
            })
            .collect();
        ActorTable { actors }
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.actors.iter().position(|a| a.id == id)
    }

    /// Every loaded bus must be fully covered by its actors.
    pub fn validate(&self, case: &NetworkCase) -> Result<()> {
        let bad = |m: String| Err(Error::Actors(m));
        let mut ids = BTreeSet::new();
        for a in &self.actors {
            if !ids.insert(a.id.as_str()) {
                return bad(format!("actor {} declared twice", a.id));
            }
            if a.id.is_empty() || a.id.chars().any(char::is_whitespace) {
                return bad(format!("actor id `{}` must be non-empty without whitespace", a.id));
            }
            if case.bus(a.bus).is_none() {
                return bad(format!("actor {}: bus {} is not in the case", a.id, a.bus));
            }
            if !(a.daily_income > 0.0 && a.daily_income.is_finite()) {
                return bad(format!("actor {}: income must be positive", a.id));
            }
            if !(a.share > 0.0 && a.share <= 1.0) {
                return bad(format!("actor {}: share {} outside (0, 1]", a.id, a.share));
            }
            if a.baseline.len() != case.horizon || a.baseline.iter().any(|&p| !(p >= 0.0)) {
                return bad(format!("actor {}: baseline needs {} nonnegative points", a.id, case.horizon));
            }
        }
        for b in &case.buses {
            let total: f64 = self.at_bus(b.id).map(|(_, a)| a.share).sum();
            let loaded = b.fixed_load.iter().any(|&p| p > 0.0);
            if (loaded || total > 0.0) && (total - 1.0).abs() > 1e-9 {
                return bad(format!("bus {}: actor shares sum to {total}, expected 1", b.id));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::ieee33_subcase;

    #[test]
    fn one_per_bus_covers_every_loaded_bus() {
        let case = ieee33_subcase(4);
        let t = ActorTable::one_per_bus(&case, |b| (10.0 * b as f64, None));
        t.validate(&case).unwrap();
        assert_eq!(t.actors.len(), 3);
        assert_eq!(t.position("a3"), Some(1));
    }

    #[test]
    fn validation_names_the_problem() {
        let case = ieee33_subcase(3);
        let good = ActorTable::one_per_bus(&case, |_| (50.0, None));
        let mut dup = good.clone();
        dup.actors[1].id = "a2".into();
        assert!(dup.validate(&case).unwrap_err().to_string().contains("declared twice"));
        let mut half = good.clone();
        half.actors[0].share = 0.5;
        assert!(half.validate(&case).unwrap_err().to_string().contains("sum to 0.5"));
        let mut poor = good;
        poor.actors[0].daily_income = 0.0;
        assert!(poor.validate(&case).is_err());
    }
}
