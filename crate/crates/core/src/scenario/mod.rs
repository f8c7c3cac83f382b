//! Experiment synthesis, replayable scenario files and brute-force oracles.

pub mod defaults;
mod oracle;
mod synth;
mod tiers;

pub use oracle::{
    chain_power_flow, enumerate_oracle, grid_search_oracle, ChainFlow, OracleResult, MAX_ENUMERATED_BINARIES,
    MAX_GRID_DOF,
};
pub use synth::{
    gen_disturbance, peak_interval, synthesize_actors, synthesize_portfolio, tou_prices, ActorMode, PenetrationConfig,
};
pub use tiers::{assign_income_tiers, default_income_rates, IncomeTierMap};

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::ders::DerPortfolio;
use crate::error::{Error, Result};
use crate::grid::{CaseFile, NetworkCase};
use crate::stage1::{ActorTable, MarketInputs};
use crate::stage2::Disturbance;

/// Every input of a run, written as `scenario.json` and replayed verbatim.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub defaults_version: u32,
    pub seed: u64,
    pub case: CaseFile,
    pub portfolio: DerPortfolio,
    pub actors: ActorTable,
    pub ug_price: Vec<f64>,
    pub disturbance: Disturbance,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub penetration: Option<PenetrationConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tiers: Option<IncomeTierMap>,
}

impl Scenario {
    pub fn inputs(&self) -> Result<(MarketInputs, Disturbance)> {
        let case = self.case.clone().into_case()?;
        self.disturbance.validate(&case)?;
        let inputs = MarketInputs {
            case,
            portfolio: self.portfolio.clone(),
            actors: self.actors.clone(),
            ug_price: self.ug_price.clone(),
        };
        inputs.validate()?;
        Ok((inputs, self.disturbance.clone()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse { what: "scenario".into(), msg: e.to_string() })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.display().to_string(), source })?;
        Self::parse(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()).map_err(|source| Error::Io { path: path.display().to_string(), source })
    }
}

/// The default experiment on a loaded feeder: tiers, synthesized DERs and
/// actors, TOU prices, import limit, and a seeded load step at the peak.
pub fn synthesize_scenario(case: &NetworkCase, config: &PenetrationConfig, magnitude: f64) -> Result<Scenario> {
    let limit = config.import_limit_fraction.map(|f| f * case.peak_load());
    let case = case.with_import_limit(limit)?;
    let tiers = assign_income_tiers(&case, None)?;
    let (portfolio, actors) = synthesize_portfolio(&case, &tiers, config)?;
    let disturbance = gen_disturbance(&case, magnitude, config.seed, &[peak_interval(&case)])?;
    Ok(Scenario {
        defaults_version: defaults::DEFAULTS_VERSION,
        seed: config.seed,
        ug_price: tou_prices(&case),
        case: CaseFile::from_case(&case),
        portfolio,
        actors,
        disturbance,
        penetration: Some(*config),
        tiers: Some(tiers),
    })
}
