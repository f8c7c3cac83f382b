use std::path::{Path, PathBuf};

use equiflex_conic::Solver;
use serde::{Deserialize, Serialize};

use crate::ders::load_portfolio;
use crate::error::{Error, Result};
use crate::grid::{builtin_ieee33, load_case, CaseFile, NetworkCase};
use crate::scenario::{
    assign_income_tiers, defaults, gen_disturbance, peak_interval, synthesize_actors, synthesize_scenario, tou_prices,
    PenetrationConfig, Scenario,
};
use crate::stage1::EquityOptions;
use crate::stage2::{Disturbance, FairnessMode, Stage2Options};

/// Everything a run needs. Every flag has a field here; flags override a
/// loaded file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// `builtin:ieee33` or a case file.
    pub case: String,
    /// `synth:<seed>` or a portfolio file.
    pub portfolio: String,
    /// Upstream price file (one $/kWh value per line); TOU when absent.
    pub prices: Option<PathBuf>,
    /// `random:<magnitude>`, `none`, or a disturbance file.
    pub disturbance: String,
    /// Fairness weights; stage 2 runs once per weight.
    pub w: Vec<f64>,
    pub mode: FairnessMode,
    pub seed: u64,
    pub out: PathBuf,
    pub serial: bool,
    pub no_flex: bool,
    pub relax_binaries: bool,
    /// Replay a previous run; overrides case, portfolio, prices and disturbance.
    pub scenario: Option<PathBuf>,
    pub penetration: PenetrationConfig,
    pub equity: EquityOptions,
    pub loss_weight: f64,
    pub flex_weight: f64,
    pub gap_tol: Option<f64>,
    pub feas_tol: Option<f64>,
    pub node_limit: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let s2 = Stage2Options::default();
        RunConfig {
            case: "builtin:ieee33".into(),
            portfolio: "synth:0".into(),
            prices: None,
            disturbance: format!("random:{}", defaults::DISTURBANCE_MAGNITUDE),
            w: vec![s2.w],
            mode: s2.mode,
            seed: 0,
            out: PathBuf::from("out"),
            serial: false,
            no_flex: false,
            relax_binaries: false,
            scenario: None,
            penetration: PenetrationConfig::default(),
            equity: EquityOptions::default(),
            loss_weight: s2.loss_weight,
            flex_weight: s2.flex_weight,
            gap_tol: None,
            feas_tol: None,
            node_limit: None,
        }
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.display().to_string(), source })
}

impl RunConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = read(path.as_ref())?;
        toml::from_str(&text).map_err(|e| Error::Parse { what: path.as_ref().display().to_string(), msg: e.to_string() })
    }

    pub fn validate(&self) -> Result<()> {
        if self.w.is_empty() {
            return Err(Error::Config("at least one fairness weight is needed".into()));
        }
        if let Some(w) = self.w.iter().find(|w| !(**w >= 0.0 && w.is_finite())) {
            return Err(Error::Config(format!("fairness weight must be nonnegative, got {w}")));
        }
        self.penetration.validate()
    }

    pub fn solver(&self) -> Solver {
        let mut s = Solver::new().serial(self.serial);
        if let Some(g) = self.gap_tol {
            s.tolerances.gap_tol = g;
        }
        if let Some(f) = self.feas_tol {
            s.tolerances.feas_tol = f;
        }
        if let Some(n) = self.node_limit {
            s.node_limit = n;
        }
        s
    }

    pub fn stage2_options(&self, w: f64) -> Stage2Options {
        Stage2Options {
            w,
            mode: self.mode,
            flex_enabled: !self.no_flex,
            loss_weight: self.loss_weight,
            flex_weight: self.flex_weight,
        }
    }

    fn load_network(&self) -> Result<NetworkCase> {
        match self.case.as_str() {
            "builtin:ieee33" => Ok(builtin_ieee33()),
            other if other.starts_with("builtin:") => Err(Error::Config(format!("unknown built-in case `{other}`"))),
            path => load_case(path),
        }
    }

    fn synth_seed(&self) -> Result<Option<u64>> {
        match self.portfolio.strip_prefix("synth:") {
            Some("") => Ok(Some(self.seed)),
            Some(s) => s.parse().map(Some).map_err(|_| Error::Config(format!("bad portfolio seed `{s}`"))),
            None => Ok(None),
        }
    }

    fn disturbance_for(&self, case: &NetworkCase, seed: u64) -> Result<Disturbance> {
        let spec = self.disturbance.as_str();
        if spec == "none" {
            return Ok(Disturbance::zero(case));
        }
        if let Some(m) = spec.strip_prefix("random:") {
            let m: f64 = m.parse().map_err(|_| Error::Config(format!("bad disturbance magnitude `{m}`")))?;
            return gen_disturbance(case, m, seed, &[peak_interval(case)]);
        }
        let text = read(Path::new(spec))?;
        let d: Disturbance =
            serde_json::from_str(&text).map_err(|e| Error::Parse { what: spec.to_string(), msg: e.to_string() })?;
        d.validate(case)?;
        Ok(d)
    }

    fn price_profile(&self, case: &NetworkCase) -> Result<Vec<f64>> {
        let Some(path) = &self.prices else {
            return Ok(tou_prices(case));
        };
        let text = read(path)?;
        let prices = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(|l| l.parse::<f64>().map_err(|_| Error::Parse { what: path.display().to_string(), msg: format!("`{l}` is not a price") }))
            .collect::<Result<Vec<f64>>>()?;
        if prices.len() != case.horizon {
            return Err(Error::Dimension(format!("{} prices for horizon {}", prices.len(), case.horizon)));
        }
        Ok(prices)
    }

    /// Resolves the configuration into a concrete, replayable scenario.
    pub fn scenario(&self) -> Result<Scenario> {
        self.validate()?;
        if let Some(path) = &self.scenario {
            return Scenario::load(path);
        }
        let base_case = self.load_network()?;
        let mut scenario = match self.synth_seed()? {
            Some(seed) => {
                let pen = PenetrationConfig { seed, ..self.penetration };
                let mut s = synthesize_scenario(&base_case, &pen, 0.0)?;
                let case = s.case.clone().into_case()?;
                s.disturbance = self.disturbance_for(&case, seed)?;
                s
            }
            None => {
                let portfolio = load_portfolio(&self.portfolio)?;
                let tiers = assign_income_tiers(&base_case, None)?;
                let actors = synthesize_actors(&base_case, &tiers, self.penetration.actor_mode, self.seed);
                Scenario {
                    defaults_version: defaults::DEFAULTS_VERSION,
                    seed: self.seed,
                    case: CaseFile::from_case(&base_case),
                    ug_price: Vec::new(),
                    disturbance: self.disturbance_for(&base_case, self.seed)?,
                    portfolio,
                    actors,
                    penetration: None,
                    tiers: Some(tiers),
                }
            }
        };
        let case = scenario.case.clone().into_case()?;
        scenario.ug_price = self.price_profile(&case)?;
        scenario.inputs()?;
        Ok(scenario)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_fills_defaults_and_rejects_unknown_keys() {
        let c: RunConfig = toml::from_str("seed = 3\nw = [0.0, 1.0]\nmode = \"spread\"\n").unwrap();
        assert_eq!(c.seed, 3);
        assert_eq!(c.mode, FairnessMode::Spread);
        assert_eq!(c.case, "builtin:ieee33");
        assert!(toml::from_str::<RunConfig>("wieght = 1").is_err());
    }

    #[test]
    fn portfolio_seed_parsing() {
        let mut c = RunConfig { seed: 11, ..Default::default() };
        c.portfolio = "synth:".into();
        assert_eq!(c.synth_seed().unwrap(), Some(11));
        c.portfolio = "synth:4".into();
        assert_eq!(c.synth_seed().unwrap(), Some(4));
        c.portfolio = "synth:x".into();
        assert!(c.synth_seed().is_err());
        c.portfolio = "ders.json".into();
        assert_eq!(c.synth_seed().unwrap(), None);
    }

    #[test]
    fn solver_overrides_apply() {
        let c = RunConfig { serial: true, gap_tol: Some(1e-6), node_limit: Some(7), ..Default::default() };
        let s = c.solver();
        assert!(!s.parallel);
        assert_eq!(s.tolerances.gap_tol, 1e-6);
        assert_eq!(s.node_limit, 7);
        assert!(RunConfig { w: vec![], ..Default::default() }.validate().is_err());
    }
}
