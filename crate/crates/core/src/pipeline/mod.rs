//! Two-stage orchestration, artifact files and reporting.

mod artifacts;
mod config;
mod report;

pub use artifacts::{
    read_stage1, read_stage2, write_stage1, write_stage2, Stage1Artifact, Stage2Artifact, STAGE1_FILES, STAGE2_FILES,
};
pub use config::RunConfig;
pub use report::{render_report, write_plotdata, PLOT_FILES};

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scenario::Scenario;
use crate::stage1::{
    adjust_prices_equity, clear_energy_market, perturbation_check, settlement_report, ClearedMarket, DualCheck,
    MarketInputs, Stage1Options,
};
use crate::stage2::{clear_flex_market, fairness_metrics, FairnessReport, FlexibilityResult};

/// One stage-2 clearing: its label, weight and whether flexibility was on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stage2Run {
    pub label: String,
    pub w: f64,
    pub flex: bool,
    pub result: FlexibilityResult,
    pub fairness: FairnessReport,
}

/// Report names of the runs the comparison needs.
pub const EQUITY: &str = "equity";
pub const MIN_TOTAL: &str = "min-total";
pub const NO_FLEX: &str = "no-flex";

fn run_label(w: f64, flex: bool) -> String {
    match (flex, w) {
        (false, _) => format!("{NO_FLEX} w={w}"),
        (true, 0.0) => MIN_TOTAL.to_string(),
        (true, 1.0) => EQUITY.to_string(),
        (true, w) => format!("w={w}"),
    }
}

/// `(label, w, flex)` for every stage-2 clearing a run needs. The pipeline
/// always covers the equity, min-total and no-flex comparison.
pub fn stage2_plan(config: &RunConfig, pipeline: bool) -> Vec<(String, f64, bool)> {
    let mut plan: Vec<(String, f64, bool)> = Vec::new();
    let mut push = |label: String, w: f64, flex: bool| {
        if !plan.iter().any(|(_, pw, pf)| *pw == w && *pf == flex) {
            plan.push((label, w, flex));
        }
    };
    if pipeline {
        push(EQUITY.into(), 1.0, true);
        push(MIN_TOTAL.into(), 0.0, true);
        push(NO_FLEX.into(), 1.0, false);
    }
    for &w in &config.w {
        let flex = !config.no_flex;
        push(run_label(w, flex), w, flex);
    }
    plan
}

pub struct Stage1Outcome {
    pub scenario: Scenario,
    pub inputs: MarketInputs,
    pub market: ClearedMarket,
    pub artifact: Stage1Artifact,
}

/// Clears the day-ahead market and prices it.
pub fn run_stage1(config: &RunConfig) -> Result<Stage1Outcome> {
    let scenario = config.scenario()?;
    let (inputs, _) = scenario.inputs()?;
    let solver = config.solver();
    let market = clear_energy_market(&inputs, &solver, Stage1Options { relax_binaries: config.relax_binaries })?;
    let adjusted = adjust_prices_equity(&inputs.case, &inputs.actors, &market.dlmp, &inputs.ug_price, config.equity)?;
    let settlement = settlement_report(&inputs.case, &inputs.actors, &market.dlmp, &adjusted);
    let artifact = Stage1Artifact {
        dispatch: market.dispatch.clone(),
        dlmp: market.dlmp.clone(),
        adjusted,
        settlement,
    };
    Ok(Stage1Outcome { scenario, inputs, market, artifact })
}

/// Clears every planned flexibility market against a stage-1 dispatch.
pub fn run_stage2(
    config: &RunConfig,
    scenario: &Scenario,
    stage1: &Stage1Artifact,
    pipeline: bool,
) -> Result<Stage2Artifact> {
    let (inputs, dist) = scenario.inputs()?;
    let solver = config.solver();
    let mut runs = Vec::new();
    for (label, w, flex) in stage2_plan(config, pipeline) {
        let opts = crate::stage2::Stage2Options { flex_enabled: flex, ..config.stage2_options(w) };
        log::info!("stage 2: {label} (w={w}, flex={flex})");
        let result = clear_flex_market(&inputs, &stage1.dispatch, &dist, &opts, &solver)?;
        let fairness = fairness_metrics(&result, &inputs.actors);
        runs.push(Stage2Run { label, w, flex, result, fairness });
    }
    Ok(Stage2Artifact { runs })
}

/// Exit status of a finished run: 3 when any branch-and-bound stopped at
/// its node limit.
pub fn limit_status(stage1: &Stage1Artifact, stage2: Option<&Stage2Artifact>) -> i32 {
    let s2 = stage2.is_none_or(|s| s.runs.iter().all(|r| r.result.proven_optimal));
    if stage1.dispatch.proven_optimal && s2 {
        0
    } else {
        3
    }
}

/// `(bus, t)` samples for the price check: every non-PCC bus at the peak
/// interval and at up to `extra` further intervals, spread over the day.
pub fn dual_samples(scenario: &Scenario, extra: usize) -> Result<Vec<(usize, usize)>> {
    let case = scenario.case.clone().into_case()?;
    let peak = crate::scenario::peak_interval(&case);
    let mut ts = vec![peak];
    let h = case.horizon;
    for k in 0..extra.min(h) {
        let t = (k * h) / extra.max(1);
        if !ts.contains(&t) {
            ts.push(t);
        }
    }
    Ok(ts
        .iter()
        .flat_map(|&t| case.buses.iter().filter(|b| !case.is_pcc(b.id)).map(move |b| (b.id, t)))
        .collect())
}

/// Re-clears stage 1 and compares prices with finite differences.
pub fn validate_duals(config: &RunConfig, extra_intervals: usize, eps_kw: f64) -> Result<Vec<DualCheck>> {
    let out = run_stage1(config)?;
    let samples = dual_samples(&out.scenario, extra_intervals)?;
    perturbation_check(&out.inputs.case, &out.market, &config.solver(), &samples, eps_kw, 1e-3)
}

/// Stage 1, stage 2 and all artifacts into `config.out`. Returns the exit status.
pub fn run_pipeline(config: &RunConfig) -> Result<i32> {
    let out = run_stage1(config)?;
    write_stage1(&config.out, &out.scenario, &out.inputs, &out.artifact)?;
    let s2 = run_stage2(config, &out.scenario, &out.artifact, true)?;
    write_stage2(&config.out, &out.inputs, &s2)?;
    write_plotdata(&config.out, &out.inputs, &out.artifact, &s2)?;
    Ok(limit_status(&out.artifact, Some(&s2)))
}

pub(crate) fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Output { path: dir.display().to_string(), msg: e.to_string() })
}
