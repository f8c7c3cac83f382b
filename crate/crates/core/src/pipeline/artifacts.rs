use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::{ensure_dir, Stage2Run};
use crate::error::{Error, Result};
use crate::scenario::Scenario;
use crate::stage1::{AdjustedPriceTable, DispatchResult, DlmpSchedule, MarketInputs, SettlementReport};

pub const STAGE1_FILES: [&str; 5] = ["dispatch.csv", "dlmp.csv", "actor_prices.csv", "scenario.json", "stage1.json"];
pub const STAGE2_FILES: [&str; 4] = ["flex.csv", "curtailment.csv", "fairness.csv", "stage2.json"];

/// Stage-1 results handed to stage 2 and to the report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stage1Artifact {
    pub dispatch: DispatchResult,
    pub dlmp: DlmpSchedule,
    pub adjusted: AdjustedPriceTable,
    pub settlement: SettlementReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stage2Artifact {
    pub runs: Vec<Stage2Run>,
}

fn out_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Output { path: path.display().to_string(), msg: e.to_string() }
}

pub(crate) fn write_csv(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| out_err(path, e))?;
    w.write_record(header).map_err(|e| out_err(path, e))?;
    for row in rows {
        w.write_record(&row).map_err(|e| out_err(path, e))?;
    }
    w.flush().map_err(|e| out_err(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| out_err(path, e))?;
    std::fs::write(path, text).map_err(|e| out_err(path, e))
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    if !path.exists() {
        return Err(Error::MissingArtifact(path.display().to_string()));
    }
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.display().to_string(), source })?;
    serde_json::from_str(&text).map_err(|e| Error::Parse { what: path.display().to_string(), msg: e.to_string() })
}

pub fn write_stage1(dir: &Path, scenario: &Scenario, inputs: &MarketInputs, s1: &Stage1Artifact) -> Result<()> {
    ensure_dir(dir)?;
    let case = &inputs.case;
    write_csv(
        &dir.join("dispatch.csv"),
        &["unit", "t", "variable", "value"],
        s1.dispatch.rows(case).into_iter().map(|(u, t, q, v)| vec![u, t.to_string(), q.to_string(), v.to_string()]),
    )?;
    let mut rows = Vec::new();
    for (bi, &bus) in s1.dlmp.bus_ids.iter().enumerate() {
        for t in 0..case.horizon {
            rows.push(vec![
                bus.to_string(),
                t.to_string(),
                s1.dlmp.lambda[bi][t].to_string(),
                s1.adjusted.bus[bi][t].to_string(),
            ]);
        }
    }
    write_csv(&dir.join("dlmp.csv"), &["bus", "t", "dlmp", "dlmp_adjusted"], rows)?;
    let mut rows = Vec::new();
    for (a, actor) in inputs.actors.actors.iter().enumerate() {
        let tier = actor.tier.map_or("", |t| t.as_str());
        for t in 0..case.horizon {
            let price = s1.adjusted.actor[a][t];
            let energy = actor.baseline[t] * case.dt;
            rows.push(vec![
                actor.id.clone(),
                actor.bus.to_string(),
                tier.to_string(),
                t.to_string(),
                price.to_string(),
                energy.to_string(),
                (price * energy).to_string(),
            ]);
        }
    }
    write_csv(
        &dir.join("actor_prices.csv"),
        &["actor", "bus", "tier", "t", "price", "energy_kwh", "payment"],
        rows,
    )?;
    scenario.save(dir.join("scenario.json"))?;
    write_json(&dir.join("stage1.json"), s1)
}

/// Loads the scenario and stage-1 hand-off from an output directory.
pub fn read_stage1(dir: &Path) -> Result<(Scenario, Stage1Artifact)> {
    let scen_path = dir.join("scenario.json");
    if !scen_path.exists() {
        return Err(Error::MissingArtifact(scen_path.display().to_string()));
    }
    let scenario = Scenario::load(&scen_path)?;
    let s1 = read_json(&dir.join("stage1.json"))?;
    Ok((scenario, s1))
}

pub fn read_stage2(dir: &Path) -> Result<Stage2Artifact> {
    read_json(&dir.join("stage2.json"))
}

pub fn write_stage2(dir: &Path, inputs: &MarketInputs, s2: &Stage2Artifact) -> Result<()> {
    ensure_dir(dir)?;
    let case = &inputs.case;
    let key = |r: &Stage2Run| vec![r.label.clone(), r.w.to_string(), r.flex.to_string()];
    let mut flex = Vec::new();
    let mut curt = Vec::new();
    let mut fair = Vec::new();
    for run in &s2.runs {
        for f in &run.result.flex {
            let mut row = key(run);
            row.extend([
                f.der.clone(),
                f.kind.as_str().to_string(),
                f.bus.to_string(),
                f.t.to_string(),
                f.uf.to_string(),
                f.df.to_string(),
                f.uf_max.to_string(),
                f.df_max.to_string(),
            ]);
            flex.push(row);
        }
        for (a, actor) in inputs.actors.actors.iter().enumerate() {
            for t in 0..case.horizon {
                let x = run.result.plan.actor[a][t];
                let base = actor.baseline[t];
                let prorated = if base > 0.0 { x / base } else { 0.0 };
                let mut row = key(run);
                row.extend([actor.id.clone(), actor.bus.to_string(), t.to_string(), x.to_string(), prorated.to_string()]);
                curt.push(row);
            }
        }
        for i in &run.fairness.intervals {
            let mut row = key(run);
            row.extend([
                i.t.to_string(),
                i.max.to_string(),
                i.min.to_string(),
                i.spread.to_string(),
                i.mean_abs_pairwise.to_string(),
                run.result.total_curtailment.to_string(),
                run.result.curtailment_fraction.to_string(),
            ]);
            fair.push(row);
        }
    }
    write_csv(
        &dir.join("flex.csv"),
        &["run", "w", "flex", "der", "kind", "bus", "t", "uf", "df", "uf_max", "df_max"],
        flex,
    )?;
    write_csv(
        &dir.join("curtailment.csv"),
        &["run", "w", "flex", "actor", "bus", "t", "curtailment_kw", "prorated"],
        curt,
    )?;
    write_csv(
        &dir.join("fairness.csv"),
        &["run", "w", "flex", "t", "max", "min", "spread", "mean_abs_pairwise", "total_curtailment_kw", "curtailment_fraction"],
        fair,
    )?;
    write_json(&dir.join("stage2.json"), s2)
}
