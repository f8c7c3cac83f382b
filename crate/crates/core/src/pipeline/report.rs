use std::fmt::Write as _;
use std::path::Path;

use super::artifacts::write_csv;
use super::{ensure_dir, Stage1Artifact, Stage2Artifact};
use crate::error::Result;
use crate::stage1::MarketInputs;

pub const PLOT_FILES: [&str; 2] = ["plot_prices.csv", "plot_curtailment.csv"];

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
}

/// Plain-text summary of a finished run.
pub fn render_report(inputs: &MarketInputs, s1: &Stage1Artifact, s2: Option<&Stage2Artifact>) -> String {
    let case = &inputs.case;
    let d = &s1.dispatch;
    let mut out = String::new();
    let _ = writeln!(out, "feeder: {} buses, {} lines, horizon {}", case.buses.len(), case.lines.len(), case.horizon);
    let _ = writeln!(out);
    let _ = writeln!(out, "day-ahead market");
    let _ = writeln!(out, "  operating cost       ${:.2}", d.total_cost);
    let _ = writeln!(out, "  B&B nodes            {}{}", d.nodes_explored, if d.proven_optimal { "" } else { " (limit hit)" });
    let _ = writeln!(out, "  max cone slack       {:.1e}", d.max_cone_slack);
    let (lo, hi) = range(s1.dlmp.lambda.iter().flatten().copied());
    let _ = writeln!(out, "  DLMP range           {lo:.4} .. {hi:.4} $/kWh");
    let (lo, hi) = range(s1.adjusted.actor.iter().flatten().copied());
    let _ = writeln!(out, "  adjusted price range {lo:.4} .. {hi:.4} $/kWh");
    let st = &s1.settlement;
    let _ = writeln!(
        out,
        "  payments             ${:.2} at DLMP, ${:.2} adjusted ({:+.2e} relative)",
        st.total_dlmp,
        st.total_adjusted,
        st.revenue_change()
    );
    for (tier, p) in &st.tier_price {
        let before = st.tier_price_dlmp.get(tier).copied().unwrap_or(f64::NAN);
        let _ = writeln!(out, "  {:<7} tier price   {before:.4} -> {p:.4} $/kWh", tier.as_str());
    }
    if let Some(s2) = s2 {
        let _ = writeln!(out);
        let _ = writeln!(out, "real-time flexibility market");
        let _ = writeln!(out, "  {:<14} {:>6} {:>5} {:>12} {:>11} {:>8} {:>6}", "run", "w", "flex", "curtail kW", "curtail %", "spread", "nodes");
        for r in &s2.runs {
            let _ = writeln!(
                out,
                "  {:<14} {:>6} {:>5} {:>12.1} {:>10.2}% {:>8.4} {:>6}",
                r.label,
                r.w,
                r.flex,
                r.result.total_curtailment,
                100.0 * r.result.curtailment_fraction,
                r.fairness.spread,
                r.result.nodes_explored
            );
        }
    }
    out
}

/// Plot-ready CSVs: per-actor mean prices before and after adjustment, and
/// per-bus curtailment for every stage-2 run.
pub fn write_plotdata(dir: &Path, inputs: &MarketInputs, s1: &Stage1Artifact, s2: &Stage2Artifact) -> Result<()> {
    ensure_dir(dir)?;
    let rows = s1.settlement.actors.iter().map(|a| {
        let per_kwh = |x: f64| if a.energy > 0.0 { x / a.energy } else { 0.0 };
        vec![
            a.actor.clone(),
            a.bus.to_string(),
            a.tier.map_or("", |t| t.as_str()).to_string(),
            per_kwh(a.pay_dlmp).to_string(),
            per_kwh(a.pay_adjusted).to_string(),
            a.burden_dlmp.to_string(),
            a.burden_adjusted.to_string(),
        ]
    });
    write_csv(
        &dir.join(PLOT_FILES[0]),
        &["actor", "bus", "tier", "mean_dlmp", "mean_adjusted", "burden_dlmp", "burden_adjusted"],
        rows,
    )?;
    let case = &inputs.case;
    let mut rows = Vec::new();
    for run in &s2.runs {
        for &t in &run.result.intervals {
            for (bi, b) in case.buses.iter().enumerate() {
                let x = run.result.plan.bus[bi][t];
                let load = b.fixed_load[t];
                let prorated = if load > 0.0 { x / load } else { 0.0 };
                rows.push(vec![run.label.clone(), b.id.to_string(), t.to_string(), x.to_string(), prorated.to_string()]);
            }
        }
    }
    write_csv(&dir.join(PLOT_FILES[1]), &["run", "bus", "t", "curtailment_kw", "prorated"], rows)
}
