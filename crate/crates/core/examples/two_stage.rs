//! Full two-stage run on the 33-bus feeder with a synthesized portfolio:
//! curtailment with no flexibility, minimum total curtailment and the
//! fairness-weighted market.
//!
//! `cargo run --release --example two_stage -- [seed]`

use equiflex::grid::builtin_ieee33;
use equiflex::scenario::{defaults, synthesize_scenario, PenetrationConfig};
use equiflex::stage1::{clear_energy_market, Stage1Options};
use equiflex::stage2::{clear_flex_market, fairness_metrics, Stage2Options};
use equiflex_conic::Solver;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seed = std::env::args().nth(1).map_or(Ok(0), |s| s.parse())?;
    let config = PenetrationConfig { seed, ..Default::default() };
    let scenario = synthesize_scenario(&builtin_ieee33(), &config, defaults::DISTURBANCE_MAGNITUDE)?;
    let (inputs, dist) = scenario.inputs()?;
    let solver = Solver::new();
    let m = clear_energy_market(&inputs, &solver, Stage1Options::default())?;
    println!("stage 1: cost ${:.2}, max cone slack {:.1e}", m.dispatch.total_cost, m.dispatch.max_cone_slack);
    let t = dist.affected()[0];
    println!("t={t}: import {:.1} kW, disturbance {:.1} kW", m.dispatch.p_ug[t], dist.total(t));
    for (label, w, flex) in [("no-flex", 1.0, false), ("min-total", 0.0, true), ("equity", 1.0, true)] {
        let opts = Stage2Options { w, flex_enabled: flex, ..Default::default() };
        let r = clear_flex_market(&inputs, &m.dispatch, &dist, &opts, &solver)?;
        let f = fairness_metrics(&r, &inputs.actors);
        println!(
            "{label:>9}: curtailment {:.2}% ({:.1} kW), spread {:.4}",
            100.0 * r.curtailment_fraction,
            r.total_curtailment,
            f.spread
        );
    }
    Ok(())
}
