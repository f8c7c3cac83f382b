//! Total curtailment against prorated spread as the fairness weight grows.

use equiflex::grid::builtin_ieee33;
use equiflex::scenario::{defaults, synthesize_scenario, PenetrationConfig};
use equiflex::stage1::{clear_energy_market, Stage1Options};
use equiflex::stage2::{clear_flex_market, fairness_metrics, FairnessMode, Stage2Options};
use equiflex_conic::Solver;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let s = synthesize_scenario(&builtin_ieee33(), &PenetrationConfig::default(), defaults::DISTURBANCE_MAGNITUDE)?;
    let (inputs, dist) = s.inputs()?;
    let solver = Solver::new();
    let m = clear_energy_market(&inputs, &solver, Stage1Options::default())?;
    for mode in [FairnessMode::Pairwise, FairnessMode::Spread] {
        for w in [0.0, 1e-3, 1e-2, 0.1, 1.0] {
            let opts = Stage2Options { w, mode, ..Default::default() };
            let r = clear_flex_market(&inputs, &m.dispatch, &dist, &opts, &solver)?;
            let f = fairness_metrics(&r, &inputs.actors);
            println!("{mode:?} w={w:<6} curtailment {:.1} kW, spread {:.4}", r.total_curtailment, f.spread);
        }
    }
    Ok(())
}
