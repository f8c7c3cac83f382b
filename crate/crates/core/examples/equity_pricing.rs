//! Burden-based price adjustment on the 33-bus feeder: tier prices before
//! and after, and per-bus revenue neutrality.

use equiflex::grid::builtin_ieee33;
use equiflex::scenario::{synthesize_scenario, PenetrationConfig};
use equiflex::stage1::{
    adjust_prices_equity, check_neutrality, clear_energy_market, settlement_report, EquityOptions, Stage1Options,
};
use equiflex_conic::Solver;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let scenario = synthesize_scenario(&builtin_ieee33(), &PenetrationConfig::default(), 0.0)?;
    let (inputs, _) = scenario.inputs()?;
    let m = clear_energy_market(&inputs, &Solver::new(), Stage1Options::default())?;
    let adjusted = adjust_prices_equity(&inputs.case, &inputs.actors, &m.dlmp, &inputs.ug_price, EquityOptions::default())?;
    check_neutrality(&inputs.case, &inputs.actors, &adjusted)?;
    let report = settlement_report(&inputs.case, &inputs.actors, &m.dlmp, &adjusted);
    for (tier, p) in &report.tier_price {
        println!("{:>6}: {:.4} -> {:.4} $/kWh", tier.as_str(), report.tier_price_dlmp[tier], p);
    }
    println!("total payments ${:.2} -> ${:.2}", report.total_dlmp, report.total_adjusted);
    Ok(())
}
