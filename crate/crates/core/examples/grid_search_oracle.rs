//! Conic dispatch of a two-bus feeder against a grid search over the DG
//! output with an exact power-flow solve at each point.

use equiflex::ders::{DerPortfolio, DgUnit};
use equiflex::grid::chain_feeder;
use equiflex::scenario::grid_search_oracle;
use equiflex::stage1::{clear_energy_market, ActorTable, MarketInputs, Stage1Options};
use equiflex_conic::Solver;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let case = chain_feeder(&[vec![900.0]], 4.0, 3.0, 5000.0, 0.95)?;
    let dg = DgUnit {
        id: "dg1".into(),
        bus: 2,
        p_min: 0.0,
        p_max: 600.0,
        ramp_up: 600.0,
        ramp_down: 600.0,
        cost: 0.12,
        owner: "a2".into(),
        initial_output: None,
    };
    let actors = ActorTable::one_per_bus(&case, |_| (50.0, None));
    let portfolio = DerPortfolio { dg: vec![dg.clone()], ..Default::default() };
    let inputs = MarketInputs { case: case.clone(), portfolio, actors, ug_price: vec![0.115] };
    let m = clear_energy_market(&inputs, &Solver::new(), Stage1Options::default())?;
    let oracle = grid_search_oracle(&case, &[dg], 0.115, 0, 0.5)?;
    println!("conic       ${:.4}, dg {:.2} kW", m.dispatch.total_cost, m.dispatch.values.dg["dg1"][0]);
    println!("grid search ${:.4}, dg {:.2} kW", oracle.objective.unwrap_or(f64::NAN), oracle.assignment[0]);
    Ok(())
}
