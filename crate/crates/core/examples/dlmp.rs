//! Nodal prices along a six-bus trunk with no DERs: losses push prices up
//! with distance from the substation.

use equiflex::ders::DerPortfolio;
use equiflex::grid::ieee33_subcase;
use equiflex::scenario::tou_prices;
use equiflex::stage1::{clear_energy_market, ActorTable, MarketInputs, Stage1Options};
use equiflex_conic::Solver;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let case = ieee33_subcase(6);
    let actors = ActorTable::one_per_bus(&case, |_| (50.0, None));
    let ug_price = tou_prices(&case);
    let inputs = MarketInputs { case, portfolio: DerPortfolio::default(), actors, ug_price };
    let m = clear_energy_market(&inputs, &Solver::new(), Stage1Options::default())?;
    println!("bus  t=3      t=18");
    for (bi, bus) in m.dlmp.bus_ids.iter().enumerate() {
        println!("{bus:>3}  {:.5}  {:.5}", m.dlmp.lambda[bi][3], m.dlmp.lambda[bi][18]);
    }
    Ok(())
}
