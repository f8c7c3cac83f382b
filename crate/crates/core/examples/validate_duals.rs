//! Finite-difference check of nodal prices on a five-bus trunk with a DG
//! unit and a battery.

use equiflex::ders::{DerPortfolio, DgUnit, StorageUnit};
use equiflex::grid::ieee33_subcase;
use equiflex::scenario::tou_prices;
use equiflex::stage1::{clear_energy_market, perturbation_check, ActorTable, MarketInputs, Stage1Options};
use equiflex_conic::Solver;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let case = ieee33_subcase(5);
    let actors = ActorTable::one_per_bus(&case, |_| (50.0, None));
    let portfolio = DerPortfolio {
        dg: vec![DgUnit {
            id: "dg1".into(),
            bus: 4,
            p_min: 0.0,
            p_max: 120.0,
            ramp_up: 60.0,
            ramp_down: 60.0,
            cost: 0.15,
            owner: "a4".into(),
            initial_output: None,
        }],
        bess: vec![StorageUnit {
            id: "b1".into(),
            bus: 5,
            p_ch_max: 50.0,
            p_dch_max: 50.0,
            eff_ch: 0.95,
            eff_dch: 0.95,
            energy_init: 100.0,
            capacity: 200.0,
            soc_min: 20.0,
            soc_max: 200.0,
            cost: 0.01,
            owner: "a5".into(),
        }],
        ..Default::default()
    };
    let ug_price = tou_prices(&case);
    let inputs = MarketInputs { case, portfolio, actors, ug_price };
    let solver = Solver::new();
    let m = clear_energy_market(&inputs, &solver, Stage1Options::default())?;
    let samples: Vec<(usize, usize)> = (2..=5).flat_map(|b| [3, 12, 18].map(|t| (b, t))).collect();
    let checks = perturbation_check(&inputs.case, &m, &solver, &samples, 0.5, 1e-3)?;
    for c in &checks {
        println!(
            "bus {} t={:>2}: dlmp {:.6}  fd {:.6}/{:.6}  {}",
            c.bus,
            c.t,
            c.dlmp,
            c.fd_up,
            c.fd_down,
            if c.passes(0.05) { "ok" } else { "MISMATCH" }
        );
    }
    Ok(())
}
