//! Branch-and-bound against exhaustive enumeration on a small day-ahead
//! market with one battery.

use equiflex::ders::{DerPortfolio, StorageUnit};
use equiflex::grid::ieee33_subcase;
use equiflex::scenario::enumerate_oracle;
use equiflex::stage1::{assemble_stage1, ActorTable, MarketInputs};
use equiflex_conic::Solver;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut case = ieee33_subcase(3);
    case.horizon = 4;
    for b in &mut case.buses {
        b.fixed_load.truncate(4);
        b.min_energy = b.fixed_load.iter().sum();
    }
    let actors = ActorTable::one_per_bus(&case, |_| (50.0, None));
    let portfolio = DerPortfolio {
        bess: vec![StorageUnit {
            id: "b1".into(),
            bus: 3,
            p_ch_max: 40.0,
            p_dch_max: 40.0,
            eff_ch: 0.9,
            eff_dch: 0.9,
            energy_init: 60.0,
            capacity: 120.0,
            soc_min: 10.0,
            soc_max: 120.0,
            cost: 0.01,
            owner: "a3".into(),
        }],
        ..Default::default()
    };
    let inputs = MarketInputs { case, portfolio, actors, ug_price: vec![0.08, 0.22, 0.10, 0.25] };
    let model = assemble_stage1(&inputs)?;
    let solver = Solver::new();
    let bnb = solver.solve_mixed_integer(&model.program)?;
    let oracle = enumerate_oracle(&model.program, &solver)?;
    let best = bnb.incumbent.objective_value;
    println!("binaries {}, nodes {}", model.program.binaries().len(), bnb.nodes_explored);
    println!("branch-and-bound {best}");
    println!("enumeration      {:?} ({} of {} feasible)", oracle.objective, oracle.feasible, oracle.candidates);
    Ok(())
}
