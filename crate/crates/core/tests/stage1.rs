use equiflex::ders::{DerPortfolio, DgUnit, FlexLoad, StorageUnit};
use equiflex::grid::{chain_feeder, ieee33_subcase};
use equiflex::stage1::{
    adjust_prices_equity, clear_energy_market, perturbation_check, settlement_report, ActorTable, EquityOptions,
    IncomeTier, MarketInputs, Stage1Options,
};
use equiflex_conic::Solver;

fn tou(h: usize) -> Vec<f64> {
    (0..h).map(|t| if (17..22).contains(&(t % 24)) { 0.22 } else { 0.10 }).collect()
}

#[test]
fn lossless_two_bus_prices_equal_upstream() {
    let load = vec![vec![300.0, 500.0, 800.0, 400.0]];
    let case = chain_feeder(&load, 0.0, 0.1, 5000.0, 0.95).unwrap();
    let actors = ActorTable::one_per_bus(&case, |_| (50.0, None));
    let ug = vec![0.08, 0.12, 0.22, 0.10];
    let inputs = MarketInputs { case, portfolio: DerPortfolio::default(), actors, ug_price: ug.clone() };
    let m = clear_energy_market(&inputs, &Solver::new(), Stage1Options::default()).unwrap();
    for row in &m.dlmp.lambda {
        for (t, &l) in row.iter().enumerate() {
            assert!((l - ug[t]).abs() <= 1e-8, "t={t}: {l} vs {}", ug[t]);
        }
    }
    for t in 0..4 {
        assert!((m.dispatch.p_ug[t] - load[0][t]).abs() < 1e-5);
    }
}

#[test]
fn losses_raise_downstream_prices() {
    let case = ieee33_subcase(6);
    let actors = ActorTable::one_per_bus(&case, |_| (50.0, None));
    let inputs = MarketInputs { portfolio: DerPortfolio::default(), actors, ug_price: tou(24), case };
    let m = clear_energy_market(&inputs, &Solver::new(), Stage1Options::default()).unwrap();
    assert!(m.dispatch.inexact_cones.is_empty());
    for t in 0..24 {
        assert!((m.dlmp.lambda[0][t] - inputs.ug_price[t]).abs() < 1e-7);
        for b in 1..6 {
            assert!(m.dlmp.lambda[b][t] >= m.dlmp.lambda[b - 1][t] - 1e-9);
        }
    }
    assert!(m.dlmp.lambda[5][18] > inputs.ug_price[18]);
}

fn der_case() -> MarketInputs {
    let case = ieee33_subcase(5);
    let actors = ActorTable::one_per_bus(&case, |b| {
        if b % 2 == 0 {
            (25.0, Some(IncomeTier::Low))
        } else {
            (130.0, Some(IncomeTier::High))
        }
    });
    let portfolio = DerPortfolio {
        dg: vec![DgUnit {
            id: "dg1".into(),
            bus: 5,
            p_min: 0.0,
            p_max: 150.0,
            ramp_up: 60.0,
            ramp_down: 60.0,
            cost: 0.15,
            owner: "a5".into(),
            initial_output: None,
        }],
        bess: vec![StorageUnit {
            id: "b1".into(),
            bus: 3,
            p_ch_max: 50.0,
            p_dch_max: 50.0,
            eff_ch: 0.95,
            eff_dch: 0.95,
            energy_init: 100.0,
            capacity: 200.0,
            soc_min: 20.0,
            soc_max: 200.0,
            cost: 0.01,
            owner: "a3".into(),
        }],
        flex: vec![FlexLoad { id: "f4".into(), bus: 4, p_max: vec![20.0; 24], cost: 0.02, owner: "a4".into() }],
        ..Default::default()
    };
    MarketInputs { case, portfolio, actors, ug_price: tou(24) }
}

#[test]
fn der_market_prices_match_finite_differences() {
    let inputs = der_case();
    let solver = Solver::new();
    let m = clear_energy_market(&inputs, &solver, Stage1Options::default()).unwrap();
    assert!(m.dispatch.proven_optimal);
    let samples = [(2, 3), (5, 18), (4, 12), (3, 20)];
    let checks = perturbation_check(&inputs.case, &m, &solver, &samples, 0.1, 1e-3).unwrap();
    for c in &checks {
        assert!(c.passes(1e-3), "{c:?}");
    }
}

#[test]
fn equity_adjustment_settles_neutrally() {
    let inputs = der_case();
    let m = clear_energy_market(&inputs, &Solver::new(), Stage1Options::default()).unwrap();
    let adj = adjust_prices_equity(&inputs.case, &inputs.actors, &m.dlmp, &inputs.ug_price, EquityOptions::default())
        .unwrap();
    let rep = settlement_report(&inputs.case, &inputs.actors, &m.dlmp, &adj);
    assert!(rep.tier_price[&IncomeTier::Low] < rep.tier_price[&IncomeTier::High]);
}
