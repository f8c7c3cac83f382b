use equiflex::ders::DerPortfolio;
use equiflex::grid::{chain_feeder, ieee33_subcase, parse_case, to_json, NetworkCase};
use equiflex::scenario::{chain_power_flow, gen_disturbance};
use equiflex::stage1::{
    adjust_prices_equity, check_neutrality, clear_energy_market, Actor, ActorTable, BurdenAverage, BurdenOrientation,
    BurdenPrice, DlmpSchedule, EquityOptions, MarketInputs, Stage1Options,
};
use equiflex_conic::Solver;
use proptest::prelude::*;

fn options() -> impl Strategy<Value = EquityOptions> {
    (any::<bool>(), any::<bool>(), any::<bool>()).prop_map(|(o, a, p)| EquityOptions {
        orientation: if o { BurdenOrientation::Inverse } else { BurdenOrientation::Direct },
        average: if a { BurdenAverage::LoadWeighted } else { BurdenAverage::Simple },
        price: if p { BurdenPrice::Upstream } else { BurdenPrice::Dlmp },
    })
}

/// Splits each loaded bus of `case` among actors with the given share weights.
fn split_actors(case: &NetworkCase, weights: &[Vec<f64>], incomes: &[f64]) -> ActorTable {
    let mut actors = Vec::new();
    let mut k = 0;
    for (bi, b) in case.buses.iter().enumerate().filter(|(_, b)| b.fixed_load.iter().any(|&p| p > 0.0)) {
        let w = &weights[bi % weights.len()];
        let total: f64 = w.iter().sum();
        for (j, &x) in w.iter().enumerate() {
            let share = x / total;
            actors.push(Actor {
                id: format!("a{}_{j}", b.id),
                bus: b.id,
                daily_income: incomes[k % incomes.len()],
                share,
                baseline: b.fixed_load.iter().map(|p| p * share).collect(),
                tier: None,
                ders: Vec::new(),
            });
            k += 1;
        }
    }
    ActorTable { actors }
}

fn schedule(case: &NetworkCase, prices: &[f64]) -> DlmpSchedule {
    let h = case.horizon;
    DlmpSchedule {
        bus_ids: case.buses.iter().map(|b| b.id).collect(),
        lambda: (0..case.buses.len()).map(|bi| (0..h).map(|t| prices[(bi * h + t) % prices.len()]).collect()).collect(),
        lambda_q: vec![vec![0.0; h]; case.buses.len()],
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn adjustment_is_revenue_neutral_per_bus(
        weights in prop::collection::vec(prop::collection::vec(0.1..3.0f64, 1..4), 1..5),
        incomes in prop::collection::vec(5.0..500.0f64, 1..8),
        prices in prop::collection::vec(0.02..0.5f64, 1..30),
        opts in options(),
    ) {
        let case = ieee33_subcase(5);
        let actors = split_actors(&case, &weights, &incomes);
        let dlmp = schedule(&case, &prices);
        let ug: Vec<f64> = (0..case.horizon).map(|t| prices[t % prices.len()]).collect();
        let table = adjust_prices_equity(&case, &actors, &dlmp, &ug, opts).unwrap();
        check_neutrality(&case, &actors, &table).unwrap();
        for (bi, b) in case.buses.iter().enumerate() {
            for t in 0..case.horizon {
                let (mut paid, mut load) = (0.0, 0.0);
                for (a, actor) in actors.at_bus(b.id) {
                    paid += table.actor[a][t] * actor.baseline[t];
                    load += actor.baseline[t];
                }
                if load > 0.0 {
                    let expect = table.bus[bi][t] * load;
                    prop_assert!((paid - expect).abs() <= 1e-9 * expect.abs());
                }
            }
        }
        prop_assert!(table.actor.iter().flatten().all(|p| p.is_finite() && *p >= 0.0));
    }

    #[test]
    fn adjustment_ignores_income_units(
        incomes in prop::collection::vec(5.0..500.0f64, 1..8),
        scale in 0.01..100.0f64,
        opts in options(),
    ) {
        let case = ieee33_subcase(4);
        let a = split_actors(&case, &[vec![1.0, 2.0]], &incomes);
        let scaled: Vec<f64> = incomes.iter().map(|i| i * scale).collect();
        let b = split_actors(&case, &[vec![1.0, 2.0]], &scaled);
        let dlmp = schedule(&case, &[0.1, 0.2, 0.15]);
        let ug = vec![0.12; case.horizon];
        let ta = adjust_prices_equity(&case, &a, &dlmp, &ug, opts).unwrap();
        let tb = adjust_prices_equity(&case, &b, &dlmp, &ug, opts).unwrap();
        for (x, y) in ta.actor.iter().flatten().zip(tb.actor.iter().flatten()) {
            prop_assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0));
        }
    }

    #[test]
    fn disturbance_sums_to_its_magnitude(magnitude in -0.9..1.0f64, seed in any::<u64>(), t in 0usize..24) {
        let case = ieee33_subcase(8);
        let d = gen_disturbance(&case, magnitude, seed, &[t]).unwrap();
        d.validate(&case).unwrap();
        let total = magnitude * case.total_fixed_load(t);
        prop_assert!((d.total(t) - total).abs() <= 1e-9 * total.abs().max(1.0));
        for (bi, row) in d.delta.iter().enumerate() {
            for (s, &x) in row.iter().enumerate() {
                if s != t {
                    prop_assert_eq!(x, 0.0);
                } else if magnitude >= 0.0 {
                    // factors lie in [0.5, 1.5], so no bus gets more than 3x the average step
                    prop_assert!(x >= 0.0 && x <= 3.0 * magnitude * case.buses[bi].fixed_load[t] + 1e-9);
                }
            }
        }
    }

    #[test]
    fn chain_flow_satisfies_branch_equations(
        loads in prop::collection::vec(0.0..1500.0f64, 1..3),
        r in 0.1..3.0f64,
        x in 0.1..3.0f64,
    ) {
        let profile: Vec<Vec<f64>> = loads.iter().map(|&l| vec![l]).collect();
        let case = chain_feeder(&profile, r, x, 10_000.0, 0.95).unwrap();
        let p: Vec<f64> = case.buses.iter().map(|b| case.base.power_to_pu(b.fixed_load[0])).collect();
        let q: Vec<f64> = case.buses.iter().zip(&p).map(|(b, p)| p * b.q_ratio()).collect();
        let f = chain_power_flow(&case, &p, &q, 1.0).expect("light loads solve");
        prop_assert!((f.v_sq[0] - 1.0).abs() < 1e-8);
        for (li, line) in case.lines.iter().enumerate() {
            let l = (f.p[li].powi(2) + f.q[li].powi(2)) / f.v_sq[li];
            let drop = f.v_sq[li] - 2.0 * (line.r * f.p[li] + line.x * f.q[li]) + line.z_sq() * l;
            prop_assert!((drop - f.v_sq[li + 1]).abs() < 1e-8, "line {li}: {drop} vs {}", f.v_sq[li + 1]);
            let downstream_p: f64 = p[li + 1..].iter().sum::<f64>();
            let losses: f64 = (li..case.lines.len())
                .map(|k| case.lines[k].r * (f.p[k].powi(2) + f.q[k].powi(2)) / f.v_sq[k])
                .sum();
            prop_assert!((f.p[li] - downstream_p - losses).abs() < 1e-8);
        }
    }

    #[test]
    fn case_json_round_trips(
        loads in prop::collection::vec(prop::collection::vec(0.0..900.0f64, 3), 1..5),
        r in 0.0..2.0f64,
        x in 0.01..2.0f64,
    ) {
        let case = chain_feeder(&loads, r, x, 4000.0, 0.9).unwrap();
        let back = parse_case(&to_json(&case)).unwrap();
        prop_assert_eq!(to_json(&back), to_json(&case));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn lossless_feeder_prices_at_upstream(
        loads in prop::collection::vec(10.0..2000.0f64, 3),
        prices in prop::collection::vec(0.01..0.6f64, 3),
    ) {
        let case = chain_feeder(&[loads], 0.0, 0.2, 10_000.0, 0.95).unwrap();
        let actors = ActorTable::one_per_bus(&case, |_| (50.0, None));
        let inputs = MarketInputs { case, portfolio: DerPortfolio::default(), actors, ug_price: prices.clone() };
        let m = clear_energy_market(&inputs, &Solver::new().serial(true), Stage1Options::default()).unwrap();
        for row in &m.dlmp.lambda {
            for (t, &l) in row.iter().enumerate() {
                prop_assert!((l - prices[t]).abs() <= 1e-8, "t={}: {} vs {}", t, l, prices[t]);
            }
        }
    }
}
