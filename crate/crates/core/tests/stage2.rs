use equiflex::grid::builtin_ieee33;
use equiflex::scenario::{defaults, synthesize_scenario, PenetrationConfig};
use equiflex::stage1::{clear_energy_market, ClearedMarket, MarketInputs, Stage1Options};
use equiflex::stage2::{
    baseline_no_flex, clear_flex_market, curtailment_cap, fairness_metrics, network_check, replay_check, Disturbance,
    FairnessMode, Stage2Options,
};
use equiflex_conic::Solver;

fn setup(seed: u64) -> (MarketInputs, Disturbance, ClearedMarket, Solver) {
    let config = PenetrationConfig { seed, ..Default::default() };
    let s = synthesize_scenario(&builtin_ieee33(), &config, defaults::DISTURBANCE_MAGNITUDE).unwrap();
    let (inputs, dist) = s.inputs().unwrap();
    let solver = Solver::new().serial(true);
    let m = clear_energy_market(&inputs, &solver, Stage1Options::default()).unwrap();
    (inputs, dist, m, solver)
}

#[test]
fn zero_disturbance_changes_nothing() {
    let (inputs, _, m, solver) = setup(0);
    let zero = Disturbance::zero(&inputs.case);
    let r = clear_flex_market(&inputs, &m.dispatch, &zero, &Stage2Options::default(), &solver).unwrap();
    assert!(r.intervals.is_empty());
    assert_eq!(r.total_curtailment, 0.0);
    assert!(r.plan.actor.iter().flatten().all(|&x| x == 0.0));
    assert!(r.plan.delta_ug.iter().all(|&x| x == 0.0));
}

#[test]
fn flexibility_reduces_curtailment_and_weight_spreads_it() {
    let (inputs, dist, m, solver) = setup(1);
    let fair = Stage2Options::default();
    let greedy = Stage2Options { w: 0.0, ..fair };
    let with = clear_flex_market(&inputs, &m.dispatch, &dist, &fair, &solver).unwrap();
    let without = baseline_no_flex(&inputs, &m.dispatch, &dist, &fair, &solver).unwrap();
    let min = clear_flex_market(&inputs, &m.dispatch, &dist, &greedy, &solver).unwrap();
    assert!(without.total_curtailment > with.total_curtailment);
    assert!(with.total_curtailment >= min.total_curtailment * (1.0 - 1e-6));
    assert!(without.flex.iter().all(|f| f.uf == 0.0 && f.df == 0.0));
    let (fs, ms) = (fairness_metrics(&with, &inputs.actors), fairness_metrics(&min, &inputs.actors));
    assert!(fs.spread <= ms.spread);
    for r in [&with, &without, &min] {
        assert!(replay_check(r, 1e-6).is_empty(), "{:?}", replay_check(r, 1e-6));
        assert!(network_check(&inputs.case, r, 1e-6).is_empty());
        assert!(r.inexact_cones.is_empty());
        assert!(r.proven_optimal);
    }
}

#[test]
fn curtailment_stays_within_each_actor_cap() {
    let (inputs, dist, m, solver) = setup(2);
    let r = clear_flex_market(&inputs, &m.dispatch, &dist, &Stage2Options::default(), &solver).unwrap();
    for &t in &r.intervals {
        for a in 0..inputs.actors.actors.len() {
            let cap = curtailment_cap(&inputs, &dist, a, t);
            assert!(r.plan.actor[a][t] <= cap + 1e-6, "actor {a}: {} > {cap}", r.plan.actor[a][t]);
        }
    }
    let bus_total: f64 = r.plan.bus.iter().flatten().sum();
    assert!((bus_total - r.total_curtailment).abs() < 1e-9);
}

#[test]
fn spread_mode_also_equalizes() {
    let (inputs, dist, m, solver) = setup(3);
    let spread = Stage2Options { mode: FairnessMode::Spread, ..Default::default() };
    let greedy = Stage2Options { w: 0.0, ..spread };
    let a = clear_flex_market(&inputs, &m.dispatch, &dist, &spread, &solver).unwrap();
    let b = clear_flex_market(&inputs, &m.dispatch, &dist, &greedy, &solver).unwrap();
    let (fa, fb) = (fairness_metrics(&a, &inputs.actors), fairness_metrics(&b, &inputs.actors));
    assert!(fa.spread <= 0.5 * fb.spread, "{} vs {}", fa.spread, fb.spread);
}

#[test]
fn load_drop_needs_no_curtailment() {
    let (inputs, _, m, solver) = setup(0);
    let case = &inputs.case;
    let dist = equiflex::scenario::gen_disturbance(case, -0.1, 0, &[18]).unwrap();
    let r = clear_flex_market(&inputs, &m.dispatch, &dist, &Stage2Options::default(), &solver).unwrap();
    assert!(r.total_curtailment < 1e-6, "{}", r.total_curtailment);
}
