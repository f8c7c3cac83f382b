use equiflex_conic::{AffineExpr, ConeKind, ConicError, ConicProgram, Sense, Solver, Status, VarId};

/// xorshift64*, enough to spread instance parameters deterministically.
struct Rng(u64);
impl Rng {
    fn next(&mut self) -> f64 {
        self.0 ^= self.0 >> 12;
        self.0 ^= self.0 << 25;
        self.0 ^= self.0 >> 27;
        (self.0.wrapping_mul(0x2545_F491_4F6C_DD1D) >> 11) as f64 / (1u64 << 53) as f64
    }
    fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next()
    }
}

/// Fixed-charge supply problem with a quadratic capacity cone and
/// pairwise conflicts between neighbouring units.
fn fixed_charge(k: usize, seed: u64) -> (ConicProgram, Vec<VarId>) {
    let mut rng = Rng(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) | 1);
    let mut p = ConicProgram::new();
    let mut ys = Vec::new();
    let mut xs = Vec::new();
    let mut total_cap = 0.0;
    for i in 0..k {
        let y = p.add_binary(format!("y{i}")).unwrap();
        let cap = rng.range(1.0, 4.0);
        total_cap += cap;
        let x = p.add_continuous(format!("x{i}"), 0.0, cap).unwrap();
        p.add_constraint(format!("link{i}"), [(x, 1.0), (y, -cap)], Sense::Le, 0.0).unwrap();
        p.add_objective_term(x, rng.range(0.5, 3.0));
        p.add_objective_term(y, rng.range(0.5, 4.0));
        ys.push(y);
        xs.push(x);
    }
    for i in (0..k.saturating_sub(1)).step_by(3) {
        p.add_constraint(format!("conflict{i}"), [(ys[i], 1.0), (ys[i + 1], 1.0)], Sense::Le, 1.0).unwrap();
    }
    let demand = rng.range(0.2, 0.45) * total_cap;
    p.add_constraint("demand", xs.iter().map(|&x| (x, 1.0)), Sense::Ge, demand).unwrap();
    let mut members = vec![AffineExpr::constant(0.8 * total_cap)];
    members.extend(xs.iter().map(|&x| AffineExpr::var(x)));
    p.add_cone("capacity", ConeKind::SecondOrder, members, false).unwrap();
    (p, ys)
}

/// Exhaustive oracle, independent of the branch-and-bound code path.
fn enumerate(solver: &Solver, p: &ConicProgram, ys: &[VarId]) -> Option<f64> {
    let mut best: Option<f64> = None;
    for mask in 0u32..(1 << ys.len()) {
        let assignment: Vec<(VarId, bool)> =
            ys.iter().enumerate().map(|(i, &y)| (y, mask >> i & 1 == 1)).collect();
        let fixed = p.with_fixed_binaries(&assignment).unwrap();
        let sol = solver.solve_raw(&fixed);
        if sol.status == Status::Optimal {
            best = Some(best.map_or(sol.objective_value, |b: f64| b.min(sol.objective_value)));
        }
    }
    best
}

#[test]
fn two_binary_toy_matches_four_fixings() {
    let solver = Solver::new();
    let (p, ys) = fixed_charge(2, 11);
    let oracle = enumerate(&solver, &p, &ys).expect("feasible");
    let report = solver.solve_mixed_integer(&p).unwrap();
    assert!((report.incumbent.objective_value - oracle).abs() <= 1e-6);
}

#[test]
fn bnb_matches_enumeration_on_corpus() {
    let solver = Solver::new();
    for seed in 0..20u64 {
        let k = 2 + (seed as usize % 9);
        let (p, ys) = fixed_charge(k, seed);
        let oracle = enumerate(&solver, &p, &ys);
        match (solver.solve_mixed_integer(&p), oracle) {
            (Ok(report), Some(best)) => {
                assert!(
                    (report.incumbent.objective_value - best).abs() <= 1e-6,
                    "seed {seed}: bnb {} vs enumeration {best}",
                    report.incumbent.objective_value
                );
                assert!(report.proven_optimal);
                assert!(report.incumbent.objective_value >= report.best_bound - 1e-6);
                for &(y, _) in &report.fixed_binaries {
                    let v = report.incumbent.value(y);
                    assert!(v.abs() <= 1e-6 || (v - 1.0).abs() <= 1e-6);
                }
            }
            (Err(ConicError::Infeasible { .. }), None) => {}
            (got, want) => panic!("seed {seed}: bnb {got:?} vs oracle {want:?}"),
        }
    }
}

#[test]
fn serial_and_parallel_trees_are_identical() {
    let (p, _) = fixed_charge(9, 5);
    let serial = Solver::new().serial(true).solve_mixed_integer(&p).unwrap();
    let again = Solver::new().serial(true).solve_mixed_integer(&p).unwrap();
    let parallel = Solver::new().serial(false).solve_mixed_integer(&p).unwrap();
    assert_eq!(serial, again);
    assert_eq!(serial.nodes_explored, parallel.nodes_explored);
    assert_eq!(serial.fixed_binaries, parallel.fixed_binaries);
    assert_eq!(
        serial.incumbent.objective_value.to_bits(),
        parallel.incumbent.objective_value.to_bits()
    );
}

#[test]
fn node_limit_returns_unproven_incumbent_or_error() {
    let (p, _) = fixed_charge(10, 3);
    let mut solver = Solver::new();
    solver.node_limit = 1;
    match solver.solve_mixed_integer(&p) {
        Ok(report) => assert!(!report.proven_optimal || report.nodes_explored <= 1),
        Err(e) => assert!(matches!(e, ConicError::NodeLimit(1)), "{e:?}"),
    }
}

#[test]
fn root_infeasible_is_an_error() {
    let mut p = ConicProgram::new();
    let y = p.add_binary("y").unwrap();
    let x = p.add_continuous("x", 0.0, 1.0).unwrap();
    p.add_constraint("link", [(x, 1.0), (y, -1.0)], Sense::Le, 0.0).unwrap();
    p.add_constraint("need", [(x, 1.0)], Sense::Ge, 2.0).unwrap();
    assert!(matches!(Solver::new().solve_mixed_integer(&p), Err(ConicError::Infeasible { .. })));
}
