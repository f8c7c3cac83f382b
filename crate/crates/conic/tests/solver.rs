use equiflex_conic::{
    soc_exactness, text, AffineExpr, ConeKind, ConicError, ConicProgram, Sense, Solver, Status, VarId,
};

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + b.abs())
}

#[test]
fn socp_norm_of_three_four_is_five() {
    let mut p = ConicProgram::new();
    let t = p.add_free("t").unwrap();
    p.add_cone(
        "norm",
        ConeKind::SecondOrder,
        vec![AffineExpr::var(t), AffineExpr::constant(3.0), AffineExpr::constant(4.0)],
        false,
    )
    .unwrap();
    p.add_objective_term(t, 1.0);
    let sol = Solver::new().solve_relaxation(&p).unwrap();
    assert!(close(sol.value(t), 5.0, 1e-7), "{}", sol.value(t));
}

#[test]
fn rotated_cone_gives_sqrt_two() {
    let mut p = ConicProgram::new();
    let w = p.add_free("w").unwrap();
    p.add_cone(
        "rot",
        ConeKind::RotatedSecondOrder,
        vec![AffineExpr::constant(1.0), AffineExpr::constant(1.0), AffineExpr::var(w)],
        false,
    )
    .unwrap();
    p.add_objective_term(w, -1.0);
    let sol = Solver::new().solve_relaxation(&p).unwrap();
    assert!(close(sol.value(w), 2f64.sqrt(), 1e-7));
}

#[test]
fn equality_dual_equals_cost() {
    let mut p = ConicProgram::new();
    let x = p.add_continuous("x", 0.0, 10.0).unwrap();
    p.add_constraint("fix", [(x, 1.0)], Sense::Eq, 2.0).unwrap();
    p.add_objective_term(x, 3.5);
    let sol = Solver::new().solve_relaxation(&p).unwrap();
    assert!(close(sol.dual_by_tag(&p, "fix").unwrap(), 3.5, 1e-7));
}

#[test]
fn inequality_duals_follow_rhs_sensitivity() {
    // min x + 2y  s.t.  x + y ≥ 3 (binding), x ≤ 1 (binding), y ≥ 0
    let mut p = ConicProgram::new();
    let x = p.add_continuous("x", 0.0, f64::INFINITY).unwrap();
    let y = p.add_continuous("y", 0.0, f64::INFINITY).unwrap();
    p.add_constraint("cover", [(x, 1.0), (y, 1.0)], Sense::Ge, 3.0).unwrap();
    p.add_constraint("cap", [(x, 1.0)], Sense::Le, 1.0).unwrap();
    p.add_objective_term(x, 1.0);
    p.add_objective_term(y, 2.0);
    let sol = Solver::new().solve_relaxation(&p).unwrap();
    assert!(close(sol.objective_value, 5.0, 1e-7));
    // raising the cover requirement costs 2 per unit, raising the cap saves 1
    assert!(close(sol.dual_by_tag(&p, "cover").unwrap(), 2.0, 1e-6));
    assert!(close(sol.dual_by_tag(&p, "cap").unwrap(), -1.0, 1e-6));
}

#[test]
fn infeasible_program_reports_certificate() {
    let mut p = ConicProgram::new();
    let x = p.add_continuous("x", 0.0, 1.0).unwrap();
    p.add_constraint("need_two", [(x, 1.0)], Sense::Ge, 2.0).unwrap();
    p.add_objective_term(x, 1.0);
    match Solver::new().solve_relaxation(&p) {
        Err(ConicError::Infeasible { tags }) => {
            assert!(tags.iter().any(|t| t == "need_two"), "{tags:?}");
        }
        other => panic!("expected infeasible, got {other:?}"),
    }
}

/// Small QCQP-flavoured test program: minimize a linear cost over a disk
/// with a handful of linear cuts.
fn disk_program(cost: (f64, f64), rhs: f64) -> (ConicProgram, VarId, VarId) {
    let mut p = ConicProgram::new();
    let x = p.add_free("x").unwrap();
    let y = p.add_free("y").unwrap();
    p.add_cone(
        "disk",
        ConeKind::SecondOrder,
        vec![AffineExpr::constant(2.0), AffineExpr::var(x), AffineExpr::var(y)],
        false,
    )
    .unwrap();
    p.add_constraint("cut", [(x, 1.0), (y, 1.0)], Sense::Eq, rhs).unwrap();
    p.add_objective_term(x, cost.0);
    p.add_objective_term(y, cost.1);
    (p, x, y)
}

#[test]
fn weak_duality_and_dual_perturbation() {
    let solver = Solver::new();
    let (p, _, _) = disk_program((1.0, 3.0), 0.5);
    let sol = solver.solve_relaxation(&p).unwrap();
    assert!(sol.gap <= 1e-8);
    assert!((sol.objective_value - sol.dual_objective).abs() / (1.0 + sol.objective_value.abs()) <= 1e-8);
    let lambda = sol.dual_by_tag(&p, "cut").unwrap();
    let eps = 1e-4;
    let up = solver.solve_relaxation(&disk_program((1.0, 3.0), 0.5 + eps).0).unwrap();
    let dn = solver.solve_relaxation(&disk_program((1.0, 3.0), 0.5 - eps).0).unwrap();
    let fd_up = (up.objective_value - sol.objective_value) / eps;
    let fd_dn = (sol.objective_value - dn.objective_value) / eps;
    assert!((fd_up - lambda).abs() <= 0.05 * lambda.abs().max(1e-9));
    assert!((fd_dn - lambda).abs() <= 0.05 * lambda.abs().max(1e-9));
}

#[test]
fn refix_requires_full_assignment_and_detects_inconsistency() {
    let mut p = ConicProgram::new();
    let on = p.add_binary("on").unwrap();
    let power = p.add_continuous("p", 0.0, 5.0).unwrap();
    p.add_constraint("link", [(power, 1.0), (on, -5.0)], Sense::Le, 0.0).unwrap();
    p.add_constraint("demand", [(power, 1.0)], Sense::Ge, 2.0).unwrap();
    p.add_objective_term(power, 1.0);
    p.add_objective_term(on, 1.0);
    let solver = Solver::new();
    assert!(matches!(solver.refix_and_dualize(&p, &[]), Err(ConicError::IncompleteAssignment(_))));
    assert!(matches!(
        solver.refix_and_dualize(&p, &[(on, false)]),
        Err(ConicError::Infeasible { .. })
    ));
    let report = solver.solve_mixed_integer(&p).unwrap();
    assert!(close(report.incumbent.objective_value, 3.0, 1e-7));
    let refixed = solver.refix_and_dualize(&p, &report.fixed_binaries).unwrap();
    assert!((refixed.objective_value - report.incumbent.objective_value).abs() <= 1e-8);
}

#[test]
fn no_binaries_matches_relaxation() {
    let (p, _, _) = disk_program((2.0, -1.0), 0.3);
    let solver = Solver::new();
    let relax = solver.solve_relaxation(&p).unwrap();
    let report = solver.solve_mixed_integer(&p).unwrap();
    assert_eq!(report.incumbent.objective_value, relax.objective_value);
    assert_eq!(report.nodes_explored, 1);
    // the final pricing solve runs at the tighter polish tolerance
    let refixed = solver.refix_and_dualize(&p, &[]).unwrap();
    assert!(close(refixed.objective_value, relax.objective_value, 1e-7));
}

#[test]
fn exactness_report_flags_interior_relaxed_cone() {
    let mut p = ConicProgram::new();
    let t = p.add_continuous("t", 0.0, 6.0).unwrap();
    p.add_cone(
        "loose",
        ConeKind::SecondOrder,
        vec![AffineExpr::var(t), AffineExpr::constant(3.0), AffineExpr::constant(4.0)],
        true,
    )
    .unwrap();
    // maximize t: pushes it to the bound, leaving the cone strictly interior
    p.add_objective_term(t, -1.0);
    let sol = Solver::new().solve_relaxation(&p).unwrap();
    let report = soc_exactness(&p, &sol, 1e-6);
    assert_eq!(report.cones.len(), 1);
    assert!(close(report.cones[0].slack, 36.0 - 25.0, 1e-6));
    assert!(!report.is_exact());
}

#[test]
fn status_of_unbounded_program() {
    let mut p = ConicProgram::new();
    let x = p.add_free("x").unwrap();
    p.add_constraint("lb", [(x, 1.0)], Sense::Le, 1.0).unwrap();
    p.add_objective_term(x, 1.0);
    let sol = Solver::new().solve_raw(&p);
    assert_eq!(sol.status, Status::Unbounded);
}

#[test]
fn text_dump_round_trips() {
    let mut p = ConicProgram::new();
    let a = p.add_binary("a").unwrap();
    let b = p.add_continuous("b", -1.5e-3, f64::INFINITY).unwrap();
    let c = p.add_free("c").unwrap();
    p.add_constraint("r1", [(a, 0.1), (b, -1.0 / 3.0)], Sense::Le, 7.25).unwrap();
    p.add_constraint("r2", [(c, 1e-12)], Sense::Ge, -2.0).unwrap();
    p.add_cone(
        "k",
        ConeKind::RotatedSecondOrder,
        vec![AffineExpr::scaled(b, 0.5), AffineExpr::constant(1.0), AffineExpr::with_terms([(c, 2.0), (a, -1.0)], 0.3)],
        true,
    )
    .unwrap();
    p.add_objective_term(b, std::f64::consts::PI);
    p.add_objective_constant(1.0 / 7.0);
    let dumped = text::dump(&p);
    let back = text::parse(&dumped).unwrap();
    assert_eq!(back, p);
    assert_eq!(text::dump(&back), dumped);
}

#[test]
fn text_parse_errors_name_the_line() {
    let err = text::parse("conic-program v1\nvar x continuous 0 oops\nend\n").unwrap_err();
    assert!(matches!(err, ConicError::Parse { line: 2, .. }), "{err:?}");
}
