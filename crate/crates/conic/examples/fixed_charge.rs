//! Small unit-commitment style MISOCP solved by branch-and-bound, then
//! re-solved with the binaries fixed to read off the demand price.

use equiflex_conic::{AffineExpr, ConeKind, ConicProgram, Sense, Solver};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let units = [("peaker", 3.0, 0.9, 5.0), ("base", 1.2, 4.0, 3.0), ("mid", 2.0, 2.0, 4.0)];
    let mut p = ConicProgram::new();
    let mut outputs = Vec::new();
    for (name, marginal, fixed, cap) in units {
        let on = p.add_binary(format!("{name}_on"))?;
        let out = p.add_continuous(format!("{name}_p"), 0.0, cap)?;
        p.add_constraint(format!("{name}_link"), [(out, 1.0), (on, -cap)], Sense::Le, 0.0)?;
        p.add_objective_term(out, marginal);
        p.add_objective_term(on, fixed);
        outputs.push(out);
    }
    p.add_constraint("demand", outputs.iter().map(|&v| (v, 1.0)), Sense::Ge, 6.5)?;
    let mut members = vec![AffineExpr::constant(6.0)];
    members.extend(outputs.iter().map(|&v| AffineExpr::var(v)));
    p.add_cone("thermal", ConeKind::SecondOrder, members, false)?;

    let solver = Solver::new();
    let report = solver.solve_mixed_integer(&p)?;
    println!("objective {:.6} after {} nodes", report.incumbent.objective_value, report.nodes_explored);
    for &(v, on) in &report.fixed_binaries {
        println!("  {:<10} {}", p.variable(v).name, if on { "on" } else { "off" });
    }
    let priced = solver.refix_and_dualize(&p, &report.fixed_binaries)?;
    println!("demand price {:.6}", priced.dual_by_tag(&p, "demand").unwrap_or(f64::NAN));
    Ok(())
}
