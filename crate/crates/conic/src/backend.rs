//! Continuous conic solve: presolve, standard-form assembly and the
//! interior-point backend.
//!
//! The backend solves `min qᵀx  s.t.  Ax + s = b, s ∈ K` with a primal-dual
//! interior-point method on the homogeneous self-dual embedding. Row duals
//! are translated so that `row_duals[r] = ∂ objective / ∂ rhs[r]` for every
//! sense.

use std::f64::consts::FRAC_1_SQRT_2;

use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettings, DefaultSolver, IPSolver, SolverStatus, SupportedConeT,
};

use crate::program::{ConeKind, ConicProgram, Sense};
use crate::solution::{ConicSolution, Status, Tolerances};

/// Narrow contract for a continuous conic solver. Binaries are treated as
/// continuous within their bounds.
pub trait ConicBackend: Send + Sync {
    fn solve(&self, program: &ConicProgram, tol: &Tolerances, max_iter: u32) -> ConicSolution;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ClarabelBackend;

/// Where each model element landed in the standard form.
enum RowSlot {
    /// Standard-form row and the factor turning its dual into `∂obj/∂rhs`.
    Active { row: usize, sign: f64 },
    /// Dropped by presolve (all variables fixed).
    Dropped,
}

struct StandardForm {
    n: usize,
    m: usize,
    triplets: Vec<(usize, usize, f64)>,
    b: Vec<f64>,
    cones: Vec<SupportedConeT<f64>>,
    q: Vec<f64>,
    obj_offset: f64,
    col_of: Vec<Option<usize>>,
    fixed: Vec<f64>,
    row_slots: Vec<RowSlot>,
    /// First standard-form row of each cone block.
    cone_rows: Vec<Option<usize>>,
    /// Labels for every standard-form row, used for certificates.
    labels: Vec<String>,
}

/// Outcome of presolve when a fully fixed row or cone is already violated.
struct TriviallyInfeasible(Vec<String>);

fn substitute(expr_terms: &[(crate::program::VarId, f64)], fixed: &[f64], col_of: &[Option<usize>]) -> (Vec<(usize, f64)>, f64) {
    let mut terms = Vec::with_capacity(expr_terms.len());
    let mut shift = 0.0;
    for &(v, c) in expr_terms {
        match col_of[v.0] {
            Some(col) => terms.push((col, c)),
            None => shift += c * fixed[v.0],
        }
    }
    (terms, shift)
}

fn build(program: &ConicProgram, tol: &Tolerances) -> Result<StandardForm, TriviallyInfeasible> {
    let vars = program.variables();
    let mut col_of = vec![None; vars.len()];
    let mut fixed = vec![0.0; vars.len()];
    let mut n = 0;
    for (i, v) in vars.iter().enumerate() {
        if v.is_fixed() {
            fixed[i] = v.lower;
        } else {
            col_of[i] = Some(n);
            n += 1;
        }
    }

    let mut triplets = Vec::new();
    let mut b = Vec::new();
    let mut labels = Vec::new();
    let mut cones = Vec::new();
    let mut row_slots: Vec<Option<RowSlot>> = (0..program.num_constraints()).map(|_| None).collect();
    let mut infeasible = Vec::new();

    let mut push_linear = |sense_filter: &dyn Fn(Sense) -> bool,
                           triplets: &mut Vec<(usize, usize, f64)>,
                           b: &mut Vec<f64>,
                           labels: &mut Vec<String>,
                           row_slots: &mut Vec<Option<RowSlot>>|
     -> usize {
        let mut count = 0;
        for (ri, row) in program.constraints().iter().enumerate() {
            if !sense_filter(row.sense) {
                continue;
            }
            let (terms, shift) = substitute(&row.terms, &fixed, &col_of);
            let rhs = row.rhs - shift;
            if terms.is_empty() {
                let ok = match row.sense {
                    Sense::Eq => rhs.abs() <= tol.feas_tol * (1.0 + row.rhs.abs()),
                    Sense::Le => rhs >= -tol.feas_tol * (1.0 + row.rhs.abs()),
                    Sense::Ge => rhs <= tol.feas_tol * (1.0 + row.rhs.abs()),
                };
                if !ok {
                    infeasible.push(row.tag.clone());
                }
                row_slots[ri] = Some(RowSlot::Dropped);
                continue;
            }
            let k = b.len();
            let (scale, sign) = match row.sense {
                Sense::Eq | Sense::Le => (1.0, -1.0),
                Sense::Ge => (-1.0, 1.0),
            };
            for (col, c) in terms {
                triplets.push((k, col, scale * c));
            }
            b.push(scale * rhs);
            labels.push(row.tag.clone());
            row_slots[ri] = Some(RowSlot::Active { row: k, sign });
            count += 1;
        }
        count
    };

    let n_eq = push_linear(&|s| s == Sense::Eq, &mut triplets, &mut b, &mut labels, &mut row_slots);
    if n_eq > 0 {
        cones.push(SupportedConeT::ZeroConeT(n_eq));
    }
    let mut n_nonneg =
        push_linear(&|s| s != Sense::Eq, &mut triplets, &mut b, &mut labels, &mut row_slots);
    for (i, v) in vars.iter().enumerate() {
        let Some(col) = col_of[i] else { continue };
        if v.lower.is_finite() {
            triplets.push((b.len(), col, -1.0));
            b.push(-v.lower);
            labels.push(format!("bound:lower:{}", v.name));
            n_nonneg += 1;
        }
        if v.upper.is_finite() {
            triplets.push((b.len(), col, 1.0));
            b.push(v.upper);
            labels.push(format!("bound:upper:{}", v.name));
            n_nonneg += 1;
        }
    }
    if n_nonneg > 0 {
        cones.push(SupportedConeT::NonnegativeConeT(n_nonneg));
    }

    let mut cone_rows = Vec::with_capacity(program.cones().len());
    for cone in program.cones() {
        let members: Vec<(Vec<(usize, f64)>, f64)> = cone
            .members
            .iter()
            .map(|m| {
                let (t, shift) = substitute(&m.terms, &fixed, &col_of);
                (t, m.constant + shift)
            })
            .collect();
        let members = match cone.kind {
            ConeKind::SecondOrder => members,
            ConeKind::RotatedSecondOrder => {
                // 2uv ≥ ‖x‖²  ⇔  ((u+v)/√2, (u−v)/√2, x) ∈ SOC
                let combine = |su: f64, sv: f64| {
                    let mut t: Vec<(usize, f64)> = Vec::new();
                    for &(c, a) in &members[0].0 {
                        t.push((c, su * a));
                    }
                    for &(c, a) in &members[1].0 {
                        t.push((c, sv * a));
                    }
                    (t, su * members[0].1 + sv * members[1].1)
                };
                let mut out = vec![
                    combine(FRAC_1_SQRT_2, FRAC_1_SQRT_2),
                    combine(FRAC_1_SQRT_2, -FRAC_1_SQRT_2),
                ];
                out.extend(members[2..].iter().cloned());
                out
            }
        };
        if members.iter().all(|(t, _)| t.is_empty()) {
            let head = members[0].1;
            let norm = members[1..].iter().map(|(_, c)| c * c).sum::<f64>().sqrt();
            if norm - head > tol.feas_tol * (1.0 + norm) {
                infeasible.push(cone.tag.clone());
            }
            cone_rows.push(None);
            continue;
        }
        let start = b.len();
        for (j, (terms, constant)) in members.iter().enumerate() {
            for &(col, c) in terms {
                triplets.push((start + j, col, -c));
            }
            b.push(*constant);
            labels.push(format!("{}[{}]", cone.tag, j));
        }
        cones.push(SupportedConeT::SecondOrderConeT(members.len()));
        cone_rows.push(Some(start));
    }

    if !infeasible.is_empty() {
        return Err(TriviallyInfeasible(infeasible));
    }

    let mut q = vec![0.0; n];
    let (obj_terms, obj_shift) = substitute(&program.objective().terms, &fixed, &col_of);
    for (col, c) in obj_terms {
        q[col] += c;
    }

    Ok(StandardForm {
        n,
        m: b.len(),
        triplets,
        b,
        cones,
        q,
        obj_offset: program.objective().constant + obj_shift,
        col_of,
        fixed,
        row_slots: row_slots.into_iter().map(|s| s.expect("every row placed")).collect(),
        cone_rows,
        labels,
    })
}

fn csc(m: usize, n: usize, mut triplets: Vec<(usize, usize, f64)>) -> CscMatrix<f64> {
    triplets.sort_by_key(|a| (a.1, a.0));
    let mut colptr = vec![0usize; n + 1];
    let mut rowval = Vec::with_capacity(triplets.len());
    let mut nzval: Vec<f64> = Vec::with_capacity(triplets.len());
    let mut last: Option<(usize, usize)> = None;
    for (r, c, v) in triplets {
        if last == Some((r, c)) {
            *nzval.last_mut().unwrap() += v;
            continue;
        }
        rowval.push(r);
        nzval.push(v);
        colptr[c + 1] += 1;
        last = Some((r, c));
    }
    for j in 0..n {
        colptr[j + 1] += colptr[j];
    }
    CscMatrix::new(m, n, colptr, rowval, nzval)
}

impl ClarabelBackend {
    fn solve_standard(sf: &StandardForm, tol: &Tolerances, max_iter: u32) -> (Status, bool, clarabel::solver::DefaultSolution<f64>) {
        let p = CscMatrix::zeros((sf.n, sf.n));
        let a = csc(sf.m, sf.n, sf.triplets.clone());
        let settings = DefaultSettings {
            verbose: false,
            max_iter,
            tol_gap_abs: tol.gap_tol,
            tol_gap_rel: tol.gap_tol,
            tol_feas: tol.feas_tol,
            tol_infeas_abs: tol.feas_tol,
            tol_infeas_rel: tol.feas_tol,
            ..DefaultSettings::default()
        };
        let mut solver = DefaultSolver::new(&p, &sf.q, &a, &sf.b, &sf.cones, settings);
        solver.solve();
        let (status, reduced) = match solver.solution.status {
            SolverStatus::Solved => (Status::Optimal, false),
            SolverStatus::AlmostSolved => (Status::Optimal, true),
            SolverStatus::PrimalInfeasible => (Status::Infeasible, false),
            SolverStatus::AlmostPrimalInfeasible => (Status::Infeasible, true),
            SolverStatus::DualInfeasible => (Status::Unbounded, false),
            SolverStatus::AlmostDualInfeasible => (Status::Unbounded, true),
            SolverStatus::MaxIterations | SolverStatus::MaxTime => (Status::IterationLimit, false),
            SolverStatus::NumericalError
            | SolverStatus::InsufficientProgress
            | SolverStatus::Unsolved => (Status::NumericalError, false),
        };
        (status, reduced, solver.solution)
    }
}

impl ConicBackend for ClarabelBackend {
    fn solve(&self, program: &ConicProgram, tol: &Tolerances, max_iter: u32) -> ConicSolution {
        let sf = match build(program, tol) {
            Ok(sf) => sf,
            Err(TriviallyInfeasible(tags)) => {
                let mut sol = ConicSolution::empty(Status::Infeasible, program);
                sol.certificate = tags;
                return sol;
            }
        };

        let mut sol = ConicSolution::empty(Status::Optimal, program);
        if sf.n == 0 {
            // Every variable fixed and every row already checked by presolve.
            sol.primal = sf.fixed.clone();
            sol.objective_value = sf.obj_offset;
            sol.dual_objective = sf.obj_offset;
            sol.gap = 0.0;
            return sol;
        }

        let (status, reduced, raw) = Self::solve_standard(&sf, tol, max_iter);
        sol.status = status;
        sol.reduced_accuracy = reduced;
        sol.iterations = raw.iterations;

        if status == Status::Infeasible {
            let zmax = raw.z.iter().fold(0.0_f64, |a, z| a.max(z.abs()));
            sol.certificate = raw
                .z
                .iter()
                .zip(&sf.labels)
                .filter(|(z, _)| zmax > 0.0 && z.abs() > 1e-6 * zmax)
                .map(|(_, l)| l.clone())
                .collect();
            return sol;
        }
        if status != Status::Optimal {
            return sol;
        }

        sol.primal = sf
            .col_of
            .iter()
            .zip(&sf.fixed)
            .map(|(c, &f)| c.map_or(f, |c| raw.x[c]))
            .collect();
        for (i, slot) in sf.row_slots.iter().enumerate() {
            sol.row_duals[i] = match *slot {
                RowSlot::Active { row, sign } => sign * raw.z[row],
                RowSlot::Dropped => 0.0,
            };
        }
        for (i, start) in sf.cone_rows.iter().enumerate() {
            if let Some(s) = start {
                let dim = sol.cone_duals[i].len();
                sol.cone_duals[i] = raw.z[*s..*s + dim].to_vec();
            }
        }
        sol.objective_value = raw.obj_val + sf.obj_offset;
        sol.dual_objective = raw.obj_val_dual + sf.obj_offset;
        sol.gap = (raw.obj_val - raw.obj_val_dual).abs() / (1.0 + sol.objective_value.abs());
        sol
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::program::{ConicProgram, Sense};

    #[test]
    fn csc_merges_duplicates() {
        let m = csc(2, 2, vec![(0, 0, 1.0), (1, 1, 2.0), (0, 0, 3.0)]);
        assert_eq!(m.colptr, vec![0, 1, 2]);
        assert_eq!(m.nzval, vec![4.0, 2.0]);
    }

    #[test]
    fn fully_fixed_program_is_evaluated_directly() {
        let mut p = ConicProgram::new();
        let x = p.add_continuous("x", 2.0, 2.0).unwrap();
        p.add_constraint("c", [(x, 1.0)], Sense::Le, 3.0).unwrap();
        p.add_objective_term(x, 5.0);
        let sol = ClarabelBackend.solve(&p, &Tolerances::default(), 100);
        assert_eq!(sol.status, Status::Optimal);
        assert_eq!(sol.objective_value, 10.0);
    }

    #[test]
    fn violated_fixed_row_is_infeasible_with_tag() {
        let mut p = ConicProgram::new();
        let x = p.add_continuous("x", 2.0, 2.0).unwrap();
        let y = p.add_continuous("y", 0.0, 1.0).unwrap();
        p.add_constraint("too_small", [(x, 1.0)], Sense::Le, 1.0).unwrap();
        p.add_constraint("other", [(y, 1.0)], Sense::Le, 1.0).unwrap();
        let sol = ClarabelBackend.solve(&p, &Tolerances::default(), 100);
        assert_eq!(sol.status, Status::Infeasible);
        assert_eq!(sol.certificate, vec!["too_small".to_string()]);
    }
}
