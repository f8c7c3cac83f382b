//! Best-first branch-and-bound over binary variables.
//!
//! Every node is an interior-point solve of the continuous relaxation with
//! some binaries fixed. Children are evaluated as soon as they are created,
//! so the tree (and therefore node counts and the incumbent) is identical
//! whether siblings are solved serially or concurrently.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{ConicError, Result};
use crate::program::{ConicProgram, VarId, VarKind};
use crate::solution::{ConicSolution, Status};
use crate::solver::Solver;

#[derive(Debug, Clone, PartialEq)]
pub struct BnbReport {
    pub incumbent: ConicSolution,
    /// Relaxations solved for tree nodes (heuristic re-solves excluded).
    pub nodes_explored: usize,
    pub best_bound: f64,
    pub fixed_binaries: Vec<(VarId, bool)>,
    /// False when the node limit stopped the search early.
    pub proven_optimal: bool,
}

struct Node {
    fixings: Vec<(VarId, bool)>,
    sol: ConicSolution,
    seq: usize,
}

impl Node {
    fn bound(&self) -> f64 {
        self.sol.objective_value
    }
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    // BinaryHeap is a max-heap: the "greatest" node is the one with the lowest
    // bound, then the deepest, then the earliest created.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound()
            .total_cmp(&self.bound())
            .then(self.fixings.len().cmp(&other.fixings.len()))
            .then(other.seq.cmp(&self.seq))
    }
}

struct Incumbent {
    sol: ConicSolution,
    assignment: Vec<(VarId, bool)>,
}

struct Search<'a> {
    solver: &'a Solver,
    program: &'a ConicProgram,
    binaries: Vec<VarId>,
    /// Linear rows and cones touching each binary, for the rounding heuristic.
    touching_rows: Vec<Vec<usize>>,
    touching_cones: Vec<Vec<usize>>,
    incumbent: Option<Incumbent>,
}

enum Evaluated {
    Pruned,
    Integral(ConicSolution),
    Open(ConicSolution),
}

impl<'a> Search<'a> {
    fn new(solver: &'a Solver, program: &'a ConicProgram) -> Self {
        let binaries = program.binaries();
        let mut touching_rows = vec![Vec::new(); binaries.len()];
        let mut touching_cones = vec![Vec::new(); binaries.len()];
        let pos = |v: VarId| binaries.binary_search(&v).ok();
        for (ri, row) in program.constraints().iter().enumerate() {
            for &(v, _) in &row.terms {
                if let Some(k) = pos(v) {
                    touching_rows[k].push(ri);
                }
            }
        }
        for (ci, cone) in program.cones().iter().enumerate() {
            for m in &cone.members {
                for &(v, _) in &m.terms {
                    if let Some(k) = pos(v) {
                        if !touching_cones[k].contains(&ci) {
                            touching_cones[k].push(ci);
                        }
                    }
                }
            }
        }
        Search { solver, program, binaries, touching_rows, touching_cones, incumbent: None }
    }

    fn is_integral(&self, x: &[f64]) -> bool {
        let tol = self.solver.tolerances.int_tol;
        self.binaries.iter().all(|b| {
            let v = x[b.0];
            v.abs() <= tol || (v - 1.0).abs() <= tol
        })
    }

    fn cutoff(&self) -> f64 {
        match &self.incumbent {
            Some(inc) => {
                let obj = inc.sol.objective_value;
                obj - self.solver.tolerances.prune_gap(obj)
            }
            None => f64::INFINITY,
        }
    }

    fn evaluate(&self, fixings: &[(VarId, bool)]) -> Evaluated {
        let prog = self
            .program
            .with_fixed_binaries(fixings)
            .expect("fixings reference binaries of this program");
        let sol = self.solver.solve_raw(&prog);
        match sol.status {
            Status::Optimal => {}
            Status::Infeasible => return Evaluated::Pruned,
            other => {
                log::warn!("branch-and-bound node with {} fixings ended {:?}; dropped", fixings.len(), other);
                return Evaluated::Pruned;
            }
        }
        if self.is_integral(&sol.primal) {
            Evaluated::Integral(sol)
        } else {
            Evaluated::Open(sol)
        }
    }

    fn offer(&mut self, sol: ConicSolution) {
        let better = match &self.incumbent {
            Some(inc) => sol.objective_value < inc.sol.objective_value,
            None => true,
        };
        if better {
            let assignment = self.binaries.iter().map(|&b| (b, sol.primal[b.0] > 0.5)).collect();
            self.incumbent = Some(Incumbent { sol, assignment });
        }
    }

    fn point_ok(&self, k: usize, x: &[f64]) -> bool {
        let rows = self.program.constraints();
        let cones = self.program.cones();
        self.touching_rows[k].iter().all(|&r| {
            let row = &rows[r];
            row.violation(x) <= 1e-7 * (1.0 + row.rhs.abs())
        }) && self.touching_cones[k].iter().all(|&c| cones[c].violation(x) <= 1e-7)
    }

    /// Rounds the relaxation point binary by binary, preferring 0, keeping
    /// continuous values where they are, and accepting a value only if every
    /// row and cone touching that binary stays satisfied.
    fn lock_rounding(&self, x: &[f64]) -> Option<Vec<(VarId, bool)>> {
        let tol = self.solver.tolerances.int_tol;
        let mut vals = x.to_vec();
        let mut open = Vec::new();
        for (k, b) in self.binaries.iter().enumerate() {
            let v = vals[b.0];
            if v.abs() <= tol {
                vals[b.0] = 0.0;
            } else if (v - 1.0).abs() <= tol {
                vals[b.0] = 1.0;
            } else {
                open.push(k);
            }
        }
        let mut rest = Vec::new();
        for &k in &open {
            let b = self.binaries[k];
            let old = vals[b.0];
            vals[b.0] = 0.0;
            if !self.point_ok(k, &vals) {
                vals[b.0] = old;
                rest.push(k);
            }
        }
        for &k in &rest {
            let b = self.binaries[k];
            let old = vals[b.0];
            vals[b.0] = 1.0;
            if !self.point_ok(k, &vals) {
                vals[b.0] = old;
                return None;
            }
        }
        Some(self.binaries.iter().map(|&b| (b, vals[b.0] > 0.5)).collect())
    }

    fn heuristic(&mut self, x: &[f64]) {
        let mut candidates = Vec::new();
        if let Some(a) = self.lock_rounding(x) {
            candidates.push(a);
        }
        candidates.push(self.binaries.iter().map(|&b| (b, x[b.0] > 0.5)).collect());
        for assignment in candidates {
            if let Evaluated::Integral(sol) = self.evaluate(&assignment) {
                self.offer(sol);
                return;
            }
        }
    }

    fn branch_variable(&self, node: &Node) -> Option<VarId> {
        let tol = self.solver.tolerances.int_tol;
        let mut best: Option<(f64, VarId)> = None;
        for &b in &self.binaries {
            if node.fixings.iter().any(|&(v, _)| v == b) {
                continue;
            }
            let v = node.sol.primal[b.0];
            if v.abs() <= tol || (v - 1.0).abs() <= tol {
                continue;
            }
            let dist = (v - 0.5).abs();
            // strict comparison keeps the lowest id on ties
            if best.is_none_or(|(d, _)| dist < d) {
                best = Some((dist, b));
            }
        }
        best.map(|(_, b)| b)
    }
}

pub(crate) fn branch_and_bound(solver: &Solver, program: &ConicProgram) -> Result<BnbReport> {
    let mut search = Search::new(solver, program);

    if search.binaries.is_empty() {
        let sol = solver.solve_relaxation(program)?;
        return Ok(BnbReport {
            best_bound: sol.objective_value,
            incumbent: sol,
            nodes_explored: 1,
            fixed_binaries: Vec::new(),
            proven_optimal: true,
        });
    }

    let root = solver.solve_raw(program);
    match root.status {
        Status::Optimal => {}
        _ => return Err(crate::solver::into_result(root).unwrap_err()),
    }
    let mut nodes = 1usize;
    let mut seq = 0usize;
    let mut heap = BinaryHeap::new();
    if search.is_integral(&root.primal) {
        search.offer(root);
    } else {
        search.heuristic(&root.primal);
        heap.push(Node { fixings: Vec::new(), sol: root, seq });
        seq += 1;
    }

    let mut proven = true;
    while let Some(node) = heap.pop() {
        if node.bound() >= search.cutoff() {
            // best-first: every remaining node is at least as bad
            heap.push(node);
            break;
        }
        if nodes >= solver.node_limit {
            heap.push(node);
            proven = false;
            break;
        }
        if !node.fixings.is_empty() {
            search.heuristic(&node.sol.primal);
            if node.bound() >= search.cutoff() {
                heap.push(node);
                break;
            }
        }
        let Some(var) = search.branch_variable(&node) else {
            // all binaries integral within tolerance
            search.offer(node.sol);
            continue;
        };
        let mut down = node.fixings.clone();
        down.push((var, false));
        let mut up = node.fixings.clone();
        up.push((var, true));
        let (ed, eu) = if solver.parallel {
            let s = &search;
            rayon::join(|| s.evaluate(&down), || s.evaluate(&up))
        } else {
            (search.evaluate(&down), search.evaluate(&up))
        };
        nodes += 2;
        for (fixings, outcome) in [(down, ed), (up, eu)] {
            match outcome {
                Evaluated::Pruned => {}
                Evaluated::Integral(sol) => search.offer(sol),
                Evaluated::Open(sol) => {
                    if sol.objective_value < search.cutoff() {
                        heap.push(Node { fixings, sol, seq });
                        seq += 1;
                    }
                }
            }
        }
    }

    let open_bound = heap.iter().map(Node::bound).fold(f64::INFINITY, f64::min);
    match search.incumbent {
        Some(inc) => {
            let best_bound = open_bound.min(inc.sol.objective_value);
            Ok(BnbReport {
                incumbent: inc.sol,
                nodes_explored: nodes,
                best_bound,
                fixed_binaries: inc.assignment,
                proven_optimal: proven,
            })
        }
        None if !proven => Err(ConicError::NodeLimit(solver.node_limit)),
        None => Err(ConicError::Infeasible { tags: vec!["no integral assignment is feasible".into()] }),
    }
}

/// True when every binary of `program` in `x` is within `tol` of 0 or 1.
pub fn is_integral(program: &ConicProgram, x: &[f64], tol: f64) -> bool {
    program
        .variables()
        .iter()
        .zip(x)
        .filter(|(v, _)| v.kind == VarKind::Binary)
        .all(|(_, &xi)| xi.abs() <= tol || (xi - 1.0).abs() <= tol)
}
