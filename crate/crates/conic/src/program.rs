//! Solver-agnostic model of a mixed-integer second-order-cone program.
//!
//! A [`ConicProgram`] holds variables with box bounds, tagged linear rows,
//! second-order and rotated second-order cones over affine expressions, and a
//! linear objective that is always minimized. Tags on rows are unique so the
//! dual of any row can be looked up by name after a solve.

use std::collections::HashMap;
use std::fmt;

use crate::error::{ConicError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RowId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ConeId(pub usize);

impl fmt::Display for VarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VarKind {
    Continuous,
    Binary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub name: String,
    pub kind: VarKind,
    pub lower: f64,
    pub upper: f64,
}

impl Variable {
    pub fn is_fixed(&self) -> bool {
        self.lower == self.upper
    }
}

/// `constant + Σ coef·x`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AffineExpr {
    pub terms: Vec<(VarId, f64)>,
    pub constant: f64,
}

impl AffineExpr {
    pub fn var(v: VarId) -> Self {
        Self::scaled(v, 1.0)
    }

    pub fn scaled(v: VarId, coef: f64) -> Self {
        AffineExpr { terms: vec![(v, coef)], constant: 0.0 }
    }

    pub fn constant(c: f64) -> Self {
        AffineExpr { terms: Vec::new(), constant: c }
    }

    pub fn with_terms(terms: impl IntoIterator<Item = (VarId, f64)>, constant: f64) -> Self {
        AffineExpr { terms: terms.into_iter().collect(), constant }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.constant + self.terms.iter().map(|&(v, c)| c * x[v.0]).sum::<f64>()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sense {
    Eq,
    Le,
    Ge,
}

impl Sense {
    pub fn symbol(self) -> &'static str {
        match self {
            Sense::Eq => "eq",
            Sense::Le => "le",
            Sense::Ge => "ge",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearConstraint {
    pub terms: Vec<(VarId, f64)>,
    pub sense: Sense,
    pub rhs: f64,
    pub tag: String,
}

impl LinearConstraint {
    pub fn activity(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|&(v, c)| c * x[v.0]).sum()
    }

    /// Amount by which `x` violates the row (zero when satisfied).
    pub fn violation(&self, x: &[f64]) -> f64 {
        let a = self.activity(x);
        match self.sense {
            Sense::Eq => (a - self.rhs).abs(),
            Sense::Le => (a - self.rhs).max(0.0),
            Sense::Ge => (self.rhs - a).max(0.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ConeKind {
    /// `(t; x1..xk)` with `t ≥ ‖x‖₂`.
    SecondOrder,
    /// `(u, v; x1..xk)` with `2uv ≥ ‖x‖²`, `u, v ≥ 0`.
    RotatedSecondOrder,
}

impl ConeKind {
    pub fn min_dim(self) -> usize {
        match self {
            ConeKind::SecondOrder => 2,
            ConeKind::RotatedSecondOrder => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cone {
    pub kind: ConeKind,
    pub members: Vec<AffineExpr>,
    pub tag: String,
    /// Marks cones that relax an equality (e.g. `P² + Q² = v·ℓ`) rather than
    /// model a genuine inequality; only these are inspected for exactness.
    pub relaxed: bool,
}

impl Cone {
    /// `t² − ‖x‖²` for a second-order cone, `2uv − ‖x‖²` for a rotated one.
    pub fn slack(&self, x: &[f64]) -> f64 {
        let vals: Vec<f64> = self.members.iter().map(|m| m.eval(x)).collect();
        match self.kind {
            ConeKind::SecondOrder => {
                vals[0] * vals[0] - vals[1..].iter().map(|v| v * v).sum::<f64>()
            }
            ConeKind::RotatedSecondOrder => {
                2.0 * vals[0] * vals[1] - vals[2..].iter().map(|v| v * v).sum::<f64>()
            }
        }
    }

    /// Distance-style violation: how far the head falls short of the tail norm.
    pub fn violation(&self, x: &[f64]) -> f64 {
        let vals: Vec<f64> = self.members.iter().map(|m| m.eval(x)).collect();
        match self.kind {
            ConeKind::SecondOrder => {
                let norm = vals[1..].iter().map(|v| v * v).sum::<f64>().sqrt();
                (norm - vals[0]).max(0.0)
            }
            ConeKind::RotatedSecondOrder => {
                let (u, v) = (vals[0], vals[1]);
                let head = (u + v) / std::f64::consts::SQRT_2;
                let d = (u - v) / std::f64::consts::SQRT_2;
                let norm = (d * d + vals[2..].iter().map(|v| v * v).sum::<f64>()).sqrt();
                (norm - head).max(0.0).max(-u).max(-v)
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConicProgram {
    variables: Vec<Variable>,
    names: HashMap<String, VarId>,
    rows: Vec<LinearConstraint>,
    row_tags: HashMap<String, RowId>,
    cones: Vec<Cone>,
    cone_tags: HashMap<String, ConeId>,
    objective: AffineExpr,
}

fn check_label(label: &str) -> Result<()> {
    if label.is_empty() || label.chars().any(char::is_whitespace) {
        return Err(ConicError::InvalidLabel(label.to_string()));
    }
    Ok(())
}

fn merge_terms(terms: impl IntoIterator<Item = (VarId, f64)>) -> Vec<(VarId, f64)> {
    let mut out: Vec<(VarId, f64)> = Vec::new();
    for (v, c) in terms {
        match out.iter_mut().find(|(w, _)| *w == v) {
            Some(slot) => slot.1 += c,
            None => out.push((v, c)),
        }
    }
    out.retain(|&(_, c)| c != 0.0);
    out
}

impl ConicProgram {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_variable(
        &mut self,
        name: impl Into<String>,
        kind: VarKind,
        lower: f64,
        upper: f64,
    ) -> Result<VarId> {
        let name = name.into();
        check_label(&name)?;
        if self.names.contains_key(&name) {
            return Err(ConicError::DuplicateName(name));
        }
        if lower.is_nan() || upper.is_nan() {
            return Err(ConicError::NonFinite(name));
        }
        if lower > upper {
            return Err(ConicError::InvertedBounds { name, lower, upper });
        }
        if kind == VarKind::Binary && (lower < 0.0 || upper > 1.0) {
            return Err(ConicError::BinaryBounds { name, lower, upper });
        }
        let id = VarId(self.variables.len());
        self.names.insert(name.clone(), id);
        self.variables.push(Variable { name, kind, lower, upper });
        Ok(id)
    }

    pub fn add_continuous(&mut self, name: impl Into<String>, lower: f64, upper: f64) -> Result<VarId> {
        self.add_variable(name, VarKind::Continuous, lower, upper)
    }

    pub fn add_free(&mut self, name: impl Into<String>) -> Result<VarId> {
        self.add_variable(name, VarKind::Continuous, f64::NEG_INFINITY, f64::INFINITY)
    }

    pub fn add_binary(&mut self, name: impl Into<String>) -> Result<VarId> {
        self.add_variable(name, VarKind::Binary, 0.0, 1.0)
    }

    fn check_vars(&self, terms: &[(VarId, f64)], label: &str) -> Result<()> {
        for &(v, c) in terms {
            if v.0 >= self.variables.len() {
                return Err(ConicError::UnknownVariable(v.0));
            }
            if !c.is_finite() {
                return Err(ConicError::NonFinite(label.to_string()));
            }
        }
        Ok(())
    }

    /// Adds `Σ coef·x (sense) rhs`. Repeated variables are merged.
    pub fn add_constraint(
        &mut self,
        tag: impl Into<String>,
        terms: impl IntoIterator<Item = (VarId, f64)>,
        sense: Sense,
        rhs: f64,
    ) -> Result<RowId> {
        let tag = tag.into();
        check_label(&tag)?;
        if self.row_tags.contains_key(&tag) {
            return Err(ConicError::DuplicateTag(tag));
        }
        let terms = merge_terms(terms);
        self.check_vars(&terms, &tag)?;
        if !rhs.is_finite() {
            return Err(ConicError::NonFinite(tag));
        }
        if terms.is_empty() {
            return Err(ConicError::EmptyConstraint(tag));
        }
        let id = RowId(self.rows.len());
        self.row_tags.insert(tag.clone(), id);
        self.rows.push(LinearConstraint { terms, sense, rhs, tag });
        Ok(id)
    }

    pub fn add_cone(
        &mut self,
        tag: impl Into<String>,
        kind: ConeKind,
        members: Vec<AffineExpr>,
        relaxed: bool,
    ) -> Result<ConeId> {
        let tag = tag.into();
        check_label(&tag)?;
        if self.cone_tags.contains_key(&tag) {
            return Err(ConicError::DuplicateTag(tag));
        }
        if members.len() < kind.min_dim() {
            return Err(ConicError::ConeDimension { tag, dim: members.len(), min: kind.min_dim() });
        }
        let members: Vec<AffineExpr> = members
            .into_iter()
            .map(|m| AffineExpr { terms: merge_terms(m.terms), constant: m.constant })
            .collect();
        for m in &members {
            self.check_vars(&m.terms, &tag)?;
            if !m.constant.is_finite() {
                return Err(ConicError::NonFinite(tag));
            }
        }
        let id = ConeId(self.cones.len());
        self.cone_tags.insert(tag.clone(), id);
        self.cones.push(Cone { kind, members, tag, relaxed });
        Ok(id)
    }

    /// Adds `coef·v` to the objective.
    pub fn add_objective_term(&mut self, v: VarId, coef: f64) {
        assert!(v.0 < self.variables.len(), "objective term on undeclared variable {v}");
        if let Some(slot) = self.objective.terms.iter_mut().find(|(w, _)| *w == v) {
            slot.1 += coef;
        } else {
            self.objective.terms.push((v, coef));
        }
    }

    pub fn add_objective_constant(&mut self, c: f64) {
        self.objective.constant += c;
    }

    pub fn set_bounds(&mut self, v: VarId, lower: f64, upper: f64) -> Result<()> {
        let var = self.variables.get_mut(v.0).ok_or(ConicError::UnknownVariable(v.0))?;
        if lower > upper {
            return Err(ConicError::InvertedBounds { name: var.name.clone(), lower, upper });
        }
        var.lower = lower;
        var.upper = upper;
        Ok(())
    }

    pub fn fix(&mut self, v: VarId, value: f64) -> Result<()> {
        self.set_bounds(v, value, value)
    }

    pub fn set_rhs(&mut self, row: RowId, rhs: f64) {
        self.rows[row.0].rhs = rhs;
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn variable(&self, v: VarId) -> &Variable {
        &self.variables[v.0]
    }

    pub fn constraints(&self) -> &[LinearConstraint] {
        &self.rows
    }

    pub fn constraint(&self, r: RowId) -> &LinearConstraint {
        &self.rows[r.0]
    }

    pub fn cones(&self) -> &[Cone] {
        &self.cones
    }

    pub fn objective(&self) -> &AffineExpr {
        &self.objective
    }

    pub fn var_by_name(&self, name: &str) -> Option<VarId> {
        self.names.get(name).copied()
    }

    pub fn row_by_tag(&self, tag: &str) -> Option<RowId> {
        self.row_tags.get(tag).copied()
    }

    pub fn cone_by_tag(&self, tag: &str) -> Option<ConeId> {
        self.cone_tags.get(tag).copied()
    }

    pub fn num_variables(&self) -> usize {
        self.variables.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.rows.len()
    }

    pub fn binaries(&self) -> Vec<VarId> {
        self.variables
            .iter()
            .enumerate()
            .filter(|(_, v)| v.kind == VarKind::Binary)
            .map(|(i, _)| VarId(i))
            .collect()
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.eval(x)
    }

    /// Largest violation over bounds, rows and cones at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let bounds = self
            .variables
            .iter()
            .zip(x)
            .map(|(v, &xi)| (v.lower - xi).max(xi - v.upper).max(0.0));
        let rows = self.rows.iter().map(|r| r.violation(x));
        let cones = self.cones.iter().map(|c| c.violation(x));
        bounds.chain(rows).chain(cones).fold(0.0, f64::max)
    }

    /// Copy of the program with every listed binary fixed to 0 or 1.
    pub fn with_fixed_binaries(&self, assignment: &[(VarId, bool)]) -> Result<ConicProgram> {
        let mut p = self.clone();
        for &(v, on) in assignment {
            let var = self.variables.get(v.0).ok_or(ConicError::UnknownVariable(v.0))?;
            if var.kind != VarKind::Binary {
                return Err(ConicError::NotBinary(var.name.clone()));
            }
            let val = if on { 1.0 } else { 0.0 };
            p.fix(v, val)?;
        }
        Ok(p)
    }

    pub(crate) fn from_parts(
        variables: Vec<Variable>,
        rows: Vec<LinearConstraint>,
        cones: Vec<Cone>,
        objective: AffineExpr,
    ) -> Result<Self> {
        let mut p = ConicProgram::new();
        for v in variables {
            p.add_variable(v.name, v.kind, v.lower, v.upper)?;
        }
        for r in rows {
            p.add_constraint(r.tag, r.terms, r.sense, r.rhs)?;
        }
        for c in cones {
            p.add_cone(c.tag, c.kind, c.members, c.relaxed)?;
        }
        for (v, c) in objective.terms {
            if v.0 >= p.variables.len() {
                return Err(ConicError::UnknownVariable(v.0));
            }
            p.add_objective_term(v, c);
        }
        p.add_objective_constant(objective.constant);
        Ok(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn add_variable_returns_fresh_refs() {
        let mut p = ConicProgram::new();
        let a = p.add_continuous("pdg:c1:t5", 0.0, 0.5).unwrap();
        let b = p.add_binary("xch:e1:t5").unwrap();
        assert_ne!(a, b);
        assert_eq!(p.variable(b).kind, VarKind::Binary);
        assert_eq!(p.var_by_name("pdg:c1:t5"), Some(a));
    }

    #[test]
    fn inverted_bounds_rejected() {
        let mut p = ConicProgram::new();
        let err = p.add_continuous("y", 3.0, 1.0).unwrap_err();
        assert!(matches!(err, ConicError::InvertedBounds { .. }));
    }

    #[test]
    fn duplicate_names_and_tags_rejected() {
        let mut p = ConicProgram::new();
        let x = p.add_free("x").unwrap();
        assert!(matches!(p.add_free("x"), Err(ConicError::DuplicateName(_))));
        p.add_constraint("r", [(x, 1.0)], Sense::Le, 1.0).unwrap();
        assert!(matches!(
            p.add_constraint("r", [(x, 1.0)], Sense::Le, 1.0),
            Err(ConicError::DuplicateTag(_))
        ));
        assert!(matches!(p.add_free("has space"), Err(ConicError::InvalidLabel(_))));
    }

    #[test]
    fn zero_rows_and_small_cones_rejected() {
        let mut p = ConicProgram::new();
        let x = p.add_free("x").unwrap();
        assert!(matches!(
            p.add_constraint("z", [(x, 1.0), (x, -1.0)], Sense::Eq, 0.0),
            Err(ConicError::EmptyConstraint(_))
        ));
        assert!(matches!(
            p.add_cone("c", ConeKind::RotatedSecondOrder, vec![AffineExpr::var(x); 2], false),
            Err(ConicError::ConeDimension { .. })
        ));
        assert!(matches!(
            p.add_constraint("u", [(VarId(7), 1.0)], Sense::Eq, 0.0),
            Err(ConicError::UnknownVariable(7))
        ));
    }

    #[test]
    fn interior_cone_slack_is_t2_minus_norm2() {
        let cone = Cone {
            kind: ConeKind::SecondOrder,
            members: vec![AffineExpr::constant(6.0), AffineExpr::constant(3.0), AffineExpr::constant(4.0)],
            tag: "c".into(),
            relaxed: true,
        };
        assert_eq!(cone.slack(&[]), 36.0 - 25.0);
        assert_eq!(cone.violation(&[]), 0.0);
    }
}
