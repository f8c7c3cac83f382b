//! Plain-text dump of a [`ConicProgram`].
//!
//! ```text
//! conic-program v1
//! var <name> <continuous|binary> <lower> <upper>
//! row <tag> <eq|le|ge> <rhs> <var>:<coef> ...
//! cone <tag> <soc|rsoc> <relaxed|strict> <dim>
//! member <constant> <var>:<coef> ...
//! objective <constant> <var>:<coef> ...
//! end
//! ```
//!
//! Variables are referenced by their position in declaration order. Numbers
//! use the shortest representation that parses back to the same `f64`, so the
//! dump round-trips losslessly.

use std::fmt::Write as _;

use crate::error::{ConicError, Result};
use crate::program::{AffineExpr, Cone, ConeKind, ConicProgram, LinearConstraint, Sense, VarId, VarKind, Variable};

const HEADER: &str = "conic-program v1";

fn num(x: f64) -> String {
    format!("{x:e}")
}

fn write_terms(out: &mut String, terms: &[(VarId, f64)]) {
    for (v, c) in terms {
        let _ = write!(out, " {}:{}", v.0, num(*c));
    }
}

pub fn dump(program: &ConicProgram) -> String {
    let mut out = String::new();
    out.push_str(HEADER);
    out.push('\n');
    for v in program.variables() {
        let kind = match v.kind {
            VarKind::Continuous => "continuous",
            VarKind::Binary => "binary",
        };
        let _ = writeln!(out, "var {} {} {} {}", v.name, kind, num(v.lower), num(v.upper));
    }
    for r in program.constraints() {
        let _ = write!(out, "row {} {} {}", r.tag, r.sense.symbol(), num(r.rhs));
        write_terms(&mut out, &r.terms);
        out.push('\n');
    }
    for c in program.cones() {
        let kind = match c.kind {
            ConeKind::SecondOrder => "soc",
            ConeKind::RotatedSecondOrder => "rsoc",
        };
        let relaxed = if c.relaxed { "relaxed" } else { "strict" };
        let _ = writeln!(out, "cone {} {} {} {}", c.tag, kind, relaxed, c.members.len());
        for m in &c.members {
            let _ = write!(out, "member {}", num(m.constant));
            write_terms(&mut out, &m.terms);
            out.push('\n');
        }
    }
    let obj = program.objective();
    let _ = write!(out, "objective {}", num(obj.constant));
    write_terms(&mut out, &obj.terms);
    out.push_str("\nend\n");
    out
}

struct Cursor<'a> {
    lines: std::iter::Peekable<std::iter::Enumerate<std::str::Lines<'a>>>,
}

fn perr(line: usize, msg: impl Into<String>) -> ConicError {
    ConicError::Parse { line: line + 1, msg: msg.into() }
}

fn parse_f64(tok: Option<&str>, line: usize) -> Result<f64> {
    let tok = tok.ok_or_else(|| perr(line, "missing number"))?;
    tok.parse::<f64>().map_err(|_| perr(line, format!("bad number `{tok}`")))
}

fn parse_terms<'a>(toks: impl Iterator<Item = &'a str>, line: usize) -> Result<Vec<(VarId, f64)>> {
    toks.map(|t| {
        let (v, c) = t.split_once(':').ok_or_else(|| perr(line, format!("bad term `{t}`")))?;
        let v: usize = v.parse().map_err(|_| perr(line, format!("bad variable index `{v}`")))?;
        Ok((VarId(v), parse_f64(Some(c), line)?))
    })
    .collect()
}

pub fn parse(text: &str) -> Result<ConicProgram> {
    let mut cur = Cursor { lines: text.lines().enumerate().peekable() };
    match cur.lines.next() {
        Some((_, h)) if h.trim() == HEADER => {}
        _ => return Err(perr(0, format!("expected header `{HEADER}`"))),
    }
    let mut variables = Vec::new();
    let mut rows = Vec::new();
    let mut cones = Vec::new();
    let mut objective = None;
    while let Some((ln, line)) = cur.lines.next() {
        let mut toks = line.split_whitespace();
        match toks.next() {
            None => continue,
            Some("var") => {
                let name = toks.next().ok_or_else(|| perr(ln, "missing name"))?.to_string();
                let kind = match toks.next() {
                    Some("continuous") => VarKind::Continuous,
                    Some("binary") => VarKind::Binary,
                    other => return Err(perr(ln, format!("bad kind {other:?}"))),
                };
                let lower = parse_f64(toks.next(), ln)?;
                let upper = parse_f64(toks.next(), ln)?;
                variables.push(Variable { name, kind, lower, upper });
            }
            Some("row") => {
                let tag = toks.next().ok_or_else(|| perr(ln, "missing tag"))?.to_string();
                let sense = match toks.next() {
                    Some("eq") => Sense::Eq,
                    Some("le") => Sense::Le,
                    Some("ge") => Sense::Ge,
                    other => return Err(perr(ln, format!("bad sense {other:?}"))),
                };
                let rhs = parse_f64(toks.next(), ln)?;
                let terms = parse_terms(toks, ln)?;
                rows.push(LinearConstraint { terms, sense, rhs, tag });
            }
            Some("cone") => {
                let tag = toks.next().ok_or_else(|| perr(ln, "missing tag"))?.to_string();
                let kind = match toks.next() {
                    Some("soc") => ConeKind::SecondOrder,
                    Some("rsoc") => ConeKind::RotatedSecondOrder,
                    other => return Err(perr(ln, format!("bad cone kind {other:?}"))),
                };
                let relaxed = match toks.next() {
                    Some("relaxed") => true,
                    Some("strict") => false,
                    other => return Err(perr(ln, format!("bad cone flag {other:?}"))),
                };
                let dim: usize = toks
                    .next()
                    .and_then(|t| t.parse().ok())
                    .ok_or_else(|| perr(ln, "bad cone dimension"))?;
                let mut members = Vec::with_capacity(dim);
                for _ in 0..dim {
                    let (mln, mline) = cur.lines.next().ok_or_else(|| perr(ln, "truncated cone"))?;
                    let mut mt = mline.split_whitespace();
                    if mt.next() != Some("member") {
                        return Err(perr(mln, "expected `member`"));
                    }
                    let constant = parse_f64(mt.next(), mln)?;
                    members.push(AffineExpr { terms: parse_terms(mt, mln)?, constant });
                }
                cones.push(Cone { kind, members, tag, relaxed });
            }
            Some("objective") => {
                let constant = parse_f64(toks.next(), ln)?;
                objective = Some(AffineExpr { terms: parse_terms(toks, ln)?, constant });
            }
            Some("end") => {
                let objective = objective.ok_or_else(|| perr(ln, "missing objective"))?;
                return ConicProgram::from_parts(variables, rows, cones, objective);
            }
            Some(other) => return Err(perr(ln, format!("unknown record `{other}`"))),
        }
    }
    Err(perr(0, "missing `end`"))
}
