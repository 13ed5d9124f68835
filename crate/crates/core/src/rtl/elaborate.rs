// SPDX-License-Identifier: Apache-2.0

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::expr::{eval, infer_width, BinaryOp, Const, Expr, UnaryOp, WidthError};

use super::parser::{Edge, Loc, ModuleAst, Range, Stmt};
use super::{Assign, Direction, Net, NetKind, Netlist, Port, Register, Reset};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ElaborationErrorKind {
    #[error("undeclared identifier `{0}`")]
    Undeclared(String),
    #[error("`{0}` is declared more than once")]
    Redeclared(String),
    #[error("{0}")]
    Width(String),
    #[error("net `{0}` has more than one driver")]
    MultipleDrivers(String),
    #[error("`{name}` cannot be driven: {reason}")]
    IllegalTarget { name: String, reason: String },
    #[error("invalid range: {0}")]
    BadRange(String),
    #[error("`{0}` is not a constant expression")]
    NotConstant(String),
    #[error("unsupported reset structure: {0}")]
    UnsupportedReset(String),
    #[error("registers use more than one clock ({first} and {second})")]
    MultipleClocks { first: String, second: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{column}: {kind}")]
pub struct ElaborationError {
    pub kind: ElaborationErrorKind,
    pub line: usize,
    pub column: usize,
}

fn err(kind: ElaborationErrorKind, loc: Loc) -> ElaborationError {
    ElaborationError {
        kind,
        line: loc.line,
        column: loc.column,
    }
}

fn width_err(e: WidthError, loc: Loc) -> ElaborationError {
    match e {
        WidthError::Unknown(name) => err(ElaborationErrorKind::Undeclared(name), loc),
        other => err(ElaborationErrorKind::Width(other.to_string()), loc),
    }
}

struct Scope {
    params: BTreeMap<String, Const>,
    nets: BTreeMap<String, Net>,
}

impl Scope {
    fn lookup_width(&self, name: &str) -> Option<Option<u32>> {
        self.nets
            .get(name)
            .map(|n| Some(n.width))
            .or_else(|| self.params.get(name).map(|c| c.width))
    }

    fn declared(&self, name: &str) -> bool {
        self.nets.contains_key(name) || self.params.contains_key(name)
    }

    fn const_eval(&self, e: &Expr, loc: Loc) -> Result<Const, ElaborationError> {
        let mut missing = None;
        e.visit_identifiers(&mut |id| {
            if !self.params.contains_key(id) && missing.is_none() {
                missing = Some(id.to_string());
            }
        });
        if let Some(id) = missing {
            return Err(if self.nets.contains_key(&id) {
                err(ElaborationErrorKind::NotConstant(e.to_string()), loc)
            } else {
                err(ElaborationErrorKind::Undeclared(id), loc)
            });
        }
        let width = infer_width(e, &|n| self.params.get(n).map(|c| c.width), false)
            .map_err(|w| width_err(w, loc))?;
        let lookup = |n: &str| self.params.get(n).map(|c| (c.value, c.width));
        let (value, _) = eval(e, &lookup)
            .ok_or_else(|| err(ElaborationErrorKind::NotConstant(e.to_string()), loc))?;
        Ok(Const { value, width })
    }

    fn range_width(&self, range: &Option<Range>, loc: Loc) -> Result<u32, ElaborationError> {
        let Some((msb, lsb)) = range else {
            return Ok(1);
        };
        let msb = self.const_eval(msb, loc)?.value;
        let lsb = self.const_eval(lsb, loc)?.value;
        if lsb != 0 {
            return Err(err(
                ElaborationErrorKind::BadRange("ranges must be written [msb:0]".into()),
                loc,
            ));
        }
        if msb >= 64 {
            return Err(err(
                ElaborationErrorKind::BadRange(format!("width {} exceeds 64 bits", msb + 1)),
                loc,
            ));
        }
        Ok(msb as u32 + 1)
    }

    fn check_expr(&self, e: &Expr, loc: Loc) -> Result<Option<u32>, ElaborationError> {
        let mut missing = None;
        e.visit_identifiers(&mut |id| {
            if !self.declared(id) && missing.is_none() {
                missing = Some(id.to_string());
            }
        });
        if let Some(id) = missing {
            return Err(err(ElaborationErrorKind::Undeclared(id), loc));
        }
        infer_width(e, &|n| self.lookup_width(n), true).map_err(|w| width_err(w, loc))
    }

    fn declare(&mut self, net: Net, loc: Loc) -> Result<(), ElaborationError> {
        if self.declared(&net.name) {
            return Err(err(ElaborationErrorKind::Redeclared(net.name), loc));
        }
        self.nets.insert(net.name.clone(), net);
        Ok(())
    }

    fn check_target(&self, name: &str, loc: Loc) -> Result<u32, ElaborationError> {
        if self.params.contains_key(name) {
            return Err(err(
                ElaborationErrorKind::IllegalTarget {
                    name: name.into(),
                    reason: "it is a parameter".into(),
                },
                loc,
            ));
        }
        match self.nets.get(name) {
            None => Err(err(ElaborationErrorKind::Undeclared(name.into()), loc)),
            Some(n) if n.kind == NetKind::Input => Err(err(
                ElaborationErrorKind::IllegalTarget {
                    name: name.into(),
                    reason: "it is an input port".into(),
                },
                loc,
            )),
            Some(n) => Ok(n.width),
        }
    }
}

pub(super) fn elaborate(ast: &ModuleAst) -> Result<Netlist, ElaborationError> {
    let mut scope = Scope {
        params: BTreeMap::new(),
        nets: BTreeMap::new(),
    };

    for p in &ast.params {
        if scope.declared(&p.name) {
            return Err(err(ElaborationErrorKind::Redeclared(p.name.clone()), p.loc));
        }
        let value = scope.const_eval(&p.value, p.loc)?;
        let width = if p.range.is_some() {
            Some(scope.range_width(&p.range, p.loc)?)
        } else if p.int_typed {
            Some(32)
        } else {
            value.width
        };
        let c = match width {
            Some(w) => Const::sized(value.value, w),
            None => Const::untyped(value.value),
        };
        scope.params.insert(p.name.clone(), c);
    }

    let mut ports = Vec::new();
    for p in &ast.ports {
        let width = scope.range_width(&p.range, p.loc)?;
        let kind = match p.direction {
            Direction::Input => NetKind::Input,
            Direction::Output => NetKind::Output,
        };
        scope.declare(
            Net {
                name: p.name.clone(),
                width,
                kind,
            },
            p.loc,
        )?;
        ports.push(Port {
            name: p.name.clone(),
            direction: p.direction,
            width,
        });
    }

    for n in &ast.nets {
        let width = scope.range_width(&n.range, n.loc)?;
        scope.declare(
            Net {
                name: n.name.clone(),
                width,
                kind: NetKind::Internal,
            },
            n.loc,
        )?;
    }

    let mut driven: BTreeSet<String> = BTreeSet::new();
    let mut assigns = Vec::new();
    for a in &ast.assigns {
        let lhs_width = scope.check_target(&a.lhs, a.loc)?;
        if !driven.insert(a.lhs.clone()) {
            return Err(err(ElaborationErrorKind::MultipleDrivers(a.lhs.clone()), a.loc));
        }
        check_assign_width(&scope, &a.lhs, lhs_width, &a.rhs, a.loc)?;
        assigns.push(Assign {
            lhs: a.lhs.clone(),
            rhs: a.rhs.clone(),
        });
    }

    let mut registers: Vec<Register> = Vec::new();
    for blk in &ast.always {
        if blk.clock_edge != Edge::Pos {
            return Err(err(
                ElaborationErrorKind::UnsupportedReset("clocks must use posedge".into()),
                blk.loc,
            ));
        }
        match scope.nets.get(&blk.clock) {
            None => return Err(err(ElaborationErrorKind::Undeclared(blk.clock.clone()), blk.loc)),
            Some(n) if n.width != 1 => {
                return Err(err(
                    ElaborationErrorKind::Width(format!("clock `{}` must be 1 bit", n.name)),
                    blk.loc,
                ))
            }
            _ => {}
        }
        if let Some(first) = registers.first() {
            if first.clock != blk.clock {
                return Err(err(
                    ElaborationErrorKind::MultipleClocks {
                        first: first.clock.clone(),
                        second: blk.clock.clone(),
                    },
                    blk.loc,
                ));
            }
        }

        let (reset_values, body) = match &blk.reset {
            None => (Vec::new(), Some(&blk.body)),
            Some((edge, rst)) => {
                match scope.nets.get(rst) {
                    None => return Err(err(ElaborationErrorKind::Undeclared(rst.clone()), blk.loc)),
                    Some(n) if n.width != 1 => {
                        return Err(err(
                            ElaborationErrorKind::Width(format!("reset `{rst}` must be 1 bit")),
                            blk.loc,
                        ))
                    }
                    _ => {}
                }
                split_reset(&scope, *edge, rst, &blk.body, blk.loc)?
            }
        };

        let mut order: Vec<String> = Vec::new();
        for (target, _, loc) in &reset_values {
            note_target(&mut order, target, *loc);
        }
        let mut folded: BTreeMap<String, Expr> = BTreeMap::new();
        if let Some(body) = body {
            collect_targets(body, &mut order);
            folded = fold(body, folded);
        }

        for target in order {
            let loc = find_loc(&blk.body, &target).unwrap_or(blk.loc);
            let width = scope.check_target(&target, loc)?;
            if !driven.insert(target.clone()) {
                return Err(err(ElaborationErrorKind::MultipleDrivers(target), loc));
            }
            let next = folded
                .get(&target)
                .cloned()
                .unwrap_or_else(|| Expr::Ident(target.clone()));
            check_assign_width(&scope, &target, width, &next, loc)?;
            let reset = match (&blk.reset, reset_values.iter().find(|(t, _, _)| *t == target)) {
                (Some((edge, rst)), Some((_, value, vloc))) => {
                    let c = scope.const_eval(value, *vloc)?;
                    if let Some(w) = c.width {
                        if w != width {
                            return Err(err(
                                ElaborationErrorKind::Width(format!(
                                    "reset value for `{target}` is {w} bits, target is {width}"
                                )),
                                *vloc,
                            ));
                        }
                    }
                    Some(Reset {
                        net: rst.clone(),
                        active_high: *edge == Edge::Pos,
                        value: c.value & crate::expr::mask(width),
                    })
                }
                _ => None,
            };
            registers.push(Register {
                target,
                next,
                clock: blk.clock.clone(),
                reset,
            });
        }
    }

    let mut nets = scope.nets;
    for r in &registers {
        if let Some(n) = nets.get_mut(&r.target) {
            if n.kind == NetKind::Internal {
                n.kind = NetKind::Register;
            }
        }
    }
    let params = scope.params;
    for a in &assigns {
        let constant = {
            let mut only_params = true;
            a.rhs.visit_identifiers(&mut |id| only_params &= params.contains_key(id));
            only_params
        };
        if constant {
            if let Some(n) = nets.get_mut(&a.lhs) {
                if n.kind == NetKind::Internal {
                    n.kind = NetKind::Constant;
                }
            }
        }
    }

    Ok(Netlist {
        name: ast.name.clone(),
        ports,
        nets,
        assigns,
        registers,
        params,
    })
}

fn check_assign_width(
    scope: &Scope,
    lhs: &str,
    lhs_width: u32,
    rhs: &Expr,
    loc: Loc,
) -> Result<(), ElaborationError> {
    if let Some(w) = scope.check_expr(rhs, loc)? {
        if w != lhs_width {
            return Err(err(
                ElaborationErrorKind::Width(format!(
                    "`{lhs}` is {lhs_width} bits but its driver is {w} bits"
                )),
                loc,
            ));
        }
    }
    Ok(())
}

fn note_target(order: &mut Vec<String>, target: &str, _loc: Loc) {
    if !order.iter().any(|t| t == target) {
        order.push(target.to_string());
    }
}

fn collect_targets(stmt: &Stmt, order: &mut Vec<String>) {
    match stmt {
        Stmt::Block(body) => body.iter().for_each(|s| collect_targets(s, order)),
        Stmt::If { then, other, .. } => {
            collect_targets(then, order);
            if let Some(o) = other {
                collect_targets(o, order);
            }
        }
        Stmt::NonBlocking { target, loc, .. } => note_target(order, target, *loc),
    }
}

fn find_loc(stmt: &Stmt, target: &str) -> Option<Loc> {
    match stmt {
        Stmt::Block(body) => body.iter().find_map(|s| find_loc(s, target)),
        Stmt::If { then, other, .. } => {
            find_loc(then, target).or_else(|| other.as_ref().and_then(|o| find_loc(o, target)))
        }
        Stmt::NonBlocking { target: t, loc, .. } => (t == target).then_some(*loc),
    }
}

/// Folds nonblocking assignments under `if`/`else` into per-target
/// next-state expressions. Unassigned paths hold the current value.
fn fold(stmt: &Stmt, mut env: BTreeMap<String, Expr>) -> BTreeMap<String, Expr> {
    match stmt {
        Stmt::Block(body) => {
            for s in body {
                env = fold(s, env);
            }
            env
        }
        Stmt::NonBlocking { target, value, .. } => {
            env.insert(target.clone(), value.clone());
            env
        }
        Stmt::If {
            cond, then, other, ..
        } => {
            let a = fold(then, env.clone());
            let b = match other {
                Some(o) => fold(o, env.clone()),
                None => env.clone(),
            };
            let keys: BTreeSet<&String> = a.keys().chain(b.keys()).collect();
            let mut out = BTreeMap::new();
            for k in keys {
                let hold = Expr::Ident(k.clone());
                let x = a.get(k).cloned().unwrap_or_else(|| hold.clone());
                let y = b.get(k).cloned().unwrap_or(hold);
                let merged = if x == y {
                    x
                } else {
                    Expr::ternary(cond.clone(), x, y)
                };
                out.insert(k.clone(), merged);
            }
            out
        }
    }
}

type ResetSplit<'a> = (Vec<(String, Expr, Loc)>, Option<&'a Stmt>);

/// Splits `if (<reset active>) <reset assigns> else <body>`.
fn split_reset<'a>(
    scope: &Scope,
    edge: Edge,
    rst: &str,
    body: &'a Stmt,
    loc: Loc,
) -> Result<ResetSplit<'a>, ElaborationError> {
    let mut stmt = body;
    while let Stmt::Block(items) = stmt {
        if items.len() != 1 {
            return Err(err(
                ElaborationErrorKind::UnsupportedReset(
                    "an asynchronous-reset block must contain a single `if` on the reset".into(),
                ),
                loc,
            ));
        }
        stmt = &items[0];
    }
    let Stmt::If {
        cond,
        then,
        other,
        loc: if_loc,
    } = stmt
    else {
        return Err(err(
            ElaborationErrorKind::UnsupportedReset("expected `if` testing the reset".into()),
            loc,
        ));
    };
    let tests_reset = match edge {
        Edge::Neg => match cond {
            Expr::Unary {
                op: UnaryOp::LogicalNot | UnaryOp::Not,
                arg,
            } => matches!(arg.as_ref(), Expr::Ident(n) if n == rst),
            Expr::Binary {
                op: BinaryOp::Eq,
                lhs,
                rhs,
            } => matches!(lhs.as_ref(), Expr::Ident(n) if n == rst) && matches!(rhs.as_ref(), Expr::Const(c) if c.value == 0),
            _ => false,
        },
        Edge::Pos => match cond {
            Expr::Ident(n) => n == rst,
            Expr::Binary {
                op: BinaryOp::Eq,
                lhs,
                rhs,
            } => matches!(lhs.as_ref(), Expr::Ident(n) if n == rst) && matches!(rhs.as_ref(), Expr::Const(c) if c.value == 1),
            _ => false,
        },
    };
    if !tests_reset {
        return Err(err(
            ElaborationErrorKind::UnsupportedReset(format!(
                "condition `{cond}` does not test reset `{rst}` at its active level"
            )),
            *if_loc,
        ));
    }
    let mut values = Vec::new();
    collect_reset_values(scope, then, &mut values)?;
    Ok((values, other.as_deref()))
}

fn collect_reset_values(
    scope: &Scope,
    stmt: &Stmt,
    out: &mut Vec<(String, Expr, Loc)>,
) -> Result<(), ElaborationError> {
    match stmt {
        Stmt::Block(items) => {
            for s in items {
                collect_reset_values(scope, s, out)?;
            }
            Ok(())
        }
        Stmt::If { loc, .. } => Err(err(
            ElaborationErrorKind::UnsupportedReset("conditional logic inside the reset branch".into()),
            *loc,
        )),
        Stmt::NonBlocking { target, value, loc } => {
            scope.const_eval(value, *loc)?;
            out.retain(|(t, _, _)| t != target);
            out.push((target.clone(), value.clone(), *loc));
            Ok(())
        }
    }
}
