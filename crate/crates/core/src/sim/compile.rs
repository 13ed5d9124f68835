// SPDX-License-Identifier: Apache-2.0

//! Expressions lowered to slot references with precomputed widths.

use crate::expr::{apply_binary, infer_width, mask, BinaryOp, Expr, UnaryOp, UNSIZED_WIDTH};

#[derive(Debug, Clone)]
pub(crate) enum Node {
    Slot(u32),
    Const(u64),
    Bit { slot: u32, index: u32 },
    Slice { slot: u32, lsb: u32, mask: u64 },
    Not { arg: Box<Node>, mask: u64 },
    LogicalNot(Box<Node>),
    Binary { op: BinaryOp, lhs: Box<Node>, rhs: Box<Node>, width: u32 },
    Ternary { cond: Box<Node>, then: Box<Node>, other: Box<Node>, mask: u64 },
    Past { arg: Box<Node>, depth: u32 },
}

/// What an identifier resolves to while compiling.
pub(crate) enum Binding {
    Slot { slot: u32, width: u32 },
    Const { value: u64, width: Option<u32> },
}

impl Node {
    /// Lowers `e`; `bind` returns `None` for unknown identifiers, which are
    /// reported back by name.
    pub(crate) fn compile(e: &Expr, bind: &impl Fn(&str) -> Option<Binding>) -> Result<Node, String> {
        let widths = |n: &str| {
            bind(n).map(|b| match b {
                Binding::Slot { width, .. } => Some(width),
                Binding::Const { width, .. } => width,
            })
        };
        let width_of = |e: &Expr| -> Result<u32, String> {
            infer_width(e, &widths, false)
                .map(|w| w.unwrap_or(UNSIZED_WIDTH))
                .map_err(|err| err.to_string())
        };
        let w = width_of(e)?;
        let slot_of = |name: &str| -> Result<Result<u32, u64>, String> {
            match bind(name) {
                Some(Binding::Slot { slot, .. }) => Ok(Ok(slot)),
                Some(Binding::Const { value, .. }) => Ok(Err(value)),
                None => Err(format!("unknown signal `{name}`")),
            }
        };
        Ok(match e {
            Expr::Ident(name) => match slot_of(name)? {
                Ok(slot) => Node::Slot(slot),
                Err(value) => Node::Const(value & mask(w)),
            },
            Expr::Const(c) => Node::Const(c.value & mask(w)),
            Expr::Bit { name, index } => match slot_of(name)? {
                Ok(slot) => Node::Bit { slot, index: *index },
                Err(value) => Node::Const((value >> index) & 1),
            },
            Expr::Slice { name, lsb, .. } => match slot_of(name)? {
                Ok(slot) => Node::Slice {
                    slot,
                    lsb: *lsb,
                    mask: mask(w),
                },
                Err(value) => Node::Const((value >> lsb) & mask(w)),
            },
            Expr::Unary { op, arg } => {
                let inner = Box::new(Node::compile(arg, bind)?);
                match op {
                    UnaryOp::Not => Node::Not {
                        arg: inner,
                        mask: mask(width_of(arg)?),
                    },
                    UnaryOp::LogicalNot => Node::LogicalNot(inner),
                }
            }
            Expr::Binary { op, lhs, rhs } => {
                let width = if op.is_predicate() {
                    width_of(lhs)?.max(width_of(rhs)?)
                } else {
                    w
                };
                Node::Binary {
                    op: *op,
                    lhs: Box::new(Node::compile(lhs, bind)?),
                    rhs: Box::new(Node::compile(rhs, bind)?),
                    width,
                }
            }
            Expr::Ternary { cond, then, other } => Node::Ternary {
                cond: Box::new(Node::compile(cond, bind)?),
                then: Box::new(Node::compile(then, bind)?),
                other: Box::new(Node::compile(other, bind)?),
                mask: mask(w),
            },
            Expr::Past { arg, depth } => Node::Past {
                arg: Box::new(Node::compile(arg, bind)?),
                depth: *depth,
            },
        })
    }

    /// Evaluates with `read(slot, back)` returning the slot value `back`
    /// cycles earlier.
    #[inline]
    pub(crate) fn eval<F: Fn(u32, u32) -> u64>(&self, read: &F, back: u32) -> u64 {
        match self {
            Node::Slot(s) => read(*s, back),
            Node::Const(v) => *v,
            Node::Bit { slot, index } => (read(*slot, back) >> index) & 1,
            Node::Slice { slot, lsb, mask } => (read(*slot, back) >> lsb) & mask,
            Node::Not { arg, mask } => !arg.eval(read, back) & mask,
            Node::LogicalNot(arg) => (arg.eval(read, back) == 0) as u64,
            Node::Binary { op, lhs, rhs, width } => {
                let m = mask(*width);
                match op {
                    BinaryOp::LogicalAnd => {
                        (lhs.eval(read, back) != 0 && rhs.eval(read, back) != 0) as u64
                    }
                    BinaryOp::LogicalOr => {
                        (lhs.eval(read, back) != 0 || rhs.eval(read, back) != 0) as u64
                    }
                    _ => apply_binary(*op, lhs.eval(read, back) & m, rhs.eval(read, back) & m, *width),
                }
            }
            Node::Ternary { cond, then, other, mask } => {
                let v = if cond.eval(read, back) != 0 {
                    then.eval(read, back)
                } else {
                    other.eval(read, back)
                };
                v & mask
            }
            Node::Past { arg, depth } => arg.eval(read, back + depth),
        }
    }
}
