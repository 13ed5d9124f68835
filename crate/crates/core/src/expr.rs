// SPDX-License-Identifier: Apache-2.0

//! Boolean/bit-vector expression tree shared by RTL assigns and SVA terms.
//!
//! Values are two-state and at most 64 bits wide. Arithmetic is fixed-width
//! and wraps. Unsized literals and untyped parameters carry no width and adapt
//! to the other operand; where no width can be inferred they act as 32 bits.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lexer::{Cursor, SyntaxError, TokenKind};

/// Width assumed for unsized literals when nothing else fixes it.
pub const UNSIZED_WIDTH: u32 = 32;

pub fn mask(width: u32) -> u64 {
    if width >= 64 {
        u64::MAX
    } else {
        (1u64 << width) - 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Const {
    pub value: u64,
    pub width: Option<u32>,
}

impl Const {
    pub fn sized(value: u64, width: u32) -> Self {
        Const {
            value: value & mask(width),
            width: Some(width),
        }
    }

    pub fn untyped(value: u64) -> Self {
        Const { value, width: None }
    }
}

impl fmt::Display for Const {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.width {
            Some(w) => write!(f, "{w}'h{:x}", self.value),
            None => write!(f, "{}", self.value),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum UnaryOp {
    /// `~` bitwise complement
    Not,
    /// `!` logical negation
    LogicalNot,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BinaryOp {
    And,
    Or,
    Xor,
    Add,
    Sub,
    Eq,
    Ne,
    LogicalAnd,
    LogicalOr,
}

impl BinaryOp {
    fn symbol(self) -> &'static str {
        match self {
            BinaryOp::And => "&",
            BinaryOp::Or => "|",
            BinaryOp::Xor => "^",
            BinaryOp::Add => "+",
            BinaryOp::Sub => "-",
            BinaryOp::Eq => "==",
            BinaryOp::Ne => "!=",
            BinaryOp::LogicalAnd => "&&",
            BinaryOp::LogicalOr => "||",
        }
    }

    fn precedence(self) -> u8 {
        match self {
            BinaryOp::LogicalOr => 2,
            BinaryOp::LogicalAnd => 3,
            BinaryOp::Or => 4,
            BinaryOp::Xor => 5,
            BinaryOp::And => 6,
            BinaryOp::Eq | BinaryOp::Ne => 7,
            BinaryOp::Add | BinaryOp::Sub => 8,
        }
    }

    fn from_token(kind: &TokenKind) -> Option<BinaryOp> {
        Some(match kind {
            TokenKind::Amp => BinaryOp::And,
            TokenKind::Pipe => BinaryOp::Or,
            TokenKind::Caret => BinaryOp::Xor,
            TokenKind::Plus => BinaryOp::Add,
            TokenKind::Minus => BinaryOp::Sub,
            TokenKind::EqEq => BinaryOp::Eq,
            TokenKind::NotEq => BinaryOp::Ne,
            TokenKind::AndAnd => BinaryOp::LogicalAnd,
            TokenKind::OrOr => BinaryOp::LogicalOr,
            _ => return None,
        })
    }

    /// True for operators whose result is a single bit.
    pub fn is_predicate(self) -> bool {
        matches!(
            self,
            BinaryOp::Eq | BinaryOp::Ne | BinaryOp::LogicalAnd | BinaryOp::LogicalOr
        )
    }
}

const TERNARY_PREC: u8 = 1;
const UNARY_PREC: u8 = 9;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Expr {
    Ident(String),
    Const(Const),
    Bit {
        name: String,
        index: u32,
    },
    Slice {
        name: String,
        msb: u32,
        lsb: u32,
    },
    Unary {
        op: UnaryOp,
        arg: Box<Expr>,
    },
    Binary {
        op: BinaryOp,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
    },
    Ternary {
        cond: Box<Expr>,
        then: Box<Expr>,
        other: Box<Expr>,
    },
    /// `$past(arg, depth)`; only legal inside assertions.
    Past {
        arg: Box<Expr>,
        depth: u32,
    },
}

impl Expr {
    pub fn ident(name: impl Into<String>) -> Expr {
        Expr::Ident(name.into())
    }

    pub fn constant(value: u64, width: Option<u32>) -> Expr {
        Expr::Const(Const { value, width })
    }

    pub fn unary(op: UnaryOp, arg: Expr) -> Expr {
        Expr::Unary {
            op,
            arg: Box::new(arg),
        }
    }

    pub fn binary(op: BinaryOp, lhs: Expr, rhs: Expr) -> Expr {
        Expr::Binary {
            op,
            lhs: Box::new(lhs),
            rhs: Box::new(rhs),
        }
    }

    pub fn ternary(cond: Expr, then: Expr, other: Expr) -> Expr {
        Expr::Ternary {
            cond: Box::new(cond),
            then: Box::new(then),
            other: Box::new(other),
        }
    }

    /// Left-nested `&&` chain; `None` for an empty list.
    pub fn all_of(terms: impl IntoIterator<Item = Expr>) -> Option<Expr> {
        terms
            .into_iter()
            .reduce(|acc, t| Expr::binary(BinaryOp::LogicalAnd, acc, t))
    }

    /// Flattens a tree of `&&` into its conjuncts, left to right.
    pub fn conjuncts(&self) -> Vec<&Expr> {
        let mut out = Vec::new();
        fn walk<'a>(e: &'a Expr, out: &mut Vec<&'a Expr>) {
            match e {
                Expr::Binary {
                    op: BinaryOp::LogicalAnd,
                    lhs,
                    rhs,
                } => {
                    walk(lhs, out);
                    walk(rhs, out);
                }
                other => out.push(other),
            }
        }
        walk(self, &mut out);
        out
    }

    /// Every identifier referenced, including select bases.
    pub fn identifiers(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.visit_identifiers(&mut |name| {
            out.insert(name.to_string());
        });
        out
    }

    pub fn visit_identifiers(&self, f: &mut impl FnMut(&str)) {
        match self {
            Expr::Ident(name) | Expr::Bit { name, .. } | Expr::Slice { name, .. } => f(name),
            Expr::Const(_) => {}
            Expr::Unary { arg, .. } | Expr::Past { arg, .. } => arg.visit_identifiers(f),
            Expr::Binary { lhs, rhs, .. } => {
                lhs.visit_identifiers(f);
                rhs.visit_identifiers(f);
            }
            Expr::Ternary { cond, then, other } => {
                cond.visit_identifiers(f);
                then.visit_identifiers(f);
                other.visit_identifiers(f);
            }
        }
    }

    /// Rebuilds the tree with every identifier passed through `rename`.
    pub fn rename(&self, rename: &impl Fn(&str) -> String) -> Expr {
        match self {
            Expr::Ident(name) => Expr::Ident(rename(name)),
            Expr::Bit { name, index } => Expr::Bit {
                name: rename(name),
                index: *index,
            },
            Expr::Slice { name, msb, lsb } => Expr::Slice {
                name: rename(name),
                msb: *msb,
                lsb: *lsb,
            },
            Expr::Const(c) => Expr::Const(*c),
            Expr::Unary { op, arg } => Expr::unary(*op, arg.rename(rename)),
            Expr::Past { arg, depth } => Expr::Past {
                arg: Box::new(arg.rename(rename)),
                depth: *depth,
            },
            Expr::Binary { op, lhs, rhs } => {
                Expr::binary(*op, lhs.rename(rename), rhs.rename(rename))
            }
            Expr::Ternary { cond, then, other } => Expr::ternary(
                cond.rename(rename),
                then.rename(rename),
                other.rename(rename),
            ),
        }
    }

    /// Largest total `$past` depth along any path (nested depths add up).
    pub fn past_depth(&self) -> u32 {
        match self {
            Expr::Ident(_) | Expr::Const(_) | Expr::Bit { .. } | Expr::Slice { .. } => 0,
            Expr::Unary { arg, .. } => arg.past_depth(),
            Expr::Past { arg, depth } => depth + arg.past_depth(),
            Expr::Binary { lhs, rhs, .. } => lhs.past_depth().max(rhs.past_depth()),
            Expr::Ternary { cond, then, other } => cond
                .past_depth()
                .max(then.past_depth())
                .max(other.past_depth()),
        }
    }

    pub fn contains_past(&self) -> bool {
        self.past_depth() > 0
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Binary { op, .. } => op.precedence(),
            Expr::Ternary { .. } => TERNARY_PREC,
            Expr::Unary { .. } => UNARY_PREC,
            _ => u8::MAX,
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn child(f: &mut fmt::Formatter<'_>, e: &Expr, min_prec: u8) -> fmt::Result {
            if e.precedence() < min_prec {
                write!(f, "({e})")
            } else {
                write!(f, "{e}")
            }
        }
        match self {
            Expr::Ident(name) => f.write_str(name),
            Expr::Const(c) => write!(f, "{c}"),
            Expr::Bit { name, index } => write!(f, "{name}[{index}]"),
            Expr::Slice { name, msb, lsb } => write!(f, "{name}[{msb}:{lsb}]"),
            Expr::Unary { op, arg } => {
                f.write_str(match op {
                    UnaryOp::Not => "~",
                    UnaryOp::LogicalNot => "!",
                })?;
                child(f, arg, UNARY_PREC)
            }
            Expr::Binary { op, lhs, rhs } => {
                let p = op.precedence();
                child(f, lhs, p)?;
                write!(f, " {} ", op.symbol())?;
                child(f, rhs, p + 1)
            }
            Expr::Ternary { cond, then, other } => {
                child(f, cond, TERNARY_PREC + 1)?;
                f.write_str(" ? ")?;
                child(f, then, TERNARY_PREC)?;
                f.write_str(" : ")?;
                child(f, other, TERNARY_PREC)
            }
            Expr::Past { arg, depth } => write!(f, "$past({arg}, {depth})"),
        }
    }
}

/// Errors produced by the front ends before elaboration.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FrontError {
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
    #[error("{line}:{column}: unsupported construct: {construct}")]
    Unsupported {
        construct: String,
        line: usize,
        column: usize,
    },
}

impl FrontError {
    pub fn location(&self) -> (usize, usize) {
        match self {
            FrontError::Syntax(e) => (e.line, e.column),
            FrontError::Unsupported { line, column, .. } => (*line, *column),
        }
    }

    pub fn render(&self, source: &str) -> String {
        let (line, column) = self.location();
        crate::lexer::render_excerpt(source, line, column, &self.to_string())
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct ExprOptions {
    pub allow_past: bool,
}

pub(crate) fn parse_expr(cur: &mut Cursor, opts: ExprOptions) -> Result<Expr, FrontError> {
    parse_bp(cur, opts, 0)
}

/// Parses a complete standalone expression; `$past` is allowed.
pub fn parse_expression(source: &str) -> Result<Expr, FrontError> {
    let mut cur = Cursor::new(crate::lexer::tokenize(source)?);
    let e = parse_expr(&mut cur, ExprOptions { allow_past: true })?;
    if !cur.at(&TokenKind::Eof) {
        return Err(SyntaxError::at(cur.peek(), "end of expression").into());
    }
    Ok(e)
}

fn parse_bp(cur: &mut Cursor, opts: ExprOptions, min_prec: u8) -> Result<Expr, FrontError> {
    let mut lhs = parse_unary(cur, opts)?;
    loop {
        let kind = cur.peek_kind().clone();
        if kind == TokenKind::Question {
            if TERNARY_PREC < min_prec {
                break;
            }
            cur.bump();
            let then = parse_bp(cur, opts, 0)?;
            cur.expect(&TokenKind::Colon)?;
            // right associative
            let other = parse_bp(cur, opts, TERNARY_PREC)?;
            lhs = Expr::ternary(lhs, then, other);
            continue;
        }
        if matches!(kind, TokenKind::Lt | TokenKind::Gt | TokenKind::Star) {
            let t = cur.peek();
            return Err(FrontError::Unsupported {
                construct: format!("operator {kind}"),
                line: t.line,
                column: t.column,
            });
        }
        let Some(op) = BinaryOp::from_token(&kind) else {
            break;
        };
        let p = op.precedence();
        if p < min_prec {
            break;
        }
        cur.bump();
        let rhs = parse_bp(cur, opts, p + 1)?;
        lhs = Expr::binary(op, lhs, rhs);
    }
    Ok(lhs)
}

fn parse_unary(cur: &mut Cursor, opts: ExprOptions) -> Result<Expr, FrontError> {
    match cur.peek_kind() {
        TokenKind::Tilde => {
            cur.bump();
            Ok(Expr::unary(UnaryOp::Not, parse_unary(cur, opts)?))
        }
        TokenKind::Bang => {
            cur.bump();
            Ok(Expr::unary(UnaryOp::LogicalNot, parse_unary(cur, opts)?))
        }
        _ => parse_primary(cur, opts),
    }
}

fn parse_primary(cur: &mut Cursor, opts: ExprOptions) -> Result<Expr, FrontError> {
    let tok = cur.peek().clone();
    match tok.kind.clone() {
        TokenKind::LParen => {
            cur.bump();
            let e = parse_bp(cur, opts, 0)?;
            cur.expect(&TokenKind::RParen)?;
            Ok(e)
        }
        TokenKind::Number { value, width } => {
            cur.bump();
            Ok(Expr::Const(Const { value, width }))
        }
        TokenKind::Ident(name) => {
            cur.bump();
            if !cur.at(&TokenKind::LBracket) {
                return Ok(Expr::Ident(name));
            }
            cur.bump();
            let (first, _) = cur.expect_number("constant bit index")?;
            let first = u32::try_from(first)
                .map_err(|_| SyntaxError::at(&tok, "bit index below 2^32"))?;
            let e = if cur.eat(&TokenKind::Colon) {
                let (lsb, _) = cur.expect_number("constant part-select lsb")?;
                let lsb = u32::try_from(lsb)
                    .map_err(|_| SyntaxError::at(&tok, "bit index below 2^32"))?;
                if lsb > first {
                    return Err(SyntaxError::at(&tok, "part select written [msb:lsb]").into());
                }
                Expr::Slice {
                    name,
                    msb: first,
                    lsb,
                }
            } else {
                Expr::Bit { name, index: first }
            };
            cur.expect(&TokenKind::RBracket)?;
            Ok(e)
        }
        TokenKind::SysIdent(ref sys) if sys == "past" => {
            if !opts.allow_past {
                return Err(FrontError::Unsupported {
                    construct: "`$past` outside an assertion".into(),
                    line: tok.line,
                    column: tok.column,
                });
            }
            cur.bump();
            cur.expect(&TokenKind::LParen)?;
            let arg = parse_bp(cur, opts, 0)?;
            let depth = if cur.eat(&TokenKind::Comma) {
                let at = cur.peek().clone();
                let (d, _) = cur.expect_number("constant `$past` depth")?;
                if d == 0 || d > u32::MAX as u64 {
                    return Err(SyntaxError::at(&at, "`$past` depth of at least 1").into());
                }
                d as u32
            } else {
                1
            };
            cur.expect(&TokenKind::RParen)?;
            Ok(Expr::Past {
                arg: Box::new(arg),
                depth,
            })
        }
        TokenKind::SysIdent(sys) => Err(FrontError::Unsupported {
            construct: format!("system function `${sys}`"),
            line: tok.line,
            column: tok.column,
        }),
        TokenKind::LBrace => Err(FrontError::Unsupported {
            construct: "concatenation".into(),
            line: tok.line,
            column: tok.column,
        }),
        _ => Err(SyntaxError::at(&tok, "expression").into()),
    }
}

/// Width-inference failure.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WidthError {
    #[error("undeclared identifier `{0}`")]
    Unknown(String),
    #[error("width mismatch in `{context}`: {left} vs {right} bits")]
    Mismatch {
        context: String,
        left: u32,
        right: u32,
    },
    #[error("select [{msb}] out of range for `{name}` ({width} bits)")]
    OutOfRange { name: String, msb: u32, width: u32 },
}

/// Infers the self-determined width of `expr`.
///
/// `lookup` returns `None` for unknown names, `Some(None)` for unsized
/// constants and `Some(Some(w))` for sized nets and parameters. With
/// `strict`, operands of differing fixed widths are rejected; otherwise the
/// wider one wins.
pub fn infer_width(
    expr: &Expr,
    lookup: &impl Fn(&str) -> Option<Option<u32>>,
    strict: bool,
) -> Result<Option<u32>, WidthError> {
    let merge = |a: Option<u32>, b: Option<u32>, ctx: &Expr| -> Result<Option<u32>, WidthError> {
        match (a, b) {
            (Some(x), Some(y)) if x != y => {
                if strict {
                    Err(WidthError::Mismatch {
                        context: ctx.to_string(),
                        left: x,
                        right: y,
                    })
                } else {
                    Ok(Some(x.max(y)))
                }
            }
            (Some(x), _) | (_, Some(x)) => Ok(Some(x)),
            (None, None) => Ok(None),
        }
    };
    match expr {
        Expr::Ident(name) => lookup(name).ok_or_else(|| WidthError::Unknown(name.clone())),
        Expr::Const(c) => Ok(c.width),
        Expr::Bit { name, index } => {
            let w = lookup(name)
                .ok_or_else(|| WidthError::Unknown(name.clone()))?
                .unwrap_or(UNSIZED_WIDTH);
            if *index >= w {
                return Err(WidthError::OutOfRange {
                    name: name.clone(),
                    msb: *index,
                    width: w,
                });
            }
            Ok(Some(1))
        }
        Expr::Slice { name, msb, lsb } => {
            let w = lookup(name)
                .ok_or_else(|| WidthError::Unknown(name.clone()))?
                .unwrap_or(UNSIZED_WIDTH);
            if *msb >= w {
                return Err(WidthError::OutOfRange {
                    name: name.clone(),
                    msb: *msb,
                    width: w,
                });
            }
            Ok(Some(msb - lsb + 1))
        }
        Expr::Unary { op, arg } => {
            let w = infer_width(arg, lookup, strict)?;
            Ok(match op {
                UnaryOp::Not => w,
                UnaryOp::LogicalNot => Some(1),
            })
        }
        Expr::Past { arg, .. } => infer_width(arg, lookup, strict),
        Expr::Binary { op, lhs, rhs } => {
            let a = infer_width(lhs, lookup, strict)?;
            let b = infer_width(rhs, lookup, strict)?;
            match op {
                BinaryOp::LogicalAnd | BinaryOp::LogicalOr => Ok(Some(1)),
                BinaryOp::Eq | BinaryOp::Ne => {
                    merge(a, b, expr)?;
                    Ok(Some(1))
                }
                _ => merge(a, b, expr),
            }
        }
        Expr::Ternary { cond, then, other } => {
            infer_width(cond, lookup, strict)?;
            let a = infer_width(then, lookup, strict)?;
            let b = infer_width(other, lookup, strict)?;
            merge(a, b, expr)
        }
    }
}

/// Applies a unary operator to a value already masked to `width` bits.
pub fn apply_unary(op: UnaryOp, value: u64, width: u32) -> u64 {
    match op {
        UnaryOp::Not => !value & mask(width),
        UnaryOp::LogicalNot => (value == 0) as u64,
    }
}

/// Applies a binary operator; `width` is the operand width used for
/// wrap-around of bitwise and arithmetic results.
pub fn apply_binary(op: BinaryOp, a: u64, b: u64, width: u32) -> u64 {
    match op {
        BinaryOp::And => a & b,
        BinaryOp::Or => a | b,
        BinaryOp::Xor => a ^ b,
        BinaryOp::Add => a.wrapping_add(b) & mask(width),
        BinaryOp::Sub => a.wrapping_sub(b) & mask(width),
        BinaryOp::Eq => (a == b) as u64,
        BinaryOp::Ne => (a != b) as u64,
        BinaryOp::LogicalAnd => (a != 0 && b != 0) as u64,
        BinaryOp::LogicalOr => (a != 0 || b != 0) as u64,
    }
}

/// Reference evaluator over named values; `$past` is rejected.
///
/// `lookup` yields `(value, width)` per identifier. Used for constant folding
/// and as an independent oracle in tests; the simulator compiles its own form.
pub fn eval(expr: &Expr, lookup: &impl Fn(&str) -> Option<(u64, Option<u32>)>) -> Option<(u64, u32)> {
    let widths = |name: &str| lookup(name).map(|(_, w)| w);
    let width_of = |e: &Expr| {
        infer_width(e, &widths, false)
            .ok()
            .map(|w| w.unwrap_or(UNSIZED_WIDTH))
    };
    let w = width_of(expr)?;
    let v = match expr {
        Expr::Ident(name) => lookup(name)?.0 & mask(w),
        Expr::Const(c) => c.value & mask(w),
        Expr::Bit { name, index } => (lookup(name)?.0 >> index) & 1,
        Expr::Slice { name, lsb, .. } => (lookup(name)?.0 >> lsb) & mask(w),
        Expr::Unary { op, arg } => {
            let (a, aw) = eval(arg, lookup)?;
            apply_unary(*op, a, aw)
        }
        Expr::Binary { op, lhs, rhs } => {
            let (a, _) = eval(lhs, lookup)?;
            let (b, _) = eval(rhs, lookup)?;
            let opw = if op.is_predicate() {
                width_of(lhs)?.max(width_of(rhs)?)
            } else {
                w
            };
            apply_binary(*op, a & mask(opw), b & mask(opw), opw)
        }
        Expr::Ternary { cond, then, other } => {
            let (c, _) = eval(cond, lookup)?;
            let (v, _) = if c != 0 {
                eval(then, lookup)?
            } else {
                eval(other, lookup)?
            };
            v & mask(w)
        }
        Expr::Past { .. } => return None,
    };
    Some((v, w))
}
