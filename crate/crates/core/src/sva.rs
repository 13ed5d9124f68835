// SPDX-License-Identifier: Apache-2.0

//! Concurrent-assertion subset: a single clocking event, optional
//! `disable iff`, a delay sequence, `|->`/`|=>`, and a delay sequence.
//!
//! Sequence terms are boolean expressions that may use `$past`. Both the
//! concise `assert property (...)` form and the named `property ...;
//! endproperty` form are accepted.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{parse_expr, BinaryOp, Const, Expr, ExprOptions, FrontError, UnaryOp};
use crate::lexer::{tokenize, Cursor, SyntaxError, Token, TokenKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClockEdge {
    Posedge,
    Negedge,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ClockEvent {
    pub edge: ClockEdge,
    pub net: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Implication {
    /// `|->`
    Overlapped,
    /// `|=>`
    NonOverlapped,
}

/// One sequence term preceded by `##delay` (0 for the first term unless
/// written).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeqStep {
    pub delay: u32,
    pub expr: Expr,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Sequence {
    pub steps: Vec<SeqStep>,
}

impl Sequence {
    pub fn single(expr: Expr) -> Self {
        Sequence {
            steps: vec![SeqStep { delay: 0, expr }],
        }
    }

    /// Cycles from the first term's evaluation to the last term's.
    pub fn span(&self) -> u32 {
        self.steps.iter().skip(1).map(|s| s.delay).sum()
    }

    pub fn leading_delay(&self) -> u32 {
        self.steps.first().map_or(0, |s| s.delay)
    }

    pub fn exprs(&self) -> impl Iterator<Item = &Expr> {
        self.steps.iter().map(|s| &s.expr)
    }

    fn map(&self, f: impl Fn(&Expr) -> Expr) -> Sequence {
        Sequence {
            steps: self
                .steps
                .iter()
                .map(|s| SeqStep {
                    delay: s.delay,
                    expr: f(&s.expr),
                })
                .collect(),
        }
    }
}

impl fmt::Display for Sequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, s) in self.steps.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            if i > 0 || s.delay > 0 {
                write!(f, "##{} ", s.delay)?;
            }
            write!(f, "{}", s.expr)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assertion {
    pub name: String,
    /// Statement label in `LABEL: assert property ...`.
    pub label: Option<String>,
    /// `None` means the design's default clock.
    pub clock: Option<ClockEvent>,
    pub disable: Option<Expr>,
    pub antecedent: Sequence,
    pub implication: Implication,
    pub consequent: Sequence,
    /// Failure message from `else $error("...")`.
    pub action: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{column}: unsupported construct: {construct}")]
pub struct UnsupportedConstructError {
    pub construct: String,
    pub line: usize,
    pub column: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SvaError {
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
    #[error(transparent)]
    Unsupported(#[from] UnsupportedConstructError),
    #[error("{line}:{column}: assertion name `{name}` is used more than once")]
    DuplicateName {
        name: String,
        line: usize,
        column: usize,
    },
    #[error("{line}:{column}: property `{name}` is not declared")]
    UnknownProperty {
        name: String,
        line: usize,
        column: usize,
    },
    #[error("expected exactly one assertion, found {0}")]
    Count(usize),
}

impl From<FrontError> for SvaError {
    fn from(e: FrontError) -> Self {
        match e {
            FrontError::Syntax(s) => SvaError::Syntax(s),
            FrontError::Unsupported {
                construct,
                line,
                column,
            } => SvaError::Unsupported(UnsupportedConstructError {
                construct,
                line,
                column,
            }),
        }
    }
}

impl SvaError {
    pub fn location(&self) -> Option<(usize, usize)> {
        match self {
            SvaError::Syntax(e) => Some((e.line, e.column)),
            SvaError::Unsupported(e) => Some((e.line, e.column)),
            SvaError::DuplicateName { line, column, .. }
            | SvaError::UnknownProperty { line, column, .. } => Some((*line, *column)),
            SvaError::Count(_) => None,
        }
    }

    pub fn render(&self, source: &str) -> String {
        match self.location() {
            Some((l, c)) => crate::lexer::render_excerpt(source, l, c, &self.to_string()),
            None => format!("error: {self}"),
        }
    }
}

/// Parses text holding exactly one assertion.
pub fn parse_assertion(source: &str) -> Result<Assertion, SvaError> {
    let mut all = parse_file(source)?;
    if all.len() != 1 {
        return Err(SvaError::Count(all.len()));
    }
    Ok(all.remove(0))
}

/// Parses every `assert property` statement in a file, in order.
pub fn parse_file(source: &str) -> Result<Vec<Assertion>, SvaError> {
    let tokens = tokenize(source)?;
    prescan(&tokens)?;
    let mut p = Parser {
        cur: Cursor::new(tokens),
    };
    p.file()
}

const TEMPORAL_KEYWORDS: &[&str] = &[
    "throughout",
    "intersect",
    "within",
    "and",
    "or",
    "not",
    "until",
    "s_until",
    "until_with",
    "implies",
    "first_match",
    "eventually",
    "s_eventually",
    "nexttime",
    "s_nexttime",
    "always",
    "s_always",
    "sequence",
    "cover",
    "assume",
    "restrict",
    "expect",
    "if",
    "case",
    "accept_on",
    "reject_on",
    "sync_accept_on",
    "sync_reject_on",
    "clocking",
];

/// Rejects constructs outside the subset before parsing so the diagnostic
/// names the construct instead of a confusing token.
fn prescan(tokens: &[Token]) -> Result<(), UnsupportedConstructError> {
    let unsupported = |t: &Token, what: String| UnsupportedConstructError {
        construct: what,
        line: t.line,
        column: t.column,
    };
    let mut after_at = false;
    for (i, t) in tokens.iter().enumerate() {
        let next = tokens.get(i + 1).map(|t| &t.kind);
        let next2 = tokens.get(i + 2).map(|t| &t.kind);
        match (&t.kind, next) {
            (TokenKind::LBracket, Some(TokenKind::Star)) => {
                return Err(unsupported(t, "consecutive repetition `[*n]`".into()))
            }
            (TokenKind::LBracket, Some(TokenKind::Assign)) => {
                return Err(unsupported(t, "non-consecutive repetition `[=n]`".into()))
            }
            (TokenKind::LBracket, Some(TokenKind::Minus)) if next2 == Some(&TokenKind::Gt) => {
                return Err(unsupported(t, "goto repetition `[->n]`".into()))
            }
            (TokenKind::DoubleHash, Some(TokenKind::LBracket)) => {
                return Err(unsupported(t, "ranged delay `##[m:n]`".into()))
            }
            (TokenKind::DoubleHash, Some(TokenKind::Ident(_))) => {
                return Err(unsupported(t, "non-constant delay".into()))
            }
            (TokenKind::Ident(w), _) if TEMPORAL_KEYWORDS.contains(&w.as_str()) => {
                if w == "or" && after_at {
                    return Err(unsupported(t, "multiple clocking events".into()));
                }
                return Err(unsupported(t, format!("`{w}`")));
            }
            (TokenKind::SysIdent(s), _)
                if matches!(
                    s.as_str(),
                    "rose" | "fell" | "stable" | "changed" | "onehot" | "onehot0" | "isunknown" | "countones"
                ) =>
            {
                return Err(unsupported(t, format!("`${s}`")))
            }
            _ => {}
        }
        match t.kind {
            TokenKind::At => after_at = true,
            TokenKind::RParen => after_at = false,
            _ => {}
        }
    }
    Ok(())
}

struct PropertyDecl {
    body: Body,
}

#[derive(Clone)]
struct Body {
    clock: Option<ClockEvent>,
    disable: Option<Expr>,
    antecedent: Sequence,
    implication: Implication,
    consequent: Sequence,
}

enum Target {
    Named(String, Token),
    Inline(Body),
}

struct Parser {
    cur: Cursor,
}

impl Parser {
    fn file(&mut self) -> Result<Vec<Assertion>, SvaError> {
        let mut props: BTreeMap<String, PropertyDecl> = BTreeMap::new();
        let mut stmts: Vec<(Option<String>, Target, Option<String>, Token)> = Vec::new();
        while !self.cur.at(&TokenKind::Eof) {
            let start = self.cur.peek().clone();
            if self.cur.eat_keyword("property") {
                let (name, name_tok) = self.cur.expect_ident("property name")?;
                self.cur.expect(&TokenKind::Semi)?;
                let body = self.body()?;
                self.cur.expect(&TokenKind::Semi)?;
                if !self.cur.eat_keyword("endproperty") {
                    if self.cur.eat_keyword("end") {
                        self.cur.expect_keyword("property")?;
                    } else {
                        return Err(SyntaxError::at(self.cur.peek(), "`endproperty`").into());
                    }
                }
                if self.cur.eat(&TokenKind::Colon) {
                    self.cur.expect_ident("property name after `endproperty :`")?;
                }
                if props.contains_key(&name) {
                    return Err(SvaError::DuplicateName {
                        name,
                        line: name_tok.line,
                        column: name_tok.column,
                    });
                }
                props.insert(name, PropertyDecl { body });
                continue;
            }
            let label = if matches!(self.cur.peek_kind(), TokenKind::Ident(_))
                && self.cur.peek_nth(1) == &TokenKind::Colon
            {
                let (l, _) = self.cur.expect_ident("label")?;
                self.cur.bump();
                Some(l)
            } else {
                None
            };
            self.cur.expect_keyword("assert")?;
            self.cur.expect_keyword("property")?;
            self.cur.expect(&TokenKind::LParen)?;
            let target = match (self.cur.peek_kind().clone(), self.cur.peek_nth(1)) {
                (TokenKind::Ident(name), TokenKind::RParen) => {
                    let tok = self.cur.bump();
                    Target::Named(name, tok)
                }
                _ => Target::Inline(self.body()?),
            };
            self.cur.expect(&TokenKind::RParen)?;
            let action = self.action()?;
            self.cur.expect(&TokenKind::Semi)?;
            stmts.push((label, target, action, start));
        }

        let mut out = Vec::new();
        let mut seen = BTreeSet::new();
        for (idx, (label, target, action, tok)) in stmts.into_iter().enumerate() {
            let (name, body) = match target {
                Target::Named(name, ntok) => match props.get(&name) {
                    Some(p) => (name, p.body.clone()),
                    None => {
                        return Err(SvaError::UnknownProperty {
                            name,
                            line: ntok.line,
                            column: ntok.column,
                        })
                    }
                },
                Target::Inline(body) => (
                    label.clone().unwrap_or_else(|| format!("assertion_{}", idx + 1)),
                    body,
                ),
            };
            if !seen.insert(name.clone()) {
                return Err(SvaError::DuplicateName {
                    name,
                    line: tok.line,
                    column: tok.column,
                });
            }
            out.push(Assertion {
                name,
                label,
                clock: body.clock,
                disable: body.disable,
                antecedent: body.antecedent,
                implication: body.implication,
                consequent: body.consequent,
                action,
            });
        }
        Ok(out)
    }

    fn action(&mut self) -> Result<Option<String>, SvaError> {
        if !self.cur.eat_keyword("else") {
            return Ok(None);
        }
        let tok = self.cur.bump();
        match &tok.kind {
            TokenKind::SysIdent(s) if matches!(s.as_str(), "error" | "fatal" | "warning" | "info" | "display") => {}
            _ => return Err(SyntaxError::at(&tok, "`$error(\"...\")` action").into()),
        }
        let mut msg = String::new();
        if self.cur.eat(&TokenKind::LParen) {
            if let TokenKind::Str(s) = self.cur.peek_kind().clone() {
                self.cur.bump();
                msg = s;
            }
            self.cur.expect(&TokenKind::RParen)?;
        }
        Ok(Some(msg))
    }

    fn body(&mut self) -> Result<Body, SvaError> {
        let clock = if self.cur.eat(&TokenKind::At) {
            self.cur.expect(&TokenKind::LParen)?;
            let edge = if self.cur.eat_keyword("posedge") {
                ClockEdge::Posedge
            } else if self.cur.eat_keyword("negedge") {
                ClockEdge::Negedge
            } else {
                return Err(SyntaxError::at(self.cur.peek(), "`posedge` or `negedge`").into());
            };
            let (net, _) = self.cur.expect_ident("clock net")?;
            self.cur.expect(&TokenKind::RParen)?;
            Some(ClockEvent { edge, net })
        } else {
            None
        };
        let disable = if self.cur.eat_keyword("disable") {
            self.cur.expect_keyword("iff")?;
            self.cur.expect(&TokenKind::LParen)?;
            let e = parse_expr(&mut self.cur, ExprOptions { allow_past: false })?;
            self.cur.expect(&TokenKind::RParen)?;
            Some(e)
        } else {
            None
        };
        let antecedent = self.sequence()?;
        let implication = if self.cur.eat(&TokenKind::Implies) {
            Implication::Overlapped
        } else if self.cur.eat(&TokenKind::ImpliesNext) {
            Implication::NonOverlapped
        } else {
            return Err(SyntaxError::at(self.cur.peek(), "`|->` or `|=>`").into());
        };
        let consequent = self.sequence()?;
        Ok(Body {
            clock,
            disable,
            antecedent,
            implication,
            consequent,
        })
    }

    fn delay(&mut self) -> Result<Option<u32>, SvaError> {
        if !self.cur.eat(&TokenKind::DoubleHash) {
            return Ok(None);
        }
        let at = self.cur.peek().clone();
        let (n, _) = self.cur.expect_number("constant delay")?;
        u32::try_from(n)
            .map(Some)
            .map_err(|_| SyntaxError::at(&at, "delay below 2^32").into())
    }

    fn sequence(&mut self) -> Result<Sequence, SvaError> {
        let opts = ExprOptions { allow_past: true };
        let mut steps = Vec::new();
        let first = self.delay()?.unwrap_or(0);
        steps.push(SeqStep {
            delay: first,
            expr: parse_expr(&mut self.cur, opts)?,
        });
        while let Some(d) = self.delay()? {
            steps.push(SeqStep {
                delay: d,
                expr: parse_expr(&mut self.cur, opts)?,
            });
        }
        Ok(Sequence { steps })
    }
}

impl Assertion {
    /// Identifiers in the antecedent, consequent and disable clause.
    pub fn signals(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        let mut add = |e: &Expr| e.visit_identifiers(&mut |id| {
            out.insert(id.to_string());
        });
        self.antecedent.exprs().for_each(&mut add);
        self.consequent.exprs().for_each(&mut add);
        if let Some(d) = &self.disable {
            add(d);
        }
        out
    }

    /// Rewrites `a |=> c` as `a |-> ##1 c`.
    pub fn normalized(&self) -> Assertion {
        let mut a = self.clone();
        if a.implication == Implication::NonOverlapped {
            a.implication = Implication::Overlapped;
            if let Some(first) = a.consequent.steps.first_mut() {
                first.delay += 1;
            }
        }
        a
    }

    /// Cycle offset (from the attempt start) of the consequent's first term.
    pub fn consequent_offset(&self) -> u32 {
        let shift = match self.implication {
            Implication::Overlapped => 0,
            Implication::NonOverlapped => 1,
        };
        self.antecedent.leading_delay() + self.antecedent.span() + shift + self.consequent.leading_delay()
    }

    /// Cycles spanned by one attempt, counted from its start cycle.
    pub fn window(&self) -> u32 {
        self.consequent_offset() + self.consequent.span()
    }

    /// Deepest `$past` reference.
    pub fn past_depth(&self) -> u32 {
        self.antecedent
            .exprs()
            .chain(self.consequent.exprs())
            .map(Expr::past_depth)
            .max()
            .unwrap_or(0)
    }

    /// Applies `rename` to every identifier, including the clock.
    pub fn rename(&self, rename: &impl Fn(&str) -> String) -> Assertion {
        Assertion {
            clock: self.clock.as_ref().map(|c| ClockEvent {
                edge: c.edge,
                net: rename(&c.net),
            }),
            disable: self.disable.as_ref().map(|d| d.rename(rename)),
            antecedent: self.antecedent.map(|e| e.rename(rename)),
            consequent: self.consequent.map(|e| e.rename(rename)),
            ..self.clone()
        }
    }

    /// Body in a normal form for comparing properties that differ only in
    /// spelling: `|=>` normalized, `&&` chains flattened and sorted, `!e`
    /// written `e == 0`, constants unsized. Names, labels and actions are
    /// ignored.
    pub fn canonical_body(&self) -> String {
        let a = self.normalized();
        let seq = |s: &Sequence| {
            s.steps
                .iter()
                .map(|st| format!("##{} ({})", st.delay, canonical_expr(&st.expr)))
                .collect::<Vec<_>>()
                .join(" ")
        };
        format!(
            "{} | {} | {} |-> {}",
            a.clock
                .as_ref()
                .map(|c| format!("{:?} {}", c.edge, c.net))
                .unwrap_or_default(),
            a.disable.as_ref().map(canonical_expr).unwrap_or_default(),
            seq(&a.antecedent),
            seq(&a.consequent)
        )
    }

    fn is_concise(&self) -> bool {
        match &self.label {
            Some(l) => *l == self.name,
            None => self
                .name
                .strip_prefix("assertion_")
                .is_some_and(|n| !n.is_empty() && n.bytes().all(|b| b.is_ascii_digit())),
        }
    }

    fn property_text(&self) -> String {
        let mut s = String::new();
        if let Some(c) = &self.clock {
            let edge = match c.edge {
                ClockEdge::Posedge => "posedge",
                ClockEdge::Negedge => "negedge",
            };
            let _ = write!(s, "@({edge} {}) ", c.net);
        }
        if let Some(d) = &self.disable {
            let _ = write!(s, "disable iff ({d}) ");
        }
        let imp = match self.implication {
            Implication::Overlapped => "|->",
            Implication::NonOverlapped => "|=>",
        };
        let _ = write!(s, "{} {imp} {}", self.antecedent, self.consequent);
        s
    }

    /// SVA text. Assertions declared through a named property render in
    /// that style; concise ones render on one line.
    pub fn render(&self) -> String {
        let mut s = String::new();
        let label = self
            .label
            .as_ref()
            .map(|l| format!("{l}: "))
            .unwrap_or_default();
        let action = self
            .action
            .as_ref()
            .map(|m| format!(" else\n  $error(\"{}\")", escape(m)))
            .unwrap_or_default();
        if self.is_concise() {
            let _ = writeln!(s, "{label}assert property ({}){action};", self.property_text());
        } else {
            let _ = writeln!(s, "property {};", self.name);
            let _ = writeln!(s, "  {};", self.property_text());
            let _ = writeln!(s, "endproperty");
            let _ = writeln!(s, "{label}assert property ({}){action};", self.name);
        }
        s
    }
}

fn escape(m: &str) -> String {
    m.replace('\\', "\\\\").replace('"', "\\\"").replace('\n', "\\n").replace('\t', "\\t")
}

/// Renders assertions in order, separated by blank lines.
pub fn render_file(assertions: &[Assertion]) -> String {
    assertions
        .iter()
        .map(Assertion::render)
        .collect::<Vec<_>>()
        .join("\n")
}

fn canonical_expr(e: &Expr) -> String {
    fn canon(e: &Expr) -> Expr {
        match e {
            Expr::Const(c) => Expr::Const(Const::untyped(c.value)),
            Expr::Unary {
                op: UnaryOp::LogicalNot,
                arg,
            } => Expr::binary(BinaryOp::Eq, canon(arg), Expr::constant(0, None)),
            Expr::Unary { op, arg } => Expr::unary(*op, canon(arg)),
            Expr::Past { arg, depth } => Expr::Past {
                arg: Box::new(canon(arg)),
                depth: *depth,
            },
            Expr::Binary {
                op: BinaryOp::LogicalAnd,
                ..
            } => {
                let mut parts: Vec<Expr> = e.conjuncts().into_iter().map(canon).collect();
                parts.sort_by_key(|p| p.to_string());
                Expr::all_of(parts).expect("non-empty conjunction")
            }
            Expr::Binary { op, lhs, rhs } => Expr::binary(*op, canon(lhs), canon(rhs)),
            Expr::Ternary { cond, then, other } => {
                Expr::ternary(canon(cond), canon(then), canon(other))
            }
            other => other.clone(),
        }
    }
    canon(e).to_string()
}

/// Structural comparison modulo conjunct order and `!e` versus `e == 0`.
pub fn equivalent_bodies(a: &Assertion, b: &Assertion) -> bool {
    a.canonical_body() == b.canonical_body()
}
