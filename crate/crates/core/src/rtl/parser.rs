// SPDX-License-Identifier: Apache-2.0

//! Recursive-descent parser producing a located module AST.

use crate::expr::{parse_expr, Expr, ExprOptions, FrontError};
use crate::lexer::{tokenize, Cursor, SyntaxError, Token, TokenKind};

use super::Direction;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(super) struct Loc {
    pub line: usize,
    pub column: usize,
}

impl From<&Token> for Loc {
    fn from(t: &Token) -> Self {
        Loc {
            line: t.line,
            column: t.column,
        }
    }
}

pub(super) type Range = (Expr, Expr);

#[derive(Debug)]
pub(super) struct PortDecl {
    pub name: String,
    pub direction: Direction,
    pub range: Option<Range>,
    pub loc: Loc,
}

#[derive(Debug)]
pub(super) struct ParamDecl {
    pub name: String,
    pub range: Option<Range>,
    pub int_typed: bool,
    pub value: Expr,
    pub loc: Loc,
}

#[derive(Debug)]
pub(super) struct NetDecl {
    pub name: String,
    pub range: Option<Range>,
    pub loc: Loc,
}

#[derive(Debug)]
pub(super) struct AssignDecl {
    pub lhs: String,
    pub rhs: Expr,
    pub loc: Loc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(super) enum Edge {
    Pos,
    Neg,
}

#[derive(Debug)]
pub(super) enum Stmt {
    Block(Vec<Stmt>),
    If {
        cond: Expr,
        then: Box<Stmt>,
        other: Option<Box<Stmt>>,
        loc: Loc,
    },
    NonBlocking {
        target: String,
        value: Expr,
        loc: Loc,
    },
}

#[derive(Debug)]
pub(super) struct AlwaysDecl {
    pub clock: String,
    pub clock_edge: Edge,
    pub reset: Option<(Edge, String)>,
    pub body: Stmt,
    pub loc: Loc,
}

#[derive(Debug)]
pub(super) struct ModuleAst {
    pub name: String,
    pub ports: Vec<PortDecl>,
    pub params: Vec<ParamDecl>,
    pub nets: Vec<NetDecl>,
    pub assigns: Vec<AssignDecl>,
    pub always: Vec<AlwaysDecl>,
}

pub(super) fn parse_module(source: &str) -> Result<ModuleAst, FrontError> {
    let mut p = Parser {
        cur: Cursor::new(tokenize(source)?),
    };
    let m = p.module()?;
    if !p.cur.at(&TokenKind::Eof) {
        return Err(p.unsupported("more than one module per file"));
    }
    Ok(m)
}

struct Parser {
    cur: Cursor,
}

const DATA_TYPES: &[&str] = &["logic", "wire", "reg", "bit"];

impl Parser {
    fn unsupported(&self, what: &str) -> FrontError {
        let t = self.cur.peek();
        FrontError::Unsupported {
            construct: what.to_string(),
            line: t.line,
            column: t.column,
        }
    }

    fn expr(&mut self) -> Result<Expr, FrontError> {
        parse_expr(&mut self.cur, ExprOptions::default())
    }

    fn module(&mut self) -> Result<ModuleAst, FrontError> {
        self.cur.expect_keyword("module")?;
        let (name, _) = self.cur.expect_ident("module name")?;
        let mut m = ModuleAst {
            name,
            ports: Vec::new(),
            params: Vec::new(),
            nets: Vec::new(),
            assigns: Vec::new(),
            always: Vec::new(),
        };
        if self.cur.eat(&TokenKind::Hash) {
            self.cur.expect(&TokenKind::LParen)?;
            loop {
                if !(self.cur.at_keyword("parameter") || self.cur.at_keyword("localparam")) {
                    return Err(SyntaxError::at(self.cur.peek(), "`parameter`").into());
                }
                self.cur.bump();
                self.param_body(&mut m.params)?;
                if !self.cur.eat(&TokenKind::Comma) {
                    break;
                }
            }
            self.cur.expect(&TokenKind::RParen)?;
        }
        if self.cur.eat(&TokenKind::LParen) && !self.cur.eat(&TokenKind::RParen) {
            self.port_list(&mut m.ports)?;
            self.cur.expect(&TokenKind::RParen)?;
        }
        self.cur.expect(&TokenKind::Semi)?;
        loop {
            let tok = self.cur.peek().clone();
            match &tok.kind {
                TokenKind::Ident(w) if w == "endmodule" => {
                    self.cur.bump();
                    return Ok(m);
                }
                TokenKind::Ident(w) if w == "parameter" || w == "localparam" => {
                    self.cur.bump();
                    self.param_body(&mut m.params)?;
                    self.cur.expect(&TokenKind::Semi)?;
                }
                TokenKind::Ident(w) if DATA_TYPES.contains(&w.as_str()) => {
                    self.cur.bump();
                    self.net_decl(&mut m.nets)?;
                }
                TokenKind::Ident(w) if w == "assign" => {
                    self.cur.bump();
                    let (lhs, _) = self.cur.expect_ident("assignment target")?;
                    if self.cur.at(&TokenKind::LBracket) {
                        return Err(self.unsupported("assignment to a bit or part select"));
                    }
                    self.cur.expect(&TokenKind::Assign)?;
                    let rhs = self.expr()?;
                    self.cur.expect(&TokenKind::Semi)?;
                    m.assigns.push(AssignDecl {
                        lhs,
                        rhs,
                        loc: (&tok).into(),
                    });
                }
                TokenKind::Ident(w) if w == "always_ff" || w == "always" => {
                    self.cur.bump();
                    m.always.push(self.always(Loc::from(&tok))?);
                }
                TokenKind::Ident(w) => {
                    let what = match w.as_str() {
                        "always_comb" | "always_latch" | "initial" => format!("`{w}` block"),
                        "generate" | "genvar" | "for" => "generate constructs".into(),
                        "function" | "task" => format!("`{w}` declaration"),
                        "input" | "output" | "inout" => "non-ANSI port declaration".into(),
                        "typedef" | "struct" | "enum" | "interface" | "package" | "import" => {
                            format!("`{w}`")
                        }
                        "module" => "more than one module per file".into(),
                        _ => "module instantiation or unknown item".into(),
                    };
                    return Err(self.unsupported(&what));
                }
                _ => return Err(SyntaxError::at(&tok, "module item or `endmodule`").into()),
            }
        }
    }

    fn range(&mut self) -> Result<Option<Range>, FrontError> {
        if !self.cur.eat(&TokenKind::LBracket) {
            return Ok(None);
        }
        let msb = self.expr()?;
        self.cur.expect(&TokenKind::Colon)?;
        let lsb = self.expr()?;
        self.cur.expect(&TokenKind::RBracket)?;
        Ok(Some((msb, lsb)))
    }

    fn skip_data_type(&mut self) {
        if let TokenKind::Ident(w) = self.cur.peek_kind() {
            if DATA_TYPES.contains(&w.as_str()) {
                self.cur.bump();
            }
        }
    }

    fn reject_signed(&self) -> Result<(), FrontError> {
        if self.cur.at_keyword("signed") || self.cur.at_keyword("unsigned") {
            return Err(self.unsupported("signedness qualifiers"));
        }
        Ok(())
    }

    fn port_list(&mut self, ports: &mut Vec<PortDecl>) -> Result<(), FrontError> {
        let mut direction: Option<Direction> = None;
        let mut range: Option<Range> = None;
        loop {
            let tok = self.cur.peek().clone();
            let dir = if self.cur.eat_keyword("input") {
                Some(Direction::Input)
            } else if self.cur.eat_keyword("output") {
                Some(Direction::Output)
            } else if self.cur.at_keyword("inout") {
                return Err(self.unsupported("inout ports"));
            } else {
                None
            };
            if let Some(d) = dir {
                direction = Some(d);
                self.skip_data_type();
                self.reject_signed()?;
                range = self.range()?;
            }
            let Some(direction) = direction else {
                return Err(SyntaxError::at(&tok, "`input` or `output`").into());
            };
            let (name, name_tok) = self.cur.expect_ident("port name")?;
            ports.push(PortDecl {
                name,
                direction,
                range: range.clone(),
                loc: (&name_tok).into(),
            });
            if !self.cur.eat(&TokenKind::Comma) {
                return Ok(());
            }
        }
    }

    fn param_body(&mut self, params: &mut Vec<ParamDecl>) -> Result<(), FrontError> {
        let mut int_typed = false;
        if self.cur.eat_keyword("int") || self.cur.eat_keyword("integer") {
            int_typed = true;
            self.cur.eat_keyword("unsigned");
        } else {
            self.skip_data_type();
        }
        self.reject_signed()?;
        let range = self.range()?;
        loop {
            let (name, tok) = self.cur.expect_ident("parameter name")?;
            self.cur.expect(&TokenKind::Assign)?;
            let value = self.expr()?;
            params.push(ParamDecl {
                name,
                range: range.clone(),
                int_typed,
                value,
                loc: (&tok).into(),
            });
            // `, NAME = ...` continues this declaration; in a header list a
            // comma followed by `parameter` starts a new one.
            if matches!(self.cur.peek_kind(), TokenKind::Comma)
                && matches!(self.cur.peek_nth(1), TokenKind::Ident(w) if w != "parameter" && w != "localparam")
                && matches!(self.cur.peek_nth(2), TokenKind::Assign)
            {
                self.cur.bump();
                continue;
            }
            return Ok(());
        }
    }

    fn net_decl(&mut self, nets: &mut Vec<NetDecl>) -> Result<(), FrontError> {
        self.reject_signed()?;
        let range = self.range()?;
        loop {
            let (name, tok) = self.cur.expect_ident("net name")?;
            if self.cur.at(&TokenKind::LBracket) {
                return Err(self.unsupported("unpacked arrays"));
            }
            if self.cur.at(&TokenKind::Assign) {
                return Err(self.unsupported("declaration assignments (use `assign`)"));
            }
            nets.push(NetDecl {
                name,
                range: range.clone(),
                loc: (&tok).into(),
            });
            if !self.cur.eat(&TokenKind::Comma) {
                break;
            }
        }
        self.cur.expect(&TokenKind::Semi)?;
        Ok(())
    }

    fn edge(&mut self) -> Result<Edge, FrontError> {
        if self.cur.eat_keyword("posedge") {
            Ok(Edge::Pos)
        } else if self.cur.eat_keyword("negedge") {
            Ok(Edge::Neg)
        } else {
            Err(SyntaxError::at(self.cur.peek(), "`posedge` or `negedge`").into())
        }
    }

    fn always(&mut self, loc: Loc) -> Result<AlwaysDecl, FrontError> {
        self.cur.expect(&TokenKind::At)?;
        self.cur.expect(&TokenKind::LParen)?;
        if self.cur.at(&TokenKind::Star) {
            return Err(self.unsupported("combinational `always @(*)`"));
        }
        let clock_edge = self.edge()?;
        let (clock, _) = self.cur.expect_ident("clock signal")?;
        let mut reset = None;
        if self.cur.eat_keyword("or") || self.cur.eat(&TokenKind::Comma) {
            let e = self.edge()?;
            let (r, _) = self.cur.expect_ident("reset signal")?;
            reset = Some((e, r));
            if self.cur.at_keyword("or") || self.cur.at(&TokenKind::Comma) {
                return Err(self.unsupported("more than one asynchronous event"));
            }
        }
        self.cur.expect(&TokenKind::RParen)?;
        let body = self.stmt()?;
        Ok(AlwaysDecl {
            clock,
            clock_edge,
            reset,
            body,
            loc,
        })
    }

    fn stmt(&mut self) -> Result<Stmt, FrontError> {
        let tok = self.cur.peek().clone();
        if self.cur.eat_keyword("begin") {
            let mut body = Vec::new();
            while !self.cur.eat_keyword("end") {
                if self.cur.at(&TokenKind::Eof) {
                    return Err(SyntaxError::at(self.cur.peek(), "`end`").into());
                }
                body.push(self.stmt()?);
            }
            return Ok(Stmt::Block(body));
        }
        if self.cur.eat_keyword("if") {
            self.cur.expect(&TokenKind::LParen)?;
            let cond = self.expr()?;
            self.cur.expect(&TokenKind::RParen)?;
            let then = Box::new(self.stmt()?);
            let other = if self.cur.eat_keyword("else") {
                Some(Box::new(self.stmt()?))
            } else {
                None
            };
            return Ok(Stmt::If {
                cond,
                then,
                other,
                loc: (&tok).into(),
            });
        }
        if self.cur.at_keyword("case") || self.cur.at_keyword("unique") || self.cur.at_keyword("priority") {
            return Err(self.unsupported("case statements"));
        }
        let (target, _) = self.cur.expect_ident("statement")?;
        if self.cur.at(&TokenKind::LBracket) {
            return Err(self.unsupported("assignment to a bit or part select"));
        }
        if self.cur.at(&TokenKind::Assign) {
            return Err(SyntaxError::at(self.cur.peek(), "nonblocking `<=` in a clocked block").into());
        }
        self.cur.expect(&TokenKind::NonBlocking)?;
        let value = self.expr()?;
        self.cur.expect(&TokenKind::Semi)?;
        Ok(Stmt::NonBlocking {
            target,
            value,
            loc: (&tok).into(),
        })
    }
}
