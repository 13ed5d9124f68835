// SPDX-License-Identifier: Apache-2.0

//! Elaborated single-module RTL netlists.
//!
//! The accepted input language is a small synthesizable subset: one module
//! with ANSI ports, `parameter`/`localparam` integer constants, `logic`
//! declarations, `assign`, and `always_ff @(posedge clk ...)` blocks built
//! from `if`/`else` and nonblocking assignments. See `docs/rtl-subset.md`.

mod closure;
mod elaborate;
mod parser;
mod render;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::expr::{Const, Expr, FrontError};

pub use closure::{combinational_closure, CombinationalLoopError};
pub use elaborate::{ElaborationError, ElaborationErrorKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Input,
    Output,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Port {
    pub name: String,
    pub direction: Direction,
    pub width: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NetKind {
    Input,
    Output,
    Internal,
    Register,
    Constant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Net {
    pub name: String,
    pub width: u32,
    pub kind: NetKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assign {
    pub lhs: String,
    pub rhs: Expr,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Reset {
    pub net: String,
    pub active_high: bool,
    pub value: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Register {
    pub target: String,
    pub next: Expr,
    pub clock: String,
    pub reset: Option<Reset>,
}

/// Which construct drives a net.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Driver {
    Input,
    Assign(usize),
    Register(usize),
    Undriven,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Netlist {
    pub name: String,
    pub ports: Vec<Port>,
    pub nets: BTreeMap<String, Net>,
    pub assigns: Vec<Assign>,
    pub registers: Vec<Register>,
    pub params: BTreeMap<String, Const>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RtlError {
    #[error(transparent)]
    Syntax(#[from] FrontError),
    #[error(transparent)]
    Elaboration(#[from] ElaborationError),
}

impl RtlError {
    /// Diagnostic text with line/column and the offending source line.
    pub fn render(&self, source: &str) -> String {
        match self {
            RtlError::Syntax(e) => e.render(source),
            RtlError::Elaboration(e) => {
                crate::lexer::render_excerpt(source, e.line, e.column, &e.kind.to_string())
            }
        }
    }
}

/// Parses and elaborates one module of RTL text.
pub fn parse_design(source: &str) -> Result<Netlist, RtlError> {
    let ast = parser::parse_module(source)?;
    Ok(elaborate::elaborate(&ast)?)
}

impl Netlist {
    pub fn net(&self, name: &str) -> Option<&Net> {
        self.nets.get(name)
    }

    pub fn width_of(&self, name: &str) -> Option<Option<u32>> {
        if let Some(net) = self.nets.get(name) {
            Some(Some(net.width))
        } else {
            self.params.get(name).map(|c| c.width)
        }
    }

    pub fn is_param(&self, name: &str) -> bool {
        self.params.contains_key(name)
    }

    /// True for any identifier an expression may legally reference.
    pub fn resolves(&self, name: &str) -> bool {
        self.nets.contains_key(name) || self.params.contains_key(name)
    }

    pub fn inputs(&self) -> impl Iterator<Item = &Port> {
        self.ports.iter().filter(|p| p.direction == Direction::Input)
    }

    pub fn outputs(&self) -> impl Iterator<Item = &Port> {
        self.ports.iter().filter(|p| p.direction == Direction::Output)
    }

    pub fn driver(&self, name: &str) -> Driver {
        if let Some(i) = self.assigns.iter().position(|a| a.lhs == name) {
            return Driver::Assign(i);
        }
        if let Some(i) = self.registers.iter().position(|r| r.target == name) {
            return Driver::Register(i);
        }
        match self.nets.get(name) {
            Some(n) if n.kind == NetKind::Input => Driver::Input,
            _ => Driver::Undriven,
        }
    }

    /// The driving expression of a net, if any.
    pub fn driving_expr(&self, name: &str) -> Option<&Expr> {
        match self.driver(name) {
            Driver::Assign(i) => Some(&self.assigns[i].rhs),
            Driver::Register(i) => Some(&self.registers[i].next),
            _ => None,
        }
    }

    /// The single clock net, taken from the registers or, for purely
    /// combinational modules, from a 1-bit input named like a clock.
    pub fn clock(&self) -> Option<&str> {
        if let Some(r) = self.registers.first() {
            return Some(&r.clock);
        }
        self.inputs()
            .find(|p| p.width == 1 && is_clock_name(&p.name))
            .map(|p| p.name.as_str())
    }

    /// The reset input and its active level, if the design has one.
    pub fn reset(&self) -> Option<(&str, bool)> {
        if let Some(r) = self.registers.iter().find_map(|r| r.reset.as_ref()) {
            return Some((&r.net, r.active_high));
        }
        self.inputs()
            .find(|p| p.width == 1 && is_reset_name(&p.name))
            .map(|p| (p.name.as_str(), !is_active_low_name(&p.name)))
    }

    /// Number of references to `name` across all driving expressions,
    /// register clocks and resets.
    pub fn reference_count(&self, name: &str) -> usize {
        let mut n = 0;
        let mut count = |e: &Expr| e.visit_identifiers(&mut |id| n += (id == name) as usize);
        for a in &self.assigns {
            count(&a.rhs);
        }
        for r in &self.registers {
            count(&r.next);
        }
        n + self
            .registers
            .iter()
            .map(|r| {
                (r.clock == name) as usize + r.reset.as_ref().is_some_and(|x| x.net == name) as usize
            })
            .sum::<usize>()
    }

    /// SHA-256 of the canonical rendering, hex encoded.
    pub fn design_hash(&self) -> String {
        hex::encode(Sha256::digest(self.render().as_bytes()))
    }

    pub fn render(&self) -> String {
        render::render(self)
    }
}

pub(crate) fn is_clock_name(name: &str) -> bool {
    let n = name.to_ascii_lowercase();
    n == "clk" || n.starts_with("clk_") || n.ends_with("_clk") || n == "clock"
}

pub(crate) fn is_reset_name(name: &str) -> bool {
    let n = name.to_ascii_lowercase();
    n.starts_with("rst") || n.starts_with("reset")
}

fn is_active_low_name(name: &str) -> bool {
    let n = name.to_ascii_lowercase();
    n.ends_with("_n") || n.ends_with("_ni") || n.ends_with("_b")
}
