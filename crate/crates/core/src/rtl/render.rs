// SPDX-License-Identifier: Apache-2.0

use std::fmt::Write;

use crate::expr::Const;

use super::{Direction, NetKind, Netlist};

fn range(width: u32) -> String {
    if width == 1 {
        String::new()
    } else {
        format!(" [{}:0]", width - 1)
    }
}

/// Canonical text: ports in order, parameters as folded `localparam`s,
/// internal nets sorted by name, assigns in stored order and one
/// `always_ff` block per register.
pub(super) fn render(n: &Netlist) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "module {} (", n.name);
    for (i, p) in n.ports.iter().enumerate() {
        let dir = match p.direction {
            Direction::Input => "input ",
            Direction::Output => "output",
        };
        let sep = if i + 1 == n.ports.len() { "" } else { "," };
        let _ = writeln!(out, "  {dir} logic{} {}{sep}", range(p.width), p.name);
    }
    out.push_str(");\n");
    for (name, c) in &n.params {
        match c.width {
            Some(w) => {
                let _ = writeln!(out, "  localparam logic{} {name} = {};", range(w), Const::sized(c.value, w));
            }
            None => {
                let _ = writeln!(out, "  localparam {name} = {};", c.value);
            }
        }
    }
    for net in n.nets.values() {
        if matches!(net.kind, NetKind::Input | NetKind::Output) {
            continue;
        }
        let _ = writeln!(out, "  logic{} {};", range(net.width), net.name);
    }
    for a in &n.assigns {
        let _ = writeln!(out, "  assign {} = {};", a.lhs, a.rhs);
    }
    for r in &n.registers {
        let width = n.nets.get(&r.target).map_or(1, |x| x.width);
        match &r.reset {
            None => {
                let _ = writeln!(out, "  always_ff @(posedge {}) {} <= {};", r.clock, r.target, r.next);
            }
            Some(rst) => {
                let (edge, test) = if rst.active_high {
                    ("posedge", rst.net.clone())
                } else {
                    ("negedge", format!("!{}", rst.net))
                };
                let _ = writeln!(out, "  always_ff @(posedge {} or {edge} {}) begin", r.clock, rst.net);
                let _ = writeln!(out, "    if ({test}) {} <= {};", r.target, Const::sized(rst.value, width));
                let _ = writeln!(out, "    else {} <= {};", r.target, r.next);
                out.push_str("  end\n");
            }
        }
    }
    out.push_str("endmodule\n");
    out
}
