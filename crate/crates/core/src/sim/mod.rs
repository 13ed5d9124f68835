// SPDX-License-Identifier: Apache-2.0

//! Two-state cycle simulation and the assertion monitor.
//!
//! Each cycle applies inputs, holds asynchronously reset registers at their
//! reset value, settles the continuous assigns in dependency order, records
//! the snapshot that assertions sample, and finally clocks the registers.

mod compile;
mod monitor;
mod vcd;

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{mask, Const, Expr};
use crate::graph::UnknownSignalError;
use crate::rtl::{combinational_closure, CombinationalLoopError, NetKind, Netlist};

pub(crate) use compile::{Binding, Node};
pub use monitor::{check_assertions, AssertionVerdict, Failure, Status, VerdictSummary};
pub use vcd::write_vcd;

/// Input values for each cycle. Clock inputs are implicit.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Stimulus {
    pub inputs: Vec<BTreeMap<String, u64>>,
    /// Leading cycles during which the reset input is forced active.
    #[serde(default)]
    pub reset_cycles: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StimulusError {
    #[error("cycle {cycle}: `{name}` is not a primary input")]
    NotAnInput { cycle: usize, name: String },
    #[error("cycle {cycle}: value {value:#x} does not fit `{name}` ({width} bits)")]
    TooWide {
        cycle: usize,
        name: String,
        value: u64,
        width: u32,
    },
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Loop(#[from] CombinationalLoopError),
    #[error(transparent)]
    Stimulus(#[from] StimulusError),
}

/// Either `[{...}, ...]` or `{"reset_cycles": n, "inputs": [...]}`.
#[derive(Deserialize)]
#[serde(untagged)]
enum StimulusFile {
    Cycles(Vec<BTreeMap<String, u64>>),
    Full {
        #[serde(default)]
        reset_cycles: usize,
        inputs: Vec<BTreeMap<String, u64>>,
    },
}

impl Stimulus {
    /// Every non-clock input driven explicitly: 0, or the inactive level for
    /// the reset input.
    pub fn idle(netlist: &Netlist, cycles: usize) -> Self {
        let clock = netlist.clock();
        let reset = netlist.reset();
        let mut base = BTreeMap::new();
        for p in netlist.inputs() {
            if Some(p.name.as_str()) == clock {
                continue;
            }
            let v = match reset {
                Some((r, active_high)) if r == p.name => (!active_high) as u64,
                _ => 0,
            };
            base.insert(p.name.clone(), v);
        }
        Stimulus {
            inputs: vec![base; cycles],
            reset_cycles: 0,
        }
    }

    pub fn cycles(&self) -> usize {
        self.inputs.len()
    }

    pub fn set(&mut self, cycle: usize, name: &str, value: u64) {
        self.inputs[cycle].insert(name.to_string(), value);
    }

    pub fn validate(&self, netlist: &Netlist) -> Result<(), StimulusError> {
        for (cycle, m) in self.inputs.iter().enumerate() {
            for (name, &value) in m {
                let net = netlist.net(name).filter(|n| n.kind == NetKind::Input).ok_or_else(|| {
                    StimulusError::NotAnInput {
                        cycle,
                        name: name.clone(),
                    }
                })?;
                if value & !mask(net.width) != 0 {
                    return Err(StimulusError::TooWide {
                        cycle,
                        name: name.clone(),
                        value,
                        width: net.width,
                    });
                }
            }
        }
        Ok(())
    }

    /// Per-cycle maps with reset and defaults written out, so the file alone
    /// reproduces the run.
    pub fn materialized(&self, netlist: &Netlist) -> Vec<BTreeMap<String, u64>> {
        let idle = Stimulus::idle(netlist, 1).inputs.remove(0);
        let reset = netlist.reset();
        self.inputs
            .iter()
            .enumerate()
            .map(|(c, m)| {
                let mut full = idle.clone();
                full.extend(m.iter().map(|(k, v)| (k.clone(), *v)));
                if let Some((r, active_high)) = reset {
                    if c < self.reset_cycles {
                        full.insert(r.to_string(), active_high as u64);
                    }
                }
                full
            })
            .collect()
    }

    pub fn to_json(&self, netlist: &Netlist) -> String {
        serde_json::to_string_pretty(&self.materialized(netlist)).expect("maps serialize")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        Ok(match serde_json::from_str(text)? {
            StimulusFile::Cycles(inputs) => Stimulus {
                inputs,
                reset_cycles: 0,
            },
            StimulusFile::Full {
                reset_cycles,
                inputs,
            } => Stimulus {
                inputs,
                reset_cycles,
            },
        })
    }
}

/// Net names, widths and constants shared by every trace of one design.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    pub names: Vec<String>,
    pub widths: Vec<u32>,
    pub params: BTreeMap<String, Const>,
    pub clock: Option<String>,
    index: HashMap<String, u32>,
}

impl Layout {
    fn new(netlist: &Netlist) -> Self {
        let names: Vec<String> = netlist.nets.keys().cloned().collect();
        let widths = netlist.nets.values().map(|n| n.width).collect();
        let index = names
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), i as u32))
            .collect();
        Layout {
            names,
            widths,
            params: netlist.params.clone(),
            clock: netlist.clock().map(String::from),
            index,
        }
    }

    pub fn slot(&self, name: &str) -> Option<u32> {
        self.index.get(name).copied()
    }

    pub(crate) fn binding(&self, name: &str) -> Option<Binding> {
        if let Some(slot) = self.slot(name) {
            return Some(Binding::Slot {
                slot,
                width: self.widths[slot as usize],
            });
        }
        self.params.get(name).map(|c| Binding::Const {
            value: c.value,
            width: c.width,
        })
    }
}

/// Values of every net at every cycle, sampled after the combinational
/// logic settles and before the registers update.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trace {
    pub layout: Arc<Layout>,
    values: Vec<u64>,
    cycles: usize,
}

impl Trace {
    pub fn cycles(&self) -> usize {
        self.cycles
    }

    pub fn value(&self, cycle: usize, name: &str) -> Option<u64> {
        let s = self.layout.slot(name)?;
        (cycle < self.cycles).then(|| self.at(cycle, s))
    }

    #[inline]
    pub(crate) fn at(&self, cycle: usize, slot: u32) -> u64 {
        self.values[cycle * self.layout.names.len() + slot as usize]
    }

    /// Per-cycle values of `e`. `$past` before cycle 0 reads 0.
    pub fn eval(&self, e: &Expr) -> Result<Vec<u64>, UnknownSignalError> {
        let node = compile_on(&self.layout, e)?;
        Ok((0..self.cycles)
            .map(|c| {
                node.eval(
                    &|slot, back| {
                        if c >= back as usize {
                            self.at(c - back as usize, slot)
                        } else {
                            0
                        }
                    },
                    0,
                )
            })
            .collect())
    }

    /// First cycle and net at which two traces of the same design differ.
    pub fn first_difference(&self, other: &Trace) -> Option<(usize, String)> {
        let n = self.layout.names.len();
        let i = self
            .values
            .iter()
            .zip(&other.values)
            .position(|(a, b)| a != b)
            .or_else(|| (self.values.len() != other.values.len()).then(|| self.values.len().min(other.values.len())))?;
        Some((i / n.max(1), self.layout.names.get(i % n.max(1)).cloned().unwrap_or_default()))
    }

    /// One cycle as a name → value map.
    pub fn snapshot(&self, cycle: usize) -> BTreeMap<String, u64> {
        self.layout
            .names
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), self.at(cycle, i as u32)))
            .collect()
    }
}

fn compile_on(layout: &Layout, e: &Expr) -> Result<Node, UnknownSignalError> {
    let mut missing = None;
    e.visit_identifiers(&mut |n| {
        if missing.is_none() && layout.binding(n).is_none() {
            missing = Some(n.to_string());
        }
    });
    if let Some(m) = missing {
        return Err(UnknownSignalError(m));
    }
    Node::compile(e, &|n| layout.binding(n)).map_err(UnknownSignalError)
}

struct CompiledRegister {
    slot: u32,
    next: Node,
    reset: Option<(u32, bool, u64)>,
}

/// A netlist lowered for repeated simulation.
pub struct Simulator {
    layout: Arc<Layout>,
    assigns: Vec<(u32, Node)>,
    registers: Vec<CompiledRegister>,
    clock: Option<u32>,
    reset: Option<(u32, bool)>,
    inputs: Vec<(String, u32)>,
    idle: Vec<u64>,
}

impl Simulator {
    pub fn new(netlist: &Netlist) -> Result<Self, CombinationalLoopError> {
        let layout = Arc::new(Layout::new(netlist));
        let bind = |n: &str| layout.binding(n);
        let compile = |e| Node::compile(e, &bind).expect("elaborated expressions resolve");
        let assigns = combinational_closure(netlist)?
            .into_iter()
            .map(|a| (layout.slot(&a.lhs).expect("assign target is a net"), compile(&a.rhs)))
            .collect();
        let registers = netlist
            .registers
            .iter()
            .map(|r| CompiledRegister {
                slot: layout.slot(&r.target).expect("register target is a net"),
                next: compile(&r.next),
                reset: r.reset.as_ref().map(|x| {
                    (layout.slot(&x.net).expect("reset is a net"), x.active_high, x.value)
                }),
            })
            .collect();
        let clock = netlist.clock().and_then(|c| layout.slot(c));
        let reset = netlist
            .reset()
            .and_then(|(r, high)| layout.slot(r).map(|s| (s, high)));
        let inputs = netlist
            .inputs()
            .map(|p| (p.name.clone(), layout.slot(&p.name).expect("port is a net")))
            .collect();
        let mut idle = vec![0u64; layout.names.len()];
        for r in &netlist.registers {
            if let Some(x) = &r.reset {
                idle[layout.slot(&r.target).unwrap() as usize] = x.value;
            }
        }
        if let Some((s, high)) = reset {
            idle[s as usize] = (!high) as u64;
        }
        Ok(Simulator {
            layout,
            assigns,
            registers,
            clock,
            reset,
            inputs,
            idle,
        })
    }

    pub fn layout(&self) -> &Arc<Layout> {
        &self.layout
    }

    /// Re-evaluates every assign in dependency order over `state`.
    pub(crate) fn settle(&self, state: &mut [u64]) {
        for (slot, e) in &self.assigns {
            let v = e.eval(&|s, _| state[s as usize], 0);
            state[*slot as usize] = v;
        }
    }

    /// Compiled assigns in evaluation order, keyed by target slot.
    pub(crate) fn assigns(&self) -> &[(u32, Node)] {
        &self.assigns
    }

    pub(crate) fn compile(&self, e: &Expr) -> Result<Node, UnknownSignalError> {
        compile_on(&self.layout, e)
    }

    pub fn run(&self, stimulus: &Stimulus) -> Trace {
        let cycles = stimulus.cycles();
        self.run_with(cycles, stimulus.reset_cycles, |c, slot_of, state| {
            for (_, s) in &self.inputs {
                state[*s as usize] = self.idle[*s as usize];
            }
            for (name, &v) in &stimulus.inputs[c] {
                if let Some(s) = slot_of(name) {
                    state[s as usize] = v;
                }
            }
        })
    }

    /// Runs `cycles` cycles, calling `drive(cycle, slot_of, state)` to set
    /// input slots. Inputs keep their previous value unless driven.
    pub fn run_with(
        &self,
        cycles: usize,
        reset_cycles: usize,
        mut drive: impl FnMut(usize, &dyn Fn(&str) -> Option<u32>, &mut [u64]),
    ) -> Trace {
        let n = self.layout.names.len();
        let mut state = self.idle.clone();
        let mut values = Vec::with_capacity(cycles * n);
        let mut next = Vec::with_capacity(self.registers.len());
        let input_slot = |name: &str| {
            self.inputs
                .iter()
                .find(|(n, _)| n == name)
                .map(|(_, s)| *s)
                .filter(|s| Some(*s) != self.clock)
        };
        for c in 0..cycles {
            drive(c, &input_slot, &mut state);
            if let Some(clk) = self.clock {
                state[clk as usize] = 1;
            }
            if let Some((r, high)) = self.reset {
                if c < reset_cycles {
                    state[r as usize] = high as u64;
                }
            }
            for reg in &self.registers {
                if let Some((r, high, value)) = reg.reset {
                    if (state[r as usize] != 0) == high {
                        state[reg.slot as usize] = value;
                    }
                }
            }
            self.settle(&mut state);
            values.extend_from_slice(&state);
            next.clear();
            for reg in &self.registers {
                let v = match reg.reset {
                    Some((r, high, value)) if (state[r as usize] != 0) == high => value,
                    _ => reg.next.eval(&|s, _| state[s as usize], 0),
                };
                next.push(v);
            }
            for (reg, v) in self.registers.iter().zip(&next) {
                state[reg.slot as usize] = *v;
            }
        }
        Trace {
            layout: self.layout.clone(),
            values,
            cycles,
        }
    }
}

/// Validates the stimulus and simulates.
pub fn simulate(netlist: &Netlist, stimulus: &Stimulus) -> Result<Trace, SimError> {
    stimulus.validate(netlist)?;
    Ok(Simulator::new(netlist)?.run(stimulus))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::eval;
    use crate::rtl::parse_design;

    #[test]
    fn irq_handle_all_zero_inputs() {
        let n = parse_design(include_str!("../../corpus/reference/irq_handle.sv")).unwrap();
        let t = simulate(&n, &Stimulus::idle(&n, 8)).unwrap();
        for c in 0..8 {
            assert_eq!(t.value(c, "handle_irq"), Some(0));
        }
    }

    #[test]
    fn irq_handle_matches_reference_evaluator() {
        let n = parse_design(include_str!("../../corpus/reference/irq_handle.sv")).unwrap();
        let inputs: Vec<_> = n.inputs().map(|p| (p.name.clone(), p.width)).collect();
        let bits: u32 = inputs.iter().map(|(_, w)| w).sum();
        let mut stim = Stimulus::idle(&n, 1 << bits);
        for v in 0..(1u64 << bits) {
            let mut shift = 0;
            for (name, w) in &inputs {
                stim.set(v as usize, name, (v >> shift) & mask(*w));
                shift += w;
            }
        }
        let t = simulate(&n, &stim).unwrap();
        for c in 0..t.cycles() {
            let snap = t.snapshot(c);
            let lookup = |name: &str| {
                snap.get(name)
                    .map(|v| (*v, n.width_of(name).flatten()))
                    .or_else(|| n.params.get(name).map(|k| (k.value, k.width)))
            };
            let en = eval(n.driving_expr("irq_enabled").unwrap(), &lookup).unwrap().0;
            assert_eq!(snap["irq_enabled"], en);
            let h = eval(n.driving_expr("handle_irq").unwrap(), &lookup).unwrap().0;
            assert_eq!(snap["handle_irq"], h);
        }
    }

    #[test]
    fn register_delays_one_cycle() {
        let n = parse_design("module r(input logic clk, input logic d, output logic q);\n always_ff @(posedge clk) q <= d;\nendmodule").unwrap();
        let mut s = Stimulus::idle(&n, 3);
        s.set(0, "d", 1);
        let t = simulate(&n, &s).unwrap();
        assert_eq!(t.value(0, "q"), Some(0));
        assert_eq!(t.value(1, "q"), Some(1));
        assert_eq!(t.value(2, "q"), Some(0));
        assert_eq!(t.value(0, "clk"), Some(1));
    }

    #[test]
    fn async_reset_holds_register() {
        let src = "module r(input logic clk, input logic rst_ni, input logic [3:0] d, output logic [3:0] q);\n always_ff @(posedge clk or negedge rst_ni) begin\n if (!rst_ni) q <= 4'h5; else q <= d;\n end\nendmodule";
        let n = parse_design(src).unwrap();
        let mut s = Stimulus::idle(&n, 4);
        s.reset_cycles = 2;
        for c in 0..4 {
            s.set(c, "d", 9);
        }
        let t = simulate(&n, &s).unwrap();
        let q: Vec<_> = (0..4).map(|c| t.value(c, "q").unwrap()).collect();
        assert_eq!(q, vec![5, 5, 5, 9]);
        assert_eq!(t.value(0, "rst_ni"), Some(0));
        assert_eq!(t.value(2, "rst_ni"), Some(1));
    }

    #[test]
    fn stimulus_errors() {
        let n = parse_design(include_str!("../../corpus/reference/irq_handle.sv")).unwrap();
        let mut s = Stimulus::idle(&n, 1);
        s.set(0, "handle_irq", 1);
        assert!(matches!(simulate(&n, &s), Err(SimError::Stimulus(StimulusError::NotAnInput { .. }))));
        let mut s = Stimulus::idle(&n, 1);
        s.set(0, "priv_mode_i", 4);
        assert!(matches!(simulate(&n, &s), Err(SimError::Stimulus(StimulusError::TooWide { .. }))));
    }

    #[test]
    fn stimulus_json_round_trip() {
        let n = parse_design("module r(input logic clk, input logic rst_ni, input logic d, output logic q);\n always_ff @(posedge clk or negedge rst_ni) if (!rst_ni) q <= 1'b0; else q <= d;\nendmodule").unwrap();
        let mut s = Stimulus::idle(&n, 3);
        s.reset_cycles = 1;
        s.set(2, "d", 1);
        let text = s.to_json(&n);
        let back = Stimulus::from_json(&text).unwrap();
        assert_eq!(back.inputs[0]["rst_ni"], 0);
        assert_eq!(back.inputs[1]["rst_ni"], 1);
        let a = simulate(&n, &s).unwrap();
        let b = simulate(&n, &back).unwrap();
        assert_eq!(a.values, b.values);
        let full = Stimulus::from_json(r#"{"reset_cycles": 2, "inputs": [{}, {}, {"d": 1}]}"#).unwrap();
        assert_eq!(full.reset_cycles, 2);
    }
}
