// SPDX-License-Identifier: Apache-2.0

//! Rule-based hardware Trojans: a single conjunctive trigger cube over
//! readable bits, and a payload that mutates one driven net while the
//! trigger holds.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::RngExt;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{mask, BinaryOp, Const, Expr};
use crate::graph::DependencyGraph;
use crate::rng::substream;
use crate::rtl::{combinational_closure, Driver, NetKind, Netlist};
use crate::sim::{check_assertions, Simulator, Status, Stimulus};
use crate::sva::Assertion;
use crate::translate::{drivable_inputs, generate_testcase, TranslationConfig, RESET_CYCLES};

/// One trigger condition: a single bit, or the whole signal when `bit` is
/// `None`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TriggerTerm {
    pub signal: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bit: Option<u32>,
    pub value: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Payload {
    InvertNet { net: String },
    ForceConstant { net: String, value: u64 },
    /// XORs `mask` into the net's driving expression.
    XorIntoAssign { net: String, mask: u64 },
}

impl Payload {
    pub fn net(&self) -> &str {
        match self {
            Payload::InvertNet { net } | Payload::ForceConstant { net, .. } | Payload::XorIntoAssign { net, .. } => net,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModuleKind {
    Combinational,
    Sequential,
}

impl ModuleKind {
    pub fn of(netlist: &Netlist) -> Self {
        if netlist.registers.is_empty() {
            ModuleKind::Combinational
        } else {
            ModuleKind::Sequential
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrojanSpec {
    pub id: String,
    pub trigger: Vec<TriggerTerm>,
    pub k: u32,
    pub payload: Payload,
    pub module_kind: ModuleKind,
    /// Assertion whose cone the Trojan was placed in, if forged.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_assertion: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TrojanError {
    #[error("need {needed} trigger bits but the assertion cone offers {available}")]
    InsufficientSignals { needed: u32, available: u32 },
    #[error("payload on `{net}` conflicts with its existing driver: {reason}")]
    PayloadConflict { net: String, reason: String },
    #[error("invalid Trojan spec `{id}`: {reason}")]
    InvalidSpec { id: String, reason: String },
    #[error("no activating stimulus for `{id}` after {tried} candidates ({method})")]
    ActivationNotFound { id: String, tried: usize, method: String },
    #[error("Trojan spec: {0}")]
    Json(String),
}

impl TrojanSpec {
    pub fn from_json(text: &str, netlist: &Netlist) -> Result<Self, TrojanError> {
        let spec: TrojanSpec = serde_json::from_str(text).map_err(|e| TrojanError::Json(e.to_string()))?;
        spec.validate(netlist)?;
        Ok(spec)
    }

    /// The trigger as a boolean expression over the design's nets.
    pub fn trigger_expr(&self, netlist: &Netlist) -> Expr {
        Expr::all_of(self.trigger.iter().map(|t| match t.bit {
            Some(b) => Expr::binary(
                BinaryOp::Eq,
                Expr::Bit {
                    name: t.signal.clone(),
                    index: b,
                },
                Expr::Const(Const::sized(t.value, 1)),
            ),
            None => {
                let w = netlist.net(&t.signal).map_or(1, |n| n.width);
                Expr::binary(BinaryOp::Eq, Expr::ident(&t.signal), Expr::Const(Const::sized(t.value, w)))
            }
        }))
        .unwrap_or(Expr::Const(Const::sized(0, 1)))
    }

    /// Trigger bits as (signal, bit) pairs.
    pub fn trigger_bits(&self, netlist: &Netlist) -> Vec<(String, u32)> {
        let mut out = Vec::new();
        for t in &self.trigger {
            match t.bit {
                Some(b) => out.push((t.signal.clone(), b)),
                None => {
                    let w = netlist.net(&t.signal).map_or(0, |n| n.width);
                    out.extend((0..w).map(|b| (t.signal.clone(), b)));
                }
            }
        }
        out
    }

    pub fn validate(&self, netlist: &Netlist) -> Result<(), TrojanError> {
        let bad = |reason: String| TrojanError::InvalidSpec {
            id: self.id.clone(),
            reason,
        };
        if self.trigger.is_empty() {
            return Err(bad("empty trigger".into()));
        }
        let clock = netlist.clock();
        let reset = netlist.reset().map(|r| r.0);
        for t in &self.trigger {
            let net = netlist
                .net(&t.signal)
                .ok_or_else(|| bad(format!("trigger signal `{}` is not a net", t.signal)))?;
            if Some(t.signal.as_str()) == clock || Some(t.signal.as_str()) == reset {
                return Err(bad(format!("trigger reads clock or reset `{}`", t.signal)));
            }
            let w = match t.bit {
                Some(b) if b >= net.width => {
                    return Err(bad(format!("bit {b} is outside `{}` ({} bits)", t.signal, net.width)))
                }
                Some(_) => 1,
                None => net.width,
            };
            if t.value & !mask(w) != 0 {
                return Err(bad(format!("value {:#x} does not fit `{}`", t.value, t.signal)));
            }
        }
        let bits = self.trigger_bits(netlist);
        if bits.iter().collect::<BTreeSet<_>>().len() != bits.len() {
            return Err(bad("a trigger bit is constrained twice".into()));
        }
        if self.k == 0 || self.k as usize != bits.len() {
            return Err(bad(format!("k = {} but the trigger constrains {} bits", self.k, bits.len())));
        }
        let target = self.payload.net();
        let net = netlist
            .net(target)
            .ok_or_else(|| bad(format!("payload target `{target}` is not a net")))?;
        match &self.payload {
            Payload::ForceConstant { value: v, .. } | Payload::XorIntoAssign { mask: v, .. }
                if v & !mask(net.width) != 0 =>
            {
                return Err(bad(format!("payload constant {v:#x} does not fit `{target}`")))
            }
            _ => {}
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InjectedDesign {
    pub netlist: Netlist,
    pub original_hash: String,
    pub spec_id: String,
}

fn payload_expr(p: &Payload, orig: &Expr, width: u32) -> Expr {
    match p {
        Payload::InvertNet { .. } => Expr::binary(BinaryOp::Xor, orig.clone(), Expr::Const(Const::sized(mask(width), width))),
        Payload::ForceConstant { value, .. } => Expr::Const(Const::sized(*value, width)),
        Payload::XorIntoAssign { mask: m, .. } => {
            Expr::binary(BinaryOp::Xor, orig.clone(), Expr::Const(Const::sized(*m, width)))
        }
    }
}

/// Guards the payload with the trigger. Ports, widths and the module name
/// are left untouched; no net is added.
pub fn inject(netlist: &Netlist, spec: &TrojanSpec) -> Result<InjectedDesign, TrojanError> {
    spec.validate(netlist)?;
    let target = spec.payload.net();
    let width = netlist.net(target).map_or(1, |n| n.width);
    let trigger = spec.trigger_expr(netlist);
    let guard = |orig: &Expr| Expr::ternary(trigger.clone(), payload_expr(&spec.payload, orig, width), orig.clone());
    let mut out = netlist.clone();
    match netlist.driver(target) {
        Driver::Assign(i) => out.assigns[i].rhs = guard(&netlist.assigns[i].rhs),
        Driver::Register(i) => out.registers[i].next = guard(&netlist.registers[i].next),
        Driver::Input => {
            return Err(TrojanError::PayloadConflict {
                net: target.to_string(),
                reason: "primary inputs are driven outside the module".into(),
            })
        }
        Driver::Undriven => {
            return Err(TrojanError::PayloadConflict {
                net: target.to_string(),
                reason: "the net has no driver to guard; adding one would change the design".into(),
            })
        }
    }
    if let Err(e) = combinational_closure(&out) {
        return Err(TrojanError::PayloadConflict {
            net: target.to_string(),
            reason: e.to_string(),
        });
    }
    Ok(InjectedDesign {
        netlist: out,
        original_hash: netlist.design_hash(),
        spec_id: spec.id.clone(),
    })
}

/// Per-cycle trigger values of `spec` on a run of `netlist`.
pub fn trigger_trace(netlist: &Netlist, spec: &TrojanSpec, stimulus: &Stimulus) -> Vec<bool> {
    let trace = Simulator::new(netlist).expect("validated netlist").run(stimulus);
    trace
        .eval(&spec.trigger_expr(netlist))
        .expect("validated trigger")
        .into_iter()
        .map(|v| v != 0)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActivationConfig {
    pub horizon: usize,
    pub seed: u64,
    pub budget: usize,
    pub exhaustive_bits: u32,
}

impl Default for ActivationConfig {
    fn default() -> Self {
        ActivationConfig {
            horizon: 8,
            seed: 0,
            budget: 10_000,
            exhaustive_bits: 20,
        }
    }
}

/// A stimulus under which the trigger holds in at least one cycle. Triggers
/// over primary inputs are driven directly; others are searched.
pub fn activation_stimulus(
    spec: &TrojanSpec,
    netlist: &Netlist,
    config: &ActivationConfig,
) -> Result<Stimulus, TrojanError> {
    spec.validate(netlist)?;
    let reset_cycles = if netlist.reset().is_some() { RESET_CYCLES } else { 0 };
    let cycles = config.horizon.max(reset_cycles + 1);
    let sim = Simulator::new(netlist).map_err(|e| TrojanError::InvalidSpec {
        id: spec.id.clone(),
        reason: e.to_string(),
    })?;
    let trigger = spec.trigger_expr(netlist);
    let fires = |stim: &Stimulus| sim.run(stim).eval(&trigger).is_ok_and(|v| v.iter().any(|&x| x != 0));
    let mut base = Stimulus::idle(netlist, cycles);
    base.reset_cycles = reset_cycles;
    let inputs = drivable_inputs(netlist);
    let is_input = |n: &str| inputs.iter().any(|(i, _)| i == n);

    if spec.trigger.iter().all(|t| is_input(&t.signal)) {
        let mut stim = base.clone();
        for t in &spec.trigger {
            let old = stim.inputs[reset_cycles][&t.signal];
            let v = match t.bit {
                Some(b) => (old & !(1 << b)) | (t.value << b),
                None => t.value,
            };
            stim.set(reset_cycles, &t.signal, v);
        }
        if fires(&stim) {
            return Ok(stim);
        }
    }

    let graph = DependencyGraph::build(netlist);
    let signals: BTreeSet<String> = spec.trigger.iter().map(|t| t.signal.clone()).collect();
    let cone = graph.cone(&signals);
    let cone_inputs: Vec<&(String, u32)> = inputs.iter().filter(|(n, _)| cone.contains(n)).collect();
    let bits: u32 = cone_inputs.iter().map(|(_, w)| w).sum();
    if bits <= config.exhaustive_bits {
        for v in 0..(1u64 << bits) {
            let mut stim = base.clone();
            let mut shift = 0;
            for (name, w) in &cone_inputs {
                for c in reset_cycles..cycles {
                    stim.set(c, name, (v >> shift) & mask(*w));
                }
                shift += w;
            }
            if fires(&stim) {
                return Ok(stim);
            }
        }
        return Err(TrojanError::ActivationNotFound {
            id: spec.id.clone(),
            tried: 1 << bits,
            method: format!("exhaustive over {bits} input bits"),
        });
    }
    let mut rng = substream(config.seed, &format!("activation/{}", spec.id));
    for _ in 0..config.budget {
        let mut stim = base.clone();
        for c in reset_cycles..cycles {
            for (name, w) in &cone_inputs {
                stim.set(c, name, rng.random::<u64>() & mask(*w));
            }
        }
        if fires(&stim) {
            return Ok(stim);
        }
    }
    Err(TrojanError::ActivationNotFound {
        id: spec.id.clone(),
        tried: config.budget,
        method: format!("random over {bits} input bits"),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForgeParams {
    pub seed: u64,
    pub count: usize,
    pub k_min: u32,
    pub k_max: u32,
    /// Trigger sizes per Trojan, overriding `k_min..=k_max` where present.
    #[serde(default)]
    pub k_values: Vec<u32>,
    #[serde(default = "default_prefix")]
    pub id_prefix: String,
    /// Placement attempts per Trojan. The first candidate its target
    /// assertion catches is kept, else the first injectable one.
    #[serde(default = "default_attempts")]
    pub attempts: usize,
    /// Cycles after reset in the fallback stimulus, used when an assertion
    /// has no test case.
    #[serde(default = "default_horizon")]
    pub horizon: usize,
}

fn default_horizon() -> usize {
    8
}

fn default_prefix() -> String {
    "trojan_".into()
}

fn default_attempts() -> usize {
    64
}

impl Default for ForgeParams {
    fn default() -> Self {
        ForgeParams {
            seed: 0,
            count: 1,
            k_min: 1,
            k_max: 8,
            k_values: Vec::new(),
            id_prefix: default_prefix(),
            attempts: default_attempts(),
            horizon: default_horizon(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForgedTrojan {
    pub spec: TrojanSpec,
    /// Drives the trigger and, where possible, the targeted assertion's
    /// antecedent in the same run.
    pub activation: Stimulus,
}

/// Input bits in the fan-in cone of `signals`, clock and reset excluded.
fn cone_bits(netlist: &Netlist, graph: &DependencyGraph, signals: &BTreeSet<String>) -> Vec<(String, u32)> {
    let cone = graph.cone(signals);
    drivable_inputs(netlist)
        .into_iter()
        .filter(|(n, _)| cone.contains(n))
        .flat_map(|(n, w)| (0..w).map(move |b| (n.clone(), b)))
        .collect()
}

fn group_terms(netlist: &Netlist, bits: &[(String, u32)], value_of: impl Fn(&str) -> u64) -> Vec<TriggerTerm> {
    let mut by_signal: BTreeMap<&str, Vec<u32>> = BTreeMap::new();
    for (s, b) in bits {
        by_signal.entry(s).or_default().push(*b);
    }
    let mut out = Vec::new();
    for (s, mut bs) in by_signal {
        bs.sort_unstable();
        let w = netlist.net(s).map_or(0, |n| n.width);
        let v = value_of(s);
        if bs.len() as u32 == w {
            out.push(TriggerTerm {
                signal: s.to_string(),
                bit: None,
                value: v & mask(w),
            });
        } else {
            out.extend(bs.into_iter().map(|b| TriggerTerm {
                signal: s.to_string(),
                bit: Some(b),
                value: (v >> b) & 1,
            }));
        }
    }
    out
}

/// Forges `params.count` Trojans, assigning them to the assertions in turn.
///
/// Each trigger samples k distinct input bits from the cone of its
/// assertion, widened to all assertion cones when that is too small. The
/// trigger cube is read off a run where the assertion's antecedent holds, so
/// the activation stimulus exercises the check that should catch it.
pub fn forge(netlist: &Netlist, assertions: &[Assertion], params: &ForgeParams) -> Result<Vec<ForgedTrojan>, TrojanError> {
    if params.count == 0 {
        return Ok(Vec::new());
    }
    let graph = DependencyGraph::build(netlist);
    let union: BTreeSet<String> = assertions.iter().flat_map(|a| a.signals()).collect();
    let union_bits = cone_bits(netlist, &graph, &union);
    if union_bits.is_empty() || (union_bits.len() as u32) < params.k_min {
        return Err(TrojanError::InsufficientSignals {
            needed: params.k_min.max(1),
            available: union_bits.len() as u32,
        });
    }
    let sim = Simulator::new(netlist).map_err(|e| TrojanError::InvalidSpec {
        id: params.id_prefix.clone(),
        reason: e.to_string(),
    })?;
    let kind = ModuleKind::of(netlist);
    let mut out = Vec::with_capacity(params.count);
    let mut testcases: BTreeMap<usize, Option<Stimulus>> = BTreeMap::new();
    for i in 0..params.count {
        let j = i % assertions.len();
        let a = &assertions[j];
        let id = format!("{}{}", params.id_prefix, i + 1);
        let mut rng = substream(params.seed, &format!("forge/{id}"));
        let k = match params.k_values.get(i) {
            Some(&k) => k,
            None => rng.random_range(params.k_min..=params.k_max.max(params.k_min)),
        };
        let own = cone_bits(netlist, &graph, &a.signals());
        let pool: Vec<(String, u32)> = if own.len() as u32 >= k {
            own.clone()
        } else {
            let mut p = own.clone();
            p.extend(union_bits.iter().filter(|b| !own.contains(b)).cloned());
            p
        };
        if (pool.len() as u32) < k {
            return Err(TrojanError::InsufficientSignals {
                needed: k,
                available: pool.len() as u32,
            });
        }

        let testcase = testcases
            .entry(j)
            .or_insert_with(|| {
                let cfg = TranslationConfig {
                    seed: params.seed,
                    ..TranslationConfig::default()
                };
                generate_testcase(netlist, a, &cfg).ok().map(|(s, _)| s)
            })
            .clone();
        let stim = testcase.unwrap_or_else(|| {
            let mut s = Stimulus::idle(netlist, RESET_CYCLES + params.horizon.max(1));
            s.reset_cycles = if netlist.reset().is_some() { RESET_CYCLES } else { 0 };
            s
        });
        let clean = sim.run(&stim);
        let starts: Vec<usize> = check_assertions(&clean, std::slice::from_ref(a))
            .ok()
            .and_then(|v| v.into_iter().next())
            .map(|v| {
                v.statuses
                    .iter()
                    .enumerate()
                    .filter(|(_, s)| **s == Status::Pass)
                    .map(|(t, _)| t)
                    .collect()
            })
            .unwrap_or_default();
        let offset = a.consequent_offset() as usize;
        let mut cycles: Vec<usize> = Vec::new();
        for s in starts.iter().take(3) {
            let c = s + offset;
            cycles.push(c);
            if c > stim.reset_cycles {
                cycles.push(c - 1);
            }
        }
        if cycles.is_empty() {
            cycles.push(stim.reset_cycles.min(stim.cycles().saturating_sub(1)));
        }
        let mut targets: Vec<String> = a
            .consequent
            .exprs()
            .flat_map(|e| e.identifiers())
            .filter(|n| {
                netlist
                    .net(n)
                    .is_some_and(|x| !matches!(x.kind, NetKind::Input | NetKind::Constant))
            })
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        if targets.is_empty() {
            targets = netlist
                .nets
                .values()
                .filter(|n| matches!(n.kind, NetKind::Output | NetKind::Internal | NetKind::Register))
                .filter(|n| a.signals().contains(&n.name))
                .map(|n| n.name.clone())
                .collect();
        }
        if targets.is_empty() {
            return Err(TrojanError::InsufficientSignals { needed: k, available: 0 });
        }

        let mut chosen: Option<ForgedTrojan> = None;
        for attempt in 0..params.attempts.max(1) {
            let tc = cycles[attempt % cycles.len()];
            let net = &targets[(attempt / cycles.len()) % targets.len()];
            let width = netlist.net(net).map_or(1, |n| n.width);
            let mut bits = pool.clone();
            bits.shuffle(&mut rng);
            bits.truncate(k as usize);
            let trigger = group_terms(netlist, &bits, |s| clean.value(tc, s).unwrap_or(0));
            let effect_cycle = match netlist.driver(net) {
                Driver::Register(_) => tc + 1,
                _ => tc,
            };
            let current = clean.value(effect_cycle.min(clean.cycles() - 1), net).unwrap_or(0);
            let payload = match (i + attempt) % 3 {
                1 => Payload::ForceConstant {
                    net: net.clone(),
                    value: !current & mask(width),
                },
                2 if matches!(netlist.driver(net), Driver::Assign(_)) => Payload::XorIntoAssign {
                    net: net.clone(),
                    mask: 1 << rng.random_range(0..width),
                },
                _ => Payload::InvertNet { net: net.clone() },
            };
            let spec = TrojanSpec {
                id: id.clone(),
                k,
                trigger,
                payload,
                module_kind: kind,
                target_assertion: Some(a.name.clone()),
            };
            let Ok(injected) = inject(netlist, &spec) else {
                continue;
            };
            let Ok(isim) = Simulator::new(&injected.netlist) else {
                continue;
            };
            let trace = isim.run(&stim);
            let caught = check_assertions(&trace, std::slice::from_ref(a))
                .is_ok_and(|v| v[0].summary.failures > 0);
            let candidate = ForgedTrojan {
                spec,
                activation: stim.clone(),
            };
            if caught {
                chosen = Some(candidate);
                break;
            }
            if chosen.is_none() {
                chosen = Some(candidate);
            }
        }
        match chosen {
            Some(t) => out.push(t),
            None => {
                return Err(TrojanError::InvalidSpec {
                    id,
                    reason: "no injectable payload among the assertion's nets".into(),
                })
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rtl::parse_design;
    use crate::sva::parse_assertion;

    const COMB: &str = r#"
module m (
  input  logic a,
  input  logic b,
  input  logic c,
  input  logic [3:0] d,
  output logic y,
  output logic [3:0] z
);
  logic t;
  assign t = a & b;
  assign y = t | c;
  assign z = d ^ 4'h5;
endmodule
"#;

    fn comb() -> Netlist {
        parse_design(COMB).unwrap()
    }

    fn spec(trigger: Vec<TriggerTerm>, payload: Payload) -> TrojanSpec {
        let n = comb();
        let mut s = TrojanSpec {
            id: "t".into(),
            k: 0,
            trigger,
            payload,
            module_kind: ModuleKind::Combinational,
            target_assertion: None,
        };
        s.k = s.trigger_bits(&n).len() as u32;
        s
    }

    fn bit(signal: &str, value: u64) -> TriggerTerm {
        TriggerTerm {
            signal: signal.into(),
            bit: None,
            value,
        }
    }

    #[test]
    fn invert_payload_guards_original() {
        let n = comb();
        let s = spec(vec![bit("a", 1), bit("b", 0), bit("c", 1)], Payload::InvertNet { net: "y".into() });
        assert_eq!(s.k, 3);
        let inj = inject(&n, &s).unwrap();
        assert_eq!(inj.netlist.ports, n.ports);
        assert_eq!(inj.netlist.name, n.name);
        assert!(inj.netlist.registers.is_empty());
        let rhs = inj.netlist.driving_expr("y").unwrap().to_string();
        assert!(rhs.starts_with("a == 1'h1 && b == 1'h0 && c == 1'h1 ?"), "{rhs}");
        let back = parse_design(&inj.netlist.render()).unwrap();
        assert_eq!(back.render(), inj.netlist.render());
    }

    #[test]
    fn input_payload_conflicts() {
        let s = spec(vec![bit("a", 1)], Payload::InvertNet { net: "b".into() });
        assert!(matches!(inject(&comb(), &s), Err(TrojanError::PayloadConflict { .. })));
    }

    #[test]
    fn k_must_match_trigger_bits() {
        let mut s = spec(vec![bit("d", 3)], Payload::InvertNet { net: "y".into() });
        assert_eq!(s.k, 4);
        s.k = 3;
        assert!(matches!(s.validate(&comb()), Err(TrojanError::InvalidSpec { .. })));
    }

    #[test]
    fn direct_drive_activation() {
        let n = comb();
        let s = spec(vec![bit("a", 1), bit("b", 1), bit("c", 0)], Payload::InvertNet { net: "y".into() });
        let stim = activation_stimulus(&s, &n, &ActivationConfig::default()).unwrap();
        assert_eq!(stim.inputs[0]["a"], 1);
        assert_eq!(stim.inputs[0]["c"], 0);
        assert!(trigger_trace(&n, &s, &stim)[0]);
    }

    #[test]
    fn internal_trigger_is_enumerated() {
        let n = comb();
        let s = spec(vec![bit("t", 1)], Payload::InvertNet { net: "z".into() });
        let stim = activation_stimulus(&s, &n, &ActivationConfig::default()).unwrap();
        assert!(trigger_trace(&n, &s, &stim).iter().any(|&x| x));
    }

    #[test]
    fn contradiction_is_not_found() {
        let n = comb();
        let s = spec(
            vec![
                TriggerTerm { signal: "t".into(), bit: None, value: 1 },
                TriggerTerm { signal: "a".into(), bit: None, value: 0 },
            ],
            Payload::InvertNet { net: "z".into() },
        );
        assert!(matches!(
            activation_stimulus(&s, &n, &ActivationConfig::default()),
            Err(TrojanError::ActivationNotFound { .. })
        ));
    }

    #[test]
    fn forge_places_detectable_trojans() {
        let n = comb();
        let a = parse_assertion("assert property (a && b |-> y);").unwrap();
        let params = ForgeParams {
            seed: 3,
            count: 2,
            k_values: vec![3, 2],
            ..ForgeParams::default()
        };
        let forged = forge(&n, std::slice::from_ref(&a), &params).unwrap();
        assert_eq!(forged.len(), 2);
        assert_eq!(forged[0].spec.k, 3);
        assert_eq!(forge(&n, std::slice::from_ref(&a), &params).unwrap(), forged);
        for f in &forged {
            let inj = inject(&n, &f.spec).unwrap();
            let trace = Simulator::new(&inj.netlist).unwrap().run(&f.activation);
            let v = check_assertions(&trace, std::slice::from_ref(&a)).unwrap();
            assert!(v[0].summary.failures > 0, "{:?}", f.spec);
        }
    }

    #[test]
    fn empty_cone_is_insufficient() {
        let n = comb();
        assert!(matches!(
            forge(&n, &[], &ForgeParams::default()),
            Err(TrojanError::InsufficientSignals { .. })
        ));
    }
}
