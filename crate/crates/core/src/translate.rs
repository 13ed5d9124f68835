// SPDX-License-Identifier: Apache-2.0

//! Porting an assertion onto a target design: link each source signal to a
//! target net, trace the target's internal logic, drop signals that only
//! occur in removable conjuncts, apply configured augmentations, and search
//! for a stimulus that exercises the result on the clean target.

use std::collections::{BTreeMap, BTreeSet};

use rand::RngExt;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{mask, parse_expression, BinaryOp, Expr};
use crate::graph::{DependencyGraph, Relationship};
use crate::rtl::{is_clock_name, Netlist};
use crate::rng::substream;
use crate::sim::{check_assertions, Simulator, Stimulus};
use crate::sva::{Assertion, ClockEvent, ClockEdge, Sequence};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    Exact,
    Normalized,
    AliasFile,
    Manual,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MapEntry {
    pub source: String,
    pub target: String,
    #[serde(default = "alias_file")]
    pub origin: Origin,
}

fn alias_file() -> Origin {
    Origin::AliasFile
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Attach {
    Antecedent,
    Consequent,
}

/// An extra conjunct added when a translated assertion references `signal`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Augmentation {
    pub signal: String,
    pub condition: Expr,
    pub attach: Attach,
    pub note: String,
    /// Restricts the augmentation to these source assertion names.
    pub only: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Normalize {
    #[serde(default = "default_suffixes")]
    pub strip_suffixes: Vec<String>,
    #[serde(default)]
    pub strip_prefixes: Vec<String>,
}

fn default_suffixes() -> Vec<String> {
    ["_i", "_o", "_q", "_d", "_n"].iter().map(|s| s.to_string()).collect()
}

impl Default for Normalize {
    fn default() -> Self {
        Normalize {
            strip_suffixes: default_suffixes(),
            strip_prefixes: Vec::new(),
        }
    }
}

impl Normalize {
    /// Lower-cases and strips at most one listed prefix and one listed
    /// suffix. Stripping a single suffix keeps `rst_ni` distinct from `rst`.
    pub fn apply(&self, name: &str) -> String {
        let mut n = name.to_ascii_lowercase();
        if let Some(p) = self
            .strip_prefixes
            .iter()
            .find(|p| n.len() > p.len() && n.starts_with(&p.to_ascii_lowercase()))
        {
            n = n[p.len()..].to_string();
        }
        if let Some(s) = self
            .strip_suffixes
            .iter()
            .find(|s| n.len() > s.len() && n.ends_with(&s.to_ascii_lowercase()))
        {
            n.truncate(n.len() - s.len());
        }
        n
    }
}

/// Overrides for the emitted assertion's name, label and failure message.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssertionMeta {
    pub name: Option<String>,
    pub label: Option<String>,
    pub action: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct SignalMap {
    pub entries: Vec<MapEntry>,
    pub augmentations: Vec<Augmentation>,
    pub normalize: Normalize,
    pub assertions: BTreeMap<String, AssertionMeta>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AugmentationFile {
    signal: String,
    condition: String,
    attach: Attach,
    #[serde(default)]
    note: String,
    #[serde(default)]
    only: Vec<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SignalMapFile {
    #[serde(default)]
    mappings: Vec<MapEntry>,
    #[serde(default)]
    augmentations: Vec<AugmentationFile>,
    #[serde(default)]
    normalize: Normalize,
    #[serde(default)]
    assertions: BTreeMap<String, AssertionMeta>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("signal map: {0}")]
    Json(String),
    #[error("signal map maps `{0}` more than once")]
    DuplicateSource(String),
    #[error("signal map target `{target}` (for `{signal}`) is not a net or parameter of the target design")]
    UnknownTarget { signal: String, target: String },
    #[error("augmentation for `{signal}`: cannot parse condition `{condition}`: {message}")]
    BadCondition {
        signal: String,
        condition: String,
        message: String,
    },
    #[error("augmentation `{condition}` references `{name}`, which the target design does not declare")]
    UnknownSignal { condition: String, name: String },
}

fn parse_condition(text: &str) -> Result<Expr, String> {
    parse_expression(text).map_err(|e| e.to_string())
}

impl SignalMap {
    /// Parses the JSON map and checks every target against `target`.
    pub fn from_json(text: &str, target: &Netlist) -> Result<Self, ConfigError> {
        let file: SignalMapFile =
            serde_json::from_str(text).map_err(|e| ConfigError::Json(e.to_string()))?;
        let mut augmentations = Vec::new();
        for a in file.augmentations {
            let condition = parse_condition(&a.condition).map_err(|message| ConfigError::BadCondition {
                signal: a.signal.clone(),
                condition: a.condition.clone(),
                message,
            })?;
            augmentations.push(Augmentation {
                signal: a.signal,
                condition,
                attach: a.attach,
                note: a.note,
                only: a.only,
            });
        }
        let map = SignalMap {
            entries: file.mappings,
            augmentations,
            normalize: file.normalize,
            assertions: file.assertions,
        };
        map.validate(target)?;
        Ok(map)
    }

    pub fn validate(&self, target: &Netlist) -> Result<(), ConfigError> {
        let mut seen = BTreeSet::new();
        for e in &self.entries {
            if !seen.insert(&e.source) {
                return Err(ConfigError::DuplicateSource(e.source.clone()));
            }
            if !target.resolves(&e.target) {
                return Err(ConfigError::UnknownTarget {
                    signal: e.source.clone(),
                    target: e.target.clone(),
                });
            }
        }
        for a in &self.augmentations {
            for name in std::iter::once(a.signal.clone()).chain(a.condition.identifiers()) {
                if !target.resolves(&name) {
                    return Err(ConfigError::UnknownSignal {
                        condition: a.condition.to_string(),
                        name,
                    });
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinkStatus {
    Matched,
    Dropped,
    Unresolved,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignalLink {
    pub source: String,
    pub status: LinkStatus,
    /// Match origin, or why the signal was dropped or left unresolved.
    pub method: String,
    pub target: Option<String>,
    /// Shortest link from the target net to a primary input.
    pub relationship: Option<Relationship>,
    pub fanin: BTreeMap<String, usize>,
    /// Direct sources of the target net that no source signal maps to.
    pub gating_candidates: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkReport {
    pub assertion: String,
    pub links: Vec<SignalLink>,
}

impl LinkReport {
    pub fn link(&self, source: &str) -> Option<&SignalLink> {
        self.links.iter().find(|l| l.source == source)
    }

    pub fn unresolved(&self) -> impl Iterator<Item = &SignalLink> {
        self.links.iter().filter(|l| l.status == LinkStatus::Unresolved)
    }
}

/// Resolves each source signal by explicit entry, exact name, then
/// normalized name.
pub fn identify_signals(source: &Assertion, target: &Netlist, map: &SignalMap) -> LinkReport {
    let candidates: Vec<&String> = target.nets.keys().chain(target.params.keys()).collect();
    let links = source
        .signals()
        .into_iter()
        .map(|s| {
            let (status, method, tgt) = if let Some(e) = map.entries.iter().find(|e| e.source == s) {
                (LinkStatus::Matched, origin_name(e.origin), Some(e.target.clone()))
            } else if target.resolves(&s) {
                (LinkStatus::Matched, origin_name(Origin::Exact), Some(s.clone()))
            } else {
                let key = map.normalize.apply(&s);
                let hits: Vec<&String> = candidates
                    .iter()
                    .copied()
                    .filter(|c| map.normalize.apply(c) == key)
                    .collect();
                match hits.as_slice() {
                    [one] => (LinkStatus::Matched, origin_name(Origin::Normalized), Some((*one).clone())),
                    [] => (
                        LinkStatus::Unresolved,
                        "no net or parameter of that name in the target".to_string(),
                        None,
                    ),
                    many => (
                        LinkStatus::Unresolved,
                        format!(
                            "ambiguous normalized match: {}",
                            many.iter().map(|m| m.as_str()).collect::<Vec<_>>().join(", ")
                        ),
                        None,
                    ),
                }
            };
            SignalLink {
                source: s,
                status,
                method,
                target: tgt,
                relationship: None,
                fanin: BTreeMap::new(),
                gating_candidates: Vec::new(),
            }
        })
        .collect();
    LinkReport {
        assertion: source.name.clone(),
        links,
    }
}

fn origin_name(o: Origin) -> String {
    match o {
        Origin::Exact => "exact",
        Origin::Normalized => "normalized",
        Origin::AliasFile => "alias_file",
        Origin::Manual => "manual",
    }
    .to_string()
}

/// Annotates matched target nets with their fan-in, their nearest primary
/// input, and gating candidates.
pub fn trace_internal_logic(mut report: LinkReport, target: &Netlist, graph: &DependencyGraph) -> LinkReport {
    let matched: BTreeSet<String> = report
        .links
        .iter()
        .filter(|l| l.status == LinkStatus::Matched)
        .filter_map(|l| l.target.clone())
        .collect();
    let inputs: Vec<&str> = target.inputs().map(|p| p.name.as_str()).collect();
    for link in &mut report.links {
        let Some(t) = link.target.as_deref() else {
            continue;
        };
        if link.status != LinkStatus::Matched || !graph.contains(t) {
            continue;
        }
        link.fanin = graph.fanin(t, None).unwrap_or_default();
        link.relationship = inputs
            .iter()
            .filter(|p| link.fanin.contains_key(**p))
            .filter_map(|p| graph.classify(t, p).ok())
            .min_by(|a, b| a.depth.cmp(&b.depth).then_with(|| a.witness_path.cmp(&b.witness_path)));
        link.gating_candidates = graph
            .reads(t)
            .unwrap_or_default()
            .into_iter()
            .filter(|r| !matched.contains(*r) && *r != t)
            .map(String::from)
            .collect();
    }
    report
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DropPolicy {
    /// Drop a signal when every occurrence sits in a conjunct (or the disable
    /// clause) whose removal leaves each sequence term non-empty.
    #[default]
    RemovableConjuncts,
    Never,
}

fn mentions(e: &Expr, s: &str) -> bool {
    let mut hit = false;
    e.visit_identifiers(&mut |id| hit |= id == s);
    hit
}

fn removable(a: &Assertion, s: &str) -> bool {
    a.antecedent.steps.iter().chain(&a.consequent.steps).all(|st| {
        let parts = st.expr.conjuncts();
        let keep = parts.iter().filter(|p| !mentions(p, s)).count();
        keep == parts.len() || keep > 0
    })
}

fn remove(a: &Assertion, s: &str) -> Assertion {
    let strip = |seq: &Sequence| Sequence {
        steps: seq
            .steps
            .iter()
            .map(|st| crate::sva::SeqStep {
                delay: st.delay,
                expr: Expr::all_of(st.expr.conjuncts().into_iter().filter(|p| !mentions(p, s)).cloned())
                    .expect("removable checked"),
            })
            .collect(),
    };
    Assertion {
        disable: a.disable.clone().filter(|d| !mentions(d, s)),
        antecedent: strip(&a.antecedent),
        consequent: strip(&a.consequent),
        ..a.clone()
    }
}

/// Removes unresolved signals where the policy allows, returning the updated
/// report and the reduced source assertion.
pub fn drop_untranslatable(
    mut report: LinkReport,
    source: &Assertion,
    policy: DropPolicy,
) -> (LinkReport, Assertion) {
    let mut a = source.clone();
    if policy == DropPolicy::Never {
        return (report, a);
    }
    let unresolved: Vec<String> = report.unresolved().map(|l| l.source.clone()).collect();
    for s in &unresolved {
        if !a.signals().contains(s) || !removable(&a, s) {
            continue;
        }
        let in_disable = a.disable.as_ref().is_some_and(|d| mentions(d, s));
        let before = a.signals();
        a = remove(&a, s);
        let after = a.signals();
        let reason = if in_disable {
            format!("`{s}` has no target counterpart; disable clause removed")
        } else {
            format!("`{s}` has no target counterpart; its conjuncts were removed")
        };
        for link in &mut report.links {
            if link.source == *s {
                link.status = LinkStatus::Dropped;
                link.method = reason.clone();
            } else if before.contains(&link.source) && !after.contains(&link.source) {
                link.status = LinkStatus::Dropped;
                link.method = format!("removed together with `{s}`");
            }
        }
    }
    (report, a)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranslationConfig {
    pub seed: u64,
    /// Random stimuli tried before exhaustive enumeration.
    pub max_vectors: usize,
    /// Largest antecedent input cone, in bits, that is enumerated.
    pub exhaustive_bits: u32,
    pub drop_policy: DropPolicy,
}

impl Default for TranslationConfig {
    fn default() -> Self {
        TranslationConfig {
            seed: 0,
            max_vectors: 10_000,
            exhaustive_bits: 20,
            drop_policy: DropPolicy::RemovableConjuncts,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchMethod {
    Random,
    Exhaustive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchStats {
    pub vectors_tried: usize,
    pub method: Option<SearchMethod>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Verdict {
    Translatable {
        assertion: Assertion,
        testcase: Stimulus,
    },
    Untranslatable {
        reasons: Vec<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranslationOutcome {
    pub source: String,
    #[serde(flatten)]
    pub verdict: Verdict,
    pub link_report: LinkReport,
    /// Augmentation conditions that entered the output.
    pub augmentations: Vec<String>,
    pub search: Option<SearchStats>,
}

impl TranslationOutcome {
    pub fn assertion(&self) -> Option<&Assertion> {
        match &self.verdict {
            Verdict::Translatable { assertion, .. } => Some(assertion),
            Verdict::Untranslatable { .. } => None,
        }
    }
}

fn augment(seq: &mut Sequence, signal: &str, cond: &Expr) {
    if seq.steps.iter().any(|st| st.expr.conjuncts().contains(&cond)) {
        return;
    }
    let idx = seq
        .steps
        .iter()
        .position(|st| mentions(&st.expr, signal))
        .unwrap_or(0);
    let step = &mut seq.steps[idx];
    step.expr = Expr::binary(BinaryOp::LogicalAnd, step.expr.clone(), cond.clone());
}

/// Runs the whole pipeline for one source assertion.
pub fn translate(
    source: &Assertion,
    target: &Netlist,
    map: &SignalMap,
    config: &TranslationConfig,
) -> Result<TranslationOutcome, ConfigError> {
    map.validate(target)?;
    let graph = DependencyGraph::build(target);
    let report = identify_signals(source, target, map);
    let report = trace_internal_logic(report, target, &graph);
    let (report, reduced) = drop_untranslatable(report, source, config.drop_policy);

    let reasons: Vec<String> = report
        .unresolved()
        .map(|l| format!("`{}`: absence of exact signal in target ({})", l.source, l.method))
        .collect();
    if !reasons.is_empty() {
        return Ok(TranslationOutcome {
            source: source.name.clone(),
            verdict: Verdict::Untranslatable { reasons },
            link_report: report,
            augmentations: Vec::new(),
            search: None,
        });
    }

    let rename: BTreeMap<&str, &str> = report
        .links
        .iter()
        .filter_map(|l| l.target.as_deref().map(|t| (l.source.as_str(), t)))
        .collect();
    let mut out = reduced.rename(&|n| rename.get(n).map_or(n, |t| t).to_string());
    out.clock = match (&source.clock, target.clock()) {
        (Some(c), Some(tc)) => Some(ClockEvent {
            edge: c.edge,
            net: tc.to_string(),
        }),
        (None, Some(tc)) => Some(ClockEvent {
            edge: ClockEdge::Posedge,
            net: tc.to_string(),
        }),
        (_, None) => None,
    };

    let referenced = out.signals();
    let mut applied = Vec::new();
    for aug in &map.augmentations {
        if !referenced.contains(&aug.signal) {
            continue;
        }
        if !aug.only.is_empty() && !aug.only.contains(&source.name) {
            continue;
        }
        let seq = match aug.attach {
            Attach::Antecedent => &mut out.antecedent,
            Attach::Consequent => &mut out.consequent,
        };
        augment(seq, &aug.signal, &aug.condition);
        applied.push(aug.condition.to_string());
    }
    if let Some(meta) = map.assertions.get(&source.name) {
        if let Some(n) = &meta.name {
            out.name = n.clone();
        }
        if meta.label.is_some() {
            out.label = meta.label.clone();
        }
        if meta.action.is_some() {
            out.action = meta.action.clone();
        }
    }

    match generate_testcase(target, &out, config) {
        Ok((testcase, stats)) => Ok(TranslationOutcome {
            source: source.name.clone(),
            verdict: Verdict::Translatable {
                assertion: out,
                testcase,
            },
            link_report: report,
            augmentations: applied,
            search: Some(stats),
        }),
        Err(stats) => Ok(TranslationOutcome {
            source: source.name.clone(),
            verdict: Verdict::Untranslatable {
                reasons: vec![format!(
                    "mismatched behavior: no stimulus among {} tried makes the translated assertion pass non-vacuously on the target",
                    stats.vectors_tried
                )],
            },
            link_report: report,
            augmentations: applied,
            search: Some(stats),
        }),
    }
}

/// Cycles spent in reset before any test pattern.
pub const RESET_CYCLES: usize = 2;

/// Constants appearing in `exprs`, used to bias random input values.
pub(crate) fn harvest_constants<'a>(exprs: impl IntoIterator<Item = &'a Expr>, target: &Netlist) -> BTreeSet<u64> {
    let mut out = BTreeSet::from([0u64, 1]);
    fn walk(e: &Expr, target: &Netlist, out: &mut BTreeSet<u64>) {
        match e {
            Expr::Const(c) => {
                out.insert(c.value);
            }
            Expr::Ident(n) => {
                if let Some(c) = target.params.get(n) {
                    out.insert(c.value);
                }
            }
            Expr::Unary { arg, .. } | Expr::Past { arg, .. } => walk(arg, target, out),
            Expr::Binary { lhs, rhs, .. } => {
                walk(lhs, target, out);
                walk(rhs, target, out);
            }
            Expr::Ternary { cond, then, other } => {
                walk(cond, target, out);
                walk(then, target, out);
                walk(other, target, out);
            }
            Expr::Bit { .. } | Expr::Slice { .. } => {}
        }
    }
    for e in exprs {
        walk(e, target, &mut out);
    }
    out
}

/// Input ports that a stimulus may drive, excluding clock and reset.
pub(crate) fn drivable_inputs(target: &Netlist) -> Vec<(String, u32)> {
    let clock = target.clock();
    let reset = target.reset().map(|r| r.0);
    target
        .inputs()
        .filter(|p| Some(p.name.as_str()) != clock && Some(p.name.as_str()) != reset)
        .filter(|p| !(p.width == 1 && is_clock_name(&p.name)))
        .map(|p| (p.name.clone(), p.width))
        .collect()
}

/// Searches for a stimulus under which `assertion` passes non-vacuously
/// and never fails on `target`.
pub fn generate_testcase(
    target: &Netlist,
    assertion: &Assertion,
    config: &TranslationConfig,
) -> Result<(Stimulus, SearchStats), SearchStats> {
    let Ok(sim) = Simulator::new(target) else {
        return Err(SearchStats {
            vectors_tried: 0,
            method: None,
        });
    };
    let reset_cycles = if target.reset().is_some() { RESET_CYCLES } else { 0 };
    let cycles = reset_cycles + (assertion.window() + assertion.past_depth()) as usize + 4;
    let inputs = drivable_inputs(target);
    let accept = |stim: &Stimulus| {
        let trace = sim.run(stim);
        check_assertions(&trace, std::slice::from_ref(assertion))
            .ok()
            .and_then(|v| v.into_iter().next())
            .is_some_and(|v| v.summary.failures == 0 && v.summary.non_vacuous_passes > 0)
    };

    let mut graph_exprs: Vec<&Expr> = assertion
        .antecedent
        .exprs()
        .chain(assertion.consequent.exprs())
        .collect();
    graph_exprs.extend(target.assigns.iter().map(|a| &a.rhs));
    graph_exprs.extend(target.registers.iter().map(|r| &r.next));
    let pool: Vec<u64> = harvest_constants(graph_exprs, target).into_iter().collect();

    let mut rng = substream(config.seed, &format!("testcase/{}", assertion.name));
    let base = Stimulus::idle(target, cycles);
    for k in 0..config.max_vectors {
        let mut stim = base.clone();
        stim.reset_cycles = reset_cycles;
        for c in reset_cycles..cycles {
            for (name, width) in &inputs {
                let m = mask(*width);
                let v = if rng.random_bool(0.5) {
                    pool[rng.random_range(0..pool.len())] & m
                } else {
                    rng.random::<u64>() & m
                };
                stim.set(c, name, v);
            }
        }
        if accept(&stim) {
            return Ok((
                stim,
                SearchStats {
                    vectors_tried: k + 1,
                    method: Some(SearchMethod::Random),
                },
            ));
        }
    }

    let graph = DependencyGraph::build(target);
    let ant_signals: BTreeSet<String> = assertion
        .antecedent
        .exprs()
        .flat_map(|e| e.identifiers())
        .collect();
    let cone = graph.cone(&ant_signals);
    let cone_inputs: Vec<&(String, u32)> = inputs.iter().filter(|(n, _)| cone.contains(n)).collect();
    let bits: u32 = cone_inputs.iter().map(|(_, w)| w).sum();
    let mut tried = config.max_vectors;
    if bits <= config.exhaustive_bits {
        for v in 0..(1u64 << bits) {
            let mut stim = base.clone();
            stim.reset_cycles = reset_cycles;
            let mut shift = 0;
            for (name, width) in &cone_inputs {
                let x = (v >> shift) & mask(*width);
                shift += width;
                for c in reset_cycles..cycles {
                    stim.set(c, name, x);
                }
            }
            tried += 1;
            if accept(&stim) {
                return Ok((
                    stim,
                    SearchStats {
                        vectors_tried: tried,
                        method: Some(SearchMethod::Exhaustive),
                    },
                ));
            }
        }
    }
    Err(SearchStats {
        vectors_tried: tried,
        method: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rtl::parse_design;
    use crate::sva::{equivalent_bodies, parse_assertion};

    const DESIGN: &str = r#"
module t (
  input  logic clk_i,
  input  logic rst_ni,
  input  logic a_i,
  input  logic b_i,
  input  logic [1:0] op_i,
  output logic y_o
);
  logic en;
  assign en = a_i & (op_i == 2'd1);
  assign y_o = en & b_i;
endmodule
"#;

    fn design() -> Netlist {
        parse_design(DESIGN).unwrap()
    }

    #[test]
    fn normalization_strips_one_suffix() {
        let n = Normalize::default();
        assert_eq!(n.apply("Rst_NI"), "rst_ni");
        assert_eq!(n.apply("a_i"), "a");
        assert_eq!(n.apply("_i"), "_i");
        let p = Normalize {
            strip_prefixes: vec!["csr_".into()],
            ..Normalize::default()
        };
        assert_eq!(p.apply("csr_addr_i"), "addr");
    }

    #[test]
    fn resolution_order() {
        let n = design();
        let a = parse_assertion("assert property (@(posedge clk) A && en |-> Y_Q);").unwrap();
        let map = SignalMap::from_json(r#"{"mappings": [{"source": "Y_Q", "target": "y_o"}]}"#, &n).unwrap();
        let r = identify_signals(&a, &n, &map);
        assert_eq!(r.link("Y_Q").unwrap().method, "alias_file");
        assert_eq!(r.link("en").unwrap().method, "exact");
        assert_eq!(r.link("A").unwrap().method, "normalized");
        assert_eq!(r.link("A").unwrap().target.as_deref(), Some("a_i"));
        assert_eq!(r.links.len(), a.signals().len());
    }

    #[test]
    fn unknown_map_target_is_config_error() {
        let n = design();
        let err = SignalMap::from_json(r#"{"mappings": [{"source": "x", "target": "nope"}]}"#, &n).unwrap_err();
        assert!(matches!(err, ConfigError::UnknownTarget { .. }));
        let err = SignalMap::from_json(
            r#"{"augmentations": [{"signal": "en", "condition": "ghost == 0", "attach": "antecedent"}]}"#,
            &n,
        )
        .unwrap_err();
        assert!(matches!(err, ConfigError::UnknownSignal { .. }));
    }

    #[test]
    fn tracing_lists_gating_candidates() {
        let n = design();
        let a = parse_assertion("assert property (@(posedge clk) y_o |-> en);").unwrap();
        let g = DependencyGraph::build(&n);
        let r = trace_internal_logic(identify_signals(&a, &n, &SignalMap::default()), &n, &g);
        let en = r.link("en").unwrap();
        assert_eq!(en.gating_candidates, vec!["a_i", "op_i"]);
        let y = r.link("y_o").unwrap();
        assert_eq!(y.gating_candidates, vec!["b_i"]);
        assert_eq!(y.relationship.as_ref().unwrap().depth, 1);
        assert_eq!(y.fanin["a_i"], 2);
    }

    #[test]
    fn removable_conjunct_dropped() {
        let n = design();
        let a = parse_assertion("assert property (@(posedge clk) a_i && ghost |-> en);").unwrap();
        let r = identify_signals(&a, &n, &SignalMap::default());
        let (r, reduced) = drop_untranslatable(r, &a, DropPolicy::RemovableConjuncts);
        assert_eq!(r.link("ghost").unwrap().status, LinkStatus::Dropped);
        assert_eq!(reduced.antecedent.to_string(), "a_i");

        let a = parse_assertion("assert property (@(posedge clk) ghost |-> en);").unwrap();
        let r = identify_signals(&a, &n, &SignalMap::default());
        let (r, _) = drop_untranslatable(r, &a, DropPolicy::RemovableConjuncts);
        assert_eq!(r.link("ghost").unwrap().status, LinkStatus::Unresolved);
    }

    #[test]
    fn all_unresolved_is_untranslatable() {
        let n = design();
        let a = parse_assertion("assert property (@(posedge clk) p |-> q);").unwrap();
        let out = translate(&a, &n, &SignalMap::default(), &TranslationConfig::default()).unwrap();
        match out.verdict {
            Verdict::Untranslatable { reasons } => assert_eq!(reasons.len(), 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn identity_translation_is_conservative() {
        let n = design();
        let src = "assert property (@(posedge clk_i) disable iff (!rst_ni) en |-> ##0 a_i && op_i == 2'd1);";
        let a = parse_assertion(src).unwrap();
        let out = translate(&a, &n, &SignalMap::default(), &TranslationConfig::default()).unwrap();
        let t = out.assertion().expect("translatable");
        assert_eq!(t, &a);
    }

    #[test]
    fn augmentation_and_testcase() {
        let n = design();
        let a = parse_assertion("assert property (@(posedge clk) a |-> !y);").unwrap();
        let map = SignalMap::from_json(
            r#"{"augmentations": [{"signal": "a_i", "condition": "b_i == 0", "attach": "antecedent"}]}"#,
            &n,
        )
        .unwrap();
        let out = translate(&a, &n, &map, &TranslationConfig::default()).unwrap();
        let t = out.assertion().expect("translatable");
        let expect = parse_assertion("assert property (@(posedge clk_i) a_i && b_i == 0 |-> !y_o);").unwrap();
        assert!(equivalent_bodies(t, &expect), "{}", t.render());
        let Verdict::Translatable { testcase, .. } = &out.verdict else { unreachable!() };
        let trace = Simulator::new(&n).unwrap().run(testcase);
        let v = check_assertions(&trace, std::slice::from_ref(t)).unwrap();
        assert!(v[0].summary.non_vacuous_passes > 0 && v[0].summary.failures == 0);
    }

    #[test]
    fn behavioral_mismatch_is_untranslatable() {
        let n = design();
        let a = parse_assertion("assert property (@(posedge clk) en |-> !a_i);").unwrap();
        let cfg = TranslationConfig {
            max_vectors: 50,
            ..TranslationConfig::default()
        };
        let out = translate(&a, &n, &SignalMap::default(), &cfg).unwrap();
        assert!(matches!(out.verdict, Verdict::Untranslatable { .. }));
        assert_eq!(out.search.unwrap().method, None);
    }
}
