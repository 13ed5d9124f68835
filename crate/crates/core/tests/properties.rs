// SPDX-License-Identifier: Apache-2.0

//! Property tests over randomly generated designs, assertions and triggers.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, RngExt};

use assertport::expr::Expr;
use assertport::graph::{DependencyGraph, RelationKind};
use assertport::metrics::{analytic_probability, brute_force_probability, tder, tpi_exact};
use assertport::rng::substream;
use assertport::rtl::{parse_design, Netlist};
use assertport::sim::{check_assertions, simulate, Simulator, Status, Stimulus, Trace};
use assertport::sva::{parse_assertion, parse_file, render_file, Assertion};
use assertport::translate::{translate, LinkStatus, SignalMap, TranslationConfig, Verdict};
use assertport::trojan::{forge, inject, trigger_trace, ForgeParams, ModuleKind, Payload, TriggerTerm, TrojanSpec};

const W: u32 = 4;

/// A random single-clock design: 4-bit inputs, assigns over earlier
/// signals, and registers that may read anything.
struct RandomDesign {
    inputs: Vec<String>,
    nets: Vec<String>,
    regs: Vec<String>,
    assigns: Vec<String>,
    reg_blocks: Vec<String>,
}

fn operand(rng: &mut impl Rng, pool: &[String]) -> String {
    if rng.random_bool(0.2) {
        format!("{W}'h{:x}", rng.random_range(0..16u32))
    } else {
        pool[rng.random_range(0..pool.len())].clone()
    }
}

fn random_expr(rng: &mut impl Rng, pool: &[String], depth: u32) -> String {
    if depth == 0 || rng.random_bool(0.3) {
        return operand(rng, pool);
    }
    match rng.random_range(0..7) {
        0 => format!("~{}", random_expr(rng, pool, depth - 1)),
        1 => format!(
            "(({} == {}) ? {} : {})",
            operand(rng, pool),
            operand(rng, pool),
            random_expr(rng, pool, depth - 1),
            random_expr(rng, pool, depth - 1)
        ),
        n => {
            let op = ["&", "|", "^", "+", "-"][n as usize - 2];
            format!("({} {op} {})", random_expr(rng, pool, depth - 1), random_expr(rng, pool, depth - 1))
        }
    }
}

impl RandomDesign {
    fn new(seed: u64) -> Self {
        let mut rng = substream(seed, "properties/design");
        let inputs: Vec<String> = (0..rng.random_range(1..4)).map(|i| format!("in{i}")).collect();
        let regs: Vec<String> = (0..rng.random_range(0..3)).map(|i| format!("r{i}")).collect();
        let nets: Vec<String> = (0..rng.random_range(1..6)).map(|i| format!("w{i}")).collect();
        let mut assigns = Vec::new();
        let mut pool: Vec<String> = inputs.iter().chain(&regs).cloned().collect();
        for n in &nets {
            assigns.push(format!("  assign {n} = {};", random_expr(&mut rng, &pool, 3)));
            pool.push(n.clone());
        }
        let reg_blocks = regs
            .iter()
            .map(|r| {
                format!(
                    "  always_ff @(posedge clk_i or negedge rst_ni) begin\n    if (!rst_ni) {r} <= {W}'h{:x};\n    else {r} <= {};\n  end",
                    rng.random_range(0..16u32),
                    random_expr(&mut rng, &pool, 2)
                )
            })
            .collect();
        RandomDesign {
            inputs,
            nets,
            regs,
            assigns,
            reg_blocks,
        }
    }

    fn text_with(&self, assigns: &[String]) -> String {
        let mut s = String::from("module rnd (\n  input logic clk_i,\n  input logic rst_ni,\n");
        for i in &self.inputs {
            s += &format!("  input logic [{}:0] {i},\n", W - 1);
        }
        s += &format!("  output logic [{}:0] out_o\n);\n", W - 1);
        for n in self.nets.iter().chain(&self.regs) {
            s += &format!("  logic [{}:0] {n};\n", W - 1);
        }
        for a in assigns {
            s += a;
            s.push('\n');
        }
        for b in &self.reg_blocks {
            s += b;
            s.push('\n');
        }
        s += &format!("  assign out_o = {};\nendmodule\n", self.nets.last().unwrap());
        s
    }

    fn text(&self) -> String {
        self.text_with(&self.assigns)
    }

    fn signals(&self) -> Vec<String> {
        self.inputs.iter().chain(&self.nets).chain(&self.regs).cloned().collect()
    }
}

fn random_stimulus(n: &Netlist, cycles: usize, rng: &mut impl Rng) -> Stimulus {
    let mut s = Stimulus::idle(n, cycles);
    s.reset_cycles = if n.reset().is_some() { 1 } else { 0 };
    let skip: Vec<&str> = n.clock().into_iter().chain(n.reset().map(|r| r.0)).collect();
    let inputs: Vec<(String, u32)> = n
        .inputs()
        .filter(|p| !skip.contains(&p.name.as_str()))
        .map(|p| (p.name.clone(), p.width))
        .collect();
    for c in 0..cycles {
        for (name, w) in &inputs {
            s.set(c, name, rng.random::<u64>() & ((1u64 << w) - 1));
        }
    }
    s
}

fn same_values(a: &Trace, b: &Trace, names: &[String]) -> bool {
    a.cycles() == b.cycles() && (0..a.cycles()).all(|c| names.iter().all(|n| a.value(c, n) == b.value(c, n)))
}

/// Shortest dependency distances from `root`, by BFS over driving
/// expressions.
fn bfs_depths(n: &Netlist, root: &str) -> BTreeMap<String, usize> {
    let mut depth = BTreeMap::new();
    let mut queue = VecDeque::from([(root.to_string(), 0usize)]);
    while let Some((s, d)) = queue.pop_front() {
        let Some(e) = n.driving_expr(&s) else { continue };
        for id in e.identifiers() {
            if n.is_param(&id) || depth.contains_key(&id) {
                continue;
            }
            depth.insert(id.clone(), d + 1);
            queue.push_back((id, d + 1));
        }
    }
    depth
}

fn bool_term(rng: &mut impl Rng, signals: &[String]) -> String {
    let s = &signals[rng.random_range(0..signals.len())];
    match rng.random_range(0..4) {
        0 => format!("{s}[{}]", rng.random_range(0..W)),
        1 => format!("{s} == {W}'h{:x}", rng.random_range(0..16u32)),
        2 => format!("{s} != {}", signals[rng.random_range(0..signals.len())]),
        _ => format!("!{s}[{}]", rng.random_range(0..W)),
    }
}

fn random_assertion(rng: &mut impl Rng, name: &str, signals: &[String]) -> String {
    let ante = (0..rng.random_range(1..3)).map(|_| bool_term(rng, signals)).collect::<Vec<_>>().join(" && ");
    let cons = bool_term(rng, signals);
    let imp = if rng.random_bool(0.5) { "|->" } else { "|=>" };
    let delay = if rng.random_bool(0.3) { format!("##{} ", rng.random_range(0..3)) } else { String::new() };
    let past = if rng.random_bool(0.3) {
        let s = &signals[rng.random_range(0..signals.len())];
        format!(" && $past({s}, {}) != {W}'h{:x}", rng.random_range(1..3), rng.random_range(0..16u32))
    } else {
        String::new()
    };
    format!("{name}: assert property (@(posedge clk_i) {ante} {imp} {delay}{cons}{past});")
}

fn collect_idents(e: &Expr, out: &mut BTreeSet<String>) {
    match e {
        Expr::Ident(n) | Expr::Bit { name: n, .. } | Expr::Slice { name: n, .. } => {
            out.insert(n.clone());
        }
        Expr::Const(_) => {}
        Expr::Unary { arg, .. } | Expr::Past { arg, .. } => collect_idents(arg, out),
        Expr::Binary { lhs, rhs, .. } => {
            collect_idents(lhs, out);
            collect_idents(rhs, out);
        }
        Expr::Ternary { cond, then, other } => {
            collect_idents(cond, out);
            collect_idents(then, out);
            collect_idents(other, out);
        }
    }
}

fn leaf_signals(a: &Assertion) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    for e in a.antecedent.exprs().chain(a.consequent.exprs()).chain(a.disable.as_ref()) {
        collect_idents(e, &mut out);
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rtl_render_round_trips(seed in any::<u64>()) {
        let text = RandomDesign::new(seed).text();
        let n = parse_design(&text).unwrap();
        prop_assert_eq!(&parse_design(&text).unwrap(), &n);
        prop_assert_eq!(parse_design(&n.render()).unwrap(), n.clone());
        for e in n.assigns.iter().map(|a| &a.rhs).chain(n.registers.iter().map(|r| &r.next)) {
            for id in e.identifiers() {
                prop_assert!(n.resolves(&id), "{}", id);
            }
        }
    }

    #[test]
    fn settle_order_does_not_matter(seed in any::<u64>()) {
        let d = RandomDesign::new(seed);
        let mut shuffled = d.assigns.clone();
        shuffled.shuffle(&mut substream(seed, "properties/shuffle"));
        let a = parse_design(&d.text()).unwrap();
        let b = parse_design(&d.text_with(&shuffled)).unwrap();
        let stim = random_stimulus(&a, 12, &mut substream(seed, "properties/stim"));
        let ta = simulate(&a, &stim).unwrap();
        let tb = simulate(&b, &stim).unwrap();
        prop_assert!(same_values(&ta, &tb, &d.signals()));
        prop_assert_eq!(simulate(&a, &stim).unwrap(), ta);
    }

    #[test]
    fn classification_matches_bfs(seed in any::<u64>()) {
        let n = parse_design(&RandomDesign::new(seed).text()).unwrap();
        let g = DependencyGraph::build(&n);
        let names: Vec<String> = n.nets.keys().cloned().collect();
        for r in &names {
            let oracle = bfs_depths(&n, r);
            for s in &names {
                let rel = g.classify(r, s).unwrap();
                match oracle.get(s) {
                    Some(&1) => prop_assert_eq!(rel.kind, RelationKind::Direct),
                    Some(_) => prop_assert_eq!(rel.kind, RelationKind::Indirect),
                    None => prop_assert_eq!(rel.kind, RelationKind::Unrelated),
                }
                prop_assert_eq!(rel.depth, oracle.get(s).copied().unwrap_or(0));
                if rel.kind != RelationKind::Unrelated {
                    prop_assert_eq!(rel.witness_path.first(), Some(r));
                    prop_assert_eq!(rel.witness_path.last(), Some(s));
                    prop_assert_eq!(rel.witness_path.len(), rel.depth + 1);
                }
            }
            let mut prev = g.fanin(r, Some(0)).unwrap();
            for d in 1..6 {
                let next = g.fanin(r, Some(d)).unwrap();
                prop_assert!(prev.keys().all(|k| next.contains_key(k)));
                prev = next;
            }
            prop_assert_eq!(g.fanin(r, None).unwrap(), oracle);
        }
    }

    #[test]
    fn assertion_round_trip_and_signals(seed in any::<u64>()) {
        let d = RandomDesign::new(seed);
        let mut rng = substream(seed, "properties/sva");
        let text: String = (0..3).map(|i| random_assertion(&mut rng, &format!("A{i}"), &d.signals()) + "\n").collect();
        let parsed = parse_file(&text).unwrap();
        prop_assert_eq!(parse_file(&render_file(&parsed)).unwrap(), parsed.clone());
        for a in &parsed {
            prop_assert_eq!(a.signals(), leaf_signals(a));
        }
    }

    #[test]
    fn implication_forms_and_past_agree(seed in any::<u64>()) {
        let d = RandomDesign::new(seed);
        let n = parse_design(&d.text()).unwrap();
        let sigs = d.signals();
        let mut rng = substream(seed, "properties/semantics");
        let a = bool_term(&mut rng, &sigs);
        let c = bool_term(&mut rng, &sigs);
        let next = parse_assertion(&format!("X: assert property (@(posedge clk_i) {a} |=> {c});")).unwrap();
        let delayed = parse_assertion(&format!("Y: assert property (@(posedge clk_i) {a} |-> ##1 {c});")).unwrap();
        let guard = &sigs[rng.random_range(0..sigs.len())];
        let gated = parse_assertion(&format!(
            "Z: assert property (@(posedge clk_i) disable iff ({guard}[0]) {a} |-> ##1 {c});"
        )).unwrap();
        let stim = random_stimulus(&n, 16, &mut rng);
        let trace = simulate(&n, &stim).unwrap();
        let v = check_assertions(&trace, &[next, delayed, gated]).unwrap();
        prop_assert_eq!(&v[0].statuses, &v[1].statuses);
        prop_assert_eq!(&v[0].failures, &v[1].failures);
        for t in 0..trace.cycles() {
            if trace.value(t, guard).unwrap() & 1 == 1 {
                prop_assert_eq!(v[2].statuses[t], Status::NotAttempted);
                prop_assert!(v[2].failures.iter().all(|f| f.start != t && f.cycle != t));
            }
        }
        for s in &sigs {
            for depth in 1..4usize {
                let e = assertport::expr::parse_expression(&format!("$past({s}, {depth})")).unwrap();
                let got = trace.eval(&e).unwrap();
                for (t, g) in got.iter().enumerate().skip(depth) {
                    prop_assert_eq!(Some(*g), trace.value(t - depth, s));
                }
            }
        }
    }

    #[test]
    fn link_reports_are_complete(seed in any::<u64>()) {
        let d = RandomDesign::new(seed);
        let n = parse_design(&d.text()).unwrap();
        let mut rng = substream(seed, "properties/links");
        let mut names = d.signals();
        names.push("GhostSignal".into());
        let source = parse_assertion(&random_assertion(&mut rng, "L", &names)).unwrap();
        let map = SignalMap::default();
        let cfg = TranslationConfig { seed, max_vectors: 500, ..TranslationConfig::default() };
        let out = translate(&source, &n, &map, &cfg).unwrap();
        let sources: Vec<&str> = out.link_report.links.iter().map(|l| l.source.as_str()).collect();
        let distinct: BTreeSet<&str> = sources.iter().copied().collect();
        prop_assert_eq!(sources.len(), distinct.len());
        let signals = source.signals();
        prop_assert_eq!(distinct, signals.iter().map(|s| s.as_str()).collect::<BTreeSet<_>>());
        let unresolved = out.link_report.links.iter().any(|l| l.status == LinkStatus::Unresolved);
        match &out.verdict {
            Verdict::Translatable { assertion, .. } => {
                prop_assert!(!unresolved);
                for s in assertion.signals() {
                    prop_assert!(n.resolves(&s), "{}", s);
                }
                prop_assert!(!assertion.signals().contains("GhostSignal"));
                let all_matched = out.link_report.links.iter().all(|l| l.status != LinkStatus::Dropped);
                if all_matched {
                    prop_assert_eq!(assertion, &source);
                }
            }
            Verdict::Untranslatable { reasons } => prop_assert!(!reasons.is_empty()),
        }
        if let Some(ghost) = out.link_report.links.iter().find(|l| l.source == "GhostSignal") {
            prop_assert!(matches!(ghost.status, LinkStatus::Dropped | LinkStatus::Unresolved));
        }
    }

    #[test]
    fn trojans_sleep_until_triggered(seed in any::<u64>()) {
        let d = RandomDesign::new(seed);
        let n = parse_design(&d.text()).unwrap();
        let mut rng = substream(seed, "properties/trojan");
        let mut bits: Vec<(String, u32)> = d.inputs.iter().flat_map(|i| (0..W).map(move |b| (i.clone(), b))).collect();
        bits.shuffle(&mut rng);
        bits.truncate(rng.random_range(1..=bits.len().min(6)));
        let targets: Vec<&String> = d.nets.iter().chain(&d.regs).collect();
        let net = targets[rng.random_range(0..targets.len())].clone();
        let spec = TrojanSpec {
            id: "p".into(),
            k: bits.len() as u32,
            trigger: bits.iter().map(|(s, b)| TriggerTerm { signal: s.clone(), bit: Some(*b), value: rng.random_range(0..2) }).collect(),
            payload: Payload::InvertNet { net },
            module_kind: ModuleKind::of(&n),
            target_assertion: None,
        };
        let injected = inject(&n, &spec).unwrap().netlist;
        prop_assert_eq!(&injected.name, &n.name);
        prop_assert_eq!(&injected.ports, &n.ports);
        for _ in 0..20 {
            let mut stim = random_stimulus(&n, 10, &mut rng);
            for c in 0..stim.cycles() {
                let hit = spec.trigger.iter().all(|t| (stim.inputs[c][&t.signal] >> t.bit.unwrap()) & 1 == t.value);
                if hit {
                    let t = &spec.trigger[0];
                    let v = stim.inputs[c][&t.signal] ^ (1 << t.bit.unwrap());
                    stim.set(c, &t.signal, v);
                }
            }
            prop_assert!(trigger_trace(&n, &spec, &stim).iter().all(|f| !f));
            prop_assert!(same_values(&simulate(&n, &stim).unwrap(), &simulate(&injected, &stim).unwrap(), &d.signals()));
        }
        let exact = brute_force_probability(&n, &spec).unwrap();
        prop_assert_eq!(exact, analytic_probability(spec.k));
    }

    #[test]
    fn tder_is_scale_invariant(d in 0usize..50, extra in 0usize..50, c in 1usize..20) {
        let g = d + extra + 1;
        prop_assert_eq!(tder(c * d, c * g).unwrap(), tder(d, g).unwrap());
    }
}

#[test]
fn tpi_is_k_log2_for_every_k() {
    for k in 1..=80u32 {
        let t = tpi_exact(&analytic_probability(k)).unwrap();
        let closed = k as f64 * std::f64::consts::LOG10_2;
        assert!((t - closed).abs() <= 1e-12 * closed.max(1.0), "k={k}: {t} vs {closed}");
        assert_eq!(analytic_probability(k), BigRational::new(BigInt::one(), BigInt::one() << k as usize));
    }
}

#[test]
fn forge_is_deterministic() {
    let n = parse_design(include_str!("../corpus/eti/target.sv")).unwrap();
    let cfg = TranslationConfig::default();
    let map = SignalMap::from_json(include_str!("../corpus/eti/signal_map.json"), &n).unwrap();
    let assertions: Vec<Assertion> = parse_file(include_str!("../corpus/eti/source.sva"))
        .unwrap()
        .iter()
        .filter_map(|a| translate(a, &n, &map, &cfg).unwrap().assertion().cloned())
        .collect();
    let params = ForgeParams { seed: 31, count: 6, k_min: 2, k_max: 10, ..ForgeParams::default() };
    let a = forge(&n, &assertions, &params).unwrap();
    let b = forge(&n, &assertions, &params).unwrap();
    assert_eq!(a, b);
    let other = forge(&n, &assertions, &ForgeParams { seed: 32, ..params.clone() }).unwrap();
    assert_ne!(a, other);
    let sim = Simulator::new(&n).unwrap();
    assert_eq!(sim.run(&a[0].activation), sim.run(&a[0].activation));
}
