// SPDX-License-Identifier: Apache-2.0

//! Trigger probabilities, the Trojan power index `log10(1/P)`, the detection
//! ratio, and the two report tables.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::RngExt;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Beta, ContinuousCDF};
use thiserror::Error;

use crate::expr::mask;
use crate::rng::substream;
use crate::rtl::{Driver, Netlist};
use crate::sim::{Node, Simulator};
use crate::trojan::TrojanSpec;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricsError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("trigger cone has {bits} input bits; enumeration is capped at {limit}, use Monte Carlo")]
    ConeTooLarge { bits: u32, limit: u32 },
    #[error("Monte Carlo needs at least {min} samples, got {got}")]
    TooFewSamples { min: usize, got: usize },
    #[error("trigger cannot be evaluated: {0}")]
    Trigger(String),
}

/// Largest cone `brute_force_probability` enumerates.
pub const BRUTE_FORCE_LIMIT: u32 = 24;
pub const MIN_MONTE_CARLO_SAMPLES: usize = 1_000;

const LOG10_2: f64 = std::f64::consts::LOG10_2;

fn log10_biguint(n: &BigUint) -> f64 {
    let bits = n.bits();
    if bits <= 1000 {
        n.to_f64().expect("fits in f64").log10()
    } else {
        let shift = bits - 64;
        (n >> shift).to_f64().expect("64-bit").log10() + shift as f64 * LOG10_2
    }
}

/// `log10(1/p)`.
pub fn tpi(p: f64) -> Result<f64, MetricsError> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(MetricsError::Domain(format!("probability {p} outside (0, 1]")));
    }
    Ok(-p.log10())
}

/// `log10(1/p)` for an exact probability, without underflow.
pub fn tpi_exact(p: &BigRational) -> Result<f64, MetricsError> {
    if *p <= BigRational::zero() || *p > BigRational::one() {
        return Err(MetricsError::Domain(format!("probability {p} outside (0, 1]")));
    }
    let num = p.numer().magnitude();
    let den = p.denom().magnitude();
    Ok(log10_biguint(den) - log10_biguint(num))
}

/// `2^-k`, the chance a uniformly random input hits one k-bit cube.
pub fn analytic_probability(k: u32) -> BigRational {
    BigRational::new(BigInt::one(), BigInt::one() << k as usize)
}

pub fn to_f64(p: &BigRational) -> f64 {
    let num = p.numer().magnitude();
    let den = p.denom().magnitude();
    if num.is_zero() {
        return 0.0;
    }
    10f64.powf(log10_biguint(num) - log10_biguint(den))
}

/// `detected / generated` as a percentage.
pub fn tder(detected: usize, generated: usize) -> Result<f64, MetricsError> {
    if generated == 0 {
        return Err(MetricsError::Domain("no Trojans generated".into()));
    }
    if detected > generated {
        return Err(MetricsError::Domain(format!("{detected} detected out of {generated}")));
    }
    Ok(detected as f64 * 100.0 / generated as f64)
}

/// The trigger and the part of the design that feeds it, with free leaves
/// at primary inputs and registers.
struct ConeEval {
    leaves: Vec<(u32, u64)>,
    /// Wanted leaf values when the trigger is a plain cube over leaves.
    cube: Option<Vec<u64>>,
    assigns: Vec<(u32, Node)>,
    trigger: Node,
    state: Vec<u64>,
}

/// A new term on `signal` must not disagree with bits already fixed.
fn masks_agree(want: &BTreeMap<String, u64>, masks: &BTreeMap<String, u64>, signal: &str, m: u64, v: u64) -> bool {
    let seen = masks.get(signal).copied().unwrap_or(0) & m;
    want.get(signal).copied().unwrap_or(0) & seen == v & seen
}

impl ConeEval {
    fn new(netlist: &Netlist, spec: &TrojanSpec) -> Result<Self, MetricsError> {
        spec.validate(netlist).map_err(|e| MetricsError::Trigger(e.to_string()))?;
        let sim = Simulator::new(netlist).map_err(|e| MetricsError::Trigger(e.to_string()))?;
        let layout = sim.layout().clone();
        let mut masks: BTreeMap<String, u64> = BTreeMap::new();
        let mut want: Option<BTreeMap<String, u64>> = Some(BTreeMap::new());
        for t in &spec.trigger {
            let m = match (netlist.driver(&t.signal), t.bit) {
                (Driver::Assign(_), _) => None,
                (_, Some(b)) => Some((1u64 << b, (t.value & 1) << b)),
                (_, None) => {
                    let w = mask(netlist.net(&t.signal).map_or(0, |n| n.width));
                    Some((w, t.value & w))
                }
            };
            want = match (want, m) {
                (Some(mut acc), Some((m, v))) if masks_agree(&acc, &masks, &t.signal, m, v) => {
                    *acc.entry(t.signal.clone()).or_default() |= v;
                    Some(acc)
                }
                _ => None,
            };
            if let Some((m, _)) = m {
                *masks.entry(t.signal.clone()).or_default() |= m;
            }
        }
        masks.clear();
        let mut inner: BTreeSet<String> = BTreeSet::new();
        let mut stack: Vec<String> = Vec::new();
        for t in &spec.trigger {
            match (netlist.driver(&t.signal), t.bit) {
                (Driver::Assign(_), _) => stack.push(t.signal.clone()),
                (_, Some(b)) => *masks.entry(t.signal.clone()).or_default() |= 1 << b,
                (_, None) => {
                    let w = netlist.net(&t.signal).map_or(0, |n| n.width);
                    *masks.entry(t.signal.clone()).or_default() |= mask(w);
                }
            }
        }
        while let Some(n) = stack.pop() {
            if !inner.insert(n.clone()) {
                continue;
            }
            let rhs = netlist.driving_expr(&n).expect("assign-driven");
            rhs.visit_identifiers(&mut |id| {
                let Some(net) = netlist.net(id) else {
                    return;
                };
                match netlist.driver(id) {
                    Driver::Assign(_) => stack.push(id.to_string()),
                    _ => *masks.entry(id.to_string()).or_default() |= mask(net.width),
                }
            });
        }
        let cube = want.map(|w| masks.keys().map(|n| w.get(n).copied().unwrap_or(0)).collect());
        let leaves = masks
            .into_iter()
            .map(|(n, m)| (layout.slot(&n).expect("net"), m))
            .collect();
        let assigns = sim
            .assigns()
            .iter()
            .filter(|(slot, _)| inner.contains(&layout.names[*slot as usize]))
            .cloned()
            .collect();
        let trigger = sim
            .compile(&spec.trigger_expr(netlist))
            .map_err(|e| MetricsError::Trigger(e.to_string()))?;
        Ok(ConeEval {
            leaves,
            cube,
            assigns,
            trigger,
            state: vec![0; layout.names.len()],
        })
    }

    fn bits(&self) -> u32 {
        self.leaves.iter().map(|(_, m)| m.count_ones()).sum()
    }

    /// Scatters `bits` over the leaf masks, low bits first.
    fn load_packed(&mut self, mut bits: u64) {
        for (slot, m) in &self.leaves {
            let mut v = 0;
            let mut rest = *m;
            while rest != 0 {
                let low = rest & rest.wrapping_neg();
                if bits & 1 != 0 {
                    v |= low;
                }
                bits >>= 1;
                rest &= rest - 1;
            }
            self.state[*slot as usize] = v;
        }
    }

    fn fires(&mut self) -> bool {
        for (slot, e) in &self.assigns {
            let v = e.eval(&|s, _| self.state[s as usize], 0);
            self.state[*slot as usize] = v;
        }
        self.trigger.eval(&|s, _| self.state[s as usize], 0) != 0
    }
}

/// Exact fraction of leaf assignments that fire the trigger.
pub fn brute_force_probability(netlist: &Netlist, spec: &TrojanSpec) -> Result<BigRational, MetricsError> {
    let mut cone = ConeEval::new(netlist, spec)?;
    let bits = cone.bits();
    if bits > BRUTE_FORCE_LIMIT {
        return Err(MetricsError::ConeTooLarge {
            bits,
            limit: BRUTE_FORCE_LIMIT,
        });
    }
    let mut hits = 0u64;
    for v in 0..(1u64 << bits) {
        cone.load_packed(v);
        hits += cone.fires() as u64;
    }
    Ok(BigRational::new(BigInt::from(hits), BigInt::one() << bits as usize))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonteCarlo {
    pub estimate: f64,
    pub hits: u64,
    pub samples: usize,
    pub seed: u64,
    /// Clopper-Pearson 95% interval.
    pub lower: f64,
    pub upper: f64,
}

impl MonteCarlo {
    pub fn contains(&self, p: f64) -> bool {
        self.lower <= p && p <= self.upper
    }
}

/// Exact binomial interval at the given confidence.
pub fn clopper_pearson(hits: u64, samples: u64, confidence: f64) -> (f64, f64) {
    let alpha = 1.0 - confidence;
    let (x, n) = (hits as f64, samples as f64);
    let lower = if hits == 0 {
        0.0
    } else {
        Beta::new(x, n - x + 1.0).expect("positive shapes").inverse_cdf(alpha / 2.0)
    };
    let upper = if hits == samples {
        1.0
    } else {
        Beta::new(x + 1.0, n - x).expect("positive shapes").inverse_cdf(1.0 - alpha / 2.0)
    };
    (lower, upper)
}

/// Uniform random leaf assignments; deterministic in `seed`.
pub fn monte_carlo_probability(
    netlist: &Netlist,
    spec: &TrojanSpec,
    samples: usize,
    seed: u64,
) -> Result<MonteCarlo, MetricsError> {
    if samples < MIN_MONTE_CARLO_SAMPLES {
        return Err(MetricsError::TooFewSamples {
            min: MIN_MONTE_CARLO_SAMPLES,
            got: samples,
        });
    }
    let mut cone = ConeEval::new(netlist, spec)?;
    let mut rng = substream(seed, &format!("monte_carlo/{}", spec.id));
    let mut hits = 0u64;
    if let Some(want) = &cone.cube {
        for _ in 0..samples {
            hits += cone.leaves.iter().zip(want).all(|(&(_, m), &w)| rng.random::<u64>() & m == w) as u64;
        }
    } else {
        for _ in 0..samples {
            for i in 0..cone.leaves.len() {
                let (slot, m) = cone.leaves[i];
                cone.state[slot as usize] = rng.random::<u64>() & m;
            }
            hits += cone.fires() as u64;
        }
    }
    let (lower, upper) = clopper_pearson(hits, samples as u64, 0.95);
    Ok(MonteCarlo {
        estimate: hits as f64 / samples as f64,
        hits,
        samples,
        seed,
        lower,
        upper,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TriggerProbability {
    /// `2^-k` as `1/2^k`.
    pub analytic: String,
    pub analytic_decimal: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub brute_force: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub monte_carlo: Option<MonteCarlo>,
}

impl TriggerProbability {
    pub fn for_spec(netlist: &Netlist, spec: &TrojanSpec) -> Self {
        let p = analytic_probability(spec.k);
        TriggerProbability {
            analytic: p.to_string(),
            analytic_decimal: to_f64(&p),
            brute_force: brute_force_probability(netlist, spec).ok().map(|r| r.to_string()),
            monte_carlo: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModuleRow {
    pub module: String,
    pub source_assertions: usize,
    pub translated: usize,
    pub translation_pct: f64,
    pub trojans_generated: usize,
    pub trojans_detected: usize,
    /// `None` when no Trojan was generated.
    pub tder: Option<f64>,
}

impl ModuleRow {
    pub fn new(module: &str, source: usize, translated: usize, generated: usize, detected: usize) -> Self {
        ModuleRow {
            module: module.to_string(),
            source_assertions: source,
            translated,
            translation_pct: if source == 0 {
                0.0
            } else {
                translated as f64 * 100.0 / source as f64
            },
            trojans_generated: generated,
            trojans_detected: detected,
            tder: tder(detected, generated).ok(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrojanRow {
    /// 1-based number across the whole report.
    pub number: usize,
    pub id: String,
    pub module: String,
    pub k: u32,
    pub probability: f64,
    pub tpi: f64,
    pub detected: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub detected_by: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub seed: u64,
    pub modules: Vec<ModuleRow>,
    pub trojans: Vec<TrojanRow>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Table,
    Json,
    Csv,
}

impl std::str::FromStr for Format {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "table" => Ok(Format::Table),
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            other => Err(format!("unknown format `{other}` (table, json, csv)")),
        }
    }
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Table => "txt",
            Format::Json => "json",
            Format::Csv => "csv",
        }
    }
}

/// Scientific notation with four significant digits.
pub fn format_probability(p: f64) -> String {
    format!("{p:.3e}")
}

pub fn format_tpi(t: f64) -> String {
    format!("{t:.2}")
}

fn pct(v: f64) -> String {
    format!("{}%", format!("{v:.2}").trim_end_matches('0').trim_end_matches('.'))
}

const MODULE_HEADERS: [&str; 7] = [
    "Module",
    "Source assertions",
    "Translated",
    "Translation %",
    "Generated Trojans",
    "Detected Trojans",
    "Detection %",
];
const TROJAN_HEADERS: [&str; 4] = ["HW-T No.", "Module", "Triggering probability", "TPI"];

impl MetricsReport {
    fn module_rows(&self) -> Vec<[String; 7]> {
        self.modules
            .iter()
            .map(|m| {
                [
                    m.module.clone(),
                    m.source_assertions.to_string(),
                    m.translated.to_string(),
                    pct(m.translation_pct),
                    m.trojans_generated.to_string(),
                    m.trojans_detected.to_string(),
                    m.tder.map_or_else(|| "n/a".to_string(), pct),
                ]
            })
            .collect()
    }

    fn trojan_rows(&self) -> Vec<[String; 4]> {
        self.trojans
            .iter()
            .map(|t| {
                [
                    t.number.to_string(),
                    t.module.clone(),
                    format_probability(t.probability),
                    format_tpi(t.tpi),
                ]
            })
            .collect()
    }

    pub fn emit(&self, format: Format) -> String {
        match format {
            Format::Json => {
                let mut s = serde_json::to_string_pretty(self).expect("report serializes");
                s.push('\n');
                s
            }
            Format::Csv => {
                let mut s = String::new();
                let _ = writeln!(s, "# seed {}", self.seed);
                let _ = writeln!(s, "{}", MODULE_HEADERS.join(","));
                for r in self.module_rows() {
                    let _ = writeln!(s, "{}", r.join(","));
                }
                s.push('\n');
                let _ = writeln!(s, "{}", TROJAN_HEADERS.join(","));
                for r in self.trojan_rows() {
                    let _ = writeln!(s, "{}", r.join(","));
                }
                s
            }
            Format::Table => {
                let mut s = String::new();
                let _ = writeln!(s, "Security assertion translation and Trojan detection (seed {})", self.seed);
                aligned(&mut s, &MODULE_HEADERS, &self.module_rows());
                s.push('\n');
                let _ = writeln!(s, "Trojan triggering probability");
                aligned(&mut s, &TROJAN_HEADERS, &self.trojan_rows());
                s
            }
        }
    }
}

fn aligned<const N: usize>(out: &mut String, header: &[&str; N], rows: &[[String; N]]) {
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for r in rows {
        for (w, c) in widths.iter_mut().zip(r) {
            *w = (*w).max(c.len());
        }
    }
    let line = |cells: Vec<&str>| {
        cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:<w$}"))
            .collect::<Vec<_>>()
            .join("  ")
            .trim_end()
            .to_string()
    };
    let _ = writeln!(out, "{}", line(header.to_vec()));
    let _ = writeln!(out, "{}", widths.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>().join("  "));
    for r in rows {
        let _ = writeln!(out, "{}", line(r.iter().map(|c| c.as_str()).collect()));
    }
}
