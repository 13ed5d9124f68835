// SPDX-License-Identifier: Apache-2.0

//! Batch pipeline over a project config. Stages talk only through files
//! under the output directory:
//!
//! ```text
//! out/<module>/translated/<assertion>.sva
//! out/<module>/reports/<assertion>.link.json
//! out/<module>/trojans/<id>/{design.sv, spec.json, stimulus.json, result.json}
//! out/metrics.json
//! out/report.{txt,json,csv}
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metrics::{analytic_probability, brute_force_probability, tpi_exact, to_f64, Format, MetricsReport, ModuleRow, TrojanRow};
use crate::rtl::{parse_design, Netlist};
use crate::sim::{check_assertions, simulate, Stimulus};
use crate::sva::{parse_file, render_file, Assertion};
use crate::translate::{translate, SignalMap, TranslationConfig, TranslationOutcome};
use crate::trojan::{forge, inject, ForgeParams, TrojanSpec};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModuleConfig {
    /// Report label, e.g. `CSR`.
    pub name: String,
    pub target: PathBuf,
    pub assertions: PathBuf,
    pub signal_map: PathBuf,
    /// Design the assertions were written for; only checked for existence
    /// and syntax.
    #[serde(default)]
    pub source_design: Option<PathBuf>,
    #[serde(default)]
    pub trojans: usize,
    #[serde(default)]
    pub k_values: Vec<u32>,
}

impl ModuleConfig {
    /// Directory name under the output root.
    pub fn slug(&self) -> String {
        self.name.to_ascii_lowercase()
    }
}

fn default_k_min() -> u32 {
    1
}

fn default_k_max() -> u32 {
    16
}

fn default_max_vectors() -> usize {
    10_000
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProjectConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    #[serde(default)]
    pub format: Format,
    #[serde(default = "default_k_min")]
    pub k_min: u32,
    #[serde(default = "default_k_max")]
    pub k_max: u32,
    /// Random test-case candidates per assertion.
    #[serde(default = "default_max_vectors")]
    pub max_vectors: usize,
    /// Cycles simulated after reset when no test case drives a Trojan.
    #[serde(default = "default_horizon")]
    pub horizon: usize,
    pub modules: Vec<ModuleConfig>,
}

fn default_horizon() -> usize {
    8
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Error)]
pub enum CampaignError {
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("config: {0}")]
    Config(String),
    #[error("{module}: {message}")]
    Stage { module: String, message: String },
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CampaignError {
    CampaignError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

fn read(path: &Path) -> Result<String, CampaignError> {
    fs::read_to_string(path).map_err(|e| io_err(path, e))
}

/// Writes through a temporary sibling so readers never see partial files.
fn write_atomic(path: &Path, contents: &str) -> Result<(), CampaignError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    }
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, contents).map_err(|e| io_err(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| io_err(path, e))
}

impl ProjectConfig {
    /// Loads the JSON config, resolving relative paths against its directory.
    pub fn load(path: &Path) -> Result<Self, CampaignError> {
        let text = read(path)?;
        let mut cfg: ProjectConfig = serde_json::from_str(&text).map_err(|e| CampaignError::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        let base = path.parent().unwrap_or(Path::new(""));
        cfg.resolve(base);
        cfg.check()?;
        Ok(cfg)
    }

    fn resolve(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.out);
        for m in &mut self.modules {
            fix(&mut m.target);
            fix(&mut m.assertions);
            fix(&mut m.signal_map);
            if let Some(s) = &mut m.source_design {
                fix(s);
            }
        }
    }

    /// Every referenced input exists and module names are unique.
    pub fn check(&self) -> Result<(), CampaignError> {
        let mut seen = std::collections::BTreeSet::new();
        for m in &self.modules {
            if !seen.insert(m.slug()) {
                return Err(CampaignError::Config(format!("module `{}` listed twice", m.name)));
            }
            let paths = [&m.target, &m.assertions, &m.signal_map]
                .into_iter()
                .chain(m.source_design.as_ref());
            for p in paths {
                if !p.is_file() {
                    return Err(io_err(p, "no such file"));
                }
            }
            if m.k_values.len() > m.trojans {
                return Err(CampaignError::Config(format!(
                    "module `{}` lists {} k values for {} Trojans",
                    m.name,
                    m.k_values.len(),
                    m.trojans
                )));
            }
        }
        if self.k_min == 0 || self.k_min > self.k_max {
            return Err(CampaignError::Config(format!("bad k range {}..={}", self.k_min, self.k_max)));
        }
        Ok(())
    }

    /// Sets every module's Trojan count, dropping surplus k values.
    pub fn set_trojan_count(&mut self, count: usize) {
        for m in &mut self.modules {
            m.trojans = count;
            m.k_values.truncate(count);
        }
    }

    fn module_dir(&self, m: &ModuleConfig) -> PathBuf {
        self.out.join(m.slug())
    }
}

fn load_design(path: &Path) -> Result<Netlist, CampaignError> {
    let text = read(path)?;
    parse_design(&text).map_err(|e| CampaignError::Parse {
        path: path.to_path_buf(),
        message: e.render(&text),
    })
}

fn load_assertions(path: &Path) -> Result<Vec<Assertion>, CampaignError> {
    let text = read(path)?;
    parse_file(&text).map_err(|e| CampaignError::Parse {
        path: path.to_path_buf(),
        message: e.render(&text),
    })
}

/// A file body tagged with the campaign seed.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Stamped<T> {
    pub seed: u64,
    #[serde(flatten)]
    pub body: T,
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("artifacts serialize");
    s.push('\n');
    s
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct TranslateSummary {
    /// (module, source count, translated count, untranslatable names)
    pub modules: Vec<(String, usize, usize, Vec<String>)>,
    pub warnings: Vec<String>,
}

impl TranslateSummary {
    pub fn all_translated(&self) -> bool {
        self.modules.iter().all(|m| m.3.is_empty())
    }
}

fn reset_dir(dir: &Path) -> Result<(), CampaignError> {
    if dir.exists() {
        fs::remove_dir_all(dir).map_err(|e| io_err(dir, e))?;
    }
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))
}

/// Translates every module's assertions and writes one `.sva` per
/// translatable assertion plus one link report per source assertion.
pub fn run_translate(cfg: &ProjectConfig) -> Result<TranslateSummary, CampaignError> {
    let mut summary = TranslateSummary::default();
    for m in &cfg.modules {
        let target = load_design(&m.target)?;
        if let Some(src) = &m.source_design {
            load_design(src)?;
        }
        let source = load_assertions(&m.assertions)?;
        let map_text = read(&m.signal_map)?;
        let map = SignalMap::from_json(&map_text, &target).map_err(|e| CampaignError::Parse {
            path: m.signal_map.clone(),
            message: e.to_string(),
        })?;
        if source.is_empty() {
            summary
                .warnings
                .push(format!("{}: {} has no assertions", m.name, m.assertions.display()));
        }
        let tcfg = TranslationConfig {
            seed: cfg.seed,
            max_vectors: cfg.max_vectors,
            ..TranslationConfig::default()
        };
        let outcomes: Vec<TranslationOutcome> = source
            .par_iter()
            .map(|a| translate(a, &target, &map, &tcfg))
            .collect::<Result<_, _>>()
            .map_err(|e| CampaignError::Parse {
                path: m.signal_map.clone(),
                message: e.to_string(),
            })?;
        let dir = cfg.module_dir(m);
        reset_dir(&dir.join("translated"))?;
        reset_dir(&dir.join("reports"))?;
        let mut failed = Vec::new();
        for o in &outcomes {
            if let Some(a) = o.assertion() {
                write_atomic(&dir.join("translated").join(format!("{}.sva", o.source)), &a.render())?;
            } else {
                failed.push(o.source.clone());
            }
            let stamped = Stamped {
                seed: cfg.seed,
                body: o,
            };
            write_atomic(&dir.join("reports").join(format!("{}.link.json", o.source)), &to_json(&stamped))?;
        }
        summary
            .modules
            .push((m.name.clone(), source.len(), outcomes.len() - failed.len(), failed));
    }
    Ok(summary)
}

/// Translated assertions of one module, in source order.
fn translated_assertions(cfg: &ProjectConfig, m: &ModuleConfig) -> Result<Vec<Assertion>, CampaignError> {
    let dir = cfg.module_dir(m).join("translated");
    let mut out = Vec::new();
    for source in load_assertions(&m.assertions)? {
        let path = dir.join(format!("{}.sva", source.name));
        if path.is_file() {
            out.extend(load_assertions(&path)?);
        }
    }
    Ok(out)
}

fn trojan_prefix(m: &ModuleConfig) -> String {
    format!("{}_t", m.slug())
}

/// Forges and injects each module's Trojans, writing the mutated design,
/// the Trojan spec and the activation stimulus. Returns the Trojan count.
pub fn run_inject(cfg: &ProjectConfig) -> Result<usize, CampaignError> {
    let mut total = 0;
    for m in &cfg.modules {
        let dir = cfg.module_dir(m).join("trojans");
        reset_dir(&dir)?;
        if m.trojans == 0 {
            continue;
        }
        let target = load_design(&m.target)?;
        let assertions = translated_assertions(cfg, m)?;
        let params = ForgeParams {
            seed: cfg.seed,
            count: m.trojans,
            k_min: cfg.k_min,
            k_max: cfg.k_max,
            k_values: m.k_values.clone(),
            id_prefix: trojan_prefix(m),
            horizon: cfg.horizon,
            ..ForgeParams::default()
        };
        let stage = |e: &dyn std::fmt::Display| CampaignError::Stage {
            module: m.name.clone(),
            message: e.to_string(),
        };
        let forged = forge(&target, &assertions, &params).map_err(|e| stage(&e))?;
        for f in &forged {
            let injected = inject(&target, &f.spec).map_err(|e| stage(&e))?;
            let tdir = dir.join(&f.spec.id);
            write_atomic(&tdir.join("design.sv"), &injected.netlist.render())?;
            write_atomic(
                &tdir.join("spec.json"),
                &to_json(&Stamped {
                    seed: cfg.seed,
                    body: &f.spec,
                }),
            )?;
            let stim = StimulusFile {
                seed: cfg.seed,
                reset_cycles: f.activation.reset_cycles,
                inputs: f.activation.materialized(&target),
            };
            write_atomic(&tdir.join("stimulus.json"), &to_json(&stim))?;
        }
        total += forged.len();
    }
    Ok(total)
}

#[derive(Serialize)]
struct StimulusFile {
    seed: u64,
    reset_cycles: usize,
    inputs: Vec<BTreeMap<String, u64>>,
}

/// Outcome of simulating one injected design.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrojanResult {
    pub id: String,
    pub k: u32,
    pub probability: String,
    pub tpi: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub brute_force: Option<String>,
    pub detected: bool,
    pub detected_by: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Brute-force cross-checks above this many trigger bits are skipped.
const EVALUATE_BRUTE_FORCE_BITS: u32 = 20;

fn evaluate_one(target: &Netlist, assertions: &[Assertion], dir: &Path) -> Result<TrojanResult, CampaignError> {
    let spec_path = dir.join("spec.json");
    let spec = TrojanSpec::from_json(&read(&spec_path)?, target).map_err(|e| CampaignError::Parse {
        path: spec_path.clone(),
        message: e.to_string(),
    })?;
    let injected = load_design(&dir.join("design.sv"))?;
    let stim_path = dir.join("stimulus.json");
    let stim = Stimulus::from_json(&read(&stim_path)?).map_err(|e| CampaignError::Parse {
        path: stim_path.clone(),
        message: e.to_string(),
    })?;
    let trace = simulate(&injected, &stim).map_err(|e| CampaignError::Parse {
        path: stim_path.clone(),
        message: e.to_string(),
    })?;
    let verdicts = check_assertions(&trace, assertions).map_err(|e| CampaignError::Parse {
        path: dir.join("design.sv"),
        message: e.to_string(),
    })?;
    let detected_by: Vec<String> = verdicts.iter().filter(|v| v.failed()).map(|v| v.name.clone()).collect();
    let p = analytic_probability(spec.k);
    let brute_force = (spec.k <= EVALUATE_BRUTE_FORCE_BITS)
        .then(|| brute_force_probability(target, &spec).ok().map(|r| r.to_string()))
        .flatten();
    Ok(TrojanResult {
        id: spec.id.clone(),
        k: spec.k,
        probability: p.to_string(),
        tpi: tpi_exact(&p).expect("2^-k is in (0, 1]"),
        brute_force,
        detected: !detected_by.is_empty(),
        detected_by,
        error: None,
    })
}

fn trojan_dirs(dir: &Path) -> Result<Vec<PathBuf>, CampaignError> {
    if !dir.is_dir() {
        return Ok(Vec::new());
    }
    let mut dirs: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| io_err(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    let number = |p: &PathBuf| -> (u64, String) {
        let name = p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        let digits: String = name.chars().rev().take_while(|c| c.is_ascii_digit()).collect();
        (digits.chars().rev().collect::<String>().parse().unwrap_or(0), name)
    };
    dirs.sort_by_key(number);
    Ok(dirs)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluateOutcome {
    pub report: MetricsReport,
    /// Trojans whose run could not be completed.
    pub errors: Vec<String>,
}

/// Simulates every injected design under its activation stimulus against
/// the module's translated assertions, then writes `metrics.json` and the
/// report in the configured format.
pub fn run_evaluate(cfg: &ProjectConfig) -> Result<EvaluateOutcome, CampaignError> {
    let mut modules = Vec::new();
    let mut trojans = Vec::new();
    let mut errors = Vec::new();
    for m in &cfg.modules {
        let target = load_design(&m.target)?;
        let source = load_assertions(&m.assertions)?;
        let assertions = translated_assertions(cfg, m)?;
        let dirs = trojan_dirs(&cfg.module_dir(m).join("trojans"))?;
        let results: Vec<TrojanResult> = dirs
            .par_iter()
            .map(|d| {
                let id = d.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
                let r = evaluate_one(&target, &assertions, d).unwrap_or_else(|e| TrojanResult {
                    id,
                    k: 0,
                    probability: String::new(),
                    tpi: 0.0,
                    brute_force: None,
                    detected: false,
                    detected_by: Vec::new(),
                    error: Some(e.to_string()),
                });
                let _ = write_atomic(&d.join("result.json"), &to_json(&Stamped { seed: cfg.seed, body: &r }));
                r
            })
            .collect();
        let detected = results.iter().filter(|r| r.detected).count();
        modules.push(ModuleRow::new(&m.name, source.len(), assertions.len(), results.len(), detected));
        for r in results {
            if let Some(e) = &r.error {
                errors.push(format!("{}: {}", r.id, e));
                continue;
            }
            let p = analytic_probability(r.k);
            trojans.push(TrojanRow {
                number: trojans.len() + 1,
                id: r.id,
                module: m.name.clone(),
                k: r.k,
                probability: to_f64(&p),
                tpi: r.tpi,
                detected: r.detected,
                detected_by: r.detected_by,
            });
        }
    }
    let report = MetricsReport {
        seed: cfg.seed,
        modules,
        trojans,
    };
    write_atomic(&cfg.out.join("metrics.json"), &report.emit(Format::Json))?;
    write_report(cfg, &report)?;
    Ok(EvaluateOutcome { report, errors })
}

fn write_report(cfg: &ProjectConfig, report: &MetricsReport) -> Result<PathBuf, CampaignError> {
    let path = cfg.out.join(format!("report.{}", cfg.format.extension()));
    write_atomic(&path, &report.emit(cfg.format))?;
    Ok(path)
}

/// Re-renders `metrics.json` in the configured format.
pub fn run_report(cfg: &ProjectConfig) -> Result<(PathBuf, String), CampaignError> {
    let path = cfg.out.join("metrics.json");
    let report: MetricsReport = serde_json::from_str(&read(&path)?).map_err(|e| CampaignError::Parse {
        path: path.clone(),
        message: e.to_string(),
    })?;
    let out = write_report(cfg, &report)?;
    Ok((out, report.emit(cfg.format)))
}

/// Renders translated assertions of a module as one file; handy for
/// inspection and for loading into another tool.
pub fn collect_translated(cfg: &ProjectConfig, m: &ModuleConfig) -> Result<String, CampaignError> {
    Ok(render_file(&translated_assertions(cfg, m)?))
}
