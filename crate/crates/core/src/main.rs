// SPDX-License-Identifier: Apache-2.0

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use assertport::campaign::{run_evaluate, run_inject, run_report, run_translate, CampaignError, ProjectConfig};
use assertport::metrics::Format;

#[derive(Parser)]
#[command(name = "assertport", version, about = "Assertion porting and Trojan evaluation")]
struct Cli {
    /// Project config (JSON).
    #[arg(long, global = true, default_value = "assertport.json")]
    config: PathBuf,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Report format: table, json or csv.
    #[arg(long, global = true)]
    format: Option<Format>,
    /// Overrides the output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Trojans per module, overriding the config.
    #[arg(long, global = true)]
    count: Option<usize>,
    /// Smallest trigger size for Trojans without a configured k.
    #[arg(long, global = true)]
    k_min: Option<u32>,
    /// Largest trigger size for Trojans without a configured k.
    #[arg(long, global = true)]
    k_max: Option<u32>,
    /// Worker threads (default: one per core).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Port source assertions onto each target design.
    Translate,
    /// Forge and inject Trojans into each target design.
    Inject,
    /// Simulate injected designs and compute the metrics.
    Evaluate,
    /// Re-render the last metrics in the chosen format.
    Report,
    /// translate, inject and evaluate in sequence.
    Run,
}

const EXIT_ERROR: u8 = 1;
const EXIT_UNTRANSLATABLE: u8 = 2;

fn translate(cfg: &ProjectConfig) -> Result<u8, CampaignError> {
    let summary = run_translate(cfg)?;
    for w in &summary.warnings {
        eprintln!("warning: {w}");
    }
    for (module, total, ok, failed) in &summary.modules {
        println!("{module}: {ok}/{total} translated");
        for f in failed {
            println!("  untranslatable: {f}");
        }
    }
    Ok(if summary.all_translated() { 0 } else { EXIT_UNTRANSLATABLE })
}

fn inject(cfg: &ProjectConfig) -> Result<u8, CampaignError> {
    let n = run_inject(cfg)?;
    println!("injected {n} Trojans into {}", cfg.out.display());
    Ok(0)
}

fn evaluate(cfg: &ProjectConfig) -> Result<u8, CampaignError> {
    let outcome = run_evaluate(cfg)?;
    print!("{}", outcome.report.emit(cfg.format));
    for e in &outcome.errors {
        eprintln!("error: {e}");
    }
    Ok(if outcome.errors.is_empty() { 0 } else { EXIT_ERROR })
}

fn dispatch(cmd: Command, cfg: &ProjectConfig) -> Result<u8, CampaignError> {
    match cmd {
        Command::Translate => translate(cfg),
        Command::Inject => inject(cfg),
        Command::Evaluate => evaluate(cfg),
        Command::Report => {
            let (_, text) = run_report(cfg)?;
            print!("{text}");
            Ok(0)
        }
        Command::Run => {
            let code = translate(cfg)?;
            inject(cfg)?;
            let eval = evaluate(cfg)?;
            Ok(code.max(eval))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut cfg = match ProjectConfig::load(&cli.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_ERROR);
        }
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(format) = cli.format {
        cfg.format = format;
    }
    if let Some(out) = cli.out {
        cfg.out = out;
    }
    if let Some(n) = cli.count {
        cfg.set_trojan_count(n);
    }
    cfg.k_min = cli.k_min.unwrap_or(cfg.k_min);
    cfg.k_max = cli.k_max.unwrap_or(cfg.k_max);
    if let Err(e) = cfg.check() {
        eprintln!("error: {e}");
        return ExitCode::from(EXIT_ERROR);
    }
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(jobs) = cli.jobs {
        pool = pool.num_threads(jobs.max(1));
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_ERROR);
        }
    };
    match pool.install(|| dispatch(cli.command, &cfg)) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}
