// SPDX-License-Identifier: Apache-2.0

//! Runs the bundled five-module campaign end to end into a temporary
//! directory (or the one given) and prints the report.
//!
//!     cargo run --release --example desk_campaign [out_dir] [table|json|csv]

use std::env;
use std::path::PathBuf;

use assertport::campaign::{run_evaluate, run_inject, run_translate, ProjectConfig};
use assertport::metrics::Format;

const CONFIG: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/corpus/campaign.json");

fn main() {
    let mut args = env::args().skip(1);
    let out = args.next().map(PathBuf::from).unwrap_or_else(|| env::temp_dir().join("assertport-desk"));
    let format: Format = args.next().map_or(Ok(Format::Table), |f| f.parse()).unwrap_or_else(|e| {
        eprintln!("{e}");
        std::process::exit(1);
    });

    let mut cfg = ProjectConfig::load(CONFIG.as_ref()).expect("bundled config loads");
    cfg.out = out;
    cfg.format = format;

    let summary = run_translate(&cfg).expect("translate stage");
    for (module, total, ok, failed) in &summary.modules {
        eprintln!("{module}: {ok}/{total} translated {failed:?}");
    }
    let n = run_inject(&cfg).expect("inject stage");
    eprintln!("injected {n} Trojans");
    let outcome = run_evaluate(&cfg).expect("evaluate stage");
    for e in &outcome.errors {
        eprintln!("error: {e}");
    }
    print!("{}", outcome.report.emit(format));
    eprintln!("artifacts under {}", cfg.out.display());
}
