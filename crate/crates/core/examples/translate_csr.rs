// SPDX-License-Identifier: Apache-2.0

//! Ports the bundled CSR assertions onto the CSR target and prints each
//! verdict with its signal links.
//!
//!     cargo run --example translate_csr [--json]

use std::env;

use assertport::rtl::parse_design;
use assertport::sva::parse_file;
use assertport::translate::{translate, SignalMap, TranslationConfig, Verdict};

const TARGET: &str = include_str!("../corpus/csr/target.sv");
const SOURCE: &str = include_str!("../corpus/csr/source.sva");
const MAP: &str = include_str!("../corpus/csr/signal_map.json");

fn main() {
    let json = env::args().any(|a| a == "--json");
    let target = parse_design(TARGET).expect("target parses");
    let map = SignalMap::from_json(MAP, &target).expect("map is valid");
    let cfg = TranslationConfig { seed: 7, ..TranslationConfig::default() };

    for source in parse_file(SOURCE).expect("assertions parse") {
        let out = translate(&source, &target, &map, &cfg).expect("config checked above");
        if json {
            println!("{}", serde_json::to_string_pretty(&out).unwrap());
            continue;
        }
        println!("== {}", source.name);
        println!("   {}", source.render().trim());
        for l in &out.link_report.links {
            println!(
                "   {:<18} {:?} -> {}  ({})",
                l.source,
                l.status,
                l.target.as_deref().unwrap_or("?"),
                l.method
            );
        }
        match &out.verdict {
            Verdict::Translatable { assertion, testcase } => {
                println!("   => {}", assertion.render().trim());
                println!("   test case: {} cycles", testcase.cycles());
            }
            Verdict::Untranslatable { reasons } => {
                for r in reasons {
                    println!("   untranslatable: {r}");
                }
            }
        }
    }
}
