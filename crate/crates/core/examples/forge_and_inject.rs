// SPDX-License-Identifier: Apache-2.0

//! Forges a few Trojans into the CSR target, injects each one and checks
//! that the ported assertions catch it on its activation stimulus.
//!
//!     cargo run --example forge_and_inject [count] [seed]

use std::env;

use assertport::rtl::parse_design;
use assertport::sim::{check_assertions, simulate};
use assertport::sva::parse_file;
use assertport::translate::{translate, SignalMap, TranslationConfig};
use assertport::trojan::{forge, inject, trigger_trace, ForgeParams};

const TARGET: &str = include_str!("../corpus/csr/target.sv");
const SOURCE: &str = include_str!("../corpus/csr/source.sva");
const MAP: &str = include_str!("../corpus/csr/signal_map.json");

fn main() {
    let mut args = env::args().skip(1);
    let count = args.next().and_then(|s| s.parse().ok()).unwrap_or(4);
    let seed = args.next().and_then(|s| s.parse().ok()).unwrap_or(2024);

    let target = parse_design(TARGET).unwrap();
    let map = SignalMap::from_json(MAP, &target).unwrap();
    let ported: Vec<_> = parse_file(SOURCE)
        .unwrap()
        .iter()
        .filter_map(|a| translate(a, &target, &map, &TranslationConfig::default()).ok()?.assertion().cloned())
        .collect();

    let params = ForgeParams { seed, count, k_min: 2, k_max: 6, id_prefix: "csr_t".into(), ..ForgeParams::default() };
    let forged = match forge(&target, &ported, &params) {
        Ok(f) => f,
        Err(e) => {
            eprintln!("forge: {e}");
            std::process::exit(1);
        }
    };

    for f in &forged {
        let spec = &f.spec;
        let injected = inject(&target, spec).expect("forged specs are valid");
        let fires = trigger_trace(&target, spec, &f.activation).iter().filter(|&&t| t).count();
        let trace = simulate(&injected.netlist, &f.activation).unwrap();
        let caught: Vec<_> = check_assertions(&trace, &ported)
            .unwrap()
            .into_iter()
            .filter(|v| v.failed())
            .map(|v| v.name)
            .collect();
        println!(
            "{}  k={:<2} payload on {:<14} fires {fires} cycle(s)  caught by {:?}",
            spec.id,
            spec.k,
            spec.payload.net(),
            caught
        );
    }
    if let Some(f) = forged.first() {
        println!("\n{}", serde_json::to_string_pretty(&f.spec).unwrap());
    }
}
