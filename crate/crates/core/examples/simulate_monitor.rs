// SPDX-License-Identifier: Apache-2.0

//! Simulates the CSR target on a short hand-written stimulus, runs the
//! ported assertions as monitors and writes a VCD.
//!
//!     cargo run --example simulate_monitor [out.vcd]

use std::env;
use std::fs::File;
use std::io::BufWriter;

use assertport::rtl::parse_design;
use assertport::sim::{check_assertions, simulate, write_vcd, Stimulus, Status};
use assertport::sva::parse_file;
use assertport::translate::{translate, SignalMap, TranslationConfig};

const TARGET: &str = include_str!("../corpus/csr/target.sv");
const SOURCE: &str = include_str!("../corpus/csr/source.sva");
const MAP: &str = include_str!("../corpus/csr/signal_map.json");

fn main() {
    let target = parse_design(TARGET).expect("target parses");
    let map = SignalMap::from_json(MAP, &target).unwrap();
    let ported: Vec<_> = parse_file(SOURCE)
        .unwrap()
        .iter()
        .filter_map(|a| translate(a, &target, &map, &TranslationConfig::default()).ok()?.assertion().cloned())
        .collect();

    // Machine-mode write to mtvec, an mstatus read, then a user-mode write
    // to mepc that should fault.
    let mut stim = Stimulus::idle(&target, 8);
    stim.reset_cycles = 2;
    for c in 0..8 {
        stim.set(c, "priv_mode_i", 3);
    }
    stim.set(2, "csr_op_en_i", 1);
    stim.set(2, "csr_op_i", 1);
    stim.set(2, "csr_addr_i", 0x305);
    stim.set(2, "csr_wdata_i", 0x8000_0100);
    stim.set(3, "csr_op_en_i", 1);
    stim.set(3, "csr_addr_i", 0x300);
    stim.set(4, "priv_mode_i", 0);
    stim.set(4, "csr_op_en_i", 1);
    stim.set(4, "csr_op_i", 1);
    stim.set(4, "csr_addr_i", 0x341);

    let trace = match simulate(&target, &stim) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("{e}");
            std::process::exit(1);
        }
    };
    for v in check_assertions(&trace, &ported).unwrap() {
        let s = v.summary;
        let marks: String = v
            .statuses
            .iter()
            .map(|st| match st {
                Status::NotAttempted => '-',
                Status::VacuousPass => '.',
                Status::Pass => '+',
                Status::Fail => 'X',
                Status::Pending => '?',
            })
            .collect();
        println!(
            "{:<26} {marks}  attempts {} vacuous {} pass {} fail {}",
            v.name, s.attempts, s.vacuous_passes, s.non_vacuous_passes, s.failures
        );
        for w in &v.warnings {
            println!("  warning: {w}");
        }
    }

    let path = env::args().nth(1).unwrap_or_else(|| "csr.vcd".into());
    let out = BufWriter::new(File::create(&path).expect("writable VCD path"));
    write_vcd(&trace, &target.name, out).unwrap();
    println!("wrote {path}");
}
