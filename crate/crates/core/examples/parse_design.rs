// SPDX-License-Identifier: Apache-2.0

//! Parses the interrupt-gating module, prints its ports and drivers, and
//! renders it back to SystemVerilog.
//!
//!     cargo run --example parse_design [path.sv]

use std::env;
use std::fs;

use assertport::rtl::{parse_design, Driver};

fn main() {
    let path = env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/corpus/reference/irq_handle.sv").into());
    let text = fs::read_to_string(&path).expect("readable design");
    let netlist = match parse_design(&text) {
        Ok(n) => n,
        Err(e) => {
            eprintln!("{}", e.render(&text));
            std::process::exit(1);
        }
    };

    println!("module {} ({})", netlist.name, &netlist.design_hash()[..12]);
    for p in netlist.inputs() {
        println!("  in  {}", p.name);
    }
    for p in netlist.outputs() {
        println!("  out {}", p.name);
    }
    for (name, net) in &netlist.nets {
        let how = match netlist.driver(name) {
            Driver::Input => "input".to_string(),
            Driver::Register(_) => "flop".to_string(),
            Driver::Undriven => "undriven".to_string(),
            Driver::Assign(_) => netlist
                .driving_expr(name)
                .map_or_else(|| "-".to_string(), |e| e.to_string()),
        };
        println!("  {name:<22} [{:>2}] {how}", net.width);
    }
    println!("\n{}", netlist.render());
}
