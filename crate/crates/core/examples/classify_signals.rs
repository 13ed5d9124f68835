// SPDX-License-Identifier: Apache-2.0

//! Dependency graph queries on the interrupt-gating module: direct and
//! indirect relationships, fan-in depths and a Graphviz dump.
//!
//!     cargo run --example classify_signals [reader] [source]
//!     cargo run --example classify_signals -- --dot | dot -Tsvg > deps.svg

use std::env;

use assertport::graph::DependencyGraph;
use assertport::rtl::parse_design;

const DESIGN: &str = include_str!("../corpus/reference/irq_handle.sv");

fn main() {
    let netlist = parse_design(DESIGN).expect("bundled design parses");
    let graph = DependencyGraph::build(&netlist);
    let args: Vec<String> = env::args().skip(1).collect();
    if args.first().map(String::as_str) == Some("--dot") {
        print!("{}", graph.to_dot());
        return;
    }
    let reader = args.first().map_or("handle_irq", String::as_str);

    match args.get(1) {
        Some(source) => match graph.classify(reader, source) {
            Ok(r) => println!("{reader} <- {source}: {:?} at depth {} via {}", r.kind, r.depth, r.witness_path.join(" <- ")),
            Err(e) => eprintln!("{e}"),
        },
        None => {
            let fanin = match graph.fanin(reader, None) {
                Ok(f) => f,
                Err(e) => {
                    eprintln!("{e}");
                    std::process::exit(1);
                }
            };
            println!("fan-in of {reader}:");
            for (s, d) in &fanin {
                let r = graph.classify(reader, s).unwrap();
                println!("  {s:<22} depth {d}  {:?}", r.kind);
            }
            // Everything outside the cone is unrelated.
            for s in graph.nodes().iter().filter(|s| !fanin.contains_key(*s) && *s != reader) {
                println!("  {s:<22} unrelated");
            }
        }
    }
}
