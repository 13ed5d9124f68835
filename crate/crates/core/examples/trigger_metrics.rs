// SPDX-License-Identifier: Apache-2.0

//! Trigger probability three ways for a hand-built Trojan: the closed form
//! 2^-k, brute force over the trigger cone, and a seeded Monte Carlo
//! estimate with its Clopper-Pearson interval. Ends with the TPI curve.
//!
//!     cargo run --example trigger_metrics

use assertport::metrics::{
    analytic_probability, brute_force_probability, format_tpi, monte_carlo_probability, tder, to_f64, tpi, tpi_exact,
};
use assertport::rtl::parse_design;
use assertport::trojan::{ModuleKind, Payload, TriggerTerm, TrojanSpec};

const TARGET: &str = include_str!("../corpus/csr/target.sv");

fn main() {
    let target = parse_design(TARGET).unwrap();
    let bit = |signal: &str, b: u32, value: u64| TriggerTerm { signal: signal.into(), bit: Some(b), value };
    let spec = TrojanSpec {
        id: "demo".into(),
        trigger: vec![bit("csr_addr_i", 0, 1), bit("csr_addr_i", 8, 1), bit("csr_wdata_i", 31, 0), bit("csr_op_en_i", 0, 1)],
        k: 4,
        payload: Payload::InvertNet { net: "priv_illegal".into() },
        module_kind: ModuleKind::of(&target),
        target_assertion: None,
    };
    spec.validate(&target).expect("trigger bits exist");

    let exact = analytic_probability(spec.k);
    let brute = brute_force_probability(&target, &spec).unwrap();
    let mc = monte_carlo_probability(&target, &spec, 100_000, 11).unwrap();
    println!("analytic     {exact} = {:.6}", to_f64(&exact));
    println!("brute force  {brute}");
    println!(
        "monte carlo  {:.6} ({} / {}), 95% CI [{:.6}, {:.6}] contains 2^-k: {}",
        mc.estimate,
        mc.hits,
        mc.samples,
        mc.lower,
        mc.upper,
        mc.contains(to_f64(&exact))
    );
    println!("TPI          {}", format_tpi(tpi_exact(&exact).unwrap()));

    println!("\n  k   P            TPI");
    for k in [1, 2, 3, 5, 8, 12, 16, 24, 32, 48, 64] {
        let p = analytic_probability(k);
        println!("{k:>3}   {:<11.4e}  {}", to_f64(&p), format_tpi(tpi_exact(&p).unwrap()));
    }
    // The float path agrees until 2^-k underflows to subnormals.
    assert!((tpi(0.125).unwrap() - tpi_exact(&analytic_probability(3)).unwrap()).abs() < 1e-12);
    println!("\nTDER 6/7 = {:.2}%", tder(6, 7).unwrap());
}
