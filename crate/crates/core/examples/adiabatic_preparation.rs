//! Adiabatic preparation of pseudo-He and pseudo-H2 ground states.
//!
//! Usage: `cargo run --release --example adiabatic_preparation -- [panel]`
//! where `panel` is one of `he-bosonic`, `he-fermionic`, `h2-singlet`,
//! `h2-triplet` (default: all four).

use std::time::Instant;

use pseudochem::basis::ExchangeSymmetry;
use pseudochem::protocols::{prepare_bosonic_helium, prepare_fermionic_helium, prepare_h2, PrepParams, RunResult};

fn report(name: &str, run: &RunResult, seconds: f64) {
    println!("{name} (dim {}, {:.1} s)", run.dim, seconds);
    for s in &run.stages {
        println!(
            "  after {:<14} t = {:>6.1}  E_gs = {:>12.6}  fidelity = {:.5}",
            s.name, s.end_time, s.ground_energy, s.fidelity
        );
    }
    println!("  E_final          = {:.6}", run.final_energy);
    println!("  E_exact          = {:.6}", run.exact_energy);
    println!("  E_noninteracting = {:.6}", run.noninteracting_energy);
    println!("  relative error   = {:.4} %", 100.0 * run.relative_energy_error);
    println!("  vs binding       = {:.4} %", 100.0 * run.relative_binding_error);
    println!("  vs interaction   = {:.4} %", 100.0 * run.relative_shift_error);
    println!("  final fidelity   = {:.5}", run.final_fidelity);
    println!("  max norm drift   = {:.2e}", run.max_norm_drift);
}

fn main() -> pseudochem::Result<()> {
    let which = std::env::args().nth(1).unwrap_or_else(|| "all".into());
    let panels: Vec<(&str, Box<dyn Fn() -> pseudochem::Result<RunResult>>)> = vec![
        ("he-bosonic", Box::new(|| prepare_bosonic_helium(&PrepParams::bosonic_helium()))),
        ("he-fermionic", Box::new(|| prepare_fermionic_helium(&PrepParams::fermionic_helium()))),
        (
            "h2-singlet",
            Box::new(|| prepare_h2(&PrepParams::hydrogen_molecule(ExchangeSymmetry::Symmetric))),
        ),
        (
            "h2-triplet",
            Box::new(|| prepare_h2(&PrepParams::hydrogen_molecule(ExchangeSymmetry::Antisymmetric))),
        ),
    ];
    for (name, run) in &panels {
        if which != "all" && which != *name {
            continue;
        }
        let start = Instant::now();
        let result = run()?;
        report(name, &result, start.elapsed().as_secs_f64());
    }
    Ok(())
}
