//! Binding-energy curve of pseudo-H2: the interaction is ramped onto the
//! noninteracting two-particle ground state at each nuclear separation.
//!
//! Usage: `cargo run --release --example bond_curve -- [max_separation]`
//! (default 8). Writes `bond_curve.csv` to the working directory.

use pseudochem::basis::ExchangeSymmetry;
use pseudochem::protocols::{bond_scan, PrepParams};

fn main() -> pseudochem::Result<()> {
    let max_d: usize = std::env::args().nth(1).map_or(8, |s| s.parse().expect("separation must be an integer"));
    let separations: Vec<usize> = (1..=max_d).collect();
    let t_ints = [10.0, 20.0, 40.0];

    let mut writer = csv::Writer::from_path("bond_curve.csv")?;
    for sector in [ExchangeSymmetry::Symmetric, ExchangeSymmetry::Antisymmetric] {
        let rows = bond_scan(&PrepParams::hydrogen_molecule(sector), &separations, &t_ints)?;
        println!("{} sector", sector.spin_label());
        println!("{:>3} {:>7} {:>11} {:>11} {:>9}", "d", "T_int", "dE", "dE_exact", "fidelity");
        for r in &rows {
            match &r.error {
                None => println!(
                    "{:>3} {:>7.1} {:>11.5} {:>11.5} {:>9.4}",
                    r.separation, r.interaction_time, r.delta_e, r.delta_e_exact, r.fidelity
                ),
                Some(e) => println!("{:>3} {:>7.1} failed: {e}", r.separation, r.interaction_time),
            }
            writer.serialize(r)?;
        }
    }
    writer.flush()?;
    Ok(())
}
