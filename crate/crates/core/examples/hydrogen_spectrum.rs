//! Bound states of a single particle in a lattice Coulomb well.
//!
//! Prints the lowest levels with their orbital labels next to the continuum
//! estimate `-Ry / (2n - 1)^2`, measured from the bottom of the band.
//!
//! Usage: `cargo run --release --example hydrogen_spectrum -- [size] [a0]`
//! (defaults: 41, 4).

use pseudochem::basis::SectorBasis;
use pseudochem::lattice::LatticeGeometry;
use pseudochem::operators::assemble_h0;
use pseudochem::potentials::{assemble_potential, NucleusSpec, PotentialSpec, Spin};
use pseudochem::solver::{analyze_orbital, band_bottom, low_spectrum, principal_energy};

fn main() -> pseudochem::Result<()> {
    let mut args = std::env::args().skip(1);
    let size: usize = args.next().map_or(41, |s| s.parse().expect("size must be an integer"));
    let a0: f64 = args.next().map_or(4.0, |s| s.parse().expect("a0 must be a number"));

    let g = LatticeGeometry::new(size, size)?;
    let center = g.center();
    let spec = PotentialSpec::new(vec![NucleusSpec::new(center, 1.0)], a0, 1.0);
    let field = assemble_potential(&spec, &g, Spin::Up)?;
    let h = assemble_h0(&SectorBasis::single(g.clone()), &field, 1.0)?;
    let levels = low_spectrum(&h, 10, 1e-11)?;
    let floor = band_bottom(&g, 1.0);

    println!("{size}x{size} lattice, a0 = {a0}, band bottom {floor:.6}");
    println!("{:>5} {:>12} {:>6} {:>6} {:>9}", "level", "E - E_band", "label", "|m|", "nodes");
    for (k, level) in levels.iter().enumerate() {
        let orbital = analyze_orbital(&level.state, &g, center)?;
        println!(
            "{k:>5} {:>12.6} {:>6} {:>6} {:>9}",
            level.energy - floor,
            orbital.label.as_str(),
            orbital.dominant_m,
            orbital.radial_nodes
        );
    }
    println!("continuum estimates:");
    for n in 1..=4 {
        println!("  n = {n}: {:.6}", principal_energy(n, a0, 1.0)?);
    }
    Ok(())
}
