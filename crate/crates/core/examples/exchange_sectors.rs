//! Two particles on a small lattice: the spin-singlet (symmetric) and
//! spin-triplet (antisymmetric) spatial sectors together reproduce the
//! spectrum of two distinguishable particles.
//!
//! Usage: `cargo run --example exchange_sectors`

use pseudochem::basis::{ExchangeSymmetry, SectorBasis};
use pseudochem::interactions::InteractionSpec;
use pseudochem::lattice::LatticeGeometry;
use pseudochem::operators::{assemble_h0, assemble_interaction, SparseOperator};
use pseudochem::solver::dense_spectrum;

fn spectrum(g: &LatticeGeometry, symmetry: ExchangeSymmetry, field: &[f64]) -> pseudochem::Result<Vec<f64>> {
    let basis = SectorBasis::pair(g.clone(), symmetry);
    let h0 = assemble_h0(&basis, field, 1.0)?;
    let int = assemble_interaction(&basis, &InteractionSpec::new(1.0, 6.0)?)?;
    Ok(dense_spectrum(&SparseOperator::linear_combination(&[(&h0, 1.0), (&int, 1.0)])?))
}

fn main() -> pseudochem::Result<()> {
    let g = LatticeGeometry::new(3, 3)?;
    let field: Vec<f64> = (0..9).map(|i| -1.0 / (1.0 + (i as f64 - 4.0).abs())).collect();
    let singlet = spectrum(&g, ExchangeSymmetry::Symmetric, &field)?;
    let triplet = spectrum(&g, ExchangeSymmetry::Antisymmetric, &field)?;
    let full = spectrum(&g, ExchangeSymmetry::Distinguishable, &field)?;
    println!("dimensions: singlet {}, triplet {}, distinguishable {}", singlet.len(), triplet.len(), full.len());
    println!("lowest singlet {:.6}, lowest triplet {:.6}", singlet[0], triplet[0]);
    let mut merged = [singlet, triplet].concat();
    merged.sort_by(f64::total_cmp);
    let worst = merged.iter().zip(&full).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    println!("max deviation of merged sectors from distinguishable spectrum: {worst:.2e}");
    Ok(())
}
