//! Time evolution under a ramped lattice Hamiltonian.
//!
//! A particle starts localized on the nucleus site with the hopping switched
//! off; the hopping is ramped on with a `sin^4` profile and the state follows
//! the instantaneous ground state more closely the slower the ramp. Writes
//! `ramp_dynamics.csv` with the fidelity to the final ground state.
//!
//! Usage: `cargo run --release --example ramp_dynamics`

use pseudochem::basis::SectorBasis;
use pseudochem::dynamics::{evolve, fidelity, EvolveOptions, Schedule, TimeDependentHamiltonian};
use pseudochem::lattice::{LatticeGeometry, SiteCoord};
use pseudochem::operators::{assemble_hopping, assemble_potential_term, StateVector};
use pseudochem::potentials::{assemble_potential, NucleusSpec, PotentialSpec, Spin};
use pseudochem::solver::ground_state;

fn main() -> pseudochem::Result<()> {
    let g = LatticeGeometry::new(21, 21)?;
    let nucleus = SiteCoord::new(10, 10);
    let basis = SectorBasis::single(g.clone());
    let field = assemble_potential(&PotentialSpec::new(vec![NucleusSpec::at_site(nucleus, 1.0)], 2.0, 1.0), &g, Spin::Up)?;
    let hopping = assemble_hopping(&basis, 1.0)?;
    let well = assemble_potential_term(&basis, &field)?;
    let target = ground_state(&pseudochem::operators::SparseOperator::linear_combination(&[(&hopping, 1.0), (&well, 1.0)])?, 1e-10)?;
    let start = StateVector::basis(basis.dim(), g.site_index(nucleus)?);

    let mut writer = csv::Writer::from_path("ramp_dynamics.csv")?;
    writer.write_record(["ramp_time", "t", "fidelity"])?;
    for ramp_time in [5.0, 20.0, 80.0] {
        let h = TimeDependentHamiltonian::new(vec![
            (hopping.clone(), Schedule::builder(0.0).sin4_up(ramp_time, 0.0, 1.0).build()?),
            (well.clone(), Schedule::constant(1.0, 0.0, ramp_time)),
        ])?;
        let opts = EvolveOptions {
            samples: 50,
            ..EvolveOptions::default()
        };
        let end = evolve(&start, &h, 0.0, ramp_time, &opts, |t, psi| {
            writer.write_record(&[ramp_time.to_string(), t.to_string(), fidelity(&target.state, psi)?.to_string()])?;
            Ok(())
        })?;
        println!(
            "ramp {ramp_time:>5.1}/J: final ground-state fidelity {:.4}, norm {:.12}",
            fidelity(&target.state, &end)?,
            end.norm()
        );
    }
    writer.flush()?;
    Ok(())
}
