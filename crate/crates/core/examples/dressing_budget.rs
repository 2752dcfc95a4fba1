//! Feasibility numbers for Rydberg dressing: interaction scale, soft-core
//! cap, coherence budget and the survival probability of a ramp.
//!
//! Usage: `cargo run --example dressing_budget`

use std::f64::consts::PI;

use pseudochem::dressing::{
    dressed_time, exposure_time, figure_of_merit, n_scaling_gain, report, stroboscopic_scaling, DressingParams,
};
use pseudochem::dynamics::Schedule;

fn main() -> pseudochem::Result<()> {
    // lattice hopping of 2 pi x 1.7 kHz with a 1 ms effective lifetime
    let merit = figure_of_merit(2.0 * PI * 1.7e3, 1e-3);
    println!("J tau_eff                 = {merit:.2}");
    println!("gain from n = 28 to 70    = {:.1}", n_scaling_gain(28, 70)?);
    let (j, v, gamma) = stroboscopic_scaling(0.25)?;
    println!("stroboscopic duty 0.25    : J x {j:.4}, V x {v:.2}, Gamma x {gamma:.2}");

    let params = DressingParams {
        rabi: 1.0,
        detuning: 8.0,
        hopping: 1.0,
        tau_eff: Some(merit),
        principal_n: Some(70),
        duty_cycle: None,
    };
    for warning in params.warnings() {
        println!("warning: {warning}");
    }
    for t_int in [10.0, 20.0, 40.0] {
        let ramp = Schedule::builder(0.0).sin4_up(t_int, 0.0, 1.0).build()?;
        let dressed = dressed_time(&ramp, 0.0, t_int);
        let r = report(&params, dressed, exposure_time(&ramp, 0.0, t_int))?;
        println!(
            "T_int = {t_int:>4}: dressed time {dressed:6.2}/J, survival {:.3}",
            r.survival.unwrap_or(f64::NAN)
        );
    }
    Ok(())
}
