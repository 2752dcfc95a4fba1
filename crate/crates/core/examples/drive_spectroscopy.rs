//! Spectroscopy of a lattice atom: a weak linear drive `g sin(wt) x / a0` is
//! applied for a fixed time at each frequency, and the ground-state survival
//! trace is fitted to `1 - A sin^2(Omega t)`.
//!
//! Usage: `cargo run --release --example drive_spectroscopy -- [points]`
//! (default 60). Writes `spectroscopy.csv` to the working directory.

use pseudochem::protocols::{spectroscopy_sweep, SpectroscopyParams};

fn main() -> pseudochem::Result<()> {
    let points: usize = std::env::args().nth(1).map_or(60, |s| s.parse().expect("points must be an integer"));
    let params = SpectroscopyParams {
        points,
        ..SpectroscopyParams::default()
    };
    let result = spectroscopy_sweep(&params)?;

    println!("ground energy {:.6}; dipole-allowed transitions:", result.ground_energy);
    for t in result.transitions.iter().filter(|t| t.dipole > 1e-6) {
        println!(
            "  level {:>2} {:>5}  gap {:.5}  |<n|x|0>| {:.4}{}",
            t.level,
            t.label.as_str(),
            t.gap,
            t.dipole,
            if t.unbound { "  (unbound)" } else { "" }
        );
    }
    println!("resonances:");
    for r in &result.resonances {
        println!(
            "  omega {:.5}  A {:.3}  -> {} (gap {})",
            r.omega,
            r.amplitude,
            r.label.map_or("?", |l| l.as_str()),
            r.gap.map_or("-".into(), |g| format!("{g:.5}"))
        );
    }
    let mut writer = csv::Writer::from_path("spectroscopy.csv")?;
    for record in &result.records {
        writer.serialize(record)?;
    }
    writer.flush()?;
    Ok(())
}
