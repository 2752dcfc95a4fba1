//! Least-squares fit of ground-state survival traces to `1 - A sin^2(Omega t)`.
//!
//! For a fixed `Omega` the model is linear in `A`, so the fit is a
//! one-dimensional search: a fine `Omega` grid (oversampled DFT bins of the
//! trace) locates the basin, and golden-section refinement polishes it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Amplitudes are constrained to `[0, MAX_AMPLITUDE]`.
pub const MAX_AMPLITUDE: f64 = 1.2;
/// Traces with variance below this are treated as flat.
pub const FLAT_VARIANCE: f64 = 1e-8;
const OVERSAMPLE: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RabiFit {
    pub amplitude: f64,
    pub omega: f64,
    /// Root-mean-square misfit of the model against the samples.
    pub residual: f64,
    /// Set when the trace is flat and no oscillation could be fitted.
    pub flat: bool,
}

/// Fits `p(t) = 1 - A sin^2(Omega t)` to `(t, p)` samples.
pub fn fit_rabi(samples: &[(f64, f64)]) -> Result<RabiFit> {
    if samples.len() < 16 {
        return Err(Error::domain(format!(
            "Rabi fit needs at least 16 samples, got {}",
            samples.len()
        )));
    }
    if samples.iter().any(|(t, p)| !t.is_finite() || !p.is_finite()) {
        return Err(Error::domain("Rabi fit samples must be finite"));
    }
    let n = samples.len() as f64;
    let (t_min, t_max) = samples
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &(t, _)| (lo.min(t), hi.max(t)));
    let span = t_max - t_min;
    if !(span > 0.0) {
        return Err(Error::domain("Rabi fit samples must span a positive time"));
    }
    let mean = samples.iter().map(|s| s.1).sum::<f64>() / n;
    let var = samples.iter().map(|s| (s.1 - mean).powi(2)).sum::<f64>() / n;
    if var < FLAT_VARIANCE {
        let residual = (samples.iter().map(|s| (1.0 - s.1).powi(2)).sum::<f64>() / n).sqrt();
        return Ok(RabiFit {
            amplitude: 0.0,
            omega: 0.0,
            residual,
            flat: true,
        });
    }
    let y: Vec<(f64, f64)> = samples.iter().map(|&(t, p)| (t, 1.0 - p)).collect();
    let t_end = t_max.max(span);

    // sin^2(Omega t) oscillates at 2 Omega; resolve it down to a quarter
    // period inside the window and up to the sampling Nyquist limit.
    let dt = span / (n - 1.0);
    let lo = std::f64::consts::PI / (4.0 * t_end);
    let hi = std::f64::consts::PI / (2.0 * dt);
    let step = std::f64::consts::PI / (2.0 * t_end * OVERSAMPLE as f64);
    let count = (((hi - lo) / step).ceil() as usize).max(2);
    let grid: Vec<f64> = (0..=count).map(|k| lo + (hi - lo) * k as f64 / count as f64).collect();
    let sse: Vec<f64> = grid.iter().map(|&w| profile(&y, w).1).collect();

    let mut candidates: Vec<usize> = (0..grid.len())
        .filter(|&k| {
            let left = if k > 0 { sse[k - 1] } else { f64::INFINITY };
            let right = if k + 1 < sse.len() { sse[k + 1] } else { f64::INFINITY };
            sse[k] <= left && sse[k] <= right
        })
        .collect();
    candidates.sort_by(|&a, &b| sse[a].total_cmp(&sse[b]));
    candidates.truncate(6);

    let mut best = (f64::INFINITY, 0.0, 0.0);
    for k in candidates {
        let a = grid[k.saturating_sub(1)];
        let b = grid[(k + 1).min(grid.len() - 1)];
        let w = golden_min(|w| profile(&y, w).1, a, b);
        let (amp, err) = profile(&y, w);
        if err < best.0 {
            best = (err, w, amp);
        }
    }
    let (err, omega, amplitude) = best;
    Ok(RabiFit {
        amplitude,
        omega,
        residual: (err / n).sqrt(),
        flat: false,
    })
}

/// Best amplitude and squared error at fixed `omega`.
fn profile(y: &[(f64, f64)], omega: f64) -> (f64, f64) {
    let (mut sy, mut ss) = (0.0, 0.0);
    for &(t, v) in y {
        let s = (omega * t).sin().powi(2);
        sy += s * v;
        ss += s * s;
    }
    let amp = if ss > 0.0 { (sy / ss).clamp(0.0, MAX_AMPLITUDE) } else { 0.0 };
    let err = y
        .iter()
        .map(|&(t, v)| (v - amp * (omega * t).sin().powi(2)).powi(2))
        .sum();
    (amp, err)
}

fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a).abs() <= 1e-15 * b.abs().max(1e-300) {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    if fc < fd { c } else { d }
}
