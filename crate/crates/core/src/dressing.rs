//! Feasibility calculators for Rydberg dressing: dressing amplitude,
//! soft-core cap, figure of merit and decay bookkeeping.

use serde::{Deserialize, Serialize};

use crate::dynamics::Schedule;
use crate::error::{Error, Result};

/// Above this `Omega / |2 Delta|` the perturbative dressing picture is questionable.
pub const WEAK_DRESSING_LIMIT: f64 = 0.3;
/// Interaction values below this fraction of the peak count as "off".
pub const DRESSED_THRESHOLD: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DressingParams {
    pub rabi: f64,
    pub detuning: f64,
    pub hopping: f64,
    pub tau_eff: Option<f64>,
    pub principal_n: Option<u32>,
    pub duty_cycle: Option<f64>,
}

impl DressingParams {
    pub fn validate(&self) -> Result<()> {
        if self.detuning == 0.0 || !self.detuning.is_finite() {
            return Err(Error::domain("dressing detuning must be nonzero"));
        }
        if !self.rabi.is_finite() || !(self.hopping > 0.0) {
            return Err(Error::domain("dressing Rabi frequency and hopping must be finite, hopping > 0"));
        }
        if let Some(t) = self.tau_eff {
            if !(t > 0.0) {
                return Err(Error::domain("effective lifetime must be positive"));
            }
        }
        if let Some(eta) = self.duty_cycle {
            check_duty(eta)?;
        }
        Ok(())
    }

    /// Human-readable warnings (e.g. strong dressing).
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        let ratio = (self.rabi / (2.0 * self.detuning)).abs();
        if ratio > WEAK_DRESSING_LIMIT {
            out.push(format!(
                "Omega/|2 Delta| = {ratio:.3} exceeds {WEAK_DRESSING_LIMIT}; weak-dressing formulas are approximate"
            ));
        }
        out
    }
}

fn check_detuning(detuning: f64) -> Result<()> {
    if detuning == 0.0 {
        Err(Error::domain("detuning must be nonzero"))
    } else {
        Ok(())
    }
}

fn check_duty(eta: f64) -> Result<()> {
    if eta > 0.0 && eta <= 1.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("duty cycle {eta} outside (0, 1]")))
    }
}

/// `beta = Omega / (2 Delta)`.
pub fn dressing_amplitude(rabi: f64, detuning: f64) -> Result<f64> {
    check_detuning(detuning)?;
    Ok(rabi / (2.0 * detuning))
}

/// Short-distance saturation value `Omega^4 / (2 |Delta|)^3`.
pub fn softcore_cap(rabi: f64, detuning: f64) -> Result<f64> {
    check_detuning(detuning)?;
    Ok(rabi.powi(4) / (2.0 * detuning.abs()).powi(3))
}

/// `M = J tau_eff = J / Gamma`.
pub fn figure_of_merit(hopping: f64, tau_eff: f64) -> f64 {
    hopping * tau_eff
}

/// Gain in `M` from moving to principal quantum number `n_to`; `Gamma ~ n^-5`.
pub fn n_scaling_gain(n_from: u32, n_to: u32) -> Result<f64> {
    if n_from == 0 || n_to == 0 {
        return Err(Error::domain("principal quantum numbers must be >= 1"));
    }
    Ok((n_to as f64 / n_from as f64).powi(5))
}

/// Multipliers `(beta, Gamma, M)` for stroboscopic dressing at duty cycle `eta`.
pub fn stroboscopic_scaling(eta: f64) -> Result<(f64, f64, f64)> {
    check_duty(eta)?;
    let root = eta.sqrt();
    Ok((eta.powf(-0.25), root, root))
}

/// `exp(-Gamma_eff * dressed_time)`.
pub fn survival_probability(gamma_eff: f64, dressed_time: f64) -> Result<f64> {
    if !(gamma_eff >= 0.0) || !(dressed_time >= 0.0) {
        return Err(Error::domain("decay rate and dressed time must be nonnegative"));
    }
    Ok((-gamma_eff * dressed_time).exp())
}

/// Decay exposure of an interaction schedule over `[t0, t1]`.
///
/// Only times where the schedule exceeds [`DRESSED_THRESHOLD`] of its peak
/// count, weighted by `sqrt(value / peak)`: the decay rate follows the
/// Rydberg admixture `beta^2` while the interaction follows `beta^4`.
pub fn dressed_time(schedule: &Schedule, t0: f64, t1: f64) -> f64 {
    let peak = peak_value(schedule, t0, t1);
    if peak <= 0.0 {
        return 0.0;
    }
    schedule.integrate(t0, t1, |v| {
        let v = v.abs();
        if v > DRESSED_THRESHOLD * peak {
            (v / peak).sqrt()
        } else {
            0.0
        }
    })
}

/// Unweighted time during which the schedule is "on".
pub fn exposure_time(schedule: &Schedule, t0: f64, t1: f64) -> f64 {
    let peak = peak_value(schedule, t0, t1);
    if peak <= 0.0 {
        return 0.0;
    }
    schedule.integrate(t0, t1, |v| if v.abs() > DRESSED_THRESHOLD * peak { 1.0 } else { 0.0 })
}

fn peak_value(schedule: &Schedule, t0: f64, t1: f64) -> f64 {
    let n = 4000;
    (0..=n)
        .map(|k| schedule.value(t0 + (t1 - t0) * k as f64 / n as f64).abs())
        .fold(0.0, f64::max)
}

/// Summary block attached to protocol outputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DressingReport {
    pub beta: f64,
    pub softcore_cap: f64,
    pub figure_of_merit: Option<f64>,
    pub gamma_eff: Option<f64>,
    pub dressed_time: f64,
    pub exposure_time: f64,
    pub survival: Option<f64>,
    pub n_scaling_gain_to_70: Option<f64>,
    pub stroboscopic: Option<(f64, f64, f64)>,
    pub warnings: Vec<String>,
}

/// Combines the calculators for one run with `dressed` time in units of `1/J`.
pub fn report(params: &DressingParams, dressed: f64, exposure: f64) -> Result<DressingReport> {
    params.validate()?;
    let m = params.tau_eff.map(|t| figure_of_merit(params.hopping, t));
    let strobe = params.duty_cycle.map(stroboscopic_scaling).transpose()?;
    let m_eff = m.map(|m| m * strobe.map_or(1.0, |s| s.2));
    // dressed time is measured in 1/J, so Gamma_eff / J = 1 / M
    let gamma = m_eff.map(|m| 1.0 / m);
    let survival = gamma.map(|g| survival_probability(g, dressed)).transpose()?;
    Ok(DressingReport {
        beta: dressing_amplitude(params.rabi, params.detuning)?,
        softcore_cap: softcore_cap(params.rabi, params.detuning)?,
        figure_of_merit: m_eff,
        gamma_eff: gamma,
        dressed_time: dressed,
        exposure_time: exposure,
        survival,
        n_scaling_gain_to_70: params.principal_n.map(|n| n_scaling_gain(n, 70)).transpose()?,
        stroboscopic: strobe,
        warnings: params.warnings(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn amplitude_and_cap_examples() {
        assert_eq!(dressing_amplitude(1.0, 1.0).unwrap(), 0.5);
        assert_eq!(dressing_amplitude(0.0, 3.0).unwrap(), 0.0);
        assert!((dressing_amplitude(0.2, 10.0).unwrap() - 0.01).abs() < 1e-15);
        assert!(dressing_amplitude(1.0, 0.0).is_err());
        assert_eq!(softcore_cap(2.0, 1.0).unwrap(), 2.0);
        assert_eq!(softcore_cap(0.0, 1.0).unwrap(), 0.0);
        assert!((softcore_cap(4.0, 1.0).unwrap() / softcore_cap(2.0, 1.0).unwrap() - 16.0).abs() < 1e-12);
        assert!(softcore_cap(1.0, 0.0).is_err());
    }

    #[test]
    fn merit_examples() {
        let m = figure_of_merit(2.0 * PI * 1.7e3, 1e-3);
        assert!((m - 10.681).abs() < 1e-3);
        assert_eq!(figure_of_merit(1.0, 1.0), 1.0);
        assert_eq!(figure_of_merit(3.0, 4.0), 2.0 * figure_of_merit(3.0, 2.0));
        let g = n_scaling_gain(28, 70).unwrap();
        assert!((g - 97.66).abs() < 0.01);
        assert_eq!(n_scaling_gain(5, 5).unwrap(), 1.0);
        assert_eq!(n_scaling_gain(1, 2).unwrap(), 32.0);
        assert!(n_scaling_gain(0, 2).is_err());
    }

    #[test]
    fn stroboscopic_examples() {
        assert_eq!(stroboscopic_scaling(1.0).unwrap(), (1.0, 1.0, 1.0));
        assert_eq!(stroboscopic_scaling(0.25).unwrap(), (2f64.sqrt(), 0.5, 0.5));
        let (b, g, m) = stroboscopic_scaling(0.01).unwrap();
        assert!((b - 3.16227766).abs() < 1e-8);
        assert!((g - 0.1).abs() < 1e-15 && (m - 0.1).abs() < 1e-15);
        assert!(stroboscopic_scaling(0.0).is_err());
        assert!(stroboscopic_scaling(1.5).is_err());
    }

    #[test]
    fn survival_examples() {
        assert_eq!(survival_probability(0.0, 5.0).unwrap(), 1.0);
        assert!((survival_probability(0.5, 2.0).unwrap() - (-1f64).exp()).abs() < 1e-15);
        assert!(survival_probability(-1.0, 1.0).is_err());
    }

    #[test]
    fn dressed_time_weights_ramp() {
        let full = Schedule::constant(2.0, 0.0, 10.0);
        assert!((dressed_time(&full, 0.0, 10.0) - 10.0).abs() < 1e-9);
        // M = 10 at full dressing for 10/J: one decay time
        let s = survival_probability(1.0 / figure_of_merit(1.0, 10.0), dressed_time(&full, 0.0, 10.0)).unwrap();
        assert!((s - 0.3679).abs() < 1e-4);
        // sin^4 ramp: weight sin^2, integral T/2 less a sub-threshold sliver
        let ramp = Schedule::builder(0.0).sin4_up(10.0, 0.0, 2.0).build().unwrap();
        assert!((dressed_time(&ramp, 0.0, 10.0) - 5.0).abs() < 1e-3);
        assert!((exposure_time(&ramp, 0.0, 10.0) - 9.8).abs() < 0.02);
        let off = Schedule::constant(0.0, 0.0, 10.0);
        assert_eq!(dressed_time(&off, 0.0, 10.0), 0.0);
    }

    #[test]
    fn report_composes() {
        let p = DressingParams {
            rabi: 1.0,
            detuning: 1.0,
            hopping: 1.0,
            tau_eff: Some(10.0),
            principal_n: Some(28),
            duty_cycle: None,
        };
        let r = report(&p, 10.0, 10.0).unwrap();
        assert_eq!(r.figure_of_merit, Some(10.0));
        assert!((r.survival.unwrap() - (-1f64).exp()).abs() < 1e-12);
        assert_eq!(r.warnings.len(), 1);
    }

    proptest! {
        #[test]
        fn homogeneity(o in 0.01f64..10.0, d in 0.1f64..10.0, k in 0.1f64..5.0) {
            let b = dressing_amplitude(o, d).unwrap();
            prop_assert!((dressing_amplitude(k * o, k * d).unwrap() - b).abs() < 1e-12 * b.abs().max(1.0));
            let c = softcore_cap(o, d).unwrap();
            prop_assert!((softcore_cap(k * o, k * d).unwrap() - k * c).abs() < 1e-9 * (k * c).max(1e-12));
        }

        #[test]
        fn survival_monotone(g in 0.0f64..5.0, t in 0.0f64..5.0, dg in 0.01f64..1.0) {
            let s = survival_probability(g, t).unwrap();
            prop_assert!(s > 0.0 && s <= 1.0);
            prop_assert!(survival_probability(g + dg, t).unwrap() <= s);
            prop_assert!(survival_probability(g, t + dg).unwrap() <= s);
        }
    }
}
