//! Power-law density-density repulsion between the two particles.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{euclidean_distance, LatticeGeometry, SiteCoord};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InteractionSpec {
    pub v_int: f64,
    pub alpha: f64,
    #[serde(default = "default_onsite_factor")]
    pub onsite_factor: f64,
    /// Optional soft-core cap on the pair energy.
    #[serde(default)]
    pub clamp: Option<f64>,
}

fn default_onsite_factor() -> f64 {
    2.0
}

impl InteractionSpec {
    pub fn new(v_int: f64, alpha: f64) -> Result<Self> {
        let spec = Self {
            v_int,
            alpha,
            onsite_factor: default_onsite_factor(),
            clamp: None,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Strength chosen with [`default_vint`].
    pub fn with_default_strength(bohr_radius: f64, alpha: f64, hopping: f64) -> Result<Self> {
        Self::new(default_vint(bohr_radius, alpha, hopping)?, alpha)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.v_int >= 0.0) || !self.v_int.is_finite() {
            return Err(Error::domain(format!("v_int must be >= 0, got {}", self.v_int)));
        }
        if !(self.alpha > 2.0) {
            return Err(Error::domain(format!(
                "interaction exponent must exceed 2, got {}",
                self.alpha
            )));
        }
        if let Some(c) = self.clamp {
            if !(c >= 0.0) {
                return Err(Error::domain("interaction clamp must be >= 0"));
            }
        }
        Ok(())
    }

    /// Pair energy at separation `r` (`r == 0` is the opposite-spin on-site term).
    pub fn at_distance(&self, r: f64) -> f64 {
        let raw = if r == 0.0 {
            self.onsite_factor * self.v_int
        } else {
            self.v_int / r.powf(self.alpha)
        };
        match self.clamp {
            Some(cap) => raw.min(cap),
            None => raw,
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            v_int: self.v_int * factor,
            ..*self
        }
    }
}

pub fn pair_interaction(a: SiteCoord, b: SiteCoord, spec: &InteractionSpec) -> f64 {
    spec.at_distance(euclidean_distance(a, b))
}

/// `J a0^(alpha-2) / alpha`.
pub fn default_vint(bohr_radius: f64, alpha: f64, hopping: f64) -> Result<f64> {
    if !(bohr_radius > 0.0) || !(alpha > 2.0) {
        return Err(Error::domain(format!(
            "default interaction needs a0 > 0 and alpha > 2 (got a0={bohr_radius}, alpha={alpha})"
        )));
    }
    Ok(hopping * bohr_radius.powf(alpha - 2.0) / alpha)
}

/// Pair energies indexed by displacement `(|dx|, |dy|)`; the lattice is
/// translation invariant so `lx * ly` entries cover every site pair.
#[derive(Clone, Debug)]
pub struct PairTable {
    lx: usize,
    values: Vec<f64>,
}

impl PairTable {
    pub fn new(geometry: &LatticeGeometry, spec: &InteractionSpec) -> Self {
        let lx = geometry.lx();
        let values = (0..geometry.num_sites())
            .map(|k| {
                let (dx, dy) = ((k % lx) as f64, (k / lx) as f64);
                spec.at_distance(dx.hypot(dy))
            })
            .collect();
        Self { lx, values }
    }

    #[inline]
    pub fn get(&self, a: SiteCoord, b: SiteCoord) -> f64 {
        let dx = a.x.abs_diff(b.x);
        let dy = a.y.abs_diff(b.y);
        self.values[dx + self.lx * dy]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn pair_examples() {
        let spec = InteractionSpec::new(3.0, 6.0).unwrap();
        let o = SiteCoord::new(0, 0);
        assert_eq!(pair_interaction(o, o, &spec), 6.0);
        assert_eq!(pair_interaction(o, SiteCoord::new(1, 0), &spec), 3.0);
        assert_eq!(pair_interaction(o, SiteCoord::new(0, 2), &spec), 3.0 / 64.0);
    }

    #[test]
    fn default_strength_examples() {
        assert!((default_vint(2.0, 6.0, 1.0).unwrap() - 16.0 / 6.0).abs() < 1e-14);
        assert!((default_vint(4.0, 6.0, 1.0).unwrap() - 256.0 / 6.0).abs() < 1e-12);
        for alpha in [3.0, 4.5, 6.0] {
            assert!((default_vint(1.0, alpha, 1.0).unwrap() - 1.0 / alpha).abs() < 1e-15);
        }
        assert!(default_vint(0.0, 6.0, 1.0).is_err());
    }

    #[test]
    fn calibration_at_bohr_radius() {
        // v_int / a0^alpha = J / (alpha a0^2) with the default strength.
        for a0 in [2.0, 4.0] {
            let spec = InteractionSpec::with_default_strength(a0, 6.0, 1.0).unwrap();
            assert!((spec.at_distance(a0) - 1.0 / (6.0 * a0 * a0)).abs() < 1e-14);
        }
    }

    #[test]
    fn clamp_caps_pair_energy() {
        let mut spec = InteractionSpec::new(10.0, 6.0).unwrap();
        spec.clamp = Some(4.0);
        assert_eq!(spec.at_distance(0.0), 4.0);
        assert_eq!(spec.at_distance(1.0), 4.0);
        assert_eq!(spec.at_distance(2.0), 10.0 / 64.0);
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(InteractionSpec::new(-1.0, 6.0).is_err());
        assert!(InteractionSpec::new(1.0, 2.0).is_err());
    }

    #[test]
    fn table_matches_direct_evaluation() {
        let g = LatticeGeometry::new(6, 5).unwrap();
        let spec = InteractionSpec::new(1.3, 3.0).unwrap();
        let table = PairTable::new(&g, &spec);
        for a in g.sites() {
            for b in g.sites() {
                assert_eq!(table.get(a, b), pair_interaction(a, b, &spec));
            }
        }
    }

    proptest! {
        #[test]
        fn symmetric_and_monotone(ax in 0usize..20, ay in 0usize..20, bx in 0usize..20, by in 0usize..20, alpha in 2.5f64..8.0) {
            let spec = InteractionSpec::new(1.0, alpha).unwrap();
            let a = SiteCoord::new(ax, ay);
            let b = SiteCoord::new(bx, by);
            prop_assert_eq!(pair_interaction(a, b, &spec), pair_interaction(b, a, &spec));
            let r = euclidean_distance(a, b);
            if r >= 1.0 {
                prop_assert!(spec.at_distance(r + 0.5) < spec.at_distance(r));
            }
        }
    }
}
