//! Background potential fields `V_pot,σ(i)`.
//!
//! Fields returned here are the *depth* of the potential: they enter the
//! Hamiltonian with a minus sign, so a positive value is attractive.

use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::lattice::{LatticeGeometry, Position, SiteCoord};

/// Default on-site regularization length in lattice constants.
pub const DEFAULT_REGULARIZATION: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spin {
    Up,
    Down,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NucleusSpec {
    pub position: Position,
    pub charge: f64,
    #[serde(default = "one")]
    pub strength_scale: f64,
}

fn one() -> f64 {
    1.0
}

impl NucleusSpec {
    pub fn new(position: Position, charge: f64) -> Self {
        Self {
            position,
            charge,
            strength_scale: 1.0,
        }
    }

    pub fn at_site(site: SiteCoord, charge: f64) -> Self {
        Self::new(site.into(), charge)
    }

    pub fn scaled(mut self, scale: f64) -> Self {
        self.strength_scale = scale;
        self
    }
}

/// Additional per-site terms added on top of the nuclear wells.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ExtraTerm {
    /// `amplitude * (x - lx/2) / a0`.
    LinearX { amplitude: f64 },
    /// `amplitude * profile(i)` where `profile` has unit peak, see [`orbital_bias_field`].
    OrbitalBias { amplitude: f64, profile: Vec<f64> },
    /// `amplitude * values(i)`, one value per site in index order.
    CustomPerSite { amplitude: f64, values: Vec<f64> },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpinScale {
    pub up: f64,
    pub down: f64,
}

impl Default for SpinScale {
    fn default() -> Self {
        Self { up: 1.0, down: 1.0 }
    }
}

impl SpinScale {
    pub fn get(&self, spin: Spin) -> f64 {
        match spin {
            Spin::Up => self.up,
            Spin::Down => self.down,
        }
    }

    pub fn is_spin_independent(&self) -> bool {
        self.up == self.down
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PotentialSpec {
    pub nuclei: Vec<NucleusSpec>,
    pub bohr_radius: f64,
    pub hopping: f64,
    #[serde(default = "default_regularization")]
    pub regularization: f64,
    #[serde(default)]
    pub extra_terms: Vec<ExtraTerm>,
    #[serde(default)]
    pub spin_scale: SpinScale,
}

fn default_regularization() -> f64 {
    DEFAULT_REGULARIZATION
}

impl PotentialSpec {
    pub fn new(nuclei: Vec<NucleusSpec>, bohr_radius: f64, hopping: f64) -> Self {
        Self {
            nuclei,
            bohr_radius,
            hopping,
            regularization: DEFAULT_REGULARIZATION,
            extra_terms: Vec::new(),
            spin_scale: SpinScale::default(),
        }
    }

    pub fn with_extra(mut self, term: ExtraTerm) -> Self {
        self.extra_terms.push(term);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.bohr_radius > 0.0) {
            return Err(Error::domain(format!(
                "Bohr radius must be positive, got {}",
                self.bohr_radius
            )));
        }
        if !(self.hopping > 0.0) {
            return Err(Error::domain("hopping must be positive"));
        }
        if !(self.regularization > 0.0) {
            return Err(Error::domain("regularization length must be positive"));
        }
        for n in &self.nuclei {
            if !(n.charge >= 0.0) || !n.strength_scale.is_finite() {
                return Err(Error::domain(format!("invalid nucleus {n:?}")));
            }
        }
        for t in &self.extra_terms {
            let amp = match t {
                ExtraTerm::LinearX { amplitude }
                | ExtraTerm::OrbitalBias { amplitude, .. }
                | ExtraTerm::CustomPerSite { amplitude, .. } => *amplitude,
            };
            if !amp.is_finite() {
                return Err(Error::domain("extra term amplitude must be finite"));
            }
        }
        Ok(())
    }
}

/// Regularized well depth `J Z s / (a0 max(r, r_reg))` of one nucleus at `site`.
pub fn eval_nuclear(
    site: SiteCoord,
    nucleus: &NucleusSpec,
    bohr_radius: f64,
    hopping: f64,
    regularization: f64,
) -> Result<f64> {
    if !(bohr_radius > 0.0) {
        return Err(Error::domain(format!(
            "Bohr radius must be positive, got {bohr_radius}"
        )));
    }
    let r = nucleus.position.distance_to(site).max(regularization);
    Ok(hopping * nucleus.charge * nucleus.strength_scale / (bohr_radius * r))
}

/// Static profile `(x - lx/2) / a0` of the dipole drive.
pub fn eval_linear_drive(site: SiteCoord, geometry: &LatticeGeometry, bohr_radius: f64) -> f64 {
    (site.x as f64 - geometry.lx() as f64 / 2.0) / bohr_radius
}

pub fn assemble_potential(
    spec: &PotentialSpec,
    geometry: &LatticeGeometry,
    spin: Spin,
) -> Result<Vec<f64>> {
    spec.validate()?;
    let n = geometry.num_sites();
    let mut field = vec![0.0; n];
    for nucleus in &spec.nuclei {
        for (v, site) in field.iter_mut().zip(geometry.sites()) {
            *v += eval_nuclear(
                site,
                nucleus,
                spec.bohr_radius,
                spec.hopping,
                spec.regularization,
            )?;
        }
    }
    for term in &spec.extra_terms {
        match term {
            ExtraTerm::LinearX { amplitude } => {
                for (v, site) in field.iter_mut().zip(geometry.sites()) {
                    *v += amplitude * eval_linear_drive(site, geometry, spec.bohr_radius);
                }
            }
            ExtraTerm::OrbitalBias { amplitude, profile } => {
                check_len("orbital bias profile", n, profile.len())?;
                for (v, p) in field.iter_mut().zip(profile) {
                    *v += amplitude * p;
                }
            }
            ExtraTerm::CustomPerSite { amplitude, values } => {
                check_len("custom per-site potential", n, values.len())?;
                for (v, p) in field.iter_mut().zip(values) {
                    *v += amplitude * p;
                }
            }
        }
    }
    let scale = spec.spin_scale.get(spin);
    if scale != 1.0 {
        field.iter_mut().for_each(|v| *v *= scale);
    }
    Ok(field)
}

/// The spin-independent field used by the two-particle spatial sectors.
///
/// Those sectors factor out the spin, so a spin-dependent potential cannot be
/// represented there and is rejected.
pub fn spatial_potential(spec: &PotentialSpec, geometry: &LatticeGeometry) -> Result<Vec<f64>> {
    if !spec.spin_scale.is_spin_independent() {
        return Err(Error::Unsupported(
            "spin-dependent potentials are not supported in two-particle sectors".into(),
        ));
    }
    assemble_potential(spec, geometry, Spin::Up)
}

/// Weak bias `eps * |psi(i)| / max |psi|` shaped like an orbital; peak value is `eps`.
pub fn orbital_bias_field(orbital: &[Complex64], eps: f64) -> Result<Vec<f64>> {
    let peak = orbital.iter().map(|a| a.norm()).fold(0.0, f64::max);
    if peak == 0.0 {
        return Err(Error::Degenerate("orbital has no nonzero amplitude".into()));
    }
    Ok(orbital.iter().map(|a| eps * a.norm() / peak).collect())
}

/// Largest well depth of the nuclear part alone, the reference scale for weak biases.
pub fn peak_nuclear_depth(spec: &PotentialSpec, geometry: &LatticeGeometry) -> Result<f64> {
    let nuclear_only = PotentialSpec {
        extra_terms: Vec::new(),
        spin_scale: SpinScale::default(),
        ..spec.clone()
    };
    let field = assemble_potential(&nuclear_only, geometry, Spin::Up)?;
    Ok(field.into_iter().fold(0.0, f64::max))
}

/// Reads `index,value` rows (header optional) into a length-`num_sites` field.
pub fn load_site_field(path: impl AsRef<Path>, num_sites: usize) -> Result<Vec<f64>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let mut field = vec![f64::NAN; num_sites];
    let mut rows = 0;
    for record in reader.records() {
        let record = record?;
        let (Some(i), Some(v)) = (record.get(0), record.get(1)) else {
            return Err(Error::Config("site field rows need two columns".into()));
        };
        let Ok(i) = i.parse::<usize>() else {
            if rows == 0 {
                continue; // header
            }
            return Err(Error::Config(format!("bad site index {i:?}")));
        };
        let v: f64 = v
            .parse()
            .map_err(|_| Error::Config(format!("bad field value {v:?}")))?;
        if i >= num_sites {
            return Err(Error::Shape {
                context: "site field index",
                expected: num_sites,
                got: i + 1,
            });
        }
        field[i] = v;
        rows += 1;
    }
    check_len("site field rows", num_sites, rows)?;
    if field.iter().any(|v| v.is_nan()) {
        return Err(Error::Config("site field has missing indices".into()));
    }
    Ok(field)
}
