//! End-to-end experiment recipes: adiabatic preparation of pseudo-He and
//! pseudo-H2, bond-length scans, reverse-ramp fidelity measurement and
//! drive spectroscopy with Rabi fitting.
//!
//! Every preparation is described by a [`PrepPlan`]: a list of stages with
//! durations and a list of operator parts whose coefficients take fixed
//! levels at the stage boundaries. Between boundaries a rising coefficient
//! follows a `sin^4` ramp, a falling one its time mirror.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::{ExchangeSymmetry, SectorBasis};
use crate::dressing;
use crate::dynamics::{evolve, fidelity, EvolveOptions, Schedule, Shape, Segment, TimeDependentHamiltonian};
use crate::error::{check_len, Error, Result};
use crate::fit::{fit_rabi, RabiFit};
use crate::interactions::InteractionSpec;
use crate::lattice::{LatticeGeometry, Position, SiteCoord};
use crate::operators::{
    assemble_hopping, assemble_interaction, assemble_linear_drive, assemble_potential_term, SparseOperator,
    StateVector,
};
use crate::potentials::{
    assemble_potential, orbital_bias_field, peak_nuclear_depth, spatial_potential, NucleusSpec, PotentialSpec, Spin,
};
use crate::solver::{
    band_bottom, classify_orbital, ground_state_with, low_spectrum_with, EigenOptions, OrbitalLabel,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    X,
    Y,
}

/// Parameters shared by the preparation protocols. Use the named
/// constructors for the standard setups and adjust fields as needed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrepParams {
    /// Lattice padding `p`: atoms use `(2p+1) x (2p+1)`, molecules add the separation along x.
    pub padding: usize,
    pub bohr_radius: f64,
    pub charge: f64,
    pub hopping: f64,
    /// On-site regularization length of the nuclear well.
    pub regularization: f64,
    /// Nuclear separation (columns) for the molecule.
    pub separation: usize,
    /// Interaction strength; `None` selects `J a0^(alpha-2) / alpha`.
    pub v_int: Option<f64>,
    pub alpha: f64,
    pub onsite_factor: f64,
    pub clamp: Option<f64>,
    pub sector: ExchangeSymmetry,
    /// Hopping ramp time `T`.
    pub hopping_time: f64,
    /// Interaction ramp time `T_int`.
    pub interaction_time: f64,
    /// Ramp-down time of the auxiliary well (fermionic He).
    pub aux_time: f64,
    /// Lattice distance of the second particle and auxiliary well from the nucleus.
    pub aux_offset: usize,
    pub aux_axis: Axis,
    pub aux_scale: f64,
    /// Peak of the orbital bias relative to the peak nuclear depth.
    pub bias_ratio: f64,
    /// Orientation of the biased 2p orbital.
    pub bias_axis: Axis,
    /// Include the internuclear repulsion `J Z1 Z2 / (a0 d)` in binding energies.
    pub nuclear_repulsion: bool,
    pub evolve: EvolveOptions,
    pub eigen_tol: f64,
    pub seed: u64,
    /// Number of trajectory samples that also get an instantaneous-ground-state fidelity.
    pub instantaneous_samples: usize,
}

impl Default for PrepParams {
    fn default() -> Self {
        Self {
            padding: 10,
            bohr_radius: 4.0,
            charge: 2.0,
            hopping: 1.0,
            regularization: crate::potentials::DEFAULT_REGULARIZATION,
            separation: 3,
            v_int: None,
            alpha: 6.0,
            onsite_factor: 2.0,
            clamp: None,
            sector: ExchangeSymmetry::Symmetric,
            hopping_time: 200.0,
            interaction_time: 20.0,
            aux_time: 60.0,
            aux_offset: 3,
            aux_axis: Axis::X,
            aux_scale: 0.9,
            bias_ratio: 0.01,
            bias_axis: Axis::X,
            nuclear_repulsion: true,
            evolve: EvolveOptions {
                max_step: 0.1,
                ..EvolveOptions::default()
            },
            eigen_tol: 1e-9,
            seed: 7,
            instantaneous_samples: 0,
        }
    }
}

impl PrepParams {
    /// Two bosons (spin singlet) around a `Z = 2` nucleus.
    pub fn bosonic_helium() -> Self {
        Self::default()
    }

    /// Two fermions (spin triplet) around a `Z = 2` nucleus.
    pub fn fermionic_helium() -> Self {
        Self {
            sector: ExchangeSymmetry::Antisymmetric,
            hopping_time: 140.0,
            interaction_time: 10.0,
            ..Self::default()
        }
    }

    /// Two `Z = 1` nuclei three columns apart.
    pub fn hydrogen_molecule(sector: ExchangeSymmetry) -> Self {
        Self {
            bohr_radius: 2.0,
            charge: 1.0,
            sector,
            interaction_time: 10.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite_pos = |v: f64| v.is_finite() && v > 0.0;
        if !finite_pos(self.bohr_radius) || !finite_pos(self.hopping) || !finite_pos(self.regularization) {
            return Err(Error::Config("bohr_radius, hopping and regularization must be positive".into()));
        }
        if !(self.charge >= 0.0) || !self.charge.is_finite() {
            return Err(Error::Config("nuclear charge must be >= 0".into()));
        }
        if !(self.hopping_time >= 0.0 && self.interaction_time >= 0.0 && self.aux_time >= 0.0) {
            return Err(Error::Config("ramp times must be >= 0".into()));
        }
        if !(0.0..=1.0).contains(&self.aux_scale) || !(self.bias_ratio >= 0.0) {
            return Err(Error::Config("aux_scale must lie in [0, 1] and bias_ratio >= 0".into()));
        }
        if self.sector == ExchangeSymmetry::Distinguishable {
            return Err(Error::Config("protocols run in the symmetric or antisymmetric sector".into()));
        }
        self.interaction()?;
        Ok(())
    }

    pub fn interaction(&self) -> Result<InteractionSpec> {
        let base = match self.v_int {
            Some(v) => InteractionSpec::new(v, self.alpha)?,
            None => InteractionSpec::with_default_strength(self.bohr_radius, self.alpha, self.hopping)?,
        };
        let spec = InteractionSpec {
            onsite_factor: self.onsite_factor,
            clamp: self.clamp,
            ..base
        };
        spec.validate()?;
        Ok(spec)
    }

    fn eigen(&self) -> EigenOptions {
        EigenOptions {
            seed: self.seed,
            ..EigenOptions::with_tol(self.eigen_tol)
        }
    }

    fn potential(&self, nuclei: Vec<NucleusSpec>) -> PotentialSpec {
        PotentialSpec {
            regularization: self.regularization,
            ..PotentialSpec::new(nuclei, self.bohr_radius, self.hopping)
        }
    }

    /// Lattice and nucleus sites of the molecule with separation `d`.
    pub fn molecule_geometry(&self, d: usize) -> Result<(LatticeGeometry, SiteCoord, SiteCoord)> {
        if d == 0 {
            return Err(Error::Config("nuclear separation must be >= 1".into()));
        }
        let p = self.padding;
        let g = LatticeGeometry::new(2 * p + 1 + d, 2 * p + 1)?;
        Ok((g, SiteCoord::new(p, p), SiteCoord::new(p + d, p)))
    }

    pub fn atom_geometry(&self) -> (LatticeGeometry, SiteCoord) {
        let p = self.padding;
        (LatticeGeometry::padded(p), SiteCoord::new(p, p))
    }
}

/// Which term of the Hamiltonian a ramped part represents.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PartKind {
    Kinetic,
    Nuclear,
    Auxiliary,
    Bias,
    Interaction,
}

impl PartKind {
    fn is_potential(self) -> bool {
        matches!(self, PartKind::Nuclear | PartKind::Auxiliary | PartKind::Bias)
    }
}

#[derive(Clone, Debug)]
pub struct RampPart {
    pub kind: PartKind,
    pub operator: SparseOperator,
    /// Coefficient at each stage boundary (`stages + 1` entries).
    pub levels: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stage {
    pub name: String,
    pub duration: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Protocol {
    BosonicHelium,
    FermionicHelium,
    Hydrogen,
    InteractionRamp,
}

/// A fully specified preparation run.
#[derive(Clone, Debug)]
pub struct PrepPlan {
    pub protocol: Protocol,
    pub basis: SectorBasis,
    /// Site configuration of the initial ket (`None` for a prepared start state).
    pub initial_sites: Option<(usize, usize)>,
    pub initial_state: StateVector,
    pub stages: Vec<Stage>,
    pub parts: Vec<RampPart>,
    pub params: PrepParams,
}

impl PrepPlan {
    fn new(
        protocol: Protocol,
        basis: SectorBasis,
        initial_sites: Option<(usize, usize)>,
        initial_state: StateVector,
        stages: Vec<Stage>,
        parts: Vec<RampPart>,
        params: PrepParams,
    ) -> Result<Self> {
        check_len("initial state", basis.dim(), initial_state.len())?;
        for part in &parts {
            check_len("part levels", stages.len() + 1, part.levels.len())?;
            check_len("part operator", basis.dim(), part.operator.dim())?;
        }
        Ok(Self {
            protocol,
            basis,
            initial_sites,
            initial_state,
            stages,
            parts,
            params,
        })
    }

    pub fn total_time(&self) -> f64 {
        self.stages.iter().map(|s| s.duration).sum()
    }

    /// Stage boundary times.
    pub fn boundaries(&self) -> Vec<f64> {
        let mut out = vec![0.0];
        for s in &self.stages {
            out.push(out.last().unwrap() + s.duration);
        }
        out
    }

    pub fn schedule(&self, part: usize) -> Schedule {
        let b = self.boundaries();
        let levels = &self.parts[part].levels;
        let segments = self
            .stages
            .iter()
            .enumerate()
            .map(|(k, _)| {
                let (from, to) = (levels[k], levels[k + 1]);
                let shape = if to > from {
                    Shape::Sin4Up
                } else if to < from {
                    Shape::Sin4Down
                } else {
                    Shape::Constant
                };
                Segment {
                    t_start: b[k],
                    t_end: b[k + 1],
                    shape,
                    start_value: from,
                    end_value: to,
                }
            })
            .collect();
        Schedule::new(segments).expect("stage boundaries are contiguous")
    }

    pub fn hamiltonian(&self) -> Result<TimeDependentHamiltonian> {
        TimeDependentHamiltonian::new(
            self.parts
                .iter()
                .enumerate()
                .map(|(k, p)| (p.operator.clone(), self.schedule(k)))
                .collect(),
        )
    }

    fn combine(&self, coeff: impl Fn(usize, &RampPart) -> f64) -> Result<SparseOperator> {
        let terms: Vec<(&SparseOperator, f64)> = self
            .parts
            .iter()
            .enumerate()
            .map(|(k, p)| (&p.operator, coeff(k, p)))
            .collect();
        SparseOperator::linear_combination(&terms)
    }

    /// The Hamiltonian at stage boundary `b` (0 = start).
    pub fn hamiltonian_at_boundary(&self, b: usize) -> Result<SparseOperator> {
        self.combine(|_, p| p.levels[b])
    }

    /// Final Hamiltonian, whose ground state is the preparation target.
    pub fn target_hamiltonian(&self) -> Result<SparseOperator> {
        self.hamiltonian_at_boundary(self.stages.len())
    }

    /// Final Hamiltonian with the interaction removed.
    pub fn noninteracting_target(&self) -> Result<SparseOperator> {
        let last = self.stages.len();
        self.combine(|_, p| if p.kind == PartKind::Interaction { 0.0 } else { p.levels[last] })
    }

    pub fn energy_components(&self, psi: &StateVector, t: f64) -> Result<EnergyComponents> {
        let mut e = EnergyComponents::default();
        for (k, part) in self.parts.iter().enumerate() {
            let c = self.schedule(k).value(t);
            let v = if c == 0.0 { 0.0 } else { c * part.operator.expectation(psi)? };
            match part.kind {
                PartKind::Kinetic => e.kinetic += v,
                PartKind::Interaction => e.interaction += v,
                kind if kind.is_potential() => e.potential += v,
                _ => unreachable!(),
            }
        }
        e.total = e.kinetic + e.potential + e.interaction;
        Ok(e)
    }

    fn interaction_schedule(&self) -> Option<Schedule> {
        self.parts
            .iter()
            .position(|p| p.kind == PartKind::Interaction)
            .map(|k| self.schedule(k))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EnergyComponents {
    pub kinetic: f64,
    pub potential: f64,
    pub interaction: f64,
    pub total: f64,
}

/// Operators whose expectation values make up the energy.
pub struct EnergyParts<'a> {
    pub kinetic: &'a SparseOperator,
    pub potential: &'a SparseOperator,
    pub interaction: Option<&'a SparseOperator>,
}

/// Kinetic, potential and interaction energy of `psi`; the total is their sum.
pub fn measure_energy_components(psi: &StateVector, parts: &EnergyParts<'_>) -> Result<EnergyComponents> {
    let kinetic = parts.kinetic.expectation(psi)?;
    let potential = parts.potential.expectation(psi)?;
    let interaction = match parts.interaction {
        Some(w) => w.expectation(psi)?,
        None => 0.0,
    };
    Ok(EnergyComponents {
        kinetic,
        potential,
        interaction,
        total: kinetic + potential + interaction,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub t: f64,
    pub norm: f64,
    pub fidelity_target: f64,
    /// Fidelity to the instantaneous ground state (only on selected samples).
    pub fidelity_instantaneous: Option<f64>,
    pub e_kin: f64,
    pub e_pot: f64,
    pub e_int: f64,
    pub e_total: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageReport {
    pub name: String,
    pub end_time: f64,
    /// Ground energy of the Hamiltonian at the end of the stage.
    pub ground_energy: f64,
    /// Fidelity of the evolved state with that ground state.
    pub fidelity: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunResult {
    pub protocol: Protocol,
    pub sector: ExchangeSymmetry,
    pub dim: usize,
    pub total_time: f64,
    pub final_energy: f64,
    pub exact_energy: f64,
    pub noninteracting_energy: f64,
    /// `|E_final - E_exact| / |E_exact|`.
    pub relative_energy_error: f64,
    /// Energy zero of an empty lattice with the same particle number.
    pub band_reference: f64,
    /// Error relative to the binding energy `E_exact - band_reference`.
    pub relative_binding_error: f64,
    /// Error relative to the interaction shift `E_exact - noninteracting_energy`.
    pub relative_shift_error: f64,
    pub final_fidelity: f64,
    pub final_components: EnergyComponents,
    pub stages: Vec<StageReport>,
    pub max_norm_drift: f64,
    pub dressed_time: f64,
    pub exposure_time: f64,
    pub trajectory: Vec<TrajectoryRow>,
    #[serde(skip)]
    pub final_state: StateVector,
    #[serde(skip)]
    pub target_state: StateVector,
}

fn single_field(params: &PrepParams, g: &LatticeGeometry, nuclei: Vec<NucleusSpec>) -> Result<Vec<f64>> {
    spatial_potential(&params.potential(nuclei), g)
}

/// Lowest single-particle orbitals of the field `field` (ascending).
fn orbitals(
    g: &LatticeGeometry,
    field: &[f64],
    params: &PrepParams,
    count: usize,
) -> Result<Vec<crate::solver::Eigenpair>> {
    let basis = SectorBasis::single(*g);
    let h = SparseOperator::linear_combination(&[
        (&assemble_hopping(&basis, params.hopping)?, 1.0),
        (&assemble_potential_term(&basis, field)?, 1.0),
    ])?;
    low_spectrum_with(&h, count, &params.eigen())
}

fn ket(basis: &SectorBasis, i: usize, j: usize) -> Result<StateVector> {
    let k = basis
        .index_of(i, j)
        .ok_or_else(|| Error::Config(format!("sites ({i}, {j}) are not a valid ket in this sector")))?;
    Ok(StateVector::basis(basis.dim(), k))
}

fn two_particle_parts(
    basis: &SectorBasis,
    params: &PrepParams,
    fields: &[(PartKind, &[f64], Vec<f64>)],
    kinetic_levels: Vec<f64>,
    interaction_levels: Vec<f64>,
) -> Result<Vec<RampPart>> {
    let mut parts = vec![RampPart {
        kind: PartKind::Kinetic,
        operator: assemble_hopping(basis, params.hopping)?,
        levels: kinetic_levels,
    }];
    for (kind, field, levels) in fields {
        parts.push(RampPart {
            kind: *kind,
            operator: assemble_potential_term(basis, field)?,
            levels: levels.clone(),
        });
    }
    parts.push(RampPart {
        kind: PartKind::Interaction,
        operator: assemble_interaction(basis, &params.interaction()?)?,
        levels: interaction_levels,
    });
    Ok(parts)
}

/// Both particles start on the nucleus; hopping then interactions are ramped on.
pub fn plan_bosonic_helium(params: &PrepParams) -> Result<PrepPlan> {
    params.validate()?;
    if params.sector != ExchangeSymmetry::Symmetric {
        return Err(Error::Config("bosonic helium runs in the symmetric sector".into()));
    }
    let (g, center) = params.atom_geometry();
    let field = single_field(params, &g, vec![NucleusSpec::at_site(center, params.charge)])?;
    let basis = SectorBasis::pair(g, ExchangeSymmetry::Symmetric);
    let c = g.site_index(center)?;
    let parts = two_particle_parts(
        &basis,
        params,
        &[(PartKind::Nuclear, &field, vec![1.0; 3])],
        vec![0.0, 1.0, 1.0],
        vec![0.0, 0.0, 1.0],
    )?;
    let init = ket(&basis, c, c)?;
    PrepPlan::new(
        Protocol::BosonicHelium,
        basis,
        Some((c, c)),
        init,
        vec![
            Stage { name: "hopping".into(), duration: params.hopping_time },
            Stage { name: "interaction".into(), duration: params.interaction_time },
        ],
        parts,
        params.clone(),
    )
}

fn offset_site(center: SiteCoord, axis: Axis, d: usize, g: &LatticeGeometry) -> Result<SiteCoord> {
    let s = match axis {
        Axis::X => SiteCoord::new(center.x + d, center.y),
        Axis::Y => SiteCoord::new(center.x, center.y + d),
    };
    g.site_index(s)?;
    Ok(s)
}

/// Orbital of the nucleus-only single-particle problem used for the 2p bias:
/// the projection of a ket on the `axis` side onto the degenerate 2p pair.
pub fn biased_2p_orbital(params: &PrepParams) -> Result<Vec<Complex64>> {
    let (g, center) = params.atom_geometry();
    let field = single_field(params, &g, vec![NucleusSpec::at_site(center, params.charge)])?;
    let levels = orbitals(&g, &field, params, 4)?;
    let pos = Position::from(center);
    let p_states: Vec<&crate::solver::Eigenpair> = levels
        .iter()
        .filter(|e| classify_orbital(&e.state, &g, pos).map(|l| l == OrbitalLabel::P2).unwrap_or(false))
        .collect();
    if p_states.len() < 2 {
        return Err(Error::Degenerate("could not isolate the 2p pair of the atom".into()));
    }
    let probe = offset_site(center, params.bias_axis, 1, &g)?;
    let k = g.site_index(probe)?;
    let mut orb = vec![Complex64::new(0.0, 0.0); g.num_sites()];
    for e in p_states.iter().take(2) {
        let w = e.state[k].conj();
        for (o, s) in orb.iter_mut().zip(e.state.iter()) {
            *o += s * w;
        }
    }
    let norm = orb.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    if norm < 1e-12 {
        return Err(Error::Degenerate("2p orbitals vanish on the bias axis".into()));
    }
    Ok(orb.into_iter().map(|c| c / norm).collect())
}

/// One particle on the nucleus, one on an auxiliary well; hopping on, auxiliary
/// well off, then interactions on while the 2p bias is removed.
pub fn plan_fermionic_helium(params: &PrepParams) -> Result<PrepPlan> {
    params.validate()?;
    if params.sector != ExchangeSymmetry::Antisymmetric {
        return Err(Error::Config("fermionic helium runs in the antisymmetric sector".into()));
    }
    if params.aux_offset == 0 {
        return Err(Error::Config("auxiliary offset must be >= 1 in the antisymmetric sector".into()));
    }
    let (g, center) = params.atom_geometry();
    let nucleus = NucleusSpec::at_site(center, params.charge);
    let nuclear = single_field(params, &g, vec![nucleus])?;
    let aux_site = offset_site(center, params.aux_axis, params.aux_offset, &g)?;
    let aux = single_field(
        params,
        &g,
        vec![NucleusSpec::at_site(aux_site, params.charge).scaled(params.aux_scale)],
    )?;
    let depth = peak_nuclear_depth(&params.potential(vec![nucleus]), &g)?;
    let bias = orbital_bias_field(&biased_2p_orbital(params)?, params.bias_ratio * depth)?;
    let basis = SectorBasis::pair(g, ExchangeSymmetry::Antisymmetric);
    let parts = two_particle_parts(
        &basis,
        params,
        &[
            (PartKind::Nuclear, &nuclear, vec![1.0; 4]),
            (PartKind::Auxiliary, &aux, vec![1.0, 1.0, 0.0, 0.0]),
            (PartKind::Bias, &bias, vec![1.0, 1.0, 1.0, 0.0]),
        ],
        vec![0.0, 1.0, 1.0, 1.0],
        vec![0.0, 0.0, 0.0, 1.0],
    )?;
    let (a, b) = (g.site_index(center)?, g.site_index(aux_site)?);
    let init = ket(&basis, a, b)?;
    PrepPlan::new(
        Protocol::FermionicHelium,
        basis,
        Some((a, b)),
        init,
        vec![
            Stage { name: "hopping".into(), duration: params.hopping_time },
            Stage { name: "auxiliary_off".into(), duration: params.aux_time },
            Stage { name: "interaction".into(), duration: params.interaction_time },
        ],
        parts,
        params.clone(),
    )
}

fn molecule_field(params: &PrepParams, d: usize) -> Result<(LatticeGeometry, SiteCoord, SiteCoord, Vec<f64>)> {
    let (g, a, b) = params.molecule_geometry(d)?;
    let field = single_field(
        params,
        &g,
        vec![NucleusSpec::at_site(a, params.charge), NucleusSpec::at_site(b, params.charge)],
    )?;
    Ok((g, a, b, field))
}

/// One particle on each nucleus; hopping then interactions are ramped on.
pub fn plan_h2(params: &PrepParams) -> Result<PrepPlan> {
    params.validate()?;
    let (g, a, b, field) = molecule_field(params, params.separation)?;
    let basis = SectorBasis::pair(g, params.sector);
    let parts = two_particle_parts(
        &basis,
        params,
        &[(PartKind::Nuclear, &field, vec![1.0; 3])],
        vec![0.0, 1.0, 1.0],
        vec![0.0, 0.0, 1.0],
    )?;
    let (i, j) = (g.site_index(a)?, g.site_index(b)?);
    let init = ket(&basis, i, j)?;
    PrepPlan::new(
        Protocol::Hydrogen,
        basis,
        Some((i, j)),
        init,
        vec![
            Stage { name: "hopping".into(), duration: params.hopping_time },
            Stage { name: "interaction".into(), duration: params.interaction_time },
        ],
        parts,
        params.clone(),
    )
}

/// Exact noninteracting molecular ground state, then an interaction ramp only.
pub fn plan_h2_interaction_ramp(params: &PrepParams, d: usize, t_int: f64) -> Result<PrepPlan> {
    params.validate()?;
    let (g, _, _, field) = molecule_field(params, d)?;
    let basis = SectorBasis::pair(g, params.sector);
    let orbs = orbitals(&g, &field, params, 2)?;
    let start = match params.sector {
        ExchangeSymmetry::Symmetric => basis.product_state(&orbs[0].state, &orbs[0].state)?,
        _ => basis.product_state(&orbs[0].state, &orbs[1].state)?,
    };
    let parts = two_particle_parts(
        &basis,
        params,
        &[(PartKind::Nuclear, &field, vec![1.0; 2])],
        vec![1.0, 1.0],
        vec![0.0, 1.0],
    )?;
    PrepPlan::new(
        Protocol::InteractionRamp,
        basis,
        None,
        start,
        vec![Stage { name: "interaction".into(), duration: t_int }],
        parts,
        PrepParams {
            separation: d,
            interaction_time: t_int,
            ..params.clone()
        },
    )
}

/// Runs a plan: evolves, samples the trajectory and compares against the
/// exact ground state of the final Hamiltonian.
pub fn run_plan(plan: &PrepPlan) -> Result<RunResult> {
    let params = &plan.params;
    let eig = params.eigen();
    let target_h = plan.target_hamiltonian()?;
    let target = ground_state_with(&target_h, &eig)?;
    let nonint = if plan.parts.iter().any(|p| p.kind == PartKind::Interaction) {
        ground_state_with(&plan.noninteracting_target()?, &eig)?.energy
    } else {
        target.energy
    };
    let td = plan.hamiltonian()?;
    let total = plan.total_time();
    let boundaries = plan.boundaries();

    let samples = params.evolve.samples;
    let stride = if params.instantaneous_samples > 0 && samples > 0 {
        (samples / params.instantaneous_samples).max(1)
    } else {
        usize::MAX
    };
    let mut rows = Vec::with_capacity(samples + 1);
    let mut drift: f64 = 0.0;
    let mut index = 0usize;
    let observe = |t: f64, psi: &StateVector, rows: &mut Vec<TrajectoryRow>, index: usize| -> Result<()> {
        let e = plan.energy_components(psi, t)?;
        let inst = if index % stride == 0 || (index == samples && stride != usize::MAX) {
            let h = td.at(t);
            Some(fidelity(&ground_state_with(&h, &eig)?.state, psi)?)
        } else {
            None
        };
        rows.push(TrajectoryRow {
            t,
            norm: psi.norm(),
            fidelity_target: fidelity(&target.state, psi)?,
            fidelity_instantaneous: inst,
            e_kin: e.kinetic,
            e_pot: e.potential,
            e_int: e.interaction,
            e_total: e.total,
        });
        Ok(())
    };

    // evolve stage by stage so every boundary can be checked
    let mut psi = plan.initial_state.clone();
    let mut stages = Vec::with_capacity(plan.stages.len());
    let per_time = samples as f64 / total.max(f64::MIN_POSITIVE);
    for (k, stage) in plan.stages.iter().enumerate() {
        let (t0, t1) = (boundaries[k], boundaries[k + 1]);
        let n = if total > 0.0 { ((t1 - t0) * per_time).round() as usize } else { 0 };
        let opts = EvolveOptions {
            samples: n.max(1),
            ..params.evolve.clone()
        };
        let first = k == 0;
        psi = evolve(&psi, &td, t0, t1, &opts, |t, s| {
            drift = drift.max((s.norm() - 1.0).abs());
            if samples > 0 && (first || t > t0) {
                observe(t, s, &mut rows, index)?;
                index += 1;
            }
            Ok(())
        })?;
        let h = plan.hamiltonian_at_boundary(k + 1)?;
        let (energy, fid) = if k + 1 == plan.stages.len() {
            (target.energy, fidelity(&target.state, &psi)?)
        } else {
            let gs = ground_state_with(&h, &eig)?;
            (gs.energy, fidelity(&gs.state, &psi)?)
        };
        stages.push(StageReport {
            name: stage.name.clone(),
            end_time: t1,
            ground_energy: energy,
            fidelity: fid,
        });
    }
    drift = drift.max((psi.norm() - 1.0).abs());

    let final_components = plan.energy_components(&psi, total)?;
    let final_energy = target_h.expectation(&psi)?;
    let exact = target.energy;
    let particles = plan.basis.particle_count() as f64;
    let band = particles * band_bottom(plan.basis.geometry(), params.hopping);
    let err = (final_energy - exact).abs();
    let ratio = |den: f64| if den != 0.0 { err / den.abs() } else { f64::NAN };
    let (dressed, exposure) = plan
        .interaction_schedule()
        .map(|s| (dressing::dressed_time(&s, 0.0, total), dressing::exposure_time(&s, 0.0, total)))
        .unwrap_or((0.0, 0.0));
    Ok(RunResult {
        protocol: plan.protocol,
        sector: plan.basis.symmetry(),
        dim: plan.basis.dim(),
        total_time: total,
        final_energy,
        exact_energy: exact,
        noninteracting_energy: nonint,
        relative_energy_error: ratio(exact),
        band_reference: band,
        relative_binding_error: ratio(exact - band),
        relative_shift_error: ratio(exact - nonint),
        final_fidelity: fidelity(&target.state, &psi)?,
        final_components,
        stages,
        max_norm_drift: drift,
        dressed_time: dressed,
        exposure_time: exposure,
        trajectory: rows,
        final_state: psi,
        target_state: target.state,
    })
}

pub fn prepare_bosonic_helium(params: &PrepParams) -> Result<RunResult> {
    run_plan(&plan_bosonic_helium(params)?)
}

pub fn prepare_fermionic_helium(params: &PrepParams) -> Result<RunResult> {
    run_plan(&plan_fermionic_helium(params)?)
}

pub fn prepare_h2(params: &PrepParams) -> Result<RunResult> {
    run_plan(&plan_h2(params)?)
}

/// Runs the plan's schedule backwards from `state` and returns the
/// probability of finding the plan's initial site configuration.
///
/// `stretch` multiplies every stage duration of the reverse sweep: 1 mirrors
/// the forward path exactly, larger values make the return more adiabatic.
pub fn reverse_prep_return_probability(plan: &PrepPlan, state: &StateVector, stretch: f64) -> Result<f64> {
    if !(stretch > 0.0) {
        return Err(Error::domain("reverse stretch must be positive"));
    }
    check_len("reverse state", plan.basis.dim(), state.len())?;
    let mut reversed = plan.clone();
    reversed.stages = plan
        .stages
        .iter()
        .rev()
        .map(|s| Stage {
            name: format!("reverse_{}", s.name),
            duration: s.duration * stretch,
        })
        .collect();
    for part in &mut reversed.parts {
        part.levels.reverse();
    }
    let td = reversed.hamiltonian()?;
    let opts = EvolveOptions {
        samples: 0,
        ..plan.params.evolve.clone()
    };
    let back = evolve(state, &td, 0.0, reversed.total_time(), &opts, |_, _| Ok(()))?;
    Ok(fidelity(&plan.initial_state, &back)?)
}

/// Convenience: reverse a finished run.
pub fn reverse_run(plan: &PrepPlan, run: &RunResult, stretch: f64) -> Result<f64> {
    reverse_prep_return_probability(plan, &run.final_state, stretch)
}

/// `sum_{n<m} J Z_n Z_m / (a0 |r_n - r_m|)` for two equal nuclei `d` apart.
pub fn nuclear_repulsion(params: &PrepParams, d: usize) -> f64 {
    params.hopping * params.charge * params.charge / (params.bohr_radius * d as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BondScanRow {
    pub sector: ExchangeSymmetry,
    pub separation: usize,
    pub interaction_time: f64,
    pub e_final: f64,
    pub e_exact: f64,
    pub e_noninteracting: f64,
    /// Ground energy of a single atom on the same lattice.
    pub e_h: f64,
    /// Internuclear repulsion added to the binding energies (0 when disabled).
    pub e_nuclear: f64,
    /// `E_final - 2 E_H + E_nuclear`.
    pub delta_e: f64,
    /// `E_exact - 2 E_H + E_nuclear`.
    pub delta_e_exact: f64,
    pub fidelity: f64,
    pub error: Option<String>,
}

fn scan_separation(params: &PrepParams, d: usize, t_ints: &[f64]) -> Result<Vec<BondScanRow>> {
    let (g, a, _, _) = molecule_field(params, d)?;
    let atom = single_field(params, &g, vec![NucleusSpec::at_site(a, params.charge)])?;
    let e_h = orbitals(&g, &atom, params, 1)?[0].energy;
    let e_nuc = if params.nuclear_repulsion { nuclear_repulsion(params, d) } else { 0.0 };
    let mut out = Vec::with_capacity(t_ints.len());
    let mut cached: Option<(f64, f64, StateVector)> = None;
    for &t in t_ints {
        let plan = plan_h2_interaction_ramp(params, d, t)?;
        if cached.is_none() {
            let eig = params.eigen();
            let exact = ground_state_with(&plan.target_hamiltonian()?, &eig)?;
            let nonint = plan.noninteracting_target()?.expectation(&plan.initial_state)?;
            cached = Some((exact.energy, nonint, exact.state));
        }
        let (e_exact, e_nonint, gs) = cached.as_ref().unwrap();
        let td = plan.hamiltonian()?;
        let opts = EvolveOptions {
            samples: 0,
            ..params.evolve.clone()
        };
        let psi = evolve(&plan.initial_state, &td, 0.0, t, &opts, |_, _| Ok(()))?;
        let e_final = plan.target_hamiltonian()?.expectation(&psi)?;
        out.push(BondScanRow {
            sector: params.sector,
            separation: d,
            interaction_time: t,
            e_final,
            e_exact: *e_exact,
            e_noninteracting: *e_nonint,
            e_h,
            e_nuclear: e_nuc,
            delta_e: e_final - 2.0 * e_h + e_nuc,
            delta_e_exact: e_exact - 2.0 * e_h + e_nuc,
            fidelity: fidelity(gs, &psi)?,
            error: None,
        });
    }
    Ok(out)
}

/// Binding-energy curve over separations and interaction ramp times.
///
/// Separations run in parallel; a failing separation is recorded with its
/// error and the scan continues. Rows are ordered by `(d, T_int)`.
pub fn bond_scan(base: &PrepParams, separations: &[usize], t_ints: &[f64]) -> Result<Vec<BondScanRow>> {
    base.validate()?;
    if t_ints.iter().any(|t| !(*t >= 0.0)) {
        return Err(Error::Config("interaction times must be >= 0".into()));
    }
    let blocks: Vec<Vec<BondScanRow>> = separations
        .par_iter()
        .map(|&d| {
            scan_separation(base, d, t_ints).unwrap_or_else(|e| {
                t_ints
                    .iter()
                    .map(|&t| BondScanRow {
                        sector: base.sector,
                        separation: d,
                        interaction_time: t,
                        e_final: f64::NAN,
                        e_exact: f64::NAN,
                        e_noninteracting: f64::NAN,
                        e_h: f64::NAN,
                        e_nuclear: f64::NAN,
                        delta_e: f64::NAN,
                        delta_e_exact: f64::NAN,
                        fidelity: f64::NAN,
                        error: Some(e.to_string()),
                    })
                    .collect()
            })
        })
        .collect();
    Ok(blocks.into_iter().flatten().collect())
}

/// Parameters of the drive-spectroscopy sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectroscopyParams {
    pub lx: usize,
    pub ly: usize,
    pub nucleus: (usize, usize),
    pub charge: f64,
    pub bohr_radius: f64,
    pub hopping: f64,
    pub regularization: f64,
    /// Drive strength `g`.
    pub drive: f64,
    pub total_time: f64,
    pub omega_min: f64,
    pub omega_max: f64,
    pub points: usize,
    /// Golden-section refinement around each coarse peak.
    pub refine_peaks: bool,
    /// Coarse amplitude above which a local maximum counts as a peak.
    pub peak_threshold: f64,
    /// Fits with a larger RMS misfit are rejected (amplitude recorded as NaN).
    pub max_residual: f64,
    /// Number of eigenstates used to annotate resonances.
    pub levels: usize,
    pub evolve: EvolveOptions,
    pub eigen_tol: f64,
    pub seed: u64,
}

impl Default for SpectroscopyParams {
    fn default() -> Self {
        Self {
            lx: 40,
            ly: 38,
            nucleus: (20, 19),
            charge: 1.0,
            bohr_radius: 1.0,
            hopping: 1.0,
            regularization: crate::potentials::DEFAULT_REGULARIZATION,
            drive: 0.01,
            total_time: 1000.0,
            omega_min: 0.0,
            omega_max: 1.0,
            points: 60,
            refine_peaks: true,
            peak_threshold: 0.05,
            max_residual: 0.2,
            levels: 16,
            evolve: EvolveOptions {
                max_step: 0.1,
                ..EvolveOptions::default()
            },
            eigen_tol: 1e-10,
            seed: 7,
        }
    }
}

impl SpectroscopyParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.drive >= 0.0) || !(self.total_time > 0.0) {
            return Err(Error::Config("drive must be >= 0 and total_time > 0".into()));
        }
        if !(self.omega_max >= self.omega_min) || self.omega_min < 0.0 || self.points == 0 {
            return Err(Error::Config("invalid frequency grid".into()));
        }
        if !(self.bohr_radius > 0.0 && self.hopping > 0.0 && self.regularization > 0.0) {
            return Err(Error::Config("bohr_radius, hopping and regularization must be positive".into()));
        }
        if self.evolve.samples < 16 {
            return Err(Error::Config("spectroscopy needs at least 16 samples per trace".into()));
        }
        LatticeGeometry::new(self.lx, self.ly)?.site_index(self.nucleus_site())?;
        Ok(())
    }

    fn nucleus_site(&self) -> SiteCoord {
        SiteCoord::new(self.nucleus.0, self.nucleus.1)
    }

    pub fn grid(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.omega_min];
        }
        (0..self.points)
            .map(|k| self.omega_min + (self.omega_max - self.omega_min) * k as f64 / (self.points - 1) as f64)
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectroscopyRecord {
    pub omega: f64,
    pub amplitude: f64,
    pub rabi_omega: f64,
    pub residual: f64,
    /// Flat trace or rejected fit.
    pub flagged: bool,
    /// Resonant final-state energy would lie above the free-particle threshold.
    pub unbound: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub level: usize,
    pub energy: f64,
    pub gap: f64,
    pub label: OrbitalLabel,
    /// `|<n|H_lin|0>|`.
    pub dipole: f64,
    pub unbound: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Resonance {
    pub omega: f64,
    pub amplitude: f64,
    pub level: Option<usize>,
    pub label: Option<OrbitalLabel>,
    pub gap: Option<f64>,
    pub dipole: Option<f64>,
    pub unbound: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpectroscopyResult {
    pub drive: f64,
    pub total_time: f64,
    pub ground_energy: f64,
    /// Free-particle threshold `-4J` in absolute energy.
    pub unbound_threshold: f64,
    pub records: Vec<SpectroscopyRecord>,
    pub transitions: Vec<Transition>,
    pub resonances: Vec<Resonance>,
}

/// Single-particle system of the sweep.
pub struct SpectroscopySystem {
    pub basis: SectorBasis,
    pub h0: SparseOperator,
    pub drive: SparseOperator,
    pub levels: Vec<crate::solver::Eigenpair>,
    pub transitions: Vec<Transition>,
}

pub fn spectroscopy_system(params: &SpectroscopyParams) -> Result<SpectroscopySystem> {
    params.validate()?;
    let g = LatticeGeometry::new(params.lx, params.ly)?;
    let basis = SectorBasis::single(g);
    let spec = PotentialSpec {
        regularization: params.regularization,
        ..PotentialSpec::new(
            vec![NucleusSpec::at_site(params.nucleus_site(), params.charge)],
            params.bohr_radius,
            params.hopping,
        )
    };
    let field = assemble_potential(&spec, &g, Spin::Up)?;
    let h0 = SparseOperator::linear_combination(&[
        (&assemble_hopping(&basis, params.hopping)?, 1.0),
        (&assemble_potential_term(&basis, &field)?, 1.0),
    ])?;
    let drive = assemble_linear_drive(&basis, params.bohr_radius)?;
    let eig = EigenOptions {
        seed: params.seed,
        ..EigenOptions::with_tol(params.eigen_tol)
    };
    let levels = low_spectrum_with(&h0, params.levels.max(1), &eig)?;
    let pos = Position::from(params.nucleus_site());
    let threshold = -4.0 * params.hopping;
    let transitions = levels
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, e)| {
            Ok(Transition {
                level: k,
                energy: e.energy,
                gap: e.energy - levels[0].energy,
                label: classify_orbital(&e.state, &g, pos)?,
                dipole: drive.matrix_element(&e.state, &levels[0].state)?.norm(),
                unbound: e.energy > threshold,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SpectroscopySystem {
        basis,
        h0,
        drive,
        levels,
        transitions,
    })
}

/// Ground-state survival trace `|<0|psi(t)>|^2` under `H0 + g sin(omega t) H_lin`.
pub fn survival_trace(system: &SpectroscopySystem, params: &SpectroscopyParams, omega: f64) -> Result<Vec<(f64, f64)>> {
    let t = params.total_time;
    let drive = Schedule::builder(0.0).sinusoid(t, params.drive, omega, 0.0).build()?;
    let td = TimeDependentHamiltonian::new(vec![
        (system.h0.clone(), Schedule::constant(1.0, 0.0, t)),
        (system.drive.clone(), drive),
    ])?;
    let ground = &system.levels[0].state;
    let mut trace = Vec::with_capacity(params.evolve.samples + 1);
    evolve(ground, &td, 0.0, t, &params.evolve, |time, psi| {
        trace.push((time, fidelity(ground, psi)?));
        Ok(())
    })?;
    Ok(trace)
}

fn record_at(system: &SpectroscopySystem, params: &SpectroscopyParams, omega: f64) -> Result<SpectroscopyRecord> {
    let trace = survival_trace(system, params, omega)?;
    let fit: RabiFit = fit_rabi(&trace)?;
    let rejected = fit.residual > params.max_residual;
    let e_final = system.levels[0].energy + omega;
    Ok(SpectroscopyRecord {
        omega,
        amplitude: if rejected { f64::NAN } else { fit.amplitude },
        rabi_omega: fit.omega,
        residual: fit.residual,
        flagged: fit.flat || rejected,
        unbound: e_final > -4.0 * params.hopping,
    })
}

fn amp(r: &SpectroscopyRecord) -> f64 {
    if r.amplitude.is_nan() { 0.0 } else { r.amplitude }
}

/// Maximizes the fitted amplitude over `[a, b]` by golden-section search.
pub fn refine_peak(
    system: &SpectroscopySystem,
    params: &SpectroscopyParams,
    a: f64,
    b: f64,
    iterations: usize,
) -> Result<SpectroscopyRecord> {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (a, b);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let mut rc = record_at(system, params, c)?;
    let mut rd = record_at(system, params, d)?;
    for _ in 0..iterations {
        if amp(&rc) > amp(&rd) {
            b = d;
            d = c;
            rd = rc;
            c = b - r * (b - a);
            rc = record_at(system, params, c)?;
        } else {
            a = c;
            c = d;
            rc = rd;
            d = a + r * (b - a);
            rd = record_at(system, params, d)?;
        }
    }
    Ok(if amp(&rc) > amp(&rd) { rc } else { rd })
}

/// Frequency sweep with Rabi fits and resonance annotation.
pub fn spectroscopy_sweep(params: &SpectroscopyParams) -> Result<SpectroscopyResult> {
    let system = spectroscopy_system(params)?;
    let grid = params.grid();
    let records: Vec<SpectroscopyRecord> = grid
        .par_iter()
        .map(|&w| record_at(&system, params, w))
        .collect::<Result<Vec<_>>>()?;

    let mut peaks: Vec<usize> = (0..records.len())
        .filter(|&k| {
            let a = amp(&records[k]);
            let left = if k > 0 { amp(&records[k - 1]) } else { 0.0 };
            let right = if k + 1 < records.len() { amp(&records[k + 1]) } else { 0.0 };
            a >= params.peak_threshold && a > left && a >= right
        })
        .collect();
    peaks.sort_unstable();
    let spacing = if grid.len() > 1 { grid[1] - grid[0] } else { 0.0 };
    let refined: Vec<SpectroscopyRecord> = peaks
        .par_iter()
        .map(|&k| {
            if params.refine_peaks && spacing > 0.0 {
                let lo = (grid[k] - spacing).max(params.omega_min);
                let hi = (grid[k] + spacing).min(params.omega_max);
                let best = refine_peak(&system, params, lo, hi, 14)?;
                Ok(if amp(&best) >= amp(&records[k]) { best } else { records[k].clone() })
            } else {
                Ok(records[k].clone())
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let resonances = refined
        .into_iter()
        .map(|r| {
            // detuning in units of each line's coupling width: a nearly
            // degenerate dark partner must not capture a bright line's peak
            let width = |t: &Transition| (t.gap - r.omega).abs() / (params.drive * t.dipole);
            let nearest = system
                .transitions
                .iter()
                .filter(|t| t.dipole > 1e-8)
                .min_by(|x, y| width(x).total_cmp(&width(y)));
            Resonance {
                omega: r.omega,
                amplitude: r.amplitude,
                level: nearest.map(|t| t.level),
                label: nearest.map(|t| t.label),
                gap: nearest.map(|t| t.gap),
                dipole: nearest.map(|t| t.dipole),
                unbound: r.unbound,
            }
        })
        .collect();
    Ok(SpectroscopyResult {
        drive: params.drive,
        total_time: params.total_time,
        ground_energy: system.levels[0].energy,
        unbound_threshold: -4.0 * params.hopping,
        records,
        transitions: system.transitions,
        resonances,
    })
}
