//! Command-line front end: configuration resolution, experiment dispatch and
//! result files.
//!
//! Configuration files are TOML (or a flat JSON dump produced by
//! `--dry-run`). Every key is optional; values are merged over the defaults
//! of the chosen subcommand and unknown keys are rejected. The resolved
//! parameters are always written back as flat JSON (`section.key` names), so a
//! dump can be fed back in to reproduce a run.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::{de::DeserializeOwned, Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::basis::{ExchangeSymmetry, SectorBasis};
use crate::dressing::{self, DressingParams, DressingReport};
use crate::dynamics::Schedule;
use crate::error::{Error, Result};
use crate::interactions::InteractionSpec;
use crate::lattice::{LatticeGeometry, Position};
use crate::operators::{assemble_h0, assemble_interaction, SparseOperator};
use crate::potentials::{
    assemble_potential, load_site_field, spatial_potential, ExtraTerm, NucleusSpec, PotentialSpec, Spin, SpinScale,
};
use crate::protocols::{
    bond_scan, plan_bosonic_helium, plan_fermionic_helium, plan_h2, reverse_run, run_plan, spectroscopy_sweep,
    spectroscopy_system, survival_trace, BondScanRow, PrepParams, RunResult, SpectroscopyParams,
};
use crate::solver::{classify_orbital, low_spectrum_with, EigenOptions};

#[derive(Parser, Debug)]
#[command(name = "pseudochem", version, about = "Pseudo quantum chemistry on a 2D lattice")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Output directory for result files.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Print the resolved parameters as flat JSON and exit.
    #[arg(long, global = true)]
    pub dry_run: bool,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Adiabatic preparation of pseudo-helium.
    PrepHe(PrepArgs),
    /// Adiabatic preparation of pseudo-H2.
    PrepH2(PrepArgs),
    /// Binding-energy curve of pseudo-H2 over separations and ramp times.
    BondScan(ConfigArg),
    /// Drive spectroscopy of a single particle with Rabi fits.
    Spectroscopy(ConfigArg),
    /// Bare eigensolve of a configured system.
    Spectrum(ConfigArg),
    /// Rydberg-dressing feasibility numbers.
    DressingReport(ConfigArg),
}

#[derive(clap::Args, Debug)]
pub struct PrepArgs {
    /// Spin sector: singlet (symmetric space) or triplet (antisymmetric space).
    #[arg(long, value_enum, default_value_t = SectorArg::Singlet)]
    pub sector: SectorArg,
    /// Configuration file (TOML or flat JSON).
    pub config: Option<PathBuf>,
}

#[derive(clap::Args, Debug)]
pub struct ConfigArg {
    /// Configuration file (TOML or flat JSON).
    pub config: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SectorArg {
    Singlet,
    Triplet,
}

impl SectorArg {
    fn symmetry(self) -> ExchangeSymmetry {
        match self {
            SectorArg::Singlet => ExchangeSymmetry::Symmetric,
            SectorArg::Triplet => ExchangeSymmetry::Antisymmetric,
        }
    }
}

/// Resolved configuration of the preparation subcommands.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrepConfig {
    pub prep: PrepParams,
    /// Also run the reverse sweep and report the return probability.
    pub measure_return: bool,
    /// Duration multiplier of the reverse sweep.
    pub return_stretch: f64,
    pub dressing: Option<DressingParams>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSettings {
    pub separations: Vec<usize>,
    pub interaction_times: Vec<f64>,
    pub sectors: Vec<ExchangeSymmetry>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BondScanConfig {
    pub prep: PrepParams,
    pub scan: ScanSettings,
    pub dressing: Option<DressingParams>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectroscopyConfig {
    pub spectroscopy: SpectroscopyParams,
    /// Drive frequencies whose full survival traces are written to `traces.csv`.
    pub traces: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NucleusEntry {
    pub x: f64,
    pub y: f64,
    pub charge: f64,
    pub scale: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumSettings {
    pub lx: usize,
    pub ly: usize,
    pub nuclei: Vec<NucleusEntry>,
    pub bohr_radius: f64,
    pub hopping: f64,
    pub regularization: f64,
    /// Optional `index,value` CSV added to the potential.
    pub custom_field: Option<PathBuf>,
    pub spin_scale: SpinScale,
    pub particles: usize,
    pub sector: ExchangeSymmetry,
    pub interacting: bool,
    pub v_int: Option<f64>,
    pub alpha: f64,
    pub onsite_factor: f64,
    pub levels: usize,
    pub eigen_tol: f64,
    pub seed: u64,
    /// Also dump the Hamiltonian as `row col value` triplets.
    pub write_matrix: bool,
}

impl Default for SpectrumSettings {
    fn default() -> Self {
        Self {
            lx: 21,
            ly: 21,
            nuclei: vec![NucleusEntry {
                x: 10.0,
                y: 10.0,
                charge: 1.0,
                scale: 1.0,
            }],
            bohr_radius: 2.0,
            hopping: 1.0,
            regularization: crate::potentials::DEFAULT_REGULARIZATION,
            custom_field: None,
            spin_scale: SpinScale::default(),
            particles: 1,
            sector: ExchangeSymmetry::Symmetric,
            interacting: true,
            v_int: None,
            alpha: 6.0,
            onsite_factor: 2.0,
            levels: 8,
            eigen_tol: 1e-10,
            seed: 7,
            write_matrix: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumConfig {
    pub spectrum: SpectrumSettings,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DressingConfig {
    pub dressing: DressingParams,
    /// Length of a `sin^4` interaction ramp whose exposure is reported.
    pub interaction_time: f64,
}

fn default_dressing() -> DressingParams {
    DressingParams {
        rabi: 1.0,
        detuning: 10.0,
        hopping: 1.0,
        tau_eff: Some(10.0),
        principal_n: None,
        duty_cycle: None,
    }
}

/// Merges `patch` into `base`; objects merge recursively, everything else replaces.
fn merge(base: &mut Value, patch: Value) {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) => {
            for (k, v) in p {
                match b.get_mut(&k) {
                    Some(slot) if slot.is_object() && v.is_object() => merge(slot, v),
                    Some(slot) => *slot = v,
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (b, p) => *b = p,
    }
}

/// Flattens nested objects into `a.b.c` keys.
pub fn flatten(value: &Value) -> Map<String, Value> {
    fn walk(prefix: &str, v: &Value, out: &mut Map<String, Value>) {
        match v {
            Value::Object(m) if !m.is_empty() => {
                for (k, x) in m {
                    let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                    walk(&key, x, out);
                }
            }
            other => {
                out.insert(prefix.to_string(), other.clone());
            }
        }
    }
    let mut out = Map::new();
    walk("", value, &mut out);
    out
}

/// Inverse of [`flatten`].
pub fn unflatten(flat: Map<String, Value>) -> Value {
    let mut root = Value::Object(Map::new());
    for (key, v) in flat {
        let mut node = &mut root;
        let parts: Vec<&str> = key.split('.').collect();
        for (i, part) in parts.iter().enumerate() {
            let map = node.as_object_mut().expect("flattened keys only nest objects");
            if i + 1 == parts.len() {
                map.insert(part.to_string(), v.clone());
                break;
            }
            node = map.entry(part.to_string()).or_insert_with(|| Value::Object(Map::new()));
            if !node.is_object() {
                *node = Value::Object(Map::new());
            }
        }
    }
    root
}

/// Reads a TOML or flat-JSON configuration file into a JSON value.
pub fn read_config(path: &Path) -> Result<Value> {
    let text = fs::read_to_string(path)?;
    if path.extension().is_some_and(|e| e == "json") {
        match serde_json::from_str::<Value>(&text)? {
            Value::Object(m) => Ok(unflatten(m)),
            _ => Err(Error::Config("JSON configuration must be an object".into())),
        }
    } else {
        let table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::Config(format!("{}: {e}", path.display())))?;
        Ok(serde_json::to_value(table)?)
    }
}

/// Applies an optional configuration on top of `defaults`.
pub fn resolve<T: Serialize + DeserializeOwned>(defaults: &T, config: Option<&Path>) -> Result<T> {
    let mut value = serde_json::to_value(defaults)?;
    if let Some(path) = config {
        merge(&mut value, read_config(path)?);
    }
    serde_json::from_value(value).map_err(|e| Error::Config(e.to_string()))
}

fn prep_defaults(cmd: &Command) -> PrepConfig {
    let prep = match cmd {
        Command::PrepHe(a) if a.sector == SectorArg::Triplet => PrepParams::fermionic_helium(),
        Command::PrepHe(_) => PrepParams::bosonic_helium(),
        Command::PrepH2(a) => PrepParams::hydrogen_molecule(a.sector.symmetry()),
        _ => PrepParams::default(),
    };
    PrepConfig {
        prep,
        measure_return: false,
        return_stretch: 1.0,
        dressing: None,
    }
}

fn scan_defaults() -> BondScanConfig {
    BondScanConfig {
        prep: PrepParams::hydrogen_molecule(ExchangeSymmetry::Symmetric),
        scan: ScanSettings {
            separations: (1..=8).collect(),
            interaction_times: vec![10.0, 20.0, 40.0],
            sectors: vec![ExchangeSymmetry::Symmetric, ExchangeSymmetry::Antisymmetric],
        },
        dressing: None,
    }
}

/// Subcommand name as used on the command line.
fn command_name(cmd: &Command) -> &'static str {
    match cmd {
        Command::PrepHe(_) => "prep-he",
        Command::PrepH2(_) => "prep-h2",
        Command::BondScan(_) => "bond-scan",
        Command::Spectroscopy(_) => "spectroscopy",
        Command::Spectrum(_) => "spectrum",
        Command::DressingReport(_) => "dressing-report",
    }
}

/// The fully resolved parameters of a subcommand.
pub enum Resolved {
    Prep(PrepConfig),
    Scan(BondScanConfig),
    Spectroscopy(SpectroscopyConfig),
    Spectrum(SpectrumConfig),
    Dressing(DressingConfig),
}

impl Resolved {
    pub fn to_value(&self) -> Result<Value> {
        Ok(match self {
            Resolved::Prep(c) => serde_json::to_value(c)?,
            Resolved::Scan(c) => serde_json::to_value(c)?,
            Resolved::Spectroscopy(c) => serde_json::to_value(c)?,
            Resolved::Spectrum(c) => serde_json::to_value(c)?,
            Resolved::Dressing(c) => serde_json::to_value(c)?,
        })
    }

    /// Flat `section.key` map of every parameter.
    pub fn flat(&self) -> Result<Map<String, Value>> {
        Ok(flatten(&self.to_value()?))
    }
}

pub fn resolve_command(cmd: &Command) -> Result<Resolved> {
    Ok(match cmd {
        Command::PrepHe(a) | Command::PrepH2(a) => {
            let mut c = resolve(&prep_defaults(cmd), a.config.as_deref())?;
            // the command-line sector is authoritative
            c.prep.sector = a.sector.symmetry();
            Resolved::Prep(c)
        }
        Command::BondScan(a) => Resolved::Scan(resolve(&scan_defaults(), a.config.as_deref())?),
        Command::Spectroscopy(a) => Resolved::Spectroscopy(resolve(
            &SpectroscopyConfig {
                spectroscopy: SpectroscopyParams::default(),
                traces: Vec::new(),
            },
            a.config.as_deref(),
        )?),
        Command::Spectrum(a) => Resolved::Spectrum(resolve(
            &SpectrumConfig {
                spectrum: SpectrumSettings::default(),
            },
            a.config.as_deref(),
        )?),
        Command::DressingReport(a) => Resolved::Dressing(resolve(
            &DressingConfig {
                dressing: default_dressing(),
                interaction_time: 10.0,
            },
            a.config.as_deref(),
        )?),
    })
}

/// Validates parameters before any expensive work starts.
pub fn validate(cmd: &Command, resolved: &Resolved) -> Result<()> {
    match resolved {
        Resolved::Prep(c) => {
            c.prep.validate()?;
            if !(c.prep.charge > 0.0) {
                return Err(Error::Config(format!("{} needs a nucleus with charge > 0", command_name(cmd))));
            }
            if !(c.return_stretch > 0.0) {
                return Err(Error::Config("return_stretch must be positive".into()));
            }
            if let Some(d) = &c.dressing {
                d.validate()?;
            }
        }
        Resolved::Scan(c) => {
            c.prep.validate()?;
            if c.scan.separations.is_empty() || c.scan.separations.contains(&0) {
                return Err(Error::Config("scan separations must be nonempty and >= 1".into()));
            }
            if c.scan.interaction_times.iter().any(|t| !(*t >= 0.0)) {
                return Err(Error::Config("scan interaction times must be >= 0".into()));
            }
            if c.scan.sectors.contains(&ExchangeSymmetry::Distinguishable) {
                return Err(Error::Config("scan sectors must be symmetric or antisymmetric".into()));
            }
            if let Some(d) = &c.dressing {
                d.validate()?;
            }
        }
        Resolved::Spectroscopy(c) => c.spectroscopy.validate()?,
        Resolved::Spectrum(c) => {
            let s = &c.spectrum;
            LatticeGeometry::new(s.lx, s.ly)?;
            if !(1..=2).contains(&s.particles) {
                return Err(Error::Unsupported(format!("{} particles (1 or 2 supported)", s.particles)));
            }
            if s.levels == 0 {
                return Err(Error::Config("levels must be >= 1".into()));
            }
            potential_spec(s).validate()?;
        }
        Resolved::Dressing(c) => {
            c.dressing.validate()?;
            if !(c.interaction_time >= 0.0) {
                return Err(Error::Config("interaction_time must be >= 0".into()));
            }
        }
    }
    Ok(())
}

fn potential_spec(s: &SpectrumSettings) -> PotentialSpec {
    let nuclei = s
        .nuclei
        .iter()
        .map(|n| NucleusSpec::new(Position { x: n.x, y: n.y }, n.charge).scaled(n.scale))
        .collect();
    PotentialSpec {
        regularization: s.regularization,
        spin_scale: s.spin_scale,
        ..PotentialSpec::new(nuclei, s.bohr_radius, s.hopping)
    }
}

fn header(cmd: &Command, resolved: &Resolved) -> Result<Map<String, Value>> {
    let mut m = Map::new();
    m.insert("command".into(), json!(command_name(cmd)));
    m.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
    let stamp = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    m.insert("timestamp".into(), json!(stamp));
    m.insert("parameters".into(), Value::Object(resolved.flat()?));
    Ok(m)
}

fn write_json(path: &Path, value: &Value) -> Result<()> {
    let mut f = fs::File::create(path)?;
    serde_json::to_writer_pretty(&mut f, value)?;
    writeln!(f)?;
    Ok(())
}

fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

fn dressing_block(params: &Option<DressingParams>, schedule: Option<(Schedule, f64)>) -> Result<Option<DressingReport>> {
    let Some(p) = params else { return Ok(None) };
    let (dressed, exposure) = schedule
        .map(|(s, t)| (dressing::dressed_time(&s, 0.0, t), dressing::exposure_time(&s, 0.0, t)))
        .unwrap_or((0.0, 0.0));
    Ok(Some(dressing::report(p, dressed, exposure)?))
}

fn run_prep(cmd: &Command, c: &PrepConfig, out: &Path, mut summary: Map<String, Value>) -> Result<()> {
    let plan = match cmd {
        Command::PrepHe(_) if c.prep.sector == ExchangeSymmetry::Antisymmetric => plan_fermionic_helium(&c.prep)?,
        Command::PrepHe(_) => plan_bosonic_helium(&c.prep)?,
        _ => plan_h2(&c.prep)?,
    };
    let run: RunResult = run_plan(&plan)?;
    write_rows(&out.join("trajectory.csv"), &run.trajectory)?;

    let g = plan.basis.geometry();
    let final_density = plan.basis.site_density(&run.final_state)?;
    let target_density = plan.basis.site_density(&run.target_state)?;
    let mut w = csv::Writer::from_path(out.join("orbitals.csv"))?;
    w.write_record(["site", "x", "y", "density_final", "density_target"])?;
    for (k, site) in g.sites().enumerate() {
        w.write_record(&[
            k.to_string(),
            site.x.to_string(),
            site.y.to_string(),
            final_density[k].to_string(),
            target_density[k].to_string(),
        ])?;
    }
    w.flush()?;

    let mut result = serde_json::to_value(&run)?;
    if let Value::Object(m) = &mut result {
        m.remove("trajectory");
    }
    summary.insert("result".into(), result);
    if c.measure_return {
        summary.insert("return_probability".into(), json!(reverse_run(&plan, &run, c.return_stretch)?));
    }
    let ramp = plan
        .parts
        .iter()
        .position(|p| p.kind == crate::protocols::PartKind::Interaction)
        .map(|k| (plan.schedule(k), plan.total_time()));
    if let Some(block) = dressing_block(&c.dressing, ramp)? {
        summary.insert("dressing".into(), serde_json::to_value(block)?);
    }
    write_json(&out.join("summary.json"), &Value::Object(summary))
}

/// Location and depth of the lowest interior point of a scan curve.
fn interior_minimum(rows: &[&BondScanRow]) -> Option<(usize, f64)> {
    let (k, r) = rows
        .iter()
        .enumerate()
        .filter(|(_, r)| r.delta_e.is_finite())
        .min_by(|a, b| a.1.delta_e.total_cmp(&b.1.delta_e))?;
    (k > 0 && k + 1 < rows.len()).then_some((r.separation, r.delta_e))
}

fn run_scan(c: &BondScanConfig, out: &Path, mut summary: Map<String, Value>) -> Result<()> {
    let mut all = Vec::new();
    for &sector in &c.scan.sectors {
        let params = PrepParams {
            sector,
            ..c.prep.clone()
        };
        all.extend(bond_scan(&params, &c.scan.separations, &c.scan.interaction_times)?);
    }
    write_rows(&out.join("bond_scan.csv"), &all)?;
    let mut curves = Vec::new();
    for &sector in &c.scan.sectors {
        for &t in &c.scan.interaction_times {
            let rows: Vec<&BondScanRow> = all
                .iter()
                .filter(|r| r.sector == sector && r.interaction_time == t)
                .collect();
            let min = interior_minimum(&rows);
            curves.push(json!({
                "sector": sector,
                "interaction_time": t,
                "interior_minimum": min.map(|m| json!({"separation": m.0, "delta_e": m.1})),
                "failed_points": rows.iter().filter(|r| r.error.is_some()).count(),
            }));
        }
    }
    summary.insert("curves".into(), Value::Array(curves));
    if c.dressing.is_some() {
        let mut blocks = Map::new();
        for &t in &c.scan.interaction_times {
            let ramp = Schedule::builder(0.0).sin4_up(t, 0.0, 1.0).build()?;
            if let Some(b) = dressing_block(&c.dressing, Some((ramp, t)))? {
                blocks.insert(format!("{t}"), serde_json::to_value(b)?);
            }
        }
        summary.insert("dressing".into(), Value::Object(blocks));
    }
    write_json(&out.join("summary.json"), &Value::Object(summary))
}

fn run_spectroscopy(c: &SpectroscopyConfig, out: &Path, mut summary: Map<String, Value>) -> Result<()> {
    let result = spectroscopy_sweep(&c.spectroscopy)?;
    write_rows(&out.join("spectroscopy.csv"), &result.records)?;
    write_rows(&out.join("transitions.csv"), &result.transitions)?;
    if !c.traces.is_empty() {
        let system = spectroscopy_system(&c.spectroscopy)?;
        let mut w = csv::Writer::from_path(out.join("traces.csv"))?;
        w.write_record(["omega", "t", "p0"])?;
        for &omega in &c.traces {
            for (t, p) in survival_trace(&system, &c.spectroscopy, omega)? {
                w.write_record(&[omega.to_string(), t.to_string(), p.to_string()])?;
            }
        }
        w.flush()?;
    }
    summary.insert("result".into(), serde_json::to_value(&result)?);
    write_json(&out.join("summary.json"), &Value::Object(summary))
}

fn run_spectrum(c: &SpectrumConfig, out: &Path, mut summary: Map<String, Value>) -> Result<()> {
    let s = &c.spectrum;
    let g = LatticeGeometry::new(s.lx, s.ly)?;
    let spec = potential_spec(s);
    let mut field = if s.particles == 1 {
        assemble_potential(&spec, &g, Spin::Up)?
    } else {
        spatial_potential(&spec, &g)?
    };
    if let Some(path) = &s.custom_field {
        let extra = load_site_field(path, g.num_sites())?;
        let with = PotentialSpec {
            extra_terms: vec![ExtraTerm::CustomPerSite { amplitude: 1.0, values: extra }],
            nuclei: vec![],
            ..spec.clone()
        };
        let add = assemble_potential(&with, &g, Spin::Up)?;
        field.iter_mut().zip(add).for_each(|(f, a)| *f += a);
    }
    let basis = if s.particles == 1 {
        SectorBasis::single(g)
    } else {
        SectorBasis::pair(g, s.sector)
    };
    let mut h = assemble_h0(&basis, &field, s.hopping)?;
    if s.particles == 2 && s.interacting {
        let spec = match s.v_int {
            Some(v) => InteractionSpec::new(v, s.alpha)?,
            None => InteractionSpec::with_default_strength(s.bohr_radius, s.alpha, s.hopping)?,
        };
        let spec = InteractionSpec {
            onsite_factor: s.onsite_factor,
            ..spec
        };
        h = SparseOperator::linear_combination(&[(&h, 1.0), (&assemble_interaction(&basis, &spec)?, 1.0)])?;
    }
    if s.write_matrix {
        h.write_triplets(std::io::BufWriter::new(fs::File::create(out.join("hamiltonian.txt"))?))?;
    }
    let eig = EigenOptions {
        seed: s.seed,
        ..EigenOptions::with_tol(s.eigen_tol)
    };
    let levels = low_spectrum_with(&h, s.levels.min(basis.dim()), &eig)?;
    let center = s
        .nuclei
        .first()
        .map(|n| Position { x: n.x, y: n.y })
        .unwrap_or_else(|| g.center());
    let mut w = csv::Writer::from_path(out.join("spectrum.csv"))?;
    w.write_record(["level", "energy", "residual", "label"])?;
    let mut listing = Vec::new();
    for (k, e) in levels.iter().enumerate() {
        let label = if basis.is_single() {
            classify_orbital(&e.state, &g, center)?.to_string()
        } else {
            String::new()
        };
        w.write_record(&[k.to_string(), e.energy.to_string(), e.residual.to_string(), label.clone()])?;
        listing.push(json!({"level": k, "energy": e.energy, "residual": e.residual, "label": label}));
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(out.join("orbitals.csv"))?;
    let mut head = vec!["site".to_string(), "x".to_string(), "y".to_string()];
    head.extend((0..levels.len()).map(|k| {
        if basis.is_single() { format!("psi_{k}") } else { format!("density_{k}") }
    }));
    w.write_record(&head)?;
    let columns: Vec<Vec<f64>> = levels
        .iter()
        .map(|e| {
            if basis.is_single() {
                Ok(e.state.real_parts())
            } else {
                basis.site_density(&e.state)
            }
        })
        .collect::<Result<_>>()?;
    for (k, site) in g.sites().enumerate() {
        let mut rec = vec![k.to_string(), site.x.to_string(), site.y.to_string()];
        rec.extend(columns.iter().map(|c| c[k].to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    summary.insert("dim".into(), json!(basis.dim()));
    summary.insert("levels".into(), Value::Array(listing));
    write_json(&out.join("summary.json"), &Value::Object(summary))
}

fn run_dressing(c: &DressingConfig, out: &Path, mut summary: Map<String, Value>) -> Result<()> {
    let ramp = Schedule::builder(0.0).sin4_up(c.interaction_time, 0.0, 1.0).build()?;
    let block = dressing_block(&Some(c.dressing.clone()), Some((ramp, c.interaction_time)))?;
    summary.insert("dressing".into(), serde_json::to_value(block)?);
    write_json(&out.join("summary.json"), &Value::Object(summary))
}

/// Executes a parsed command line; returns the resolved parameters on success.
pub fn execute(cli: &Cli) -> Result<Option<Map<String, Value>>> {
    let resolved = resolve_command(&cli.command)?;
    validate(&cli.command, &resolved)?;
    if cli.dry_run {
        return Ok(Some(resolved.flat()?));
    }
    if let Some(n) = cli.threads {
        // a global pool can only be installed once per process
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    fs::create_dir_all(&cli.out)?;
    let summary = header(&cli.command, &resolved)?;
    match &resolved {
        Resolved::Prep(c) => run_prep(&cli.command, c, &cli.out, summary)?,
        Resolved::Scan(c) => run_scan(c, &cli.out, summary)?,
        Resolved::Spectroscopy(c) => run_spectroscopy(c, &cli.out, summary)?,
        Resolved::Spectrum(c) => run_spectrum(c, &cli.out, summary)?,
        Resolved::Dressing(c) => run_dressing(c, &cli.out, summary)?,
    }
    Ok(None)
}

/// Machine-readable error report.
pub fn error_json(err: &Error) -> Value {
    json!({"error": {"kind": err.kind(), "message": err.to_string()}})
}

/// Entry point of the binary; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(Some(flat)) => {
            // a closed pipe (e.g. `| head`) is not an error worth a panic
            let text = serde_json::to_string_pretty(&Value::Object(flat)).unwrap_or_default();
            let _ = writeln!(std::io::stdout(), "{text}");
            0
        }
        Ok(None) => 0,
        Err(err) => {
            let report = error_json(&err);
            eprintln!("{report}");
            if fs::create_dir_all(&cli.out).is_ok() {
                let _ = write_json(&cli.out.join("error.json"), &report);
            }
            match err {
                Error::Config(_) | Error::Domain(_) | Error::Unsupported(_) | Error::Shape { .. } => 2,
                _ => 1,
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("pseudochem").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn flatten_round_trip() {
        let v = json!({"a": {"b": 1, "c": {"d": [1, 2]}}, "e": null});
        let flat = flatten(&v);
        assert_eq!(flat["a.c.d"], json!([1, 2]));
        assert_eq!(unflatten(flat), v);
    }

    #[test]
    fn dry_run_fills_defaults() {
        let cli = parse(&["prep-he", "--sector", "triplet", "--dry-run"]);
        let flat = execute(&cli).unwrap().unwrap();
        assert_eq!(flat["prep.hopping_time"], json!(140.0));
        assert_eq!(flat["prep.sector"], json!("antisymmetric"));
        assert_eq!(flat["prep.bohr_radius"], json!(4.0));
    }

    #[test]
    fn config_overrides_and_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let toml_path = dir.path().join("c.toml");
        fs::write(&toml_path, "[prep]\nbohr_radius = 3.0\n[prep.evolve]\nsamples = 50\n").unwrap();
        let p = toml_path.to_str().unwrap();
        let flat = execute(&parse(&["prep-h2", p, "--dry-run"])).unwrap().unwrap();
        assert_eq!(flat["prep.bohr_radius"], json!(3.0));
        assert_eq!(flat["prep.evolve.samples"], json!(50));
        assert_eq!(flat["prep.charge"], json!(1.0));
        let json_path = dir.path().join("resolved.json");
        fs::write(&json_path, serde_json::to_string(&Value::Object(flat.clone())).unwrap()).unwrap();
        let again = execute(&parse(&["prep-h2", json_path.to_str().unwrap(), "--dry-run"]))
            .unwrap()
            .unwrap();
        assert_eq!(flat, again);
    }

    #[test]
    fn unknown_keys_and_bad_values_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        fs::write(&path, "[prep]\nbohr_radiu = 3.0\n").unwrap();
        let err = execute(&parse(&["prep-he", path.to_str().unwrap(), "--dry-run"])).unwrap_err();
        assert_eq!(err.kind(), "config");
        fs::write(&path, "[prep]\ncharge = 0.0\n").unwrap();
        let err = execute(&parse(&["prep-he", path.to_str().unwrap(), "--dry-run"])).unwrap_err();
        assert_eq!(err.kind(), "config");
    }

    #[test]
    fn error_exit_writes_json() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("c.toml");
        fs::write(&cfg, "[dressing]\ndetuning = 0.0\n").unwrap();
        let out = dir.path().join("out");
        let code = main_with_args([
            "pseudochem",
            "dressing-report",
            cfg.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(code, 2);
        let report: Value = serde_json::from_str(&fs::read_to_string(out.join("error.json")).unwrap()).unwrap();
        assert_eq!(report["error"]["kind"], json!("domain"));
    }

    #[test]
    fn dressing_report_runs() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("out");
        let code = main_with_args(["pseudochem", "dressing-report", "--out", out.to_str().unwrap()]);
        assert_eq!(code, 0);
        let s: Value = serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
        assert_eq!(s["dressing"]["figure_of_merit"], json!(10.0));
        assert_eq!(s["command"], json!("dressing-report"));
    }
}
