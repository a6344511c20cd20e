//! Experiment configuration: a TOML document, validated before anything runs.

use std::path::Path;

use anyhow::{bail, ensure, Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use prethermal_core::analysis::EquilibrationSpec;
use prethermal_core::models::{ModelParams, Schedule};
use prethermal_core::thermal::{EnergyTarget, McConfig, McStart, Proposal};
use prethermal_core::{Axis, Boundary, KickSpec, LatticeSpec, Recorder, Vec3};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub lattice: LatticeConfig,
    #[serde(default)]
    pub model: ModelParams,
    #[serde(default)]
    pub drive: DriveConfig,
    #[serde(default)]
    pub ensemble: EnsembleConfig,
    #[serde(default)]
    pub run: RunConfig,
    #[serde(default)]
    pub analysis: AnalysisConfig,
    #[serde(default)]
    pub mc: McBlock,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LatticeConfig {
    pub dimension: usize,
    /// Chain length, or the side of the square lattice.
    pub size: usize,
    pub boundary: Boundary,
}

impl Default for LatticeConfig {
    fn default() -> Self {
        Self {
            dimension: 1,
            size: 100,
            boundary: Boundary::Periodic,
        }
    }
}

impl LatticeConfig {
    pub fn spec(&self) -> Result<LatticeSpec> {
        Ok(LatticeSpec::new(self.dimension, self.size, self.boundary)?)
    }

    pub fn spec_of_size(&self, size: usize) -> Result<LatticeSpec> {
        Ok(LatticeSpec::new(self.dimension, size, self.boundary)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KickConfig {
    #[serde(default = "default_kick_axis")]
    pub axis: Axis,
    #[serde(default = "one")]
    pub k: u32,
    pub m: u32,
}

fn default_kick_axis() -> Axis {
    Axis::X
}

fn one() -> u32 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DriveConfig {
    pub omega: Option<f64>,
    /// Several drive frequencies; mutually exclusive with `omega`.
    pub omegas: Vec<f64>,
    pub schedule: Schedule,
    pub kick: Option<KickConfig>,
}

impl Default for DriveConfig {
    fn default() -> Self {
        Self {
            omega: None,
            omegas: Vec::new(),
            schedule: Schedule::ThreeWindow,
            kick: None,
        }
    }
}

impl DriveConfig {
    pub fn omegas(&self) -> Vec<f64> {
        match self.omega {
            Some(w) => vec![w],
            None if self.omegas.is_empty() => vec![8.0],
            None => self.omegas.clone(),
        }
    }

    pub fn kick(&self) -> Result<Option<KickSpec>> {
        self.kick
            .map(|k| KickSpec::new(k.axis, k.k, k.m).map_err(Into::into))
            .transpose()
    }
}

/// How the initial states of an ensemble are prepared.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", deny_unknown_fields)]
pub enum InitialEnsemble {
    /// Canonical states of the effective Hamiltonian at energy density `epsilon`.
    Thermal { epsilon: f64 },
    /// Left and right halves sampled at different energy densities.
    DomainWall { eps_left: f64, eps_right: f64 },
    /// Canonical states at `epsilon` with every spin component shifted by uniform noise
    /// in `[-noise, noise]` and renormalized.
    Perturbed { epsilon: f64, noise: f64 },
    /// All spins along `direction`, with the same per-component noise as above.
    Polarized { direction: Vec3, noise: f64 },
    /// Independent uniform spins.
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnsembleConfig {
    pub n_traj: usize,
    pub initial: InitialEnsemble,
    /// Monte Carlo chains for initial states start polarized along this direction;
    /// `None` starts them from random spins.
    pub sector: Option<Vec3>,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        Self {
            n_traj: 64,
            initial: InitialEnsemble::Random,
            sector: Some(Vec3::Z),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub n_cycles: u64,
    /// Global observables are recorded every `stride` cycles.
    pub stride: u64,
    pub snapshot_stride: Option<u64>,
    pub snapshot_until: Option<u64>,
    /// Trajectories advance in chunks of this many cycles between ensemble checks.
    pub chunk_cycles: u64,
    /// Stop once the ensemble-mean energy density at the end of a chunk exceeds this.
    pub stop_energy: Option<f64>,
    /// Stop once the ensemble-mean energy density exceeds the critical value.
    pub stop_after_melt: bool,
    pub rk4_dt: f64,
    /// Cycles spent under the effective Hamiltonian before the hybrid trajectory switches
    /// to the drive.
    pub hybrid_cycles: u64,
    /// Trajectories simulated together before their results are reduced.
    pub batch: usize,
    pub trajectory_csv: bool,
    /// Only every `csv_stride`-th recorded sample goes into per-trajectory files.
    pub csv_stride: u64,
    pub site_columns: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            n_cycles: 1000,
            stride: 1,
            snapshot_stride: None,
            snapshot_until: None,
            chunk_cycles: 10_000,
            stop_energy: None,
            stop_after_melt: false,
            rk4_dt: 0.01,
            hybrid_cycles: 5,
            batch: 8,
            trajectory_csv: true,
            csv_stride: 1,
            site_columns: false,
        }
    }
}

impl RunConfig {
    pub fn recorder(&self) -> Recorder {
        Recorder {
            stride: self.stride,
            snapshot_stride: self.snapshot_stride,
            snapshot_until: self.snapshot_until,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisConfig {
    /// Boxcar width for the melting criterion, in cycles.
    pub smoothing_cycles: u64,
    pub equilibration: EquilibrationSpec,
    /// Critical energy density; estimated by Monte Carlo when absent.
    pub epsilon_c: Option<f64>,
    /// Plateau window bounds (in units of time) overriding the automatic choice.
    pub plateau_start: Option<f64>,
    pub plateau_end: Option<f64>,
    /// The plateau window ends at this fraction of the melting time.
    pub plateau_melt_fraction: f64,
    /// The plateau window starts at this multiple of the global equilibration time.
    pub plateau_equilibration_factor: f64,
    /// Samples of the window used for spectra are trimmed to a multiple of this.
    pub spectrum_multiple: usize,
    /// Cycles after which the energy of a heating run is taken as its reference.
    pub heating_reference_cycles: u64,
    /// `|S^z|` below this fraction of its initial value ends the decay fit.
    pub decay_floor: f64,
    pub histogram_bins: usize,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            smoothing_cycles: 50,
            equilibration: EquilibrationSpec::default(),
            epsilon_c: None,
            plateau_start: None,
            plateau_end: None,
            plateau_melt_fraction: 0.5,
            plateau_equilibration_factor: 2.0,
            spectrum_multiple: 1,
            heating_reference_cycles: 10,
            decay_floor: 0.2,
            histogram_bins: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct McBlock {
    pub n_equil: u64,
    pub n_meas: u64,
    pub n_runs: usize,
    pub proposal: Proposal,
    /// Linear sizes for finite-size crossings.
    pub sizes: Vec<usize>,
    pub temperatures: Vec<f64>,
    pub target: EnergyTarget,
    /// Equilibration sweeps used when sampling initial states.
    pub sample_equil: u64,
}

impl Default for McBlock {
    fn default() -> Self {
        Self {
            n_equil: 10_000,
            n_meas: 30_000,
            n_runs: 8,
            proposal: Proposal::Uniform,
            sizes: Vec::new(),
            temperatures: Vec::new(),
            target: EnergyTarget::default(),
            sample_equil: 3000,
        }
    }
}

impl McBlock {
    pub fn config(&self, seed: u64, start: McStart) -> McConfig {
        McConfig {
            n_equil: self.n_equil,
            n_meas: self.n_meas,
            n_runs: self.n_runs,
            beta: 1.0,
            seed,
            proposal: self.proposal,
            start,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let value: toml::Value = toml::from_str(text).context("config is not valid TOML")?;
        Self::from_value(value)
    }

    pub fn from_value(value: toml::Value) -> Result<Self> {
        let cfg: Self = value
            .try_into()
            .context("config does not match the schema")?;
        Ok(cfg)
    }

    /// Reads a config file and applies `key.path=value` overrides before validation.
    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut value: toml::Value =
            toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        for o in overrides {
            apply_override(&mut value, o)?;
        }
        Self::from_value(value)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// SHA-256 of the canonical TOML rendering.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_toml().as_bytes()))
    }

    pub fn ensemble_start(&self) -> McStart {
        match self.ensemble.sector {
            Some(direction) => McStart::Polarized { direction },
            None => McStart::Random,
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure!(!self.scenario.is_empty(), "scenario must be set");
        self.lattice.spec()?;
        self.model.validate()?;
        let d = &self.drive;
        ensure!(
            d.omega.is_none() || d.omegas.is_empty(),
            "drive.omega and drive.omegas are mutually exclusive"
        );
        for w in d.omegas() {
            ensure!(
                w.is_finite() && w > 0.0,
                "drive frequencies must be positive, got {w}"
            );
        }
        d.kick()?;
        ensure!(self.ensemble.n_traj >= 1, "ensemble.n_traj must be >= 1");
        match self.ensemble.initial {
            InitialEnsemble::Perturbed { noise, .. } | InitialEnsemble::Polarized { noise, .. } => {
                ensure!(
                    noise >= 0.0 && noise.is_finite(),
                    "ensemble noise must be >= 0"
                )
            }
            InitialEnsemble::DomainWall { .. } => ensure!(
                self.lattice.dimension == 1 && self.lattice.size % 2 == 0,
                "domain walls need a chain with an even number of sites"
            ),
            _ => {}
        }
        if let Some(v) = self.ensemble.sector {
            ensure!(v.norm() > 0.0, "ensemble.sector must be a nonzero vector");
        }
        let r = &self.run;
        ensure!(r.n_cycles >= 1, "run.n_cycles must be >= 1");
        r.recorder().validate()?;
        ensure!(r.chunk_cycles >= 1, "run.chunk_cycles must be >= 1");
        ensure!(r.batch >= 1, "run.batch must be >= 1");
        ensure!(r.csv_stride >= 1, "run.csv_stride must be >= 1");
        ensure!(
            r.rk4_dt > 0.0 && r.rk4_dt.is_finite(),
            "run.rk4_dt must be positive"
        );
        let a = &self.analysis;
        ensure!(
            a.smoothing_cycles >= 1,
            "analysis.smoothing_cycles must be >= 1"
        );
        ensure!(
            a.equilibration.threshold > 0.0,
            "analysis.equilibration.threshold must be positive"
        );
        ensure!(
            a.plateau_melt_fraction > 0.0 && a.plateau_melt_fraction <= 1.0,
            "analysis.plateau_melt_fraction must be in (0, 1]"
        );
        ensure!(
            a.spectrum_multiple >= 1,
            "analysis.spectrum_multiple must be >= 1"
        );
        ensure!(
            a.histogram_bins >= 1,
            "analysis.histogram_bins must be >= 1"
        );
        let mc = &self.mc;
        self.mc.config(self.seed, McStart::Random).validate()?;
        ensure!(mc.sample_equil >= 1, "mc.sample_equil must be >= 1");
        ensure!(
            mc.target.tolerance > 0.0,
            "mc.target.tolerance must be positive"
        );
        if mc.temperatures.iter().any(|t| !(*t > 0.0)) {
            bail!("mc.temperatures must be positive");
        }
        Ok(())
    }
}

/// Sets `dotted.key=value` inside a TOML tree. The value is parsed as TOML, falling back
/// to a bare string.
pub fn apply_override(root: &mut toml::Value, spec: &str) -> Result<()> {
    let (path, raw) = spec
        .split_once('=')
        .with_context(|| format!("override `{spec}` is not of the form key=value"))?;
    let path = path.trim();
    ensure!(!path.is_empty(), "override `{spec}` has an empty key");
    let value = parse_value(raw.trim());
    let keys: Vec<&str> = path.split('.').collect();
    let mut node = root;
    for key in &keys[..keys.len() - 1] {
        let table = node
            .as_table_mut()
            .with_context(|| format!("override `{spec}`: `{key}` is inside a non-table value"))?;
        node = table
            .entry(key.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
    }
    let table = node
        .as_table_mut()
        .with_context(|| format!("override `{spec}` does not address a table entry"))?;
    table.insert(keys[keys.len() - 1].to_string(), value);
    Ok(())
}

fn parse_value(raw: &str) -> toml::Value {
    let doc = format!("v = {raw}");
    match toml::from_str::<toml::Table>(&doc) {
        Ok(mut t) => t.remove("v").expect("key present"),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}
