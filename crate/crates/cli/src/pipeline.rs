//! Shared building blocks: model setup, initial ensembles and the chunked ensemble runner.

use anyhow::{ensure, Context, Result};
use rand::Rng;
use rayon::prelude::*;

use prethermal_core::analysis::{
    build_domain_wall_ensemble, toggling_frame, EnsembleAccumulator, EnsembleRecord,
};
use prethermal_core::effective::build_effective;
use prethermal_core::models::build_protocol;
use prethermal_core::record::run_in_place;
use prethermal_core::rng::{stream_rng, StreamPurpose};
use prethermal_core::stats::mean;
use prethermal_core::thermal::{align_sector, sample_at_energy, McConfig, McStart};
use prethermal_core::{
    CompiledHamiltonian, DriveProtocol, FloquetEvolver, KickSpec, LatticeSpec, SpinState,
    StaticHamiltonian, TrajectoryRecord, Vec3,
};

use crate::config::{ExperimentConfig, InitialEnsemble};
use crate::output::{Cell, CsvWriter, OutputDir};

/// Lattice, kick and effective Hamiltonian of an experiment.
pub struct Setup {
    pub lattice: LatticeSpec,
    pub kick: Option<KickSpec>,
    pub d: StaticHamiltonian,
    pub reference: CompiledHamiltonian,
}

impl Setup {
    /// The effective Hamiltonian does not depend on the drive frequency, so the first one is used.
    pub fn new(cfg: &ExperimentConfig) -> Result<Self> {
        let lattice = cfg.lattice.spec()?;
        let kick = cfg.drive.kick()?;
        let proto = build_protocol(&cfg.model, cfg.drive.schedule, cfg.drive.omegas()[0], kick)?;
        let d = build_effective(&proto);
        let reference = d.compile(&lattice)?;
        Ok(Self {
            lattice,
            kick,
            d,
            reference,
        })
    }

    pub fn protocol(&self, cfg: &ExperimentConfig, omega: f64) -> Result<DriveProtocol> {
        Ok(build_protocol(
            &cfg.model,
            cfg.drive.schedule,
            omega,
            self.kick,
        )?)
    }

    pub fn energy_density(&self, spins: &[Vec3]) -> Result<f64> {
        Ok(self.reference.energy_of(spins)? / spins.len() as f64)
    }
}

/// Initial states and, for canonical ensembles, the inverse temperature that produced them.
pub struct Initial {
    pub states: Vec<SpinState>,
    pub beta: Option<f64>,
}

fn add_noise<R: Rng>(spins: &mut [Vec3], noise: f64, rng: &mut R) {
    if noise == 0.0 {
        return;
    }
    for s in spins.iter_mut() {
        let shift = Vec3::new(
            rng.random_range(-noise..=noise),
            rng.random_range(-noise..=noise),
            rng.random_range(-noise..=noise),
        );
        let v = *s + shift;
        *s = if v.norm() > 1e-12 { v.normalized() } else { *s };
    }
}

fn noisy(states: Vec<SpinState>, noise: f64, seed: u64) -> Result<Vec<SpinState>> {
    states
        .into_iter()
        .enumerate()
        .map(|(i, s)| {
            let lattice = *s.lattice();
            let mut spins = s.into_spins();
            add_noise(
                &mut spins,
                noise,
                &mut stream_rng(seed, StreamPurpose::InitialState, i as u64),
            );
            Ok(SpinState::new(lattice, spins)?)
        })
        .collect()
}

/// Monte Carlo settings for drawing initial states.
pub fn sampling_mc(cfg: &ExperimentConfig, seed: u64) -> McConfig {
    McConfig {
        n_equil: cfg.mc.sample_equil,
        ..cfg.mc.config(seed, cfg.ensemble_start())
    }
}

pub fn thermal_states(
    cfg: &ExperimentConfig,
    setup: &Setup,
    epsilon: f64,
    n: usize,
) -> Result<(Vec<SpinState>, f64)> {
    let mc = sampling_mc(cfg, cfg.seed);
    let s = sample_at_energy(&setup.lattice, &setup.d, epsilon, n, &mc, &cfg.mc.target)
        .with_context(|| format!("sampling states at energy density {epsilon}"))?;
    let mut states = s.states;
    if let Some(k) = &setup.kick {
        if cfg.ensemble.sector.is_some() {
            states.iter_mut().for_each(|st| align_sector(st, k));
        }
    }
    Ok((states, s.beta))
}

pub fn initial_ensemble(cfg: &ExperimentConfig, setup: &Setup) -> Result<Initial> {
    let n = cfg.ensemble.n_traj;
    let lattice = setup.lattice;
    Ok(match cfg.ensemble.initial {
        InitialEnsemble::Thermal { epsilon } => {
            let (states, beta) = thermal_states(cfg, setup, epsilon, n)?;
            Initial {
                states,
                beta: Some(beta),
            }
        }
        InitialEnsemble::Perturbed { epsilon, noise } => {
            let (states, beta) = thermal_states(cfg, setup, epsilon, n)?;
            Initial {
                states: noisy(states, noise, cfg.seed)?,
                beta: Some(beta),
            }
        }
        InitialEnsemble::DomainWall {
            eps_left,
            eps_right,
        } => {
            let mc = sampling_mc(cfg, cfg.seed);
            let kick = setup.kick.filter(|_| cfg.ensemble.sector.is_some());
            let states = build_domain_wall_ensemble(
                &lattice,
                &setup.d,
                eps_left,
                eps_right,
                n,
                &mc,
                &cfg.mc.target,
                kick.as_ref(),
            )?;
            Initial { states, beta: None }
        }
        InitialEnsemble::Polarized { direction, noise } => {
            let base = vec![SpinState::polarized(lattice, direction)?; n];
            Initial {
                states: noisy(base, noise, cfg.seed)?,
                beta: None,
            }
        }
        InitialEnsemble::Random => Initial {
            states: (0..n)
                .map(|i| {
                    SpinState::random(
                        lattice,
                        &mut stream_rng(cfg.seed, StreamPurpose::InitialState, i as u64),
                    )
                })
                .collect(),
            beta: None,
        },
    })
}

/// Seed of the Monte Carlo stream used for references, distinct from the initial-state one.
pub fn reference_mc(cfg: &ExperimentConfig, start: McStart) -> McConfig {
    cfg.mc
        .config(prethermal_core::rng::child_seed(cfg.seed, 0x5eed), start)
}

/// When to end a run before `n_cycles`.
pub enum Stop<'a> {
    Never,
    /// Mean energy density of the last `window` samples exceeds the value.
    Energy {
        above: f64,
        window: usize,
    },
    Custom(&'a (dyn Fn(&EnsembleRecord) -> bool + Sync)),
}

impl Stop<'_> {
    fn reached(&self, ens: &EnsembleRecord) -> bool {
        match self {
            Stop::Never => false,
            Stop::Energy { above, window } => {
                let n = ens.energy_mean.len();
                let tail = &ens.energy_mean[n.saturating_sub(*window)..];
                !tail.is_empty() && mean(tail) > *above
            }
            Stop::Custom(f) => f(ens),
        }
    }
}

/// Per-trajectory means of the toggled-frame `S^z` and the energy density inside a time window,
/// plus the lab-frame Fourier sum of `S^z` at the requested tone.
#[derive(Debug, Clone, Default)]
pub struct WindowMeans {
    pub sz: Vec<f64>,
    pub energy: Vec<f64>,
    /// `Σ_n S^z(n) e^{-2πi f n}` over cycles `n` in the window, per trajectory.
    pub tone: Vec<(f64, f64)>,
    count: Vec<u64>,
}

/// Amplitudes of one tone of the ensemble mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToneAmplitude {
    /// Amplitude of the ensemble-mean series.
    pub coherent: f64,
    /// Amplitude the mean would have if each trajectory's component had a random phase:
    /// `sqrt(Σ_i A_i²) / n`.
    pub incoherent: f64,
}

impl WindowMeans {
    pub fn tone_amplitude(&self) -> Option<ToneAmplitude> {
        let n = self.tone.len();
        if n == 0 {
            return None;
        }
        let mut re = 0.0;
        let mut im = 0.0;
        let mut power = 0.0;
        for ((r, i), c) in self.tone.iter().zip(&self.count) {
            let scale = 2.0 / *c as f64;
            re += r * scale;
            im += i * scale;
            power += (r * scale).powi(2) + (i * scale).powi(2);
        }
        Some(ToneAmplitude {
            coherent: re.hypot(im) / n as f64,
            incoherent: power.sqrt() / n as f64,
        })
    }
}

pub struct RunOutcome {
    pub ensemble: EnsembleRecord,
    pub final_states: Vec<SpinState>,
    pub cycles_run: u64,
    pub stopped_early: bool,
    pub window: Option<WindowMeans>,
}

/// Per-trajectory CSV files, kept open across chunks.
pub struct TrajectoryFiles {
    writers: Vec<CsvWriter>,
    csv_stride: u64,
    stride: u64,
    site_columns: bool,
    n_sites: usize,
}

impl TrajectoryFiles {
    pub fn open(
        out: &mut OutputDir,
        prefix: &str,
        cfg: &ExperimentConfig,
        n_sites: usize,
    ) -> Result<Self> {
        let mut header: Vec<String> = ["cycle", "time", "Sz_avg", "energy_density"]
            .map(String::from)
            .to_vec();
        if cfg.run.site_columns {
            header.extend((0..n_sites).map(|i| format!("sz_{i}")));
        }
        let writers = (0..cfg.ensemble.n_traj)
            .map(|i| out.csv(&format!("{prefix}_{i:04}.csv"), &header))
            .collect::<Result<_>>()?;
        Ok(Self {
            writers,
            csv_stride: cfg.run.csv_stride,
            stride: cfg.run.stride,
            site_columns: cfg.run.site_columns,
            n_sites,
        })
    }

    fn write(&mut self, index: usize, rec: &TrajectoryRecord, skip_first: bool) -> Result<()> {
        let w = &mut self.writers[index];
        let mut snaps = rec.snapshots.iter().peekable();
        for k in usize::from(skip_first)..rec.len() {
            let cycle = rec.cycles[k];
            let snap = loop {
                match snaps.peek() {
                    Some(s) if s.cycle < cycle => {
                        snaps.next();
                    }
                    Some(s) if s.cycle == cycle => break Some(*s),
                    _ => break None,
                }
            };
            if (cycle / self.stride) % self.csv_stride != 0 {
                continue;
            }
            let mut cells = vec![
                Cell::Int(cycle),
                Cell::Float(rec.times[k]),
                Cell::Float(rec.magnetization[k].z),
                Cell::Float(rec.energy_density[k]),
            ];
            if self.site_columns {
                match snap {
                    Some(s) => cells.extend(s.spins.iter().map(|v| Cell::Float(v.z))),
                    None => cells.extend(std::iter::repeat_n(Cell::Empty, self.n_sites)),
                }
            }
            w.row(&cells)?;
        }
        Ok(())
    }

    pub fn finish(self) -> Result<()> {
        self.writers.into_iter().try_for_each(CsvWriter::finish)
    }
}

/// Options of one ensemble run.
pub struct RunSpec<'a> {
    pub protocol: &'a DriveProtocol,
    pub n_cycles: u64,
    pub stop: Stop<'a>,
    /// Time window for per-trajectory means.
    pub window: Option<(f64, f64)>,
    /// Frequency in units of ω whose per-trajectory Fourier sums are kept for the window.
    pub tone: Option<f64>,
}

/// Advances every trajectory chunk by chunk. Trajectories are run in batches on the pool
/// and reduced strictly in index order, so results do not depend on the worker count.
pub fn run_ensemble(
    cfg: &ExperimentConfig,
    setup: &Setup,
    pool: &rayon::ThreadPool,
    states: &[SpinState],
    spec: RunSpec<'_>,
    mut files: Option<&mut TrajectoryFiles>,
) -> Result<RunOutcome> {
    ensure!(!states.is_empty(), "empty ensemble");
    let recorder = cfg.run.recorder();
    let n = states.len();
    let mut spins: Vec<Vec<Vec3>> = states.iter().map(|s| s.spins().to_vec()).collect();
    let mut evolvers: Vec<FloquetEvolver> = (0..n)
        .map(|_| spec.protocol.compile(&setup.lattice))
        .collect::<prethermal_core::Result<_>>()?;
    let mut window = spec.window.map(|_| WindowMeans {
        sz: vec![0.0; n],
        energy: vec![0.0; n],
        tone: if spec.tone.is_some() {
            vec![(0.0, 0.0); n]
        } else {
            Vec::new()
        },
        count: vec![0; n],
    });
    let mut ensemble: Option<EnsembleRecord> = None;
    let mut start = 0u64;
    let mut stopped_early = false;
    while start < spec.n_cycles {
        let len = cfg.run.chunk_cycles.min(spec.n_cycles - start);
        let mut acc = EnsembleAccumulator::new(setup.kick);
        for lo in (0..n).step_by(cfg.run.batch) {
            let hi = (lo + cfg.run.batch).min(n);
            let records: Vec<prethermal_core::Result<TrajectoryRecord>> = pool.install(|| {
                spins[lo..hi]
                    .par_iter_mut()
                    .zip(evolvers[lo..hi].par_iter_mut())
                    .map(|(s, ev)| {
                        run_in_place(s, ev, start, len, &recorder, Some(&setup.reference))
                    })
                    .collect()
            });
            for (offset, rec) in records.into_iter().enumerate() {
                let rec = rec?;
                let index = lo + offset;
                if let Some(f) = files.as_deref_mut() {
                    f.write(index, &rec, start > 0)?;
                }
                if let (Some(w), Some((a, b))) = (window.as_mut(), spec.window) {
                    let t = toggling_frame(&rec, setup.kick.as_ref());
                    for k in usize::from(start > 0)..t.len() {
                        if t.times[k] >= a && t.times[k] <= b {
                            w.sz[index] += t.magnetization[k].z;
                            w.energy[index] += t.energy_density[k];
                            w.count[index] += 1;
                            if let Some(f) = spec.tone {
                                let phase = std::f64::consts::TAU * f * rec.cycles[k] as f64;
                                let z = rec.magnetization[k].z;
                                w.tone[index].0 += z * phase.cos();
                                w.tone[index].1 -= z * phase.sin();
                            }
                        }
                    }
                }
                acc.add(&rec)?;
            }
        }
        let chunk = acc.finish()?;
        match ensemble.as_mut() {
            Some(e) => e.append(chunk)?,
            None => ensemble = Some(chunk),
        }
        start += len;
        if start < spec.n_cycles && spec.stop.reached(ensemble.as_ref().expect("set above")) {
            stopped_early = true;
            break;
        }
    }
    if let Some(w) = window.as_mut() {
        for i in 0..n {
            let c = w.count[i].max(1) as f64;
            w.sz[i] /= c;
            w.energy[i] /= c;
        }
        if w.count.iter().any(|&c| c == 0) {
            window = None;
        }
    }
    Ok(RunOutcome {
        ensemble: ensemble.expect("at least one chunk"),
        final_states: spins
            .into_iter()
            .map(|s| SpinState::new(setup.lattice, s))
            .collect::<prethermal_core::Result<_>>()?,
        cycles_run: start,
        stopped_early,
        window,
    })
}

/// Writes the ensemble-mean series and, when snapshots exist, the per-site table.
pub fn write_ensemble(out: &mut OutputDir, prefix: &str, ens: &EnsembleRecord) -> Result<()> {
    let header = [
        "cycle",
        "time",
        "Sz_avg",
        "Sz_err",
        "Sz_toggled",
        "Sz_toggled_err",
        "energy_density",
        "energy_err",
    ]
    .map(String::from);
    let mut w = out.csv(&format!("{prefix}.csv"), &header)?;
    for k in 0..ens.cycles.len() {
        w.row(&[
            Cell::Int(ens.cycles[k]),
            Cell::Float(ens.times[k]),
            Cell::Float(ens.sz_mean[k]),
            Cell::Float(ens.sz_err[k]),
            Cell::Float(ens.toggled_mean[k]),
            Cell::Float(ens.toggled_err[k]),
            Cell::Float(ens.energy_mean[k]),
            Cell::Float(ens.energy_err[k]),
        ])?;
    }
    w.finish()?;
    if let Some(first) = ens.site_sz.first() {
        let mut header: Vec<String> = vec!["cycle".into(), "time".into()];
        header.extend((0..first.len()).map(|i| format!("sz_{i}")));
        let mut w = out.csv(&format!("{prefix}_sites.csv"), &header)?;
        for (c, row) in ens.site_cycles.iter().zip(&ens.site_sz) {
            let mut cells = vec![Cell::Int(*c), Cell::Float(*c as f64 * ens.period)];
            cells.extend(row.iter().map(|v| Cell::Float(*v)));
            w.row(&cells)?;
        }
        w.finish()?;
    }
    Ok(())
}

/// `w5.5`-style tag for file names.
pub fn omega_tag(omega: f64) -> String {
    format!("w{omega}")
}

/// Index range of samples with `a <= t <= b`.
pub fn time_window(times: &[f64], a: f64, b: f64) -> std::ops::Range<usize> {
    let lo = times.partition_point(|t| *t < a);
    let hi = times.partition_point(|t| *t <= b);
    lo..hi.max(lo)
}
