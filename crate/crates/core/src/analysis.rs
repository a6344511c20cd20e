//! Post-processing of trajectory records: overlaps, toggling frame, spectra,
//! melting and equilibration times, local distributions and ensembles.

use rustfft::{num_complex::Complex, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::floquet::KickSpec;
use crate::hamiltonian::{CompiledHamiltonian, StaticHamiltonian};
use crate::lattice::{Boundary, LatticeSpec};
use crate::record::TrajectoryRecord;
use crate::state::SpinState;
use crate::stats::{boxcar, trailing_average};
use crate::thermal::{align_sector, sample_at_energy, EnergyTarget, McConfig};
use crate::vec3::{rotate_axis_sc, Vec3};

/// `1 − (1/N) Σ_i S_i·S'_i` for two configurations.
pub fn overlap_defect(a: &[Vec3], b: &[Vec3]) -> f64 {
    let s: f64 = a.iter().zip(b).map(|(x, y)| x.dot(*y)).sum();
    1.0 - s / a.len() as f64
}

/// δM between two records, evaluated on their common snapshot cycles.
pub fn delta_m(a: &TrajectoryRecord, b: &TrajectoryRecord) -> Result<Vec<(u64, f64)>> {
    if a.snapshots.is_empty() || a.snapshots.len() != b.snapshots.len() {
        return Err(Error::MismatchedSchedule(format!(
            "{} vs {} snapshots",
            a.snapshots.len(),
            b.snapshots.len()
        )));
    }
    a.snapshots
        .iter()
        .zip(&b.snapshots)
        .map(|(x, y)| {
            if x.cycle != y.cycle || x.spins.len() != y.spins.len() {
                return Err(Error::MismatchedSchedule(format!(
                    "snapshot at cycle {} ({} sites) vs cycle {} ({} sites)",
                    x.cycle,
                    x.spins.len(),
                    y.cycle,
                    y.spins.len()
                )));
            }
            Ok((x.cycle, overlap_defect(&x.spins, &y.spins)))
        })
        .collect()
}

/// Applies `X^{-m}` to every recorded vector at cycle `m`.
pub fn toggling_frame(record: &TrajectoryRecord, kick: Option<&KickSpec>) -> TrajectoryRecord {
    let Some(kick) = kick else {
        return record.clone();
    };
    let mut out = record.clone();
    let untoggle = |v: Vec3, cycle: u64| {
        let (s, c) = kick
            .power_angle(-((cycle % kick.m() as u64) as i64))
            .sin_cos();
        rotate_axis_sc(v, kick.axis(), s, c)
    };
    for (m, &cycle) in out.magnetization.iter_mut().zip(&record.cycles) {
        *m = untoggle(*m, cycle);
    }
    for snap in &mut out.snapshots {
        for s in &mut snap.spins {
            *s = untoggle(*s, snap.cycle);
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    /// In units of the drive frequency ω.
    pub frequency: f64,
    pub amplitude: f64,
}

/// One-sided amplitude spectrum of a stroboscopic series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub frequencies: Vec<f64>,
    pub amplitudes: Vec<f64>,
    /// Local maxima, largest first.
    pub peaks: Vec<Peak>,
}

impl Spectrum {
    /// Amplitude of the bin nearest to `frequency`.
    pub fn amplitude_at(&self, frequency: f64) -> f64 {
        let k = self
            .frequencies
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - frequency).abs().total_cmp(&(b.1 - frequency).abs()))
            .map(|(k, _)| k)
            .unwrap_or(0);
        self.amplitudes[k]
    }

    /// Median amplitude over the nonzero frequencies.
    pub fn noise_floor(&self) -> f64 {
        let mut a: Vec<f64> = self.amplitudes[1..].to_vec();
        a.sort_by(f64::total_cmp);
        a[a.len() / 2]
    }

    pub fn dominant(&self) -> Option<Peak> {
        self.peaks.first().copied()
    }

    /// Largest peak not within one bin of `frequency`.
    pub fn largest_other(&self, frequency: f64) -> Option<Peak> {
        let df = self.frequencies.get(1).copied().unwrap_or(1.0);
        self.peaks
            .iter()
            .find(|p| (p.frequency - frequency).abs() > 1.5 * df)
            .copied()
    }
}

/// Minimum number of samples accepted by [`subharmonic_spectrum`].
pub const MIN_SPECTRUM_SAMPLES: usize = 64;

/// DFT of `series[window]` with the mean removed, sampled every `stride` periods.
///
/// A pure tone `A cos(2π f m)` at a bin frequency returns amplitude `A`.
pub fn subharmonic_spectrum(
    series: &[f64],
    window: std::ops::Range<usize>,
    stride: u64,
) -> Result<Spectrum> {
    if window.end > series.len() || window.start >= window.end {
        return Err(Error::InvalidArgument(format!(
            "window {window:?} outside series of length {}",
            series.len()
        )));
    }
    let x = &series[window];
    let n = x.len();
    if n < MIN_SPECTRUM_SAMPLES {
        return Err(Error::WindowTooShort {
            len: n,
            min: MIN_SPECTRUM_SAMPLES,
        });
    }
    let mean = x.iter().sum::<f64>() / n as f64;
    let mut buf: Vec<Complex<f64>> = x.iter().map(|v| Complex::new(v - mean, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let half = n / 2;
    let frequencies: Vec<f64> = (0..=half)
        .map(|k| k as f64 / (n as f64 * stride as f64))
        .collect();
    let amplitudes: Vec<f64> = (0..=half)
        .map(|k| {
            let scale = if k == 0 || (n % 2 == 0 && k == half) {
                1.0
            } else {
                2.0
            };
            scale * buf[k].norm() / n as f64
        })
        .collect();
    let mut peaks: Vec<Peak> = (1..=half)
        .filter(|&k| {
            let left = amplitudes[k - 1];
            let right = if k < half { amplitudes[k + 1] } else { 0.0 };
            amplitudes[k] > 0.0 && amplitudes[k] >= left && amplitudes[k] >= right
        })
        .map(|k| Peak {
            frequency: frequencies[k],
            amplitude: amplitudes[k],
        })
        .collect();
    peaks.sort_by(|a, b| b.amplitude.total_cmp(&a.amplitude));
    Ok(Spectrum {
        frequencies,
        amplitudes,
        peaks,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum MeltTime {
    Melted { time: f64, index: usize },
    Survived { horizon: f64 },
}

impl MeltTime {
    pub fn time(&self) -> Option<f64> {
        match self {
            MeltTime::Melted { time, .. } => Some(*time),
            MeltTime::Survived { .. } => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeltReport {
    pub tau_melt: MeltTime,
    /// First time the smoothed order parameter falls below half its maximum.
    pub half_life: Option<f64>,
}

/// First time the boxcar-smoothed energy density exceeds `epsilon_c`.
///
/// `width` is in samples. `order` (e.g. the toggled `S^z_avg`) feeds the half-life estimate.
pub fn detect_melt_time(
    times: &[f64],
    energy: &[f64],
    epsilon_c: f64,
    width: usize,
    order: Option<&[f64]>,
) -> Result<MeltReport> {
    if times.is_empty() || times.len() != energy.len() {
        return Err(Error::MismatchedSchedule(
            "times and energies differ in length".into(),
        ));
    }
    let smooth = boxcar(energy, width);
    let tau_melt = match smooth.iter().position(|e| *e > epsilon_c) {
        Some(index) => MeltTime::Melted {
            time: times[index],
            index,
        },
        None => MeltTime::Survived {
            horizon: times[times.len() - 1],
        },
    };
    let half_life = order.and_then(|o| amplitude_half_life(times, o, width));
    Ok(MeltReport {
        tau_melt,
        half_life,
    })
}

/// First time after its maximum that the smoothed `|order|` drops below half that maximum.
pub fn amplitude_half_life(times: &[f64], order: &[f64], width: usize) -> Option<f64> {
    let abs: Vec<f64> = order.iter().map(|v| v.abs()).collect();
    let smooth = boxcar(&abs, width);
    let (kmax, max) = smooth
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (k, v)| {
            if *v > acc.1 {
                (k, *v)
            } else {
                acc
            }
        });
    smooth[kmax..]
        .iter()
        .position(|v| *v < 0.5 * max)
        .map(|k| times[kmax + k])
}

/// Ensemble-mean observables of trajectories that share a protocol and schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleRecord {
    pub n_traj: usize,
    pub period: f64,
    pub cycles: Vec<u64>,
    pub times: Vec<f64>,
    pub sz_mean: Vec<f64>,
    pub sz_err: Vec<f64>,
    /// `S^z_avg` in the toggling frame.
    pub toggled_mean: Vec<f64>,
    pub toggled_err: Vec<f64>,
    pub energy_mean: Vec<f64>,
    pub energy_err: Vec<f64>,
    /// Cycles of the per-site series.
    pub site_cycles: Vec<u64>,
    /// Ensemble-mean toggled `S^z_i`, one row per snapshot cycle.
    pub site_sz: Vec<Vec<f64>>,
}

/// Streaming builder for [`EnsembleRecord`]; members must be added in a fixed order for
/// bit-reproducible sums.
#[derive(Debug, Clone)]
pub struct EnsembleAccumulator {
    kick: Option<KickSpec>,
    n: usize,
    period: f64,
    cycles: Vec<u64>,
    sums: [Vec<f64>; 6],
    site_cycles: Vec<u64>,
    site_sums: Vec<Vec<f64>>,
}

impl EnsembleAccumulator {
    pub fn new(kick: Option<KickSpec>) -> Self {
        Self {
            kick,
            n: 0,
            period: 0.0,
            cycles: Vec::new(),
            sums: Default::default(),
            site_cycles: Vec::new(),
            site_sums: Vec::new(),
        }
    }

    pub fn add(&mut self, record: &TrajectoryRecord) -> Result<()> {
        record.check_invariants()?;
        let toggled = toggling_frame(record, self.kick.as_ref());
        if self.n == 0 {
            self.period = record.period;
            self.cycles = record.cycles.clone();
            let len = record.len();
            self.sums = std::array::from_fn(|_| vec![0.0; len]);
            self.site_cycles = record.snapshots.iter().map(|s| s.cycle).collect();
            self.site_sums = record
                .snapshots
                .iter()
                .map(|s| vec![0.0; s.spins.len()])
                .collect();
        } else if record.cycles != self.cycles
            || toggled
                .snapshots
                .iter()
                .map(|s| s.cycle)
                .ne(self.site_cycles.iter().copied())
        {
            return Err(Error::MismatchedSchedule(
                "ensemble members use different schedules".into(),
            ));
        }
        for k in 0..record.len() {
            let sz = record.magnetization[k].z;
            let tz = toggled.magnetization[k].z;
            let e = record.energy_density[k];
            for (sum, v) in self
                .sums
                .iter_mut()
                .zip([sz, sz * sz, tz, tz * tz, e, e * e])
            {
                sum[k] += v;
            }
        }
        for (row, snap) in self.site_sums.iter_mut().zip(&toggled.snapshots) {
            for (acc, s) in row.iter_mut().zip(&snap.spins) {
                *acc += s.z;
            }
        }
        self.n += 1;
        Ok(())
    }

    pub fn finish(&self) -> Result<EnsembleRecord> {
        if self.n == 0 {
            return Err(Error::EmptyInput("ensemble has no members"));
        }
        let n = self.n as f64;
        let stats = |s: &[f64], s2: &[f64]| -> (Vec<f64>, Vec<f64>) {
            s.iter()
                .zip(s2)
                .map(|(a, b)| {
                    let m = a / n;
                    let var = if self.n > 1 {
                        ((b / n - m * m) * n / (n - 1.0)).max(0.0)
                    } else {
                        0.0
                    };
                    (m, (var / n).sqrt())
                })
                .unzip()
        };
        let (sz_mean, sz_err) = stats(&self.sums[0], &self.sums[1]);
        let (toggled_mean, toggled_err) = stats(&self.sums[2], &self.sums[3]);
        let (energy_mean, energy_err) = stats(&self.sums[4], &self.sums[5]);
        Ok(EnsembleRecord {
            n_traj: self.n,
            period: self.period,
            times: self
                .cycles
                .iter()
                .map(|c| *c as f64 * self.period)
                .collect(),
            cycles: self.cycles.clone(),
            sz_mean,
            sz_err,
            toggled_mean,
            toggled_err,
            energy_mean,
            energy_err,
            site_cycles: self.site_cycles.clone(),
            site_sz: self
                .site_sums
                .iter()
                .map(|r| r.iter().map(|v| v / n).collect())
                .collect(),
        })
    }
}

impl EnsembleRecord {
    /// Appends a later chunk of the same ensemble. A leading sample that repeats the
    /// current last cycle is dropped.
    pub fn append(&mut self, mut next: EnsembleRecord) -> Result<()> {
        if next.n_traj != self.n_traj || next.period != self.period {
            return Err(Error::MismatchedSchedule(
                "chunks come from different ensembles".into(),
            ));
        }
        if let (Some(&last), Some(&first)) = (self.cycles.last(), next.cycles.first()) {
            if first < last {
                return Err(Error::MismatchedSchedule(format!(
                    "chunk starts at cycle {first} before {last}"
                )));
            }
            if first == last {
                next.cycles.remove(0);
                for v in [
                    &mut next.times,
                    &mut next.sz_mean,
                    &mut next.sz_err,
                    &mut next.toggled_mean,
                    &mut next.toggled_err,
                    &mut next.energy_mean,
                    &mut next.energy_err,
                ] {
                    v.remove(0);
                }
            }
        }
        if let (Some(&last), Some(&first)) = (self.site_cycles.last(), next.site_cycles.first()) {
            if first == last {
                next.site_cycles.remove(0);
                next.site_sz.remove(0);
            }
        }
        self.cycles.append(&mut next.cycles);
        self.times.append(&mut next.times);
        self.sz_mean.append(&mut next.sz_mean);
        self.sz_err.append(&mut next.sz_err);
        self.toggled_mean.append(&mut next.toggled_mean);
        self.toggled_err.append(&mut next.toggled_err);
        self.energy_mean.append(&mut next.energy_mean);
        self.energy_err.append(&mut next.energy_err);
        self.site_cycles.append(&mut next.site_cycles);
        self.site_sz.append(&mut next.site_sz);
        Ok(())
    }
}

pub fn ensemble_record(
    records: &[TrajectoryRecord],
    kick: Option<&KickSpec>,
) -> Result<EnsembleRecord> {
    let mut acc = EnsembleAccumulator::new(kick.copied());
    for r in records {
        acc.add(r)?;
    }
    acc.finish()
}

/// Settings for [`equilibration_times`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EquilibrationSpec {
    pub block: usize,
    pub threshold: f64,
    /// Trailing time average applied to each site series, in snapshots.
    pub average: usize,
}

impl Default for EquilibrationSpec {
    fn default() -> Self {
        Self {
            block: 5,
            threshold: 0.05,
            average: 10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Reached {
    At { time: f64 },
    NotBy { horizon: f64 },
}

impl Reached {
    pub fn time(&self) -> Option<f64> {
        match self {
            Reached::At { time } => Some(*time),
            Reached::NotBy { .. } => None,
        }
    }

    /// The time, or the horizon if the threshold was never met.
    pub fn bound(&self) -> f64 {
        match self {
            Reached::At { time } => *time,
            Reached::NotBy { horizon } => *horizon,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Equilibration {
    pub tau_local: Reached,
    pub tau_global: Reached,
    /// RMS over blocks of the within-block standard deviation, per snapshot.
    pub local_spread: Vec<f64>,
    /// Standard deviation of the block means, per snapshot.
    pub global_spread: Vec<f64>,
}

fn std_dev(v: &[f64]) -> f64 {
    let m = v.iter().sum::<f64>() / v.len() as f64;
    (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / v.len() as f64).sqrt()
}

/// Local and global equilibration times from the per-site ensemble means.
///
/// Sites are grouped into consecutive blocks; `τ_local` is the first time the within-block
/// spread falls below the threshold, `τ_global` the first time the spread of block means does.
pub fn equilibration_times(
    ensemble: &EnsembleRecord,
    spec: &EquilibrationSpec,
) -> Result<Equilibration> {
    let rows = &ensemble.site_sz;
    if rows.is_empty() {
        return Err(Error::EmptyInput("ensemble has no per-site snapshots"));
    }
    let n_sites = rows[0].len();
    if spec.block < 2 || n_sites < 2 * spec.block {
        return Err(Error::InvalidArgument(format!(
            "blocks of {} need at least {} sites, have {n_sites}",
            spec.block,
            2 * spec.block
        )));
    }
    let averaged: Vec<Vec<f64>> = {
        let per_site: Vec<Vec<f64>> = (0..n_sites)
            .map(|i| {
                trailing_average(
                    &rows.iter().map(|r| r[i]).collect::<Vec<_>>(),
                    spec.average.max(1),
                )
            })
            .collect();
        (0..rows.len())
            .map(|t| per_site.iter().map(|s| s[t]).collect())
            .collect()
    };
    let n_blocks = n_sites / spec.block;
    let mut local_spread = Vec::with_capacity(rows.len());
    let mut global_spread = Vec::with_capacity(rows.len());
    for row in &averaged {
        let blocks: Vec<&[f64]> = row.chunks_exact(spec.block).take(n_blocks).collect();
        let local =
            (blocks.iter().map(|b| std_dev(b).powi(2)).sum::<f64>() / n_blocks as f64).sqrt();
        let means: Vec<f64> = blocks
            .iter()
            .map(|b| b.iter().sum::<f64>() / b.len() as f64)
            .collect();
        local_spread.push(local);
        global_spread.push(std_dev(&means));
    }
    let times: Vec<f64> = ensemble
        .site_cycles
        .iter()
        .map(|c| *c as f64 * ensemble.period)
        .collect();
    let horizon = times.last().copied().unwrap_or(0.0);
    let first = |s: &[f64]| match s.iter().position(|v| *v < spec.threshold) {
        Some(k) => Reached::At { time: times[k] },
        None => Reached::NotBy { horizon },
    };
    Ok(Equilibration {
        tau_local: first(&local_spread),
        tau_global: first(&global_spread),
        local_spread,
        global_spread,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LocalObservable {
    /// `S^z_i`.
    SiteSz,
    /// `S^z_i S^z_j` on nearest-neighbour bonds.
    BondSzSz,
    /// Energy of the terms supported on a nearest-neighbour bond.
    BondEnergy,
    /// Energy of the terms supported on three consecutive sites.
    TripleEnergy,
}

/// Every value of a local observable over the states and lattice positions.
pub fn local_samples(
    states: &[SpinState],
    kind: LocalObservable,
    h: Option<&CompiledHamiltonian>,
) -> Result<Vec<f64>> {
    let Some(first) = states.first() else {
        return Err(Error::EmptyInput("no states"));
    };
    let lattice = *first.lattice();
    let needs_h = matches!(
        kind,
        LocalObservable::BondEnergy | LocalObservable::TripleEnergy
    );
    if needs_h && h.is_none() {
        return Err(Error::InvalidArgument(
            "local energies need a Hamiltonian".into(),
        ));
    }
    let bonds = lattice.bonds();
    let triples = if kind == LocalObservable::TripleEnergy {
        lattice.triples()?
    } else {
        Vec::new()
    };
    let mut out = Vec::new();
    for s in states {
        let sp = s.spins();
        match kind {
            LocalObservable::SiteSz => out.extend(sp.iter().map(|v| v.z)),
            LocalObservable::BondSzSz => out.extend(bonds.iter().map(|&(i, j)| sp[i].z * sp[j].z)),
            LocalObservable::BondEnergy => {
                let h = h.unwrap();
                out.extend(bonds.iter().map(|&(i, j)| h.local_energy(sp, &[i, j])));
            }
            LocalObservable::TripleEnergy => {
                let h = h.unwrap();
                out.extend(triples.iter().map(|t| h.local_energy(sp, t)));
            }
        }
    }
    Ok(out)
}

/// Normalised histogram: `density` integrates to one over `[lo, hi]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub counts: Vec<u64>,
    pub density: Vec<f64>,
}

pub fn histogram_local(
    values: &[f64],
    bins: usize,
    range: Option<(f64, f64)>,
) -> Result<Histogram> {
    if values.is_empty() {
        return Err(Error::EmptyInput("no samples for histogram"));
    }
    if bins == 0 {
        return Err(Error::InvalidArgument("bins must be >= 1".into()));
    }
    let (mut lo, mut hi) = range.unwrap_or_else(|| {
        values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| {
                (a.min(*v), b.max(*v))
            })
    });
    if hi <= lo {
        lo -= 0.5;
        hi += 0.5;
    }
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0u64; bins];
    for v in values {
        if *v < lo || *v > hi {
            continue;
        }
        let k = (((v - lo) / width) as usize).min(bins - 1);
        counts[k] += 1;
    }
    let total: u64 = counts.iter().sum();
    let density = counts
        .iter()
        .map(|c| *c as f64 / (total.max(1) as f64 * width))
        .collect();
    Ok(Histogram {
        lo,
        hi,
        counts,
        density,
    })
}

/// Two-sample Kolmogorov–Smirnov statistic: sup-norm distance of the empirical CDFs.
pub fn cdf_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyInput(
            "CDF distance needs two non-empty samples",
        ));
    }
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    x.sort_by(f64::total_cmp);
    y.sort_by(f64::total_cmp);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < x.len() && j < y.len() {
        let v = x[i].min(y[j]);
        while i < x.len() && x[i] <= v {
            i += 1;
        }
        while j < y.len() && y[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / x.len() as f64 - j as f64 / y.len() as f64).abs());
    }
    Ok(d)
}

/// Domain-wall initial states: each half-chain is sampled canonically (open boundaries)
/// at its own energy density and the halves are concatenated.
///
/// With a kick, each half is rotated into the `+z` symmetry sector.
#[allow(clippy::too_many_arguments)]
pub fn build_domain_wall_ensemble(
    lattice: &LatticeSpec,
    d: &StaticHamiltonian,
    eps_left: f64,
    eps_right: f64,
    n_traj: usize,
    mc: &McConfig,
    target: &EnergyTarget,
    kick: Option<&KickSpec>,
) -> Result<Vec<SpinState>> {
    if lattice.dimension() != 1 || lattice.n_sites() % 2 != 0 {
        return Err(Error::InvalidLattice(
            "domain walls need a 1D chain with an even number of sites".into(),
        ));
    }
    let half = LatticeSpec::chain(lattice.n_sites() / 2, Boundary::Open)?;
    let left = sample_at_energy(&half, d, eps_left, n_traj, mc, target)?;
    let right_mc = McConfig {
        seed: crate::rng::child_seed(mc.seed, 1),
        ..*mc
    };
    let right = sample_at_energy(&half, d, eps_right, n_traj, &right_mc, target)?;
    left.states
        .into_iter()
        .zip(right.states)
        .map(|(mut l, mut r)| {
            if let Some(k) = kick {
                align_sector(&mut l, k);
                align_sector(&mut r, k);
            }
            SpinState::concat(&l, &r, *lattice)
        })
        .collect()
}
