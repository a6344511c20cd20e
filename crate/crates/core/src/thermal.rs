//! Metropolis sampling of canonical ensembles, temperature sweeps and critical points.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::floquet::KickSpec;
use crate::hamiltonian::{CompiledHamiltonian, StaticHamiltonian};
use crate::lattice::LatticeSpec;
use crate::rng::{stream_rng, StreamPurpose};
use crate::state::SpinState;
use crate::stats::{interpolate, MeanErr};
use crate::vec3::{rotate_axis_sc, Axis, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Proposal {
    /// Fresh uniform direction on the sphere.
    #[default]
    Uniform,
    /// Uniform direction inside a cone of the given half-angle around the current spin.
    Cone { half_angle: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum McStart {
    #[default]
    Random,
    Polarized {
        direction: Vec3,
    },
}

/// Monte Carlo schedule. Counts are sweeps of `N` single-site updates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct McConfig {
    pub n_equil: u64,
    pub n_meas: u64,
    pub n_runs: usize,
    pub beta: f64,
    pub seed: u64,
    pub proposal: Proposal,
    pub start: McStart,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            n_equil: 10_000,
            n_meas: 30_000,
            n_runs: 8,
            beta: 1.0,
            seed: 0,
            proposal: Proposal::Uniform,
            start: McStart::Random,
        }
    }
}

impl McConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_equil < 1 || self.n_meas < 1 || self.n_runs < 1 {
            return Err(Error::InvalidArgument(
                "Monte Carlo counts must all be >= 1".into(),
            ));
        }
        if !(self.beta >= 0.0) || !self.beta.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "beta must be finite and >= 0, got {}",
                self.beta
            )));
        }
        if let Proposal::Cone { half_angle } = self.proposal {
            if !(half_angle > 0.0 && half_angle <= std::f64::consts::PI) {
                return Err(Error::InvalidArgument(format!(
                    "cone half-angle {half_angle} outside (0, pi]"
                )));
            }
        }
        Ok(())
    }

    pub fn with_beta(mut self, beta: f64) -> Self {
        self.beta = beta;
        self
    }
}

fn propose<R: Rng + ?Sized>(rng: &mut R, current: Vec3, proposal: Proposal) -> Vec3 {
    match proposal {
        Proposal::Uniform => Vec3::random_unit(rng),
        Proposal::Cone { half_angle } => {
            let cos_max = half_angle.cos();
            let z = 1.0 - rng.random::<f64>() * (1.0 - cos_max);
            let phi = rng.random::<f64>() * std::f64::consts::TAU;
            let r = (1.0 - z * z).max(0.0).sqrt();
            let local = Vec3::new(r * phi.cos(), r * phi.sin(), z);
            // orthonormal frame with current as the third axis
            let helper = if current.x.abs() < 0.9 {
                Vec3::X
            } else {
                Vec3::Y
            };
            let e1 = helper.cross(current).normalized();
            let e2 = current.cross(e1);
            (e1 * local.x + e2 * local.y + current * local.z).normalized()
        }
    }
}

/// One Metropolis chain with incrementally tracked energy and magnetization.
pub struct Chain<'a, R> {
    h: &'a CompiledHamiltonian,
    spins: Vec<Vec3>,
    energy: f64,
    sz_sum: f64,
    rng: R,
    proposal: Proposal,
    pub accepted: u64,
    pub attempted: u64,
}

impl<'a, R: Rng> Chain<'a, R> {
    pub fn new(
        h: &'a CompiledHamiltonian,
        spins: Vec<Vec3>,
        rng: R,
        proposal: Proposal,
    ) -> Result<Self> {
        let energy = h.energy_of(&spins)?;
        let sz_sum = spins.iter().map(|s| s.z).sum();
        Ok(Self {
            h,
            spins,
            energy,
            sz_sum,
            rng,
            proposal,
            accepted: 0,
            attempted: 0,
        })
    }

    pub fn spins(&self) -> &[Vec3] {
        &self.spins
    }

    pub fn into_spins(self) -> Vec<Vec3> {
        self.spins
    }

    /// Tracked energy; equal to a full recomputation up to accumulated roundoff.
    pub fn energy(&self) -> f64 {
        self.energy
    }

    pub fn sz_avg(&self) -> f64 {
        self.sz_sum / self.spins.len() as f64
    }

    /// Resets the tracked sums from the current spins.
    pub fn resync(&mut self) {
        self.energy = self
            .h
            .energy_of(&self.spins)
            .expect("length fixed at construction");
        self.sz_sum = self.spins.iter().map(|s| s.z).sum();
    }

    /// Single-site update at `i`. The energy is linear in each spin, so `ΔE = B_i·(S' − S)` exactly.
    pub fn update_site(&mut self, i: usize, beta: f64) -> bool {
        let old = self.spins[i];
        let new = propose(&mut self.rng, old, self.proposal);
        let de = self.h.field_at(&self.spins, i).dot(new - old);
        self.attempted += 1;
        let accept = de <= 0.0 || self.rng.random::<f64>() < (-beta * de).exp();
        if accept {
            self.spins[i] = new;
            self.energy += de;
            self.sz_sum += new.z - old.z;
            self.accepted += 1;
        }
        accept
    }

    /// `N` updates at uniformly chosen sites.
    pub fn sweep(&mut self, beta: f64) {
        let n = self.spins.len();
        for _ in 0..n {
            let i = self.rng.random_range(0..n);
            self.update_site(i, beta);
        }
    }

    pub fn sweeps(&mut self, beta: f64, count: u64) {
        for k in 0..count {
            self.sweep(beta);
            if k % 1000 == 999 {
                self.resync();
            }
        }
    }
}

/// One Metropolis sweep of `state` under `d` at inverse temperature `beta`.
pub fn metropolis_step<R: Rng>(
    state: &SpinState,
    d: &StaticHamiltonian,
    beta: f64,
    rng: &mut R,
) -> Result<SpinState> {
    if !(beta >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "beta must be >= 0, got {beta}"
        )));
    }
    let h = d.compile(state.lattice())?;
    let mut chain = Chain::new(&h, state.spins().to_vec(), rng, Proposal::Uniform)?;
    chain.sweep(beta);
    SpinState::new(*state.lattice(), chain.into_spins())
}

/// Averages of one chain over its measurement window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunStats {
    pub sz: f64,
    pub sz_abs: f64,
    pub sz2: f64,
    pub energy_density: f64,
    pub acceptance: f64,
}

/// Canonical-ensemble statistics; errors are standard errors across independent runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleStats {
    pub beta: f64,
    pub n_sites: usize,
    pub sz: MeanErr,
    pub sz_abs: MeanErr,
    pub sz2: MeanErr,
    pub energy_density: MeanErr,
    pub runs: Vec<RunStats>,
}

impl EnsembleStats {
    fn from_runs(beta: f64, n_sites: usize, runs: Vec<RunStats>) -> Self {
        let col = |f: fn(&RunStats) -> f64| MeanErr::of(&runs.iter().map(f).collect::<Vec<_>>());
        Self {
            beta,
            n_sites,
            sz: col(|r| r.sz),
            sz_abs: col(|r| r.sz_abs),
            sz2: col(|r| r.sz2),
            energy_density: col(|r| r.energy_density),
            runs,
        }
    }
}

fn initial_spins<R: Rng>(lattice: &LatticeSpec, start: McStart, rng: &mut R) -> Vec<Vec3> {
    match start {
        McStart::Random => SpinState::random(*lattice, rng).into_spins(),
        McStart::Polarized { direction } => vec![direction.normalized(); lattice.n_sites()],
    }
}

fn run_chain(
    h: &CompiledHamiltonian,
    lattice: &LatticeSpec,
    mc: &McConfig,
    beta: f64,
    stream: u64,
) -> Result<RunStats> {
    let mut rng = stream_rng(mc.seed, StreamPurpose::MonteCarlo, stream);
    let spins = initial_spins(lattice, mc.start, &mut rng);
    let mut chain = Chain::new(h, spins, rng, mc.proposal)?;
    chain.sweeps(beta, mc.n_equil);
    chain.resync();
    let (a0, t0) = (chain.accepted, chain.attempted);
    let n = lattice.n_sites() as f64;
    let (mut sz, mut sz_abs, mut sz2, mut e) = (0.0, 0.0, 0.0, 0.0);
    for k in 0..mc.n_meas {
        chain.sweep(beta);
        if k % 1000 == 999 {
            chain.resync();
        }
        let m = chain.sz_avg();
        sz += m;
        sz_abs += m.abs();
        sz2 += m * m;
        e += chain.energy() / n;
    }
    let count = mc.n_meas as f64;
    Ok(RunStats {
        sz: sz / count,
        sz_abs: sz_abs / count,
        sz2: sz2 / count,
        energy_density: e / count,
        acceptance: (chain.accepted - a0) as f64 / (chain.attempted - t0).max(1) as f64,
    })
}

/// `mc.n_runs` independent chains at `mc.beta`, run in parallel.
pub fn sample_ensemble(
    lattice: &LatticeSpec,
    d: &StaticHamiltonian,
    mc: &McConfig,
) -> Result<EnsembleStats> {
    mc.validate()?;
    let h = d.compile(lattice)?;
    let runs = (0..mc.n_runs)
        .into_par_iter()
        .map(|r| run_chain(&h, lattice, mc, mc.beta, r as u64))
        .collect::<Result<Vec<_>>>()?;
    Ok(EnsembleStats::from_runs(mc.beta, lattice.n_sites(), runs))
}

/// Measured curves for one system size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCurve {
    pub lattice: LatticeSpec,
    pub temperatures: Vec<f64>,
    pub points: Vec<EnsembleStats>,
}

impl SweepCurve {
    pub fn n_sites(&self) -> usize {
        self.lattice.n_sites()
    }

    pub fn sz2(&self) -> Vec<MeanErr> {
        self.points.iter().map(|p| p.sz2).collect()
    }

    pub fn energy_density(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.energy_density.mean).collect()
    }
}

/// Canonical ensembles of `d` on every lattice at every temperature (ascending, > 0).
pub fn temperature_sweep(
    lattices: &[LatticeSpec],
    d: &StaticHamiltonian,
    temperatures: &[f64],
    mc: &McConfig,
) -> Result<Vec<SweepCurve>> {
    mc.validate()?;
    if lattices.is_empty() || temperatures.is_empty() {
        return Err(Error::EmptyInput(
            "temperature sweep needs lattices and temperatures",
        ));
    }
    if temperatures.iter().any(|t| !(*t > 0.0)) || temperatures.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument(
            "temperatures must be positive and strictly increasing".into(),
        ));
    }
    let compiled = lattices
        .iter()
        .map(|l| d.compile(l))
        .collect::<Result<Vec<_>>>()?;
    let nt = temperatures.len();
    let nr = mc.n_runs;
    let jobs: Vec<(usize, usize, usize)> = (0..lattices.len())
        .flat_map(|s| (0..nt).flat_map(move |t| (0..nr).map(move |r| (s, t, r))))
        .collect();
    let results = jobs
        .par_iter()
        .map(|&(s, t, r)| {
            let stream = ((s * nt + t) * nr + r) as u64;
            run_chain(
                &compiled[s],
                &lattices[s],
                mc,
                1.0 / temperatures[t],
                stream,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let mut it = results.into_iter();
    Ok(lattices
        .iter()
        .map(|l| SweepCurve {
            lattice: *l,
            temperatures: temperatures.to_vec(),
            points: temperatures
                .iter()
                .map(|t| {
                    EnsembleStats::from_runs(1.0 / t, l.n_sites(), it.by_ref().take(nr).collect())
                })
                .collect(),
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Crossing {
    pub n_small: usize,
    pub n_large: usize,
    pub temperature: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalPoint {
    pub t_c: f64,
    pub t_c_err: f64,
    pub epsilon_c: f64,
    pub epsilon_c_err: f64,
    pub sizes: Vec<usize>,
    pub crossings: Vec<Crossing>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum CriticalEstimate {
    Found(CriticalPoint),
    NoTransition { reason: String },
}

impl CriticalEstimate {
    pub fn point(&self) -> Option<&CriticalPoint> {
        match self {
            CriticalEstimate::Found(p) => Some(p),
            CriticalEstimate::NoTransition { .. } => None,
        }
    }
}

/// Number of standard errors a difference must exceed to count as significant.
const CROSSING_SIGMAS: f64 = 2.0;

/// Temperature where the larger system's order parameter drops below the smaller one's.
///
/// The larger system must be significantly above on the cold side and significantly
/// below on the hot side; the sign change in between is located by linear interpolation.
fn pair_crossing(t: &[f64], small: &[MeanErr], large: &[MeanErr]) -> Option<f64> {
    let diff: Vec<f64> = small
        .iter()
        .zip(large)
        .map(|(a, b)| b.mean - a.mean)
        .collect();
    let sig: Vec<f64> = small
        .iter()
        .zip(large)
        .map(|(a, b)| CROSSING_SIGMAS * (a.err * a.err + b.err * b.err).sqrt())
        .collect();
    let hot = (0..t.len()).rev().find(|&k| diff[k] < -sig[k])?;
    let cold = (0..hot).rev().find(|&k| diff[k] > sig[k])?;
    // last sign change between the two anchors
    let k = (cold..hot)
        .rev()
        .find(|&k| diff[k] >= 0.0 && diff[k + 1] < 0.0)?;
    let f = diff[k] / (diff[k] - diff[k + 1]);
    Some(t[k] + f * (t[k + 1] - t[k]))
}

/// Critical point from pairwise crossings of `(S^z_avg)²(T)` across system sizes.
pub fn estimate_critical(curves: &[SweepCurve]) -> Result<CriticalEstimate> {
    if curves.len() < 2 {
        return Err(Error::InvalidArgument(
            "critical-point estimate needs at least two sizes".into(),
        ));
    }
    let t = &curves[0].temperatures;
    if curves.iter().any(|c| &c.temperatures != t) {
        return Err(Error::MismatchedSchedule(
            "curves use different temperature grids".into(),
        ));
    }
    let mut sorted: Vec<&SweepCurve> = curves.iter().collect();
    sorted.sort_by_key(|c| c.n_sites());
    let mut crossings = Vec::new();
    for a in 0..sorted.len() {
        for b in a + 1..sorted.len() {
            if sorted[a].n_sites() == sorted[b].n_sites() {
                continue;
            }
            if let Some(tc) = pair_crossing(t, &sorted[a].sz2(), &sorted[b].sz2()) {
                crossings.push(Crossing {
                    n_small: sorted[a].n_sites(),
                    n_large: sorted[b].n_sites(),
                    temperature: tc,
                });
            }
        }
    }
    if crossings.is_empty() {
        return Ok(CriticalEstimate::NoTransition {
            reason: format!(
                "no significant crossing of the order parameter between sizes {:?} over T in [{}, {}]",
                sorted.iter().map(|c| c.n_sites()).collect::<Vec<_>>(),
                t[0],
                t[t.len() - 1]
            ),
        });
    }
    let ts: Vec<f64> = crossings.iter().map(|c| c.temperature).collect();
    let t_c = crate::stats::mean(&ts);
    let t_c_err = ts.iter().map(|x| (x - t_c).abs()).fold(0.0, f64::max);
    let largest = sorted[sorted.len() - 1];
    let eps = largest.energy_density();
    let eps_at = |x: f64| interpolate(t, &eps, x.clamp(t[0], t[t.len() - 1])).unwrap_or(f64::NAN);
    let epsilon_c = eps_at(t_c);
    let epsilon_c_err = ts
        .iter()
        .map(|&x| (eps_at(x) - epsilon_c).abs())
        .fold(0.0, f64::max);
    Ok(CriticalEstimate::Found(CriticalPoint {
        t_c,
        t_c_err,
        epsilon_c,
        epsilon_c_err,
        sizes: sorted.iter().map(|c| c.n_sites()).collect(),
        crossings,
    }))
}

/// Lowest energy density found by greedy quenches (each spin aligned against its field).
pub fn ground_energy_estimate(
    lattice: &LatticeSpec,
    d: &StaticHamiltonian,
    seed: u64,
) -> Result<f64> {
    let h = d.compile(lattice)?;
    let n = lattice.n_sites();
    let mut starts: Vec<Vec<Vec3>> = [Vec3::X, Vec3::Y, Vec3::Z, -Vec3::X, -Vec3::Y, -Vec3::Z]
        .iter()
        .map(|v| vec![(*v + Vec3::new(0.01, 0.02, 0.03)).normalized(); n])
        .collect();
    for k in 0..4 {
        let mut rng = stream_rng(seed, StreamPurpose::Misc, k);
        starts.push(SpinState::random(*lattice, &mut rng).into_spins());
    }
    let mut best = f64::INFINITY;
    for mut spins in starts {
        let mut e = h.energy_of(&spins)?;
        for _ in 0..10_000 {
            for i in 0..n {
                let b = h.field_at(&spins, i);
                if b.norm() > 0.0 {
                    spins[i] = -b.normalized();
                }
            }
            let e_new = h.energy_of(&spins)?;
            let done = e - e_new < 1e-12 * n as f64;
            e = e_new;
            if done {
                break;
            }
        }
        best = best.min(e / n as f64);
    }
    Ok(best)
}

/// Applies the power of the kick that maximises `S^z_avg`, mapping a state into the
/// `+z` symmetry sector of a kick-invariant Hamiltonian.
pub fn align_sector(state: &mut SpinState, kick: &KickSpec) {
    let m = kick.m() as i64;
    let best = (0..m)
        .map(|p| {
            let mut s = state.clone();
            s.rotate_all(kick.axis(), kick.power_angle(p));
            (p, s.sz_avg())
        })
        .fold(
            (0, f64::NEG_INFINITY),
            |acc, x| if x.1 > acc.1 { x } else { acc },
        );
    if best.0 != 0 {
        state.rotate_all(kick.axis(), kick.power_angle(best.0));
    }
}

/// Controls for [`sample_at_energy`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnergyTarget {
    /// Allowed `|mean ε − target|` as a fraction of `ε(β=0) − ε_min`.
    pub tolerance: f64,
    /// Sweeps between snapshots taken from one chain.
    pub spacing: u64,
    /// Upper limit on bisection steps.
    pub max_iter: usize,
}

impl Default for EnergyTarget {
    fn default() -> Self {
        Self {
            tolerance: 0.005,
            spacing: 10,
            max_iter: 40,
        }
    }
}

/// Snapshots drawn at the inverse temperature whose mean energy hits the target.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergySamples {
    pub beta: f64,
    /// Energy density averaged over every sweep after equilibration.
    pub mean_energy_density: f64,
    /// Energy density averaged over the returned snapshots only.
    pub snapshot_energy_density: f64,
    pub states: Vec<SpinState>,
}

fn draw_snapshots(
    h: &CompiledHamiltonian,
    lattice: &LatticeSpec,
    mc: &McConfig,
    beta: f64,
    n_states: usize,
    spacing: u64,
    stream_base: u64,
) -> Result<EnergySamples> {
    let n_chains = mc.n_runs.min(n_states).max(1);
    let per_chain: Vec<usize> = (0..n_chains)
        .map(|c| n_states / n_chains + usize::from(c < n_states % n_chains))
        .collect();
    let n = lattice.n_sites() as f64;
    let chunks = (0..n_chains)
        .into_par_iter()
        .map(|c| -> Result<(f64, u64, Vec<SpinState>)> {
            let mut rng = stream_rng(mc.seed, StreamPurpose::Snapshot, stream_base + c as u64);
            let spins = initial_spins(lattice, mc.start, &mut rng);
            let mut chain = Chain::new(h, spins, rng, mc.proposal)?;
            chain.sweeps(beta, mc.n_equil);
            chain.resync();
            let mut out = Vec::with_capacity(per_chain[c]);
            let (mut e_sum, mut count) = (0.0, 0u64);
            for _ in 0..per_chain[c] {
                for _ in 0..spacing {
                    chain.sweep(beta);
                    e_sum += chain.energy() / n;
                    count += 1;
                }
                chain.resync();
                let mut s = SpinState::from_raw(*lattice, chain.spins().to_vec());
                s.renormalize();
                out.push(s);
            }
            Ok((e_sum, count, out))
        })
        .collect::<Result<Vec<_>>>()?;
    let e_sum: f64 = chunks.iter().map(|c| c.0).sum();
    let count: u64 = chunks.iter().map(|c| c.1).sum();
    let states: Vec<SpinState> = chunks.into_iter().flat_map(|c| c.2).collect();
    let snap = states
        .iter()
        .map(|s| h.energy_of(s.spins()).map(|e| e / n))
        .sum::<Result<f64>>()?
        / states.len() as f64;
    Ok(EnergySamples {
        beta,
        mean_energy_density: e_sum / count as f64,
        snapshot_energy_density: snap,
        states,
    })
}

/// Draws `n_states` canonical snapshots at the `β ≥ 0` whose mean energy density is within
/// tolerance of `target_eps`, found by bisection. Each evaluation equilibrates `mc.n_runs`
/// chains for `mc.n_equil` sweeps and splits the snapshots over them.
pub fn sample_at_energy(
    lattice: &LatticeSpec,
    d: &StaticHamiltonian,
    target_eps: f64,
    n_states: usize,
    mc: &McConfig,
    target: &EnergyTarget,
) -> Result<EnergySamples> {
    mc.validate()?;
    if n_states == 0 {
        return Err(Error::InvalidArgument("n_states must be >= 1".into()));
    }
    if target.spacing < 10 {
        return Err(Error::InvalidArgument(
            "snapshot spacing must be >= 10 sweeps".into(),
        ));
    }
    let h = d.compile(lattice)?;
    // ε(β=0) vanishes: every term is a product of components of distinct spins.
    let e_max = 0.0;
    let e_min = ground_energy_estimate(lattice, d, mc.seed)?;
    let range = e_max - e_min;
    let tol = target.tolerance * range;
    let unreachable = Error::Unreachable {
        target: target_eps,
        min: e_min,
        max: e_max,
    };
    if target_eps > e_max + tol || target_eps < e_min {
        return Err(unreachable);
    }
    let mut iteration = 0u64;
    let mut eval = |beta: f64| {
        iteration += 1;
        draw_snapshots(
            &h,
            lattice,
            mc,
            beta,
            n_states,
            target.spacing,
            iteration << 16,
        )
    };
    if target_eps >= e_max - tol {
        return eval(0.0);
    }
    let done = |e: f64| (e - target_eps).abs() <= tol;
    let (mut lo, mut hi) = (0.0, 1.0 / range.max(1e-12));
    let mut doublings = 0;
    loop {
        let s = eval(hi)?;
        if done(s.mean_energy_density) {
            return Ok(s);
        }
        if s.mean_energy_density < target_eps {
            break;
        }
        lo = hi;
        hi *= 2.0;
        doublings += 1;
        if doublings > 30 {
            return Err(unreachable);
        }
    }
    for _ in 0..target.max_iter {
        let mid = 0.5 * (lo + hi);
        let s = eval(mid)?;
        if done(s.mean_energy_density) {
            return Ok(s);
        }
        if s.mean_energy_density > target_eps {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(unreachable)
}

/// Rotation helper used when preparing ensembles in a fixed frame.
pub fn rotate_spins(spins: &mut [Vec3], axis: Axis, angle: f64) {
    let (s, c) = angle.sin_cos();
    for v in spins {
        *v = rotate_axis_sc(*v, axis, s, c);
    }
}
