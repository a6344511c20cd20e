//! Stroboscopic observable records and the trajectory driver.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::floquet::{DriveProtocol, FloquetEvolver};
use crate::hamiltonian::CompiledHamiltonian;
use crate::state::SpinState;
use crate::vec3::Vec3;

/// Upper bound on the memory a single record may request.
pub const MAX_RECORD_BYTES: u64 = 2 << 30;

/// Which observables to record, and how often (in Floquet cycles).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Recorder {
    /// Global observables are sampled every `stride` cycles, starting at cycle 0.
    pub stride: u64,
    /// Full state snapshots every `snapshot_stride` cycles (must be a multiple of `stride`).
    pub snapshot_stride: Option<u64>,
    /// No snapshots are taken after this cycle.
    pub snapshot_until: Option<u64>,
}

impl Default for Recorder {
    fn default() -> Self {
        Self::every(1)
    }
}

impl Recorder {
    pub fn every(stride: u64) -> Self {
        Self {
            stride,
            snapshot_stride: None,
            snapshot_until: None,
        }
    }

    pub fn with_snapshots(mut self, stride: u64) -> Self {
        self.snapshot_stride = Some(stride);
        self
    }

    pub fn snapshots_until(mut self, cycle: u64) -> Self {
        self.snapshot_until = Some(cycle);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.stride == 0 {
            return Err(Error::InvalidArgument(
                "recording stride must be >= 1".into(),
            ));
        }
        if let Some(s) = self.snapshot_stride {
            if s == 0 || s % self.stride != 0 {
                return Err(Error::InvalidArgument(format!(
                    "snapshot stride {s} must be a positive multiple of the stride {}",
                    self.stride
                )));
            }
        }
        Ok(())
    }

    fn wants_snapshot(&self, cycle: u64) -> bool {
        match self.snapshot_stride {
            Some(s) => cycle % s == 0 && self.snapshot_until.is_none_or(|u| cycle <= u),
            None => false,
        }
    }

    pub fn n_samples(&self, n_cycles: u64) -> u64 {
        n_cycles / self.stride + 1
    }

    fn n_snapshots(&self, n_cycles: u64) -> u64 {
        match self.snapshot_stride {
            Some(s) => self.snapshot_until.unwrap_or(n_cycles).min(n_cycles) / s + 1,
            None => 0,
        }
    }

    /// Bytes a run of `n_cycles` on `n_sites` spins will allocate for its record.
    pub fn estimated_bytes(&self, n_cycles: u64, n_sites: usize) -> u64 {
        let per_sample = 8 * 2 + 24 + 8;
        self.n_samples(n_cycles) * per_sample
            + self.n_snapshots(n_cycles) * (24 * n_sites as u64 + 8)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub cycle: u64,
    pub spins: Vec<Vec3>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RecordMeta {
    pub seed: Option<u64>,
    pub protocol: Option<String>,
}

/// Time series of observables sampled at stroboscopic times `t = mT`.
///
/// `cycles`, `times`, `magnetization` and `energy_density` always have equal length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub period: f64,
    pub cycles: Vec<u64>,
    pub times: Vec<f64>,
    /// Site-averaged spin vector.
    pub magnetization: Vec<Vec3>,
    /// Energy density under the reference Hamiltonian, `NaN` if none was supplied.
    pub energy_density: Vec<f64>,
    pub snapshots: Vec<Snapshot>,
    pub meta: RecordMeta,
}

impl TrajectoryRecord {
    pub fn new(period: f64) -> Self {
        Self {
            period,
            cycles: Vec::new(),
            times: Vec::new(),
            magnetization: Vec::new(),
            energy_density: Vec::new(),
            snapshots: Vec::new(),
            meta: RecordMeta::default(),
        }
    }

    pub fn len(&self) -> usize {
        self.cycles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cycles.is_empty()
    }

    pub fn sz_avg(&self) -> Vec<f64> {
        self.magnetization.iter().map(|m| m.z).collect()
    }

    /// Appends one sample.
    pub fn push(
        &mut self,
        cycle: u64,
        spins: &[Vec3],
        reference: Option<&CompiledHamiltonian>,
        snapshot: bool,
    ) {
        let n = spins.len() as f64;
        self.cycles.push(cycle);
        self.times.push(cycle as f64 * self.period);
        self.magnetization
            .push(spins.iter().copied().sum::<Vec3>() * (1.0 / n));
        let e = reference
            .and_then(|h| h.energy_of(spins).ok())
            .map_or(f64::NAN, |e| e / n);
        self.energy_density.push(e);
        if snapshot {
            self.snapshots.push(Snapshot {
                cycle,
                spins: spins.to_vec(),
            });
        }
    }

    pub fn snapshot_at(&self, cycle: u64) -> Option<&Snapshot> {
        self.snapshots
            .binary_search_by_key(&cycle, |s| s.cycle)
            .ok()
            .map(|i| &self.snapshots[i])
    }

    pub fn final_cycle(&self) -> u64 {
        self.cycles.last().copied().unwrap_or(0)
    }

    pub fn check_invariants(&self) -> Result<()> {
        let n = self.cycles.len();
        if self.times.len() != n || self.magnetization.len() != n || self.energy_density.len() != n
        {
            return Err(Error::MismatchedSchedule("series lengths differ".into()));
        }
        if self.times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::MismatchedSchedule(
                "times not strictly increasing".into(),
            ));
        }
        Ok(())
    }
}

/// Runs `n_cycles` Floquet periods from `state`, sampling according to `recorder`.
///
/// Energies are measured under `reference` when given. Returns the record and the final state.
pub fn run_trajectory(
    state: &SpinState,
    protocol: &DriveProtocol,
    n_cycles: u64,
    recorder: &Recorder,
    reference: Option<&CompiledHamiltonian>,
) -> Result<(TrajectoryRecord, SpinState)> {
    let mut ev = protocol.compile(state.lattice())?;
    let mut spins = state.spins().to_vec();
    let mut record = run_in_place(&mut spins, &mut ev, 0, n_cycles, recorder, reference)?;
    record.meta.protocol = Some(protocol.fingerprint());
    Ok((record, SpinState::from_raw(*state.lattice(), spins)))
}

/// Same as [`run_trajectory`] with a precompiled evolver; the input state is left untouched.
pub fn run_with_evolver(
    state: &SpinState,
    ev: &mut FloquetEvolver,
    n_cycles: u64,
    recorder: &Recorder,
    reference: Option<&CompiledHamiltonian>,
) -> Result<TrajectoryRecord> {
    let mut spins = state.spins().to_vec();
    run_in_place(&mut spins, ev, 0, n_cycles, recorder, reference)
}

/// Advances `spins` from `start_cycle` by `n_cycles`, recording on the global cycle grid.
pub fn run_in_place(
    spins: &mut [Vec3],
    ev: &mut FloquetEvolver,
    start_cycle: u64,
    n_cycles: u64,
    recorder: &Recorder,
    reference: Option<&CompiledHamiltonian>,
) -> Result<TrajectoryRecord> {
    if n_cycles == 0 {
        return Err(Error::InvalidArgument("n_cycles must be >= 1".into()));
    }
    recorder.validate()?;
    let bytes = recorder.estimated_bytes(start_cycle + n_cycles, spins.len());
    if bytes > MAX_RECORD_BYTES {
        return Err(Error::SizeLimit(format!(
            "record would need {bytes} bytes (limit {MAX_RECORD_BYTES})"
        )));
    }
    let mut record = TrajectoryRecord::new(ev.period());
    let end = start_cycle + n_cycles;
    let mut cycle = start_cycle;
    loop {
        if cycle % recorder.stride == 0 {
            record.push(cycle, spins, reference, recorder.wants_snapshot(cycle));
        }
        if cycle == end {
            break;
        }
        ev.evolve_period(spins);
        cycle += 1;
    }
    Ok(record)
}
