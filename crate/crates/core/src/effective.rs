//! Leading-order prethermal Hamiltonian of a drive protocol and RK4 dynamics under it.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::error::{Error, Result};
use crate::floquet::{DriveProtocol, KickSpec};
use crate::hamiltonian::{CompiledHamiltonian, FieldScratch, StaticHamiltonian};
use crate::lattice::{Boundary, LatticeSpec};
use crate::record::{Recorder, TrajectoryRecord};
use crate::state::SpinState;
use crate::vec3::Vec3;

/// Coefficients smaller than this are dropped from projected Hamiltonians.
pub const PRUNE_TOLERANCE: f64 = 1e-14;

/// Duration-weighted time average of the segment Hamiltonians over one period.
pub fn time_average(protocol: &DriveProtocol) -> StaticHamiltonian {
    let mut h = StaticHamiltonian::zero();
    let t = protocol.period();
    for seg in protocol.segments() {
        h.add_term_set(&seg.term_set, seg.duration / t);
    }
    h
}

/// Averages `h` over the cyclic group generated by the kick: `(1/M) Σ_m X^{-m}[h]`.
pub fn project_onto_kick(h: &StaticHamiltonian, kick: &KickSpec) -> StaticHamiltonian {
    let m = kick.m() as i64;
    let mut out = StaticHamiltonian::zero();
    for power in 0..m {
        let rotated = h.rotated(kick.axis(), kick.power_angle(-power));
        out.add_scaled(&rotated, 1.0 / m as f64);
    }
    out.pruned(PRUNE_TOLERANCE)
}

/// Leading-order effective Hamiltonian: the time average, symmetrised under the kick if present.
pub fn build_effective(protocol: &DriveProtocol) -> StaticHamiltonian {
    let avg = time_average(protocol);
    match protocol.kick() {
        Some(k) => project_onto_kick(&avg, k),
        None => avg.pruned(PRUNE_TOLERANCE),
    }
}

/// Energy invariance of `d` under the kick rotation, checked on `n_states` random
/// states of `lattice` to absolute tolerance `1e-9`.
pub fn verify_symmetry_on(
    d: &StaticHamiltonian,
    kick: &KickSpec,
    lattice: &LatticeSpec,
    n_states: usize,
    seed: u64,
) -> Result<bool> {
    let h = d.compile(lattice)?;
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    for _ in 0..n_states {
        let s = SpinState::random(*lattice, &mut rng);
        let mut r = s.clone();
        r.rotate_all(kick.axis(), kick.angle());
        if (h.energy(&s)? - h.energy(&r)?).abs() > 1e-9 {
            return Ok(false);
        }
    }
    Ok(true)
}

/// [`verify_symmetry_on`] with a 16-site periodic chain and 100 random states.
pub fn verify_emergent_symmetry(d: &StaticHamiltonian, kick: &KickSpec) -> Result<bool> {
    let lattice = LatticeSpec::chain(16, Boundary::Periodic)?;
    verify_symmetry_on(d, kick, &lattice, 100, 0x5eed)
}

/// Fixed-step classical RK4 for `dS_i/dt = B_i(S) × S_i`, renormalising after each step.
pub struct Rk4 {
    h: CompiledHamiltonian,
    fields: Vec<Vec3>,
    k: [Vec<Vec3>; 4],
    tmp: Vec<Vec3>,
    scratch: FieldScratch,
}

impl Rk4 {
    pub fn new(h: CompiledHamiltonian) -> Self {
        let n = h.n_sites();
        Self {
            h,
            fields: vec![Vec3::ZERO; n],
            k: [
                vec![Vec3::ZERO; n],
                vec![Vec3::ZERO; n],
                vec![Vec3::ZERO; n],
                vec![Vec3::ZERO; n],
            ],
            tmp: vec![Vec3::ZERO; n],
            scratch: FieldScratch::default(),
        }
    }

    pub fn hamiltonian(&self) -> &CompiledHamiltonian {
        &self.h
    }

    fn derivative(&mut self, which: usize, spins_from_tmp: bool, spins: &[Vec3]) {
        let src: &[Vec3] = if spins_from_tmp { &self.tmp } else { spins };
        self.h
            .local_fields(src, &mut self.fields, &mut self.scratch);
        let out = &mut self.k[which];
        for ((o, b), s) in out.iter_mut().zip(&self.fields).zip(src) {
            *o = b.cross(*s);
        }
    }

    /// Advances by one step without renormalising.
    pub fn step_raw(&mut self, spins: &mut [Vec3], dt: f64) {
        self.derivative(0, false, spins);
        for ((t, s), k) in self.tmp.iter_mut().zip(spins.iter()).zip(&self.k[0]) {
            *t = *s + *k * (0.5 * dt);
        }
        self.derivative(1, true, spins);
        for ((t, s), k) in self.tmp.iter_mut().zip(spins.iter()).zip(&self.k[1]) {
            *t = *s + *k * (0.5 * dt);
        }
        self.derivative(2, true, spins);
        for ((t, s), k) in self.tmp.iter_mut().zip(spins.iter()).zip(&self.k[2]) {
            *t = *s + *k * dt;
        }
        self.derivative(3, true, spins);
        let w = dt / 6.0;
        for (i, s) in spins.iter_mut().enumerate() {
            *s += (self.k[0][i] + (self.k[1][i] + self.k[2][i]) * 2.0 + self.k[3][i]) * w;
        }
    }

    pub fn step(&mut self, spins: &mut [Vec3], dt: f64) {
        self.step_raw(spins, dt);
        for s in spins.iter_mut() {
            *s = s.normalized();
        }
    }

    pub fn advance(&mut self, spins: &mut [Vec3], dt: f64, steps: u64) {
        for _ in 0..steps {
            self.step(spins, dt);
        }
    }
}

/// One RK4 step of the dynamics generated by `d`.
pub fn rk4_step(state: &SpinState, d: &StaticHamiltonian, dt: f64) -> Result<SpinState> {
    if !(dt > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "dt must be positive, got {dt}"
        )));
    }
    let mut rk = Rk4::new(d.compile(state.lattice())?);
    let mut out = state.clone();
    rk.step(out.spins_mut(), dt);
    Ok(out)
}

/// Outcome of [`evolve_under_d`].
#[derive(Debug, Clone)]
pub struct EffectiveRun {
    pub record: TrajectoryRecord,
    pub final_state: SpinState,
    /// Step actually used: the requested step reduced so that it divides the period.
    pub dt: f64,
    pub steps_per_period: u64,
}

/// Steps per period and the adjusted step for a requested `dt`.
pub fn commensurate_step(period: f64, dt: f64) -> (u64, f64) {
    let steps = ((period / dt) - 1e-9).ceil().max(1.0) as u64;
    (steps, period / steps as f64)
}

/// Integrates `d` with RK4 for `total_time`, sampling on the stroboscopic grid `t = mT`.
pub fn evolve_under_d(
    state: &SpinState,
    d: &StaticHamiltonian,
    total_time: f64,
    dt: f64,
    period: f64,
    recorder: &Recorder,
    reference: Option<&CompiledHamiltonian>,
) -> Result<EffectiveRun> {
    if !(total_time > 0.0) || !(dt > 0.0) || dt > total_time || !(period > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "need 0 < dt <= total_time and period > 0 (dt={dt}, total_time={total_time}, period={period})"
        )));
    }
    recorder.validate()?;
    let (steps, dt_used) = commensurate_step(period, dt);
    let n_cycles = (total_time / period).round().max(1.0) as u64;
    let mut rk = Rk4::new(d.compile(state.lattice())?);
    let mut spins = state.spins().to_vec();
    let mut record = TrajectoryRecord::new(period);
    for cycle in 0..=n_cycles {
        if cycle % recorder.stride == 0 {
            let snap = recorder.snapshot_stride.is_some_and(|s| {
                cycle % s == 0 && recorder.snapshot_until.is_none_or(|u| cycle <= u)
            });
            record.push(cycle, &spins, reference, snap);
        }
        if cycle < n_cycles {
            rk.advance(&mut spins, dt_used, steps);
        }
    }
    Ok(EffectiveRun {
        record,
        final_state: SpinState::new(*state.lattice(), spins)?,
        dt: dt_used,
        steps_per_period: steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coupling::CouplingKernel;
    use crate::floquet::Segment;
    use crate::hamiltonian::{energy, TermSet};
    use crate::vec3::{rotate_axis, Axis};
    use std::f64::consts::PI;

    fn eq3_protocol(omega: f64, kick: Option<KickSpec>) -> DriveProtocol {
        let t = 2.0 * PI / omega;
        DriveProtocol::new(
            vec![
                Segment::new(
                    TermSet::new(Axis::Z)
                        .with_two_body(CouplingKernel::nearest_neighbor(-1.0))
                        .with_field(0.1),
                    t / 3.0,
                )
                .unwrap(),
                Segment::new(TermSet::new(Axis::Y).with_field(0.15), t / 3.0).unwrap(),
                Segment::new(
                    TermSet::new(Axis::X)
                        .with_two_body(CouplingKernel::nearest_neighbor(0.3))
                        .with_field(0.2),
                    t / 3.0,
                )
                .unwrap(),
            ],
            kick,
        )
        .unwrap()
    }

    #[test]
    fn no_kick_gives_one_third_of_each_window() {
        let d = build_effective(&eq3_protocol(6.0, None));
        assert!((d.field - Vec3::new(0.2, 0.15, 0.1) * (1.0 / 3.0)).norm() < 1e-15);
        assert_eq!(d.pairs.len(), 1);
        assert!((d.pairs[0].coeffs.0[2][2] + 1.0 / 3.0).abs() < 1e-15);
        assert!((d.pairs[0].coeffs.0[0][0] - 0.1).abs() < 1e-15);
        // M = 1 projection is the identity on the time average
        let k1 = KickSpec::new(Axis::X, 1, 1).unwrap();
        let avg = time_average(&eq3_protocol(6.0, None));
        assert!(project_onto_kick(&avg, &k1).max_coeff_diff(&avg) < 1e-15);
    }

    #[test]
    fn pi_kick_removes_odd_fields() {
        let d = build_effective(&eq3_protocol(6.0, Some(KickSpec::pi_x())));
        assert!((d.field - Vec3::new(0.2 / 3.0, 0.0, 0.0)).norm() < 1e-15);
        assert!((d.pairs[0].coeffs.0[2][2] + 1.0 / 3.0).abs() < 1e-15);
        assert!(verify_emergent_symmetry(&d, &KickSpec::pi_x()).unwrap());
        let no_kick = build_effective(&eq3_protocol(6.0, None));
        assert!(!verify_emergent_symmetry(&no_kick, &KickSpec::pi_x()).unwrap());
    }

    #[test]
    fn projection_is_idempotent() {
        let k = KickSpec::new(Axis::X, 1, 3).unwrap();
        let h = StaticHamiltonian::from_term_sets(&[TermSet::new(Axis::Z)
            .with_two_body(CouplingKernel::power_law(-0.383, 1.5))
            .with_three_body(0.53)
            .with_field(0.06)]);
        let d = project_onto_kick(&h, &k);
        assert!(project_onto_kick(&d, &k).max_coeff_diff(&d) < 1e-14);
        assert!(verify_emergent_symmetry(&d, &k).unwrap());
    }

    #[test]
    fn rk4_single_spin_precession() {
        let l = LatticeSpec::chain(2, Boundary::Open).unwrap();
        let h = 0.8;
        let d = StaticHamiltonian::from_term_sets(&[TermSet::new(Axis::Z).with_field(h)]);
        let s = SpinState::polarized(l, Vec3::X).unwrap();
        let dt = 1e-3;
        let out = rk4_step(&s, &d, dt).unwrap();
        let exact = rotate_axis(Vec3::X, Axis::Z, h * dt);
        // local error is O((h dt)^5)
        assert!(out.spins()[0].max_abs_diff(exact) < 1e-15);
        assert!(rk4_step(&s, &d, 0.0).is_err());
    }

    #[test]
    fn rk4_is_fourth_order() {
        let l = LatticeSpec::chain(6, Boundary::Periodic).unwrap();
        let d = build_effective(&eq3_protocol(6.0, None));
        let s0 = SpinState::random(l, &mut ChaCha12Rng::seed_from_u64(3));
        let run = |dt: f64| {
            let mut rk = Rk4::new(d.compile(&l).unwrap());
            let mut s = s0.spins().to_vec();
            rk.advance(&mut s, dt, (2.0 / dt).round() as u64);
            s
        };
        let reference = run(1e-3);
        let err = |dt| {
            run(dt)
                .iter()
                .zip(&reference)
                .map(|(a, b)| a.max_abs_diff(*b))
                .fold(0.0, f64::max)
        };
        let ratio = err(0.1) / err(0.05);
        assert!((12.0..20.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn evolve_under_d_zero_hamiltonian_and_step_adjustment() {
        let l = LatticeSpec::chain(4, Boundary::Periodic).unwrap();
        let s = SpinState::random(l, &mut ChaCha12Rng::seed_from_u64(1));
        let run = evolve_under_d(
            &s,
            &StaticHamiltonian::zero(),
            3.0,
            0.07,
            1.0,
            &Recorder::every(1),
            None,
        )
        .unwrap();
        assert!(run.final_state.max_abs_diff(&s) < 1e-15);
        assert_eq!(run.steps_per_period, 15);
        assert!((run.dt - 1.0 / 15.0).abs() < 1e-15);
        assert_eq!(run.record.len(), 4);
        assert!(evolve_under_d(
            &s,
            &StaticHamiltonian::zero(),
            1.0,
            2.0,
            1.0,
            &Recorder::every(1),
            None
        )
        .is_err());
    }

    #[test]
    fn evolve_under_d_conserves_energy() {
        let l = LatticeSpec::chain(12, Boundary::Periodic).unwrap();
        let d = build_effective(&eq3_protocol(6.0, Some(KickSpec::pi_x())));
        let s = SpinState::random(l, &mut ChaCha12Rng::seed_from_u64(2));
        let e0 = energy(&s, &d).unwrap();
        let run = evolve_under_d(&s, &d, 10.0, 1e-2, 1.0, &Recorder::every(1), None).unwrap();
        let e1 = energy(&run.final_state, &d).unwrap();
        assert!((e1 - e0).abs() < 1e-7, "{e0} {e1}");
    }
}
