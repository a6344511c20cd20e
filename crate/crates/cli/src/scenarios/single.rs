use anyhow::{ensure, Result};
use rayon::prelude::*;

use prethermal_core::analysis::delta_m;
use prethermal_core::effective::evolve_under_d;
use prethermal_core::record::run_in_place;
use prethermal_core::stats::MeanErr;
use prethermal_core::thermal::ground_energy_estimate;
use prethermal_core::{Recorder, SpinState, TrajectoryRecord};

use crate::config::ExperimentConfig;
use crate::output::Cell;
use crate::pipeline::{initial_ensemble, Setup};
use crate::scenario::{Context, Scenario};

pub struct SingleVsEffective;

struct Triple {
    floquet: TrajectoryRecord,
    effective: TrajectoryRecord,
    hybrid: TrajectoryRecord,
}

fn recorder(cfg: &ExperimentConfig) -> Recorder {
    Recorder {
        stride: cfg.run.stride,
        snapshot_stride: Some(cfg.run.snapshot_stride.unwrap_or(cfg.run.stride)),
        snapshot_until: cfg.run.snapshot_until,
    }
}

/// Appends `tail` to `head`, dropping samples of `tail` at or before the last cycle of `head`.
fn splice(head: &mut TrajectoryRecord, tail: TrajectoryRecord) {
    let last = head.cycles.last().copied();
    let keep = |c: u64| last.is_none_or(|l| c > l);
    for k in 0..tail.len() {
        if keep(tail.cycles[k]) {
            head.cycles.push(tail.cycles[k]);
            head.times.push(tail.times[k]);
            head.magnetization.push(tail.magnetization[k]);
            head.energy_density.push(tail.energy_density[k]);
        }
    }
    let last_snap = head.snapshots.last().map(|s| s.cycle);
    head.snapshots.extend(
        tail.snapshots
            .into_iter()
            .filter(|s| last_snap.is_none_or(|l| s.cycle > l)),
    );
}

fn run_triple(
    cfg: &ExperimentConfig,
    setup: &Setup,
    omega: f64,
    state: &SpinState,
) -> Result<Triple> {
    let protocol = setup.protocol(cfg, omega)?;
    let period = protocol.period();
    let rec = recorder(cfg);
    let n = cfg.run.n_cycles;
    let reference = Some(&setup.reference);
    let mut ev = protocol.compile(&setup.lattice)?;
    let mut spins = state.spins().to_vec();
    let floquet = run_in_place(&mut spins, &mut ev, 0, n, &rec, reference)?;
    let effective = evolve_under_d(
        state,
        &setup.d,
        n as f64 * period,
        cfg.run.rk4_dt,
        period,
        &rec,
        reference,
    )?
    .record;
    let k = cfg.run.hybrid_cycles;
    let hybrid = if k == 0 {
        floquet.clone()
    } else {
        let lead = evolve_under_d(
            state,
            &setup.d,
            k as f64 * period,
            cfg.run.rk4_dt,
            period,
            &rec,
            reference,
        )?;
        let mut head = lead.record;
        let mut spins = lead.final_state.into_spins();
        let mut ev = protocol.compile(&setup.lattice)?;
        let tail = run_in_place(&mut spins, &mut ev, k, n - k, &rec, reference)?;
        splice(&mut head, tail);
        head
    };
    Ok(Triple {
        floquet,
        effective,
        hybrid,
    })
}

impl Scenario for SingleVsEffective {
    fn name(&self) -> &'static str {
        "single-vs-effective"
    }

    fn description(&self) -> &'static str {
        "Single trajectories under the drive, under the effective Hamiltonian and a hybrid of both: δM(t) and energy traces"
    }

    fn check(&self, cfg: &ExperimentConfig) -> Result<()> {
        ensure!(
            cfg.run.hybrid_cycles < cfg.run.n_cycles,
            "run.hybrid_cycles must be below run.n_cycles"
        );
        Ok(())
    }

    fn run(&self, ctx: &mut Context<'_>) -> Result<()> {
        let cfg = ctx.config;
        let setup = Setup::new(cfg)?;
        let omega = cfg.drive.omegas()[0];
        let initial = initial_ensemble(cfg, &setup)?;
        if let Some(b) = initial.beta {
            ctx.summary.set("initial_beta", b);
        }
        ctx.note(format!(
            "{} trajectory triples at omega = {omega}",
            initial.states.len()
        ));
        let triples: Vec<Triple> = ctx.pool.install(|| {
            initial
                .states
                .par_iter()
                .map(|s| run_triple(cfg, &setup, omega, s))
                .collect::<Result<_>>()
        })?;
        let direct: Vec<Vec<(u64, f64)>> = triples
            .iter()
            .map(|t| delta_m(&t.floquet, &t.effective))
            .collect::<prethermal_core::Result<_>>()?;
        let hybrid: Vec<Vec<(u64, f64)>> = triples
            .iter()
            .map(|t| delta_m(&t.floquet, &t.hybrid))
            .collect::<prethermal_core::Result<_>>()?;
        let period = triples[0].floquet.period;
        let column = |series: &[Vec<(u64, f64)>], k: usize| {
            MeanErr::of(&series.iter().map(|s| s[k].1).collect::<Vec<_>>())
        };
        let energy_at = |pick: fn(&Triple) -> &TrajectoryRecord, cycle: u64| {
            let v: Vec<f64> = triples
                .iter()
                .filter_map(|t| {
                    let r = pick(t);
                    r.cycles
                        .iter()
                        .position(|c| *c == cycle)
                        .map(|k| r.energy_density[k])
                })
                .collect();
            MeanErr::of(&v).mean
        };
        let header = [
            "cycle",
            "time",
            "delta_m",
            "delta_m_err",
            "delta_m_hybrid",
            "delta_m_hybrid_err",
            "energy_floquet",
            "energy_effective",
            "energy_hybrid",
        ]
        .map(String::from);
        let mut w = ctx.out.csv("delta_m.csv", &header)?;
        let mut dm = Vec::new();
        let mut dm_hybrid = Vec::new();
        for k in 0..direct[0].len() {
            let cycle = direct[0][k].0;
            let d = column(&direct, k);
            let h = column(&hybrid, k);
            dm.push((cycle, d.mean));
            dm_hybrid.push(h.mean);
            w.row(&[
                Cell::Int(cycle),
                Cell::Float(cycle as f64 * period),
                Cell::Float(d.mean),
                Cell::Float(d.err),
                Cell::Float(h.mean),
                Cell::Float(h.err),
                Cell::Float(energy_at(|t| &t.floquet, cycle)),
                Cell::Float(energy_at(|t| &t.effective, cycle)),
                Cell::Float(energy_at(|t| &t.hybrid, cycle)),
            ])?;
        }
        w.finish()?;

        let n = cfg.run.n_cycles;
        let late: Vec<usize> = (0..dm.len()).filter(|&k| 4 * dm[k].0 >= 3 * n).collect();
        let plateau = late.iter().map(|&k| dm[k].1).sum::<f64>() / late.len().max(1) as f64;
        ctx.summary.set("delta_m_plateau", plateau);
        ctx.summary.set(
            "delta_m_hybrid_plateau",
            late.iter().map(|&k| dm_hybrid[k]).sum::<f64>() / late.len().max(1) as f64,
        );
        if let Some(k) = dm.iter().position(|(_, v)| *v >= 0.9 * plateau) {
            ctx.summary
                .set("plateau_reached_time", dm[k].0 as f64 * period);
        }
        let tracked: Vec<f64> = (0..dm.len())
            .filter(|&k| 4 * dm[k].0 >= n)
            .map(|k| (dm[k].1 - dm_hybrid[k]).abs())
            .collect();
        ctx.summary.set(
            "hybrid_gap_max",
            tracked.iter().copied().fold(0.0, f64::max),
        );

        let e_min = ground_energy_estimate(&setup.lattice, &setup.d, cfg.seed)?;
        let range = -e_min;
        let drift = triples
            .iter()
            .map(|t| {
                let e0 = t.floquet.energy_density[0];
                t.floquet
                    .energy_density
                    .iter()
                    .map(|e| (e - e0).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        let drift_d = triples
            .iter()
            .map(|t| {
                let e0 = t.effective.energy_density[0];
                t.effective
                    .energy_density
                    .iter()
                    .map(|e| (e - e0).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        ctx.summary.set("ground_energy_density", e_min);
        ctx.summary.set("infinite_temperature_range", range);
        ctx.summary.set("energy_drift_max", drift);
        ctx.summary.set("energy_drift_fraction", drift / range);
        ctx.summary.set("effective_energy_drift_max", drift_d);
        ctx.summary.set("omega", omega);
        Ok(())
    }
}
