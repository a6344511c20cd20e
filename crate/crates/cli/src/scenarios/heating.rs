use anyhow::Result;

use prethermal_core::analysis::EnsembleRecord;
use prethermal_core::stats::{boxcar, linear_fit};

use super::{fit_summary, smoothing_samples};
use crate::config::ExperimentConfig;
use crate::output::Summary;
use crate::pipeline::{
    initial_ensemble, omega_tag, run_ensemble, write_ensemble, RunSpec, Setup, Stop,
    TrajectoryFiles,
};
use crate::scenario::{Context, Scenario};

pub struct Heating;

/// Time for the energy to climb halfway from its reference value to the infinite-temperature
/// value zero, and the matching exponential approach rate `ln 2 / (t_half - t_ref)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfHeating {
    pub reference_time: f64,
    pub reference_energy: f64,
    pub half_time: Option<f64>,
    pub rate: Option<f64>,
}

pub fn half_heating(
    ens: &EnsembleRecord,
    reference_cycle: u64,
    width: usize,
) -> Option<HalfHeating> {
    let k0 = ens.cycles.iter().position(|c| *c >= reference_cycle)?;
    let smooth = boxcar(&ens.energy_mean, width);
    let e_ref = ens.energy_mean[k0];
    let t_ref = ens.times[k0];
    let half = 0.5 * e_ref;
    let half_time = (k0..smooth.len())
        .find(|&k| smooth[k] >= half)
        .map(|k| ens.times[k]);
    Some(HalfHeating {
        reference_time: t_ref,
        reference_energy: e_ref,
        half_time,
        rate: half_time.map(|t| std::f64::consts::LN_2 / (t - t_ref).max(ens.period)),
    })
}

fn reached_half(cfg: &ExperimentConfig, ens: &EnsembleRecord) -> bool {
    half_heating(
        ens,
        cfg.analysis.heating_reference_cycles,
        smoothing_samples(cfg),
    )
    .is_some_and(|h| h.half_time.is_some())
}

impl Scenario for Heating {
    fn name(&self) -> &'static str {
        "heating"
    }

    fn description(&self) -> &'static str {
        "Energy absorption under the drive: half-heating times and the log-rate versus frequency fit"
    }

    fn run(&self, ctx: &mut Context<'_>) -> Result<()> {
        let cfg = ctx.config;
        let setup = Setup::new(cfg)?;
        let initial = initial_ensemble(cfg, &setup)?;
        if let Some(b) = initial.beta {
            ctx.summary.set("initial_beta", b);
        }
        let stop_rule = |e: &EnsembleRecord| reached_half(cfg, e);
        let mut points = Vec::new();
        for omega in cfg.drive.omegas() {
            let tag = omega_tag(omega);
            ctx.note(format!("omega = {omega}"));
            let protocol = setup.protocol(cfg, omega)?;
            let mut files = if cfg.run.trajectory_csv {
                Some(TrajectoryFiles::open(
                    ctx.out,
                    &format!("traj/{tag}"),
                    cfg,
                    setup.lattice.n_sites(),
                )?)
            } else {
                None
            };
            let outcome = run_ensemble(
                cfg,
                &setup,
                ctx.pool,
                &initial.states,
                RunSpec {
                    protocol: &protocol,
                    n_cycles: cfg.run.n_cycles,
                    stop: Stop::Custom(&stop_rule),
                    window: None,
                    tone: None,
                },
                files.as_mut(),
            )?;
            if let Some(f) = files {
                f.finish()?;
            }
            let ens = &outcome.ensemble;
            write_ensemble(ctx.out, &format!("ensemble_{tag}"), ens)?;
            let mut row = Summary::new();
            row.set("omega", omega);
            row.set("cycles_run", outcome.cycles_run as i64);
            if let Some(h) = half_heating(
                ens,
                cfg.analysis.heating_reference_cycles,
                smoothing_samples(cfg),
            ) {
                row.set("reference_time", h.reference_time);
                row.set("reference_energy", h.reference_energy);
                row.set("heated_half", h.half_time.is_some());
                row.set_opt("half_time", h.half_time);
                row.set_opt("rate", h.rate);
                if let Some(r) = h.rate {
                    points.push((omega, r));
                }
            }
            ctx.summary.push_row("frequency", row);
        }
        ctx.summary.set("rates_found", points.len() as i64);
        if points.len() >= 2 {
            let (w, ln_r): (Vec<f64>, Vec<f64>) = points.iter().map(|(w, r)| (*w, r.ln())).unzip();
            let fit = linear_fit(&w, &ln_r)?;
            fit_summary(&mut ctx.summary, "log_rate", &fit);
        }
        Ok(())
    }
}
