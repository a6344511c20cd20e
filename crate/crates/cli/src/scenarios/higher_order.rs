use anyhow::{ensure, Result};

use prethermal_core::effective::verify_emergent_symmetry;

use super::cpdtc::folded_frequency;
use super::{horizon, sample_period, spectrum_summary, window_spectrum, write_spectrum};
use crate::config::ExperimentConfig;
use crate::output::Summary;
use crate::pipeline::{
    initial_ensemble, omega_tag, run_ensemble, write_ensemble, RunSpec, Setup, Stop,
    TrajectoryFiles,
};
use crate::scenario::{Context, Scenario};

pub struct HigherOrder;

impl Scenario for HigherOrder {
    fn name(&self) -> &'static str {
        "higher-order"
    }

    fn description(&self) -> &'static str {
        "Kicks by 2πk/M: spectral peak at the folded k/M subharmonic in the late-time window"
    }

    fn check(&self, cfg: &ExperimentConfig) -> Result<()> {
        ensure!(cfg.drive.kick.is_some(), "higher-order needs drive.kick");
        Ok(())
    }

    fn run(&self, ctx: &mut Context<'_>) -> Result<()> {
        let cfg = ctx.config;
        let setup = Setup::new(cfg)?;
        let kick = setup.kick.expect("checked");
        let target = folded_frequency(kick.k(), kick.m());
        ctx.summary.set("kick_k", kick.k() as i64);
        ctx.summary.set("kick_m", kick.m() as i64);
        ctx.summary.set("target_frequency", target);
        ctx.summary.set(
            "emergent_symmetry",
            verify_emergent_symmetry(&setup.d, &kick)?,
        );
        let initial = initial_ensemble(cfg, &setup)?;
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
                    stop: Stop::Never,
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
            let h = horizon(ens);
            let a = cfg.analysis.plateau_start.unwrap_or(0.5 * h);
            let b = cfg.analysis.plateau_end.unwrap_or(h);
            let mut row = Summary::new();
            row.set("omega", omega);
            row.set("plateau_start", a);
            row.set("plateau_end", b);
            let (sp, samples) = window_spectrum(cfg, ens, a, b, sample_period(cfg, &kick))?;
            write_spectrum(ctx.out, &format!("spectrum_{tag}.csv"), &sp)?;
            spectrum_summary(&mut row, &sp, samples, target);
            ctx.summary.push_row("frequency", row);
        }
        Ok(())
    }
}
