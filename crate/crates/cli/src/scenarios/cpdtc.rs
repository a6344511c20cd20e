use anyhow::{ensure, Result};

use prethermal_core::analysis::MeltTime;
use prethermal_core::stats::{linear_fit, mean};

use super::{
    critical_point, decay_rate, equilibration, fit_summary, horizon, melt, plateau_window,
    reached_summary, sample_period, sign_constant, smoothing_samples, spectrum_summary,
    window_spectrum, write_spectrum,
};
use crate::config::ExperimentConfig;
use crate::output::Summary;
use crate::pipeline::{
    initial_ensemble, omega_tag, run_ensemble, write_ensemble, RunSpec, Setup, Stop,
    TrajectoryFiles,
};
use crate::scenario::{Context, Scenario};

pub struct Cpdtc;

/// Subharmonic frequency `k/M` folded into `[0, 1/2]`, in units of ω.
pub fn folded_frequency(k: u32, m: u32) -> f64 {
    let f = (k % m) as f64 / m as f64;
    if f > 0.5 {
        1.0 - f
    } else {
        f
    }
}

pub(crate) fn resolve_epsilon_c(ctx: &mut Context<'_>, setup: &Setup) -> Result<Option<f64>> {
    let cfg = ctx.config;
    if let Some(e) = cfg.analysis.epsilon_c {
        ctx.summary.set("epsilon_c", e);
        ctx.summary.set("epsilon_c_source", "config");
        return Ok(Some(e));
    }
    if cfg.mc.temperatures.is_empty() {
        return Ok(None);
    }
    let est = critical_point(ctx, setup)?;
    let e = est.point().map(|p| p.epsilon_c);
    if e.is_some() {
        ctx.summary.set("epsilon_c_source", "monte-carlo");
    }
    Ok(e)
}

impl Scenario for Cpdtc {
    fn name(&self) -> &'static str {
        "cpdtc"
    }

    fn description(&self) -> &'static str {
        "Kicked drive: toggled-frame magnetization, subharmonic spectra, equilibration and melting times per frequency"
    }

    fn check(&self, cfg: &ExperimentConfig) -> Result<()> {
        ensure!(cfg.drive.kick.is_some(), "cpdtc needs drive.kick");
        Ok(())
    }

    fn run(&self, ctx: &mut Context<'_>) -> Result<()> {
        let cfg = ctx.config;
        let setup = Setup::new(cfg)?;
        let kick = setup.kick.expect("checked");
        let target = folded_frequency(kick.k(), kick.m());
        let epsilon_c = resolve_epsilon_c(ctx, &setup)?;
        ctx.note(format!("sampling {} initial states", cfg.ensemble.n_traj));
        let initial = initial_ensemble(cfg, &setup)?;
        if let Some(b) = initial.beta {
            ctx.summary.set("initial_beta", b);
        }
        let e0: Vec<f64> = initial
            .states
            .iter()
            .map(|s| setup.energy_density(s.spins()))
            .collect::<Result<_>>()?;
        ctx.summary.set("initial_energy_density", mean(&e0));
        let width = smoothing_samples(cfg);
        let mut lifetimes = Vec::new();
        let mut globals = Vec::new();
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
            let stop = match (epsilon_c, cfg.run.stop_after_melt, cfg.run.stop_energy) {
                (Some(e), true, _) => Stop::Energy {
                    above: e,
                    window: width,
                },
                (_, _, Some(e)) => Stop::Energy {
                    above: e,
                    window: width,
                },
                _ => Stop::Never,
            };
            let outcome = run_ensemble(
                cfg,
                &setup,
                ctx.pool,
                &initial.states,
                RunSpec {
                    protocol: &protocol,
                    n_cycles: cfg.run.n_cycles,
                    stop,
                    window: cfg.analysis.plateau_start.zip(cfg.analysis.plateau_end),
                    tone: Some(target),
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
            row.set("period", ens.period);
            row.set("cycles_run", outcome.cycles_run as i64);
            row.set("stopped_early", outcome.stopped_early);
            row.set("horizon", horizon(ens));
            row.set("initial_toggled_sz", ens.toggled_mean[0]);

            let mut tau_melt = None;
            if let Some(ec) = epsilon_c {
                let report = melt(cfg, ens, ec)?;
                match report.tau_melt {
                    MeltTime::Melted { time, .. } => {
                        row.set("tau_melt", time);
                        row.set("melted", true);
                        tau_melt = Some(time);
                    }
                    MeltTime::Survived { horizon } => {
                        row.set("tau_melt", horizon);
                        row.set("melted", false);
                    }
                }
                row.set_opt("half_life", report.half_life);
                if let Some(k) = ens.energy_mean.iter().position(|e| *e > ec) {
                    row.set("raw_crossing_time", ens.times[k]);
                }
                row.set(
                    "smoothing_time",
                    width as f64 * cfg.run.stride as f64 * ens.period,
                );
            }
            lifetimes.push((omega, tau_melt));

            let eq = equilibration(cfg, ens);
            if let Some(e) = &eq {
                reached_summary(&mut row, "tau_local", e.tau_local);
                reached_summary(&mut row, "tau_global", e.tau_global);
                globals.push(e.tau_global.time());
                if let Some(tg) = e.tau_global.time() {
                    let until = 10.0 * tg;
                    row.set("sign_check_until", until);
                    row.set(
                        "sign_constant",
                        until <= horizon(ens)
                            && sign_constant(&ens.times, &ens.toggled_mean, until),
                    );
                }
            }
            let s0 = ens.toggled_mean[0].signum();
            let flip = ens.toggled_mean.iter().position(|v| v.signum() != s0);
            row.set(
                "sign_flip_time",
                flip.map_or(horizon(ens), |k| ens.times[k]),
            );
            row.set("sign_flipped", flip.is_some());

            if let Some(fit) = decay_rate(
                &ens.times,
                &ens.toggled_mean,
                width,
                cfg.analysis.decay_floor,
            ) {
                row.set("decay_rate", fit.slope);
                row.set("decay_r_squared", fit.r_squared);
            }

            let (a, b) = plateau_window(cfg, ens, eq.as_ref(), tau_melt);
            row.set("plateau_start", a);
            row.set("plateau_end", b);
            match window_spectrum(cfg, ens, a, b, sample_period(cfg, &kick)) {
                Ok((sp, samples)) => {
                    write_spectrum(ctx.out, &format!("spectrum_{tag}.csv"), &sp)?;
                    spectrum_summary(&mut row, &sp, samples, target);
                }
                Err(e) => row.set("spectrum_error", e.to_string()),
            }
            if let Some(t) = outcome.window.as_ref().and_then(|w| w.tone_amplitude()) {
                row.set("coherent_amplitude", t.coherent);
                row.set("incoherent_floor", t.incoherent);
                row.set("coherence_ratio", t.coherent / t.incoherent);
            }
            ctx.summary.push_row("frequency", row);
        }

        let mut melted: Vec<(f64, f64)> = lifetimes
            .iter()
            .filter_map(|(w, t)| t.map(|t| (*w, t)))
            .collect();
        melted.sort_by(|a, b| a.0.total_cmp(&b.0));
        if melted.len() == lifetimes.len() && melted.len() >= 2 {
            let monotone = melted.windows(2).all(|p| p[1].1 > p[0].1);
            ctx.summary.set("tau_melt_monotone", monotone);
            let (w, ln_t): (Vec<f64>, Vec<f64>) = melted.iter().map(|(w, t)| (*w, t.ln())).unzip();
            if let Ok(fit) = linear_fit(&w, &ln_t) {
                fit_summary(&mut ctx.summary, "lifetime", &fit);
            }
        }
        let g: Vec<f64> = globals.iter().flatten().copied().collect();
        if g.len() == globals.len() && !g.is_empty() {
            let (lo, hi) = g.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), v| {
                (lo.min(*v), hi.max(*v))
            });
            ctx.summary.set("tau_global_ratio", hi / lo);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn folding() {
        assert_eq!(folded_frequency(1, 2), 0.5);
        assert!((folded_frequency(1, 3) - 1.0 / 3.0).abs() < 1e-15);
        assert!((folded_frequency(2, 5) - 0.4).abs() < 1e-15);
        assert!((folded_frequency(4, 5) - 0.2).abs() < 1e-15);
        assert_eq!(folded_frequency(1, 1), 0.0);
    }
}
