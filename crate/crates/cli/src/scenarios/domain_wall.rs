use anyhow::Result;

use prethermal_core::analysis::{
    cdf_distance, histogram_local, local_samples, EnsembleRecord, LocalObservable,
};
use prethermal_core::stats::{interpolate, linear_fit, MeanErr};
use prethermal_core::thermal::{sample_at_energy, sample_ensemble, McConfig};
use prethermal_core::SpinState;

use super::{equilibration, reached_summary};
use crate::output::{Cell, Summary};
use crate::pipeline::{
    initial_ensemble, omega_tag, reference_mc, run_ensemble, write_ensemble, RunSpec, Setup, Stop,
    TrajectoryFiles,
};
use crate::scenario::{Context, Scenario};

pub struct DomainWall;

/// Relative spacing of the inverse temperatures used for the local `S^z(ε)` fit.
const BETA_STEP: f64 = 0.05;

/// Canonical reference at a target energy density.
pub struct McPoint {
    pub beta: f64,
    /// `S^z_avg` interpolated to the target energy.
    pub sz: f64,
    pub sz_err: f64,
    /// `dS^z/dε` from neighbouring temperatures.
    pub slope: f64,
    pub states: Vec<SpinState>,
}

pub fn mc_at_energy(
    ctx: &Context<'_>,
    setup: &Setup,
    epsilon: f64,
    n_states: usize,
) -> Result<McPoint> {
    let cfg = ctx.config;
    let mc = reference_mc(cfg, cfg.ensemble_start());
    let sampling = McConfig {
        n_equil: cfg.mc.sample_equil,
        ..mc
    };
    let found = ctx.pool.install(|| {
        sample_at_energy(
            &setup.lattice,
            &setup.d,
            epsilon,
            n_states,
            &sampling,
            &cfg.mc.target,
        )
    })?;
    let beta = found.beta;
    let factors: &[f64] = if beta > 0.0 {
        &[1.0 - BETA_STEP, 1.0, 1.0 + BETA_STEP]
    } else {
        &[1.0]
    };
    let points = factors
        .iter()
        .map(|f| {
            ctx.pool
                .install(|| sample_ensemble(&setup.lattice, &setup.d, &mc.with_beta(beta * f)))
        })
        .collect::<prethermal_core::Result<Vec<_>>>()?;
    let centre = &points[points.len() / 2];
    let (sz, slope) = if points.len() > 1 {
        let e: Vec<f64> = points.iter().map(|p| p.energy_density.mean).collect();
        let m: Vec<f64> = points.iter().map(|p| p.sz.mean).collect();
        let fit = linear_fit(&e, &m)?;
        (fit.intercept + fit.slope * epsilon, fit.slope)
    } else {
        (centre.sz.mean, 0.0)
    };
    let sz_err = centre.sz.err.hypot(slope * centre.energy_density.err);
    Ok(McPoint {
        beta,
        sz,
        sz_err,
        slope,
        states: found.states,
    })
}

/// Mean toggled `S^z` of the left and right halves over snapshots inside `[a, b]`,
/// falling back to the last snapshot.
fn halves(ens: &EnsembleRecord, a: f64, b: f64) -> Option<(f64, f64)> {
    let rows: Vec<&Vec<f64>> = ens
        .site_cycles
        .iter()
        .zip(&ens.site_sz)
        .filter(|(c, _)| {
            let t = **c as f64 * ens.period;
            t >= a && t <= b
        })
        .map(|(_, r)| r)
        .collect();
    let rows = if rows.is_empty() {
        ens.site_sz.last().into_iter().collect()
    } else {
        rows
    };
    let n = rows.first()?.len();
    let half = n / 2;
    let (mut l, mut r) = (0.0, 0.0);
    for row in &rows {
        l += row[..half].iter().sum::<f64>() / half as f64;
        r += row[half..].iter().sum::<f64>() / (n - half) as f64;
    }
    Some((l / rows.len() as f64, r / rows.len() as f64))
}

/// Largest and mean absolute difference of the toggled magnetization of `b` from `a`,
/// on `a`'s time grid where both exist.
fn series_difference(a: &EnsembleRecord, b: &EnsembleRecord) -> Option<(f64, f64)> {
    let d: Vec<f64> = a
        .times
        .iter()
        .zip(&a.toggled_mean)
        .filter_map(|(t, m)| interpolate(&b.times, &b.toggled_mean, *t).map(|v| (v - m).abs()))
        .collect();
    if d.is_empty() {
        return None;
    }
    Some((
        d.iter().copied().fold(0.0, f64::max),
        d.iter().sum::<f64>() / d.len() as f64,
    ))
}

impl Scenario for DomainWall {
    fn name(&self) -> &'static str {
        "domain-wall"
    }

    fn description(&self) -> &'static str {
        "Relaxation of an ensemble under the drive, compared with canonical Monte Carlo at the plateau energy"
    }

    fn run(&self, ctx: &mut Context<'_>) -> Result<()> {
        let cfg = ctx.config;
        let setup = Setup::new(cfg)?;
        ctx.note(format!("sampling {} initial states", cfg.ensemble.n_traj));
        let initial = initial_ensemble(cfg, &setup)?;
        if let Some(b) = initial.beta {
            ctx.summary.set("initial_beta", b);
        }
        let mut runs: Vec<(f64, EnsembleRecord)> = Vec::new();
        for omega in cfg.drive.omegas() {
            let tag = omega_tag(omega);
            ctx.note(format!("omega = {omega}"));
            let protocol = setup.protocol(cfg, omega)?;
            let h = cfg.run.n_cycles as f64 * protocol.period();
            let a = cfg.analysis.plateau_start.unwrap_or(0.5 * h);
            let b = cfg.analysis.plateau_end.unwrap_or(h);
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
                    stop: cfg.run.stop_energy.map_or(Stop::Never, |e| Stop::Energy {
                        above: e,
                        window: super::smoothing_samples(cfg),
                    }),
                    window: Some((a, b)),
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
            row.set("plateau_start", a);
            row.set("plateau_end", b);
            if let Some(eq) = equilibration(cfg, ens) {
                reached_summary(&mut row, "tau_local", eq.tau_local);
                reached_summary(&mut row, "tau_global", eq.tau_global);
            }
            if let Some((l, r)) = halves(ens, a, b) {
                row.set("left_sz", l);
                row.set("right_sz", r);
            }
            let Some(w) = outcome.window.as_ref() else {
                row.set("plateau_error", "no samples inside the plateau window");
                ctx.summary.push_row("frequency", row);
                runs.push((omega, outcome.ensemble));
                continue;
            };
            let sz = MeanErr::of(&w.sz);
            let energy = MeanErr::of(&w.energy);
            row.set("plateau_sz", sz.mean);
            row.set("plateau_sz_err", sz.err);
            row.set("plateau_energy", energy.mean);
            row.set("plateau_energy_err", energy.err);

            ctx.note(format!(
                "canonical reference at energy density {:.4}",
                energy.mean
            ));
            let mc = mc_at_energy(ctx, &setup, energy.mean, cfg.ensemble.n_traj)?;
            let sigma = sz.err.hypot(mc.sz_err);
            row.set("mc_beta", mc.beta);
            row.set("mc_sz", mc.sz);
            row.set("mc_sz_err", mc.sz_err);
            row.set("mc_slope", mc.slope);
            row.set("sz_difference", sz.mean - mc.sz);
            row.set("combined_sigma", sigma);
            row.set("z_score", (sz.mean - mc.sz).abs() / sigma);
            let residuals: Vec<f64> =
                w.sz.iter()
                    .zip(&w.energy)
                    .map(|(m, e)| m - (mc.sz + mc.slope * (e - energy.mean)))
                    .collect();
            let res = MeanErr::of(&residuals);
            row.set("residual_mean", res.mean);
            row.set("residual_err", res.err);

            // Final states in the toggled frame against canonical snapshots.
            let finals: Vec<SpinState> = outcome
                .final_states
                .iter()
                .map(|s| {
                    let mut s = s.clone();
                    if let Some(k) = &setup.kick {
                        s.rotate_all(
                            k.axis(),
                            k.power_angle(-((outcome.cycles_run % k.m() as u64) as i64)),
                        );
                    }
                    s
                })
                .collect();
            for (name, kind) in [
                ("site_sz", LocalObservable::SiteSz),
                ("bond_energy", LocalObservable::BondEnergy),
            ] {
                let x = local_samples(&finals, kind, Some(&setup.reference))?;
                let y = local_samples(&mc.states, kind, Some(&setup.reference))?;
                row.set(&format!("cdf_distance_{name}"), cdf_distance(&x, &y)?);
                let lo = x.iter().chain(&y).copied().fold(f64::INFINITY, f64::min);
                let hi = x
                    .iter()
                    .chain(&y)
                    .copied()
                    .fold(f64::NEG_INFINITY, f64::max);
                let range = Some((lo, hi.max(lo + 1e-12)));
                let hx = histogram_local(&x, cfg.analysis.histogram_bins, range)?;
                let hy = histogram_local(&y, cfg.analysis.histogram_bins, range)?;
                let mut csv = ctx.out.csv(
                    &format!("histogram_{name}_{tag}.csv"),
                    &[
                        "bin_lo".into(),
                        "bin_hi".into(),
                        "floquet".into(),
                        "canonical".into(),
                    ],
                )?;
                let width = (hx.hi - hx.lo) / hx.density.len() as f64;
                for (k, (p, q)) in hx.density.iter().zip(&hy.density).enumerate() {
                    let b0 = hx.lo + k as f64 * width;
                    csv.row(&[
                        Cell::Float(b0),
                        Cell::Float(b0 + width),
                        Cell::Float(*p),
                        Cell::Float(*q),
                    ])?;
                }
                csv.finish()?;
            }
            ctx.summary.push_row("frequency", row);
            runs.push((omega, outcome.ensemble));
        }
        runs.sort_by(|x, y| x.0.total_cmp(&y.0));
        for pair in runs.windows(2) {
            if let Some((max, mean)) = series_difference(&pair[0].1, &pair[1].1) {
                let mut row = Summary::new();
                row.set("omega_low", pair[0].0);
                row.set("omega_high", pair[1].0);
                row.set("max_difference", max);
                row.set("mean_difference", mean);
                ctx.summary.push_row("convergence", row);
            }
        }
        Ok(())
    }
}
