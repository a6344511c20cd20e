use anyhow::{ensure, Result};

use prethermal_core::thermal::{
    estimate_critical, ground_energy_estimate, temperature_sweep, CriticalEstimate,
};

use crate::config::ExperimentConfig;
use crate::output::{Cell, Summary};
use crate::pipeline::{reference_mc, Setup};
use crate::scenario::{Context, Scenario};

pub struct McReference;

fn sizes(cfg: &ExperimentConfig) -> Vec<usize> {
    if cfg.mc.sizes.is_empty() {
        vec![cfg.lattice.size]
    } else {
        cfg.mc.sizes.clone()
    }
}

/// Temperature sweeps over the configured sizes, written to `mc_curves.csv`, and the
/// finite-size crossing estimate of the critical point.
pub fn critical_point(ctx: &mut Context<'_>, setup: &Setup) -> Result<CriticalEstimate> {
    let cfg = ctx.config;
    ensure!(!cfg.mc.temperatures.is_empty(), "mc.temperatures is empty");
    let lattices = sizes(cfg)
        .into_iter()
        .map(|s| cfg.lattice.spec_of_size(s))
        .collect::<Result<Vec<_>>>()?;
    let mc = reference_mc(cfg, cfg.ensemble_start());
    ctx.note(format!(
        "temperature sweep: {} sizes x {} temperatures",
        lattices.len(),
        cfg.mc.temperatures.len()
    ));
    let curves = ctx
        .pool
        .install(|| temperature_sweep(&lattices, &setup.d, &cfg.mc.temperatures, &mc))?;
    let header = [
        "size",
        "n_sites",
        "temperature",
        "beta",
        "energy_density",
        "energy_err",
        "sz",
        "sz_err",
        "sz_abs",
        "sz_abs_err",
        "sz2",
        "sz2_err",
    ]
    .map(String::from);
    let mut w = ctx.out.csv("mc_curves.csv", &header)?;
    for (curve, size) in curves.iter().zip(sizes(cfg)) {
        for (t, p) in curve.temperatures.iter().zip(&curve.points) {
            w.row(&[
                Cell::Int(size as u64),
                Cell::Int(curve.n_sites() as u64),
                Cell::Float(*t),
                Cell::Float(p.beta),
                Cell::Float(p.energy_density.mean),
                Cell::Float(p.energy_density.err),
                Cell::Float(p.sz.mean),
                Cell::Float(p.sz.err),
                Cell::Float(p.sz_abs.mean),
                Cell::Float(p.sz_abs.err),
                Cell::Float(p.sz2.mean),
                Cell::Float(p.sz2.err),
            ])?;
        }
    }
    w.finish()?;
    let est = estimate_critical(&curves)?;
    match &est {
        CriticalEstimate::Found(p) => {
            ctx.summary.set("transition", true);
            ctx.summary.set("t_c", p.t_c);
            ctx.summary.set("t_c_err", p.t_c_err);
            ctx.summary.set("epsilon_c", p.epsilon_c);
            ctx.summary.set("epsilon_c_err", p.epsilon_c_err);
            for c in &p.crossings {
                let mut row = Summary::new();
                row.set("n_small", c.n_small as i64);
                row.set("n_large", c.n_large as i64);
                row.set("temperature", c.temperature);
                ctx.summary.push_row("crossing", row);
            }
        }
        CriticalEstimate::NoTransition { reason } => {
            ctx.summary.set("transition", false);
            ctx.summary.set("no_transition_reason", reason.as_str());
        }
    }
    Ok(est)
}

impl Scenario for McReference {
    fn name(&self) -> &'static str {
        "mc-reference"
    }

    fn description(&self) -> &'static str {
        "Metropolis temperature sweeps of the effective Hamiltonian and the finite-size critical point"
    }

    fn check(&self, cfg: &ExperimentConfig) -> Result<()> {
        ensure!(
            !cfg.mc.temperatures.is_empty(),
            "mc-reference needs mc.temperatures"
        );
        Ok(())
    }

    fn run(&self, ctx: &mut Context<'_>) -> Result<()> {
        let setup = Setup::new(ctx.config)?;
        let e0 = ground_energy_estimate(&setup.lattice, &setup.d, ctx.config.seed)?;
        ctx.summary.set("ground_energy_density", e0);
        critical_point(ctx, &setup)?;
        Ok(())
    }
}
