//! Config-driven experiment runner.
//!
//! A TOML config names a scenario from the [`scenario::Registry`]; the scenario writes CSV
//! tables and a `summary.toml` into the output directory, and the run is closed by a
//! `manifest.toml` hashing every file.

pub mod config;
pub mod output;
pub mod pipeline;
pub mod scenario;
pub mod scenarios;

use std::path::Path;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use anyhow::{Context as _, Result};

pub use config::ExperimentConfig;
pub use output::{Manifest, Summary};
pub use scenario::{Context, Registry, Scenario};

#[derive(Debug, Clone, Copy)]
pub struct RunOptions {
    pub workers: usize,
    pub quiet: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            workers: 1,
            quiet: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub summary: Summary,
    pub manifest: Manifest,
}

/// Schema validation plus the selected scenario's own checks.
pub fn validate(cfg: &ExperimentConfig) -> Result<()> {
    cfg.validate()?;
    let registry = Registry::builtin();
    registry.get(&cfg.scenario)?.check(cfg)
}

pub fn run_experiment(
    cfg: &ExperimentConfig,
    out_dir: &Path,
    opts: &RunOptions,
) -> Result<RunReport> {
    validate(cfg)?;
    let registry = Registry::builtin();
    let scenario = registry.get(&cfg.scenario)?;
    let workers = opts.workers.max(1);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .context("building the worker pool")?;
    let started_unix = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_secs());
    let clock = Instant::now();

    let mut out = output::OutputDir::create(out_dir)?;
    out.write_text(output::CONFIG_FILE, &cfg.to_toml())?;
    let mut ctx = Context {
        config: cfg,
        out: &mut out,
        pool: &pool,
        summary: Summary::new(),
        quiet: opts.quiet,
    };
    pool.install(|| scenario.run(&mut ctx))
        .with_context(|| format!("scenario {} failed", cfg.scenario))?;
    let mut summary = ctx.summary;
    summary.set("scenario", cfg.scenario.as_str());
    summary.set("seed", cfg.seed as i64);
    out.write_text(output::SUMMARY_FILE, &summary.render())?;

    let manifest = Manifest::build(
        cfg,
        &out,
        workers,
        started_unix,
        clock.elapsed().as_secs_f64(),
    )?;
    std::fs::write(out.root().join(output::MANIFEST_FILE), manifest.render())?;
    Ok(RunReport { summary, manifest })
}
