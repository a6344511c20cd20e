use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Result};
use clap::{Parser, Subcommand};

use prethermal_cli::output::{sha256_file, Manifest, CONFIG_FILE};
use prethermal_cli::{run_experiment, validate, ExperimentConfig, Registry, RunOptions};

#[derive(Parser)]
#[command(
    name = "prethermal",
    version,
    about = "Driven classical spin lattice experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the scenario a config names.
    Run {
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// `dotted.key=value`, applied before validation.
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, short)]
        quiet: bool,
    },
    /// Check a config against the schema and its scenario.
    Validate {
        config: PathBuf,
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Print the registered scenarios
    ListScenarios,
    /// Re-hash the files of a finished run; with `--rerun`, also repeat it and compare outputs.
    Verify {
        dir: PathBuf,
        #[arg(long)]
        rerun: bool,
        #[arg(long, default_value_t = 1)]
        workers: usize,
    },
}

fn load(config: &PathBuf, overrides: &[String], seed: Option<u64>) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(config, overrides)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    validate(&cfg)?;
    Ok(cfg)
}

fn verify(dir: &PathBuf, rerun: bool, workers: usize) -> Result<()> {
    let manifest = Manifest::read(dir)?;
    let problems = manifest.verify(dir)?;
    if !problems.is_empty() {
        bail!(
            "{} problem(s):\n  {}",
            problems.len(),
            problems.join("\n  ")
        );
    }
    println!("{} files match the manifest", manifest.files.len());
    if rerun {
        let cfg =
            ExperimentConfig::from_toml_str(&std::fs::read_to_string(dir.join(CONFIG_FILE))?)?;
        let scratch =
            std::env::temp_dir().join(format!("prethermal-verify-{}", std::process::id()));
        let report = run_experiment(
            &cfg,
            &scratch,
            &RunOptions {
                workers,
                quiet: true,
            },
        )?;
        let mut diffs = Vec::new();
        for f in &report.manifest.files {
            let (h, _) = sha256_file(&scratch.join(&f.path))?;
            match manifest.files.iter().find(|g| g.path == f.path) {
                Some(g) if g.sha256 == h => {}
                _ => diffs.push(f.path.clone()),
            }
        }
        std::fs::remove_dir_all(&scratch).ok();
        if !diffs.is_empty() {
            bail!("re-run differs in: {}", diffs.join(", "));
        }
        println!("re-run reproduces every file");
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            config,
            out,
            overrides,
            workers,
            seed,
            quiet,
        } => load(&config, &overrides, seed).and_then(|cfg| {
            let report = run_experiment(&cfg, &out, &RunOptions { workers, quiet })?;
            println!(
                "{}: {} files in {} ({:.1} s)",
                cfg.scenario,
                report.manifest.files.len(),
                out.display(),
                report.manifest.wall_seconds
            );
            Ok(())
        }),
        Command::Validate { config, overrides } => load(&config, &overrides, None).map(|cfg| {
            println!(
                "{}: ok (scenario {}, hash {})",
                config.display(),
                cfg.scenario,
                cfg.hash()
            );
        }),
        Command::ListScenarios => {
            for s in Registry::builtin().iter() {
                println!("{:<22}{}", s.name(), s.description());
            }
            Ok(())
        }
        Command::Verify {
            dir,
            rerun,
            workers,
        } => verify(&dir, rerun, workers),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
