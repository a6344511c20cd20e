#![allow(dead_code)]

use std::path::{Path, PathBuf};

use prethermal_cli::config::apply_override;
use prethermal_cli::ExperimentConfig;

pub fn config_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

pub fn shipped(name: &str) -> PathBuf {
    config_dir().join(format!("{name}.toml"))
}

/// A shipped config shrunk by `overrides` so that it runs in about a second.
pub fn small(name: &str, overrides: &[&str]) -> ExperimentConfig {
    let text = std::fs::read_to_string(shipped(name)).unwrap();
    let mut value: toml::Value = toml::from_str(&text).unwrap();
    for o in overrides {
        apply_override(&mut value, o).unwrap();
    }
    ExperimentConfig::from_value(value).unwrap()
}

pub const SMALL_CPDTC: &[&str] = &[
    "lattice.size=24",
    "ensemble.n_traj=4",
    "ensemble.initial.eps_left=-0.45",
    "run.n_cycles=300",
    "run.chunk_cycles=128",
    "run.snapshot_stride=10",
    "run.snapshot_until=300",
    "run.csv_stride=5",
    "run.batch=3",
    "analysis.epsilon_c=-0.2",
    "analysis.smoothing_cycles=20",
    "mc.sample_equil=200",
    "mc.n_runs=2",
];

pub const SMALL_DOMAIN_WALL: &[&str] = &[
    "lattice.size=20",
    "ensemble.n_traj=4",
    "ensemble.initial.eps_left=-0.45",
    "drive.omegas=[8.0, 16.0]",
    "run.n_cycles=200",
    "run.chunk_cycles=64",
    "mc.n_equil=200",
    "mc.n_meas=400",
    "mc.n_runs=2",
    "mc.sample_equil=200",
];

pub const SMALL_HEATING: &[&str] = &[
    "lattice.size=16",
    "ensemble.n_traj=3",
    "drive.omegas=[4.0, 5.0]",
    "run.n_cycles=400",
    "run.chunk_cycles=100",
    "mc.sample_equil=200",
    "mc.n_runs=2",
];

pub const SMALL_HIGHER_ORDER: &[&str] =
    &["lattice.size=20", "ensemble.n_traj=3", "run.n_cycles=360"];

pub const SMALL_SINGLE: &[&str] = &[
    "lattice.size=40",
    "ensemble.n_traj=2",
    "run.n_cycles=32",
    "run.snapshot_stride=4",
    "mc.sample_equil=200",
    "mc.n_runs=2",
];

pub const SMALL_MC: &[&str] = &[
    "mc.sizes=[8, 16]",
    "mc.temperatures=[0.2, 0.3, 0.4]",
    "mc.n_equil=100",
    "mc.n_meas=200",
    "mc.n_runs=2",
];

pub fn all_small() -> Vec<(&'static str, &'static [&'static str])> {
    vec![
        ("cpdtc_alpha18", SMALL_CPDTC),
        ("domain_wall", SMALL_DOMAIN_WALL),
        ("heating_nn", SMALL_HEATING),
        ("higher_order_3dtc", SMALL_HIGHER_ORDER),
        ("single_vs_effective", SMALL_SINGLE),
        ("mc_reference", SMALL_MC),
    ]
}

/// Every file of a run directory except the manifest, as relative path and bytes.
pub fn files_of(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else if p.file_name().unwrap() != "manifest.toml" {
                let rel = p.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
                out.push((rel, std::fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}
