mod common;

use std::path::Path;

use prethermal_cli::output::Manifest;
use prethermal_cli::{run_experiment, ExperimentConfig, RunOptions};

use common::{files_of, small};

/// Header and rows of a CSV; every cell must be empty or a float.
fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header: Vec<String> = lines.next().unwrap().split(',').map(String::from).collect();
    let rows: Vec<Vec<String>> = lines
        .map(|l| l.split(',').map(String::from).collect())
        .collect();
    for (k, r) in rows.iter().enumerate() {
        assert_eq!(
            r.len(),
            header.len(),
            "{}: row {k} has {} cells",
            path.display(),
            r.len()
        );
        for c in r {
            assert!(
                c.is_empty() || c.parse::<f64>().is_ok(),
                "{}: bad cell {c:?}",
                path.display()
            );
        }
    }
    (header, rows)
}

fn column(rows: &[Vec<String>], header: &[String], name: &str) -> Vec<f64> {
    let k = header
        .iter()
        .position(|h| h == name)
        .unwrap_or_else(|| panic!("no column {name}"));
    rows.iter().map(|r| r[k].parse().unwrap()).collect()
}

fn run(name: &str, overrides: &[&str]) -> (tempfile::TempDir, toml::Table) {
    let cfg = small(name, overrides);
    let dir = tempfile::tempdir().unwrap();
    run_experiment(&cfg, dir.path(), &RunOptions::default()).unwrap();
    let summary: toml::Table =
        toml::from_str(&std::fs::read_to_string(dir.path().join("summary.toml")).unwrap()).unwrap();
    (dir, summary)
}

#[test]
fn manifest_lists_and_hashes_every_file() {
    for (name, overrides) in common::all_small() {
        let (dir, _) = run(name, overrides);
        let m = Manifest::read(dir.path()).unwrap();
        let listed: Vec<&str> = m.files.iter().map(|f| f.path.as_str()).collect();
        for (p, bytes) in files_of(dir.path()) {
            let entry = m
                .files
                .iter()
                .find(|f| f.path == p)
                .unwrap_or_else(|| panic!("{name}: {p} not in manifest {listed:?}"));
            assert_eq!(entry.bytes, bytes.len() as u64);
        }
        assert!(m.verify(dir.path()).unwrap().is_empty());
        assert!(m.rng.contains("ChaCha12"), "{}", m.rng);
        assert_eq!(m.version, env!("CARGO_PKG_VERSION"));
        let stored = ExperimentConfig::from_toml_str(
            &std::fs::read_to_string(dir.path().join("config.toml")).unwrap(),
        )
        .unwrap();
        assert_eq!(
            stored.hash(),
            m.config_hash,
            "{name}: stored config does not round-trip"
        );
    }
}

#[test]
fn trajectory_and_ensemble_tables() {
    let (dir, summary) = run("cpdtc_alpha18", common::SMALL_CPDTC);
    let d = dir.path();
    let (h, rows) = read_csv(&d.join("traj/w6_0000.csv"));
    assert_eq!(h, ["cycle", "time", "Sz_avg", "energy_density"]);
    let cycles = column(&rows, &h, "cycle");
    // csv_stride 5 over 300 cycles, both ends included
    assert_eq!(cycles.len(), 61);
    assert!(cycles.windows(2).all(|w| w[1] - w[0] == 5.0));
    let times = column(&rows, &h, "time");
    let period = std::f64::consts::TAU / 6.0;
    assert!((times[1] - 5.0 * period).abs() < 1e-12);

    let (h, rows) = read_csv(&d.join("ensemble_w6.csv"));
    assert_eq!(
        h,
        [
            "cycle",
            "time",
            "Sz_avg",
            "Sz_err",
            "Sz_toggled",
            "Sz_toggled_err",
            "energy_density",
            "energy_err"
        ]
    );
    assert_eq!(rows.len(), 301);
    // π kick about x: lab and toggled frames agree on even cycles and differ in sign on odd ones
    let lab = column(&rows, &h, "Sz_avg");
    let tog = column(&rows, &h, "Sz_toggled");
    assert_eq!(lab[2], tog[2]);
    assert_eq!(lab[3], -tog[3]);

    let (h, rows) = read_csv(&d.join("ensemble_w6_sites.csv"));
    assert_eq!(h.len(), 2 + 24);
    assert_eq!(&h[..3], ["cycle", "time", "sz_0"]);
    assert_eq!(rows.len(), 31);

    let (h, _) = read_csv(&d.join("spectrum_w6.csv"));
    assert_eq!(h, ["frequency", "amplitude"]);

    let rows = summary["frequency"].as_array().unwrap();
    assert_eq!(rows.len(), 3);
    for r in rows {
        for key in [
            "omega",
            "tau_melt",
            "melted",
            "target_frequency",
            "target_amplitude",
            "peak_frequency",
            "noise_floor",
        ] {
            assert!(r.get(key).is_some(), "summary row lacks {key}");
        }
    }
}

#[test]
fn site_columns_are_filled_on_snapshot_rows_only() {
    let mut o = common::SMALL_CPDTC.to_vec();
    o.extend([
        "run.site_columns=true",
        "run.csv_stride=1",
        "drive.omegas=[6.0]",
    ]);
    let (dir, _) = run("cpdtc_alpha18", &o);
    let (h, rows) = read_csv(&dir.path().join("traj/w6_0001.csv"));
    assert_eq!(h.len(), 4 + 24);
    assert_eq!(h[27], "sz_23");
    for r in &rows {
        let cycle: u64 = r[0].parse().unwrap();
        assert_eq!(r[4].is_empty(), cycle % 10 != 0, "cycle {cycle}");
    }
}

#[test]
fn mc_curves_and_domain_wall_histograms() {
    let (dir, summary) = run("mc_reference", common::SMALL_MC);
    let (h, rows) = read_csv(&dir.path().join("mc_curves.csv"));
    for c in [
        "size",
        "n_sites",
        "temperature",
        "beta",
        "energy_density",
        "sz2",
        "sz2_err",
    ] {
        assert!(h.iter().any(|x| x == c), "mc_curves lacks {c}");
    }
    assert_eq!(rows.len(), 6);
    assert!(summary.contains_key("transition"));

    let (dir, summary) = run("domain_wall", common::SMALL_DOMAIN_WALL);
    let (h, rows) = read_csv(&dir.path().join("histogram_site_sz_w8.csv"));
    assert_eq!(h, ["bin_lo", "bin_hi", "floquet", "canonical"]);
    let width = column(&rows, &h, "bin_hi")[0] - column(&rows, &h, "bin_lo")[0];
    for c in ["floquet", "canonical"] {
        let mass: f64 = column(&rows, &h, c).iter().sum::<f64>() * width;
        assert!(
            (mass - 1.0).abs() < 1e-9,
            "{c} density integrates to {mass}"
        );
    }
    let row = &summary["frequency"].as_array().unwrap()[0];
    for key in [
        "plateau_sz",
        "mc_sz",
        "combined_sigma",
        "cdf_distance_site_sz",
    ] {
        assert!(row.get(key).is_some(), "domain-wall row lacks {key}");
    }
    assert!(summary.contains_key("convergence"));
}

#[test]
fn single_vs_effective_table() {
    let (dir, summary) = run("single_vs_effective", common::SMALL_SINGLE);
    let (h, rows) = read_csv(&dir.path().join("delta_m.csv"));
    assert_eq!(h[..4], ["cycle", "time", "delta_m", "delta_m_err"]);
    assert_eq!(rows.len(), 9);
    let dm = column(&rows, &h, "delta_m");
    assert_eq!(dm[0], 0.0);
    assert!(dm.iter().all(|v| (0.0..=2.0).contains(v)));
    for key in [
        "delta_m_plateau",
        "energy_drift_fraction",
        "infinite_temperature_range",
    ] {
        assert!(summary.contains_key(key), "summary lacks {key}");
    }
}
