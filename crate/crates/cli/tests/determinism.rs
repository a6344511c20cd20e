mod common;

use prethermal_cli::{run_experiment, RunOptions};

use common::{all_small, files_of, small};

#[test]
fn outputs_do_not_depend_on_the_worker_count() {
    for (name, overrides) in all_small() {
        let cfg = small(name, overrides);
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        run_experiment(
            &cfg,
            a.path(),
            &RunOptions {
                workers: 1,
                quiet: true,
            },
        )
        .unwrap();
        run_experiment(
            &cfg,
            b.path(),
            &RunOptions {
                workers: 3,
                quiet: true,
            },
        )
        .unwrap();
        let fa = files_of(a.path());
        let fb = files_of(b.path());
        assert!(
            fa.iter().any(|(p, _)| p.ends_with(".csv")),
            "{name}: no CSV written"
        );
        assert_eq!(
            fa.iter().map(|(p, _)| p).collect::<Vec<_>>(),
            fb.iter().map(|(p, _)| p).collect::<Vec<_>>(),
            "{name}: file sets differ"
        );
        for ((p, x), (_, y)) in fa.iter().zip(&fb) {
            assert!(x == y, "{name}: {p} differs between 1 and 3 workers");
        }
    }
}

#[test]
fn seed_changes_the_results() {
    let mut cfg = small("heating_nn", common::SMALL_HEATING);
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run_experiment(&cfg, a.path(), &RunOptions::default()).unwrap();
    cfg.seed += 1;
    run_experiment(&cfg, b.path(), &RunOptions::default()).unwrap();
    let read = |d: &std::path::Path| std::fs::read(d.join("ensemble_w4.csv")).unwrap();
    assert_ne!(read(a.path()), read(b.path()));
}

#[test]
fn chunk_length_does_not_change_the_ensemble() {
    let cfg = small("cpdtc_alpha18", common::SMALL_CPDTC);
    let mut other = cfg.clone();
    other.run.chunk_cycles = 300;
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run_experiment(&cfg, a.path(), &RunOptions::default()).unwrap();
    run_experiment(&other, b.path(), &RunOptions::default()).unwrap();
    for f in [
        "ensemble_w5.5.csv",
        "ensemble_w6.csv",
        "traj/w6_0002.csv",
        "ensemble_w6.5_sites.csv",
    ] {
        let x = std::fs::read(a.path().join(f)).unwrap();
        let y = std::fs::read(b.path().join(f)).unwrap();
        assert!(x == y, "{f} depends on the chunk length");
    }
}
