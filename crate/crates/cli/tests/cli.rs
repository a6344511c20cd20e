mod common;

use std::path::Path;
use std::process::{Command, Output};

use common::{config_dir, shipped};

fn prethermal(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_prethermal"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn list_scenarios_prints_the_registry() {
    let o = prethermal(&["list-scenarios"]);
    assert!(o.status.success());
    let text = stdout(&o);
    for name in [
        "cpdtc",
        "domain-wall",
        "heating",
        "higher-order",
        "mc-reference",
        "single-vs-effective",
    ] {
        assert!(
            text.lines().any(|l| l.starts_with(name)),
            "{name} missing from:\n{text}"
        );
    }
}

#[test]
fn every_shipped_config_validates() {
    let mut seen = 0;
    for entry in std::fs::read_dir(config_dir()).unwrap() {
        let p = entry.unwrap().path();
        if p.extension().is_some_and(|e| e == "toml") {
            let o = prethermal(&["validate", p.to_str().unwrap()]);
            assert!(o.status.success(), "{}: {}", p.display(), stderr(&o));
            seen += 1;
        }
    }
    assert!(seen >= 10);
}

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("c.toml");
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn bad_configs_are_rejected_with_a_reason() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("scenario = \"nope\"\n[lattice]\nsize = 8\n", "cpdtc"),
        (
            "scenario = \"heating\"\n[lattice]\nsize = 8\nshape = 3\n",
            "shape",
        ),
        ("scenario = \"heating\"\n[lattice]\nsize = 1\n", "extent"),
        ("scenario = \"cpdtc\"\n[lattice]\nsize = 8\n", "kick"),
    ];
    for (text, needle) in cases {
        let o = prethermal(&["validate", &write_config(dir.path(), text)]);
        assert!(!o.status.success(), "accepted:\n{text}");
        assert!(
            stderr(&o).contains(needle),
            "error for\n{text}\nlacks {needle:?}: {}",
            stderr(&o)
        );
    }
    let o = prethermal(&[
        "validate",
        shipped("heating_nn").to_str().unwrap(),
        "--override",
        "run.stride=0",
    ]);
    assert!(!o.status.success());
}

#[test]
fn run_then_verify_then_detect_corruption() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let config = shipped("heating_nn");
    let mut args = vec![
        "run",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "-q",
    ];
    for o in common::SMALL_HEATING {
        args.extend(["--override", o]);
    }
    args.extend(["--seed", "99"]);
    let o = prethermal(&args);
    assert!(o.status.success(), "{}", stderr(&o));
    let summary = std::fs::read_to_string(out.join("summary.toml")).unwrap();
    assert!(summary.contains("seed = 99"));

    let o = prethermal(&["verify", out.to_str().unwrap(), "--rerun", "--workers", "2"]);
    assert!(o.status.success(), "{}", stderr(&o));

    let csv = out.join("ensemble_w4.csv");
    let mut text = std::fs::read_to_string(&csv).unwrap();
    let at = text.find('\n').unwrap() + 1;
    text.insert(at, '9');
    std::fs::write(&csv, text).unwrap();
    let o = prethermal(&["verify", out.to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("ensemble_w4.csv"), "{}", stderr(&o));
}

#[test]
fn missing_config_fails_cleanly() {
    let o = prethermal(&["run", "/nonexistent/config.toml", "-q"]);
    assert!(!o.status.success());
    assert!(stderr(&o).starts_with("error"), "{}", stderr(&o));
}
