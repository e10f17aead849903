use std::fs;
use std::process::{Command, Output};

fn siepi(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_siepi")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn preset_prints_summary_and_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = siepi(&["preset", "thm-2.10-i", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("outcome=DiseaseFreeLimit"));
    assert!(text.contains("S_star<=2"));
    let csv = fs::read_to_string(out.join("diagnostics.csv")).unwrap();
    assert!(csv.starts_with("t,mass_S,mass_I,sup_S,sup_I,min_S,min_I,L2_S,L2_I,flat_S,flat_I\n"));
    assert_eq!(fs::read_to_string(out.join("summary.txt")).unwrap(), text);
}

#[test]
fn preset_list_names_every_entry() {
    let text = stdout(&siepi(&["preset", "--list"]));
    for name in [
        "thm-2.10-i",
        "thm-2.10-ii",
        "thm-2.11-persist",
        "thm-2.11-periodic",
        "sis-bistable",
        "si-finite-extinction",
        "r0-threshold",
    ] {
        assert!(text.contains(name), "{name}");
    }
}

#[test]
fn run_config_with_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("case.toml");
    fs::write(
        &cfg,
        "# persistence check\n[model]\np = 1\nq = 1\nbeta = 2\nmu = 0\n[domain]\nL = 1\nn = 40\n[initial]\nS = 0.9\nI = 0.1\n",
    )
    .unwrap();
    let o = siepi(&["run", cfg.to_str().unwrap(), "--override", "solver.t_end=30", "--override", "detect.tail_fraction=0.1"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.contains("outcome=Persistent"), "{text}");
    assert!(text.contains("t_end = 30.0"));

    let o = siepi(&["r0", cfg.to_str().unwrap()]);
    let text = stdout(&o);
    assert!(text.contains("applicable=true"));
    let r0: f64 = text.lines().find_map(|l| l.strip_prefix("R0=")).unwrap().parse().unwrap();
    assert!((r0 - 2.0).abs() < 1e-9, "{text}");
}

#[test]
fn errors_exit_nonzero_with_line_numbers() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "[model]\np = 1\nq = 1\nds_ = 2\n[domain]\nL = 1\nn = 10\n").unwrap();
    let o = siepi(&["run", cfg.to_str().unwrap()]);
    assert!(!o.status.success());
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 4") && err.contains("ds_"), "{err}");

    assert!(!siepi(&["preset", "nope"]).status.success());
    assert!(!siepi(&["run", "/nonexistent/config.toml"]).status.success());
    assert!(!siepi(&["preset", "thm-2.10-i", "--override", "model.beta=-1"]).status.success());
}

#[test]
fn ode_classify_worked_examples() {
    let text = stdout(&siepi(&[
        "ode", "classify", "si", "--beta", "1", "--mu", "1", "--p", "1", "--q", "0.5", "--s0", "1", "--i0", "4", "--integrate",
    ]));
    assert!(text.contains("predicted=SHitsZeroFiniteTime"), "{text}");
    let bound: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("extinction_time_bound="))
        .unwrap()
        .parse()
        .unwrap();
    assert!((bound - 2f64.ln()).abs() < 1e-12);
    assert!(text.contains("clamp_time="));

    let text = stdout(&siepi(&[
        "ode", "classify", "sis", "--beta", "1", "--gamma", "0.21", "--p", "2", "--q", "1", "--n", "1", "--s0", "0.5",
    ]));
    assert!(text.contains("interior_states=2"), "{text}");
}

#[test]
fn sweep_subcommand_writes_table() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("sweep.toml");
    fs::write(&spec, "kind = \"sis-grid\"\n[grid]\ngamma = [0.1, 0.3]\n").unwrap();
    let out = dir.path().join("out");
    let o = siepi(&["sweep", spec.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("sweep.csv")).unwrap();
    assert_eq!(csv, stdout(&o));
    assert_eq!(csv.lines().count(), 3);
}
