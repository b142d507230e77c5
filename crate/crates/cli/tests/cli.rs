// Copyright 2026 The fluxquant Authors
// SPDX-License-Identifier: Apache-2.0

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn circuit(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../circuits").join(name)
}

fn run(args: &[&str]) -> Output {
    run_env(args, &[])
}

fn run_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_fluxquant"));
    cmd.args(args);
    for (k, _) in std::env::vars().filter(|(k, _)| k.starts_with("FLUXQUANT_")) {
        cmd.env_remove(k);
    }
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

/// Numeric value of `key` in a kv report.
fn kv(text: &str, key: &str) -> f64 {
    let prefix = format!("{key} = ");
    let line = text
        .lines()
        .find(|l| l.starts_with(&prefix))
        .unwrap_or_else(|| panic!("missing {key}"));
    line[prefix.len()..].split(' ').next().unwrap().parse().unwrap()
}

fn squid() -> String {
    circuit("squid.net").to_string_lossy().into_owned()
}

/// Short, fast noise settings for the SQUID.
const FAST: [&str; 12] = [
    "--tc",
    "0.005",
    "--band-factor",
    "10",
    "--duration",
    "0.3",
    "--trajectories",
    "100",
    "--charge-cutoff",
    "10",
    "--format",
    "kv",
];

#[test]
fn missing_netlist_exits_1_with_path() {
    let o = run(&["quantize", "/no/such/circuit.net"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("/no/such/circuit.net"), "{}", stderr(&o));
}

#[test]
fn quantize_reports_flux_allocation() {
    let o = run(&["quantize", &squid(), "--format", "kv"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    assert!((kv(&text, "1.flux_weight.m1") - 0.75).abs() < 1e-12, "{text}");
    assert!((kv(&text, "2.flux_weight.m1") + 0.25).abs() < 1e-12, "{text}");
    assert!(text.contains("[charging]"));
    assert!(text.contains("[drive_coupling]"));
    for line in text.lines().filter(|l| l.contains(" = ")) {
        let value = line.split(" = ").nth(1).unwrap();
        let first = value.split(' ').next().unwrap();
        if first.parse::<f64>().is_ok() {
            assert!(value.contains(' '), "numeric without unit: {line}");
        }
    }
}

#[test]
fn quantize_table_is_aligned_and_shows_weights() {
    let o = run(&["quantize", &squid()]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("cos(phi1 + 0.750000*phi_e1)"), "{text}");
    assert!(text.contains("cos(phi1 - 0.250000*phi_e1)"), "{text}");
}

#[test]
fn gauge_pair_frame_carries_drive_term() {
    let o = run(&["quantize", &squid(), "--gauge", "1,0", "--format", "kv"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    assert!((kv(&text, "irrotational_residual") - 1.0).abs() < 1e-12, "{text}");
    assert_eq!(kv(&text, "1.flux_weight.m1"), 0.0);
    assert_eq!(kv(&text, "2.flux_weight.m1"), -1.0);
}

#[test]
fn bad_flag_exits_1() {
    let o = run(&["spectrum", &squid(), "--gauge", "1,2,3"]);
    assert_eq!(o.status.code(), Some(1));
    let o = run(&["spectrum", &squid(), "--flux-sweep", "0:1"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn pair_gauge_on_two_loops_names_operation() {
    let o = run(&[
        "quantize",
        circuit("double_squid.net").to_str().unwrap(),
        "--gauge",
        "1,0",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("irrotational::transform_for"), "{}", stderr(&o));
}

#[test]
fn invalid_netlist_lists_violations() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("open.net");
    std::fs::write(
        &path,
        "circuit open\nbranch a junction EJ=1 C=1 from x to y\nbranch b junction EJ=1 C=1 from y to z\nmesh m branches +a,+b flux=0\n",
    )
    .unwrap();
    let o = run(&["quantize", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("netlist::validate"), "{}", stderr(&o));
}

#[test]
fn syntax_error_names_parser() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.net");
    std::fs::write(&path, "circuit bad\nbranch a resistor R=1 from x to y\n").unwrap();
    let o = run(&["spectrum", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("netlist::parse_netlist"), "{}", stderr(&o));
}

#[test]
fn sweep_grid_is_a_product() {
    let o = run(&[
        "spectrum",
        circuit("double_squid.net").to_str().unwrap(),
        "--flux-sweep",
        "right=0:0.2:2",
        "--flux-sweep",
        "0:0.5:3",
        "--charge-cutoff",
        "10",
        "--format",
        "kv",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("points = 6 count"));
    // The named sweep comes first, so it is the outer axis.
    assert_eq!(kv(&text, "2.flux.right"), 0.0);
    assert_eq!(kv(&text, "2.flux.left"), 0.25);
    assert_eq!(kv(&text, "6.flux.right"), 0.2);
    assert_eq!(kv(&text, "6.flux.left"), 0.5);
}

#[test]
fn environment_overrides_defaults() {
    let o = run_env(
        &["spectrum", &squid(), "--format", "kv"],
        &[("FLUXQUANT_CHARGE_CUTOFF", "12"), ("FLUXQUANT_AUX_EPSILON", "1e-7")],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("charge_cutoff = 12 count"));
    assert!(text.contains("dimension = 25 count"));
    assert!(text.contains("aux_epsilon = 1e-7 fF"));
}

#[test]
fn rates_are_frame_independent() {
    let get = |gauge: &str| {
        let o = run(&["rates", &squid(), "--gauge", gauge, "--format", "kv"]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        let text = stdout(&o);
        (kv(&text, "1.gamma1"), kv(&text, "1.gamma1_naive.m1"))
    };
    let (irr, irr_naive) = get("irrotational");
    let (left, left_naive) = get("1,0");
    let (right, right_naive) = get("0,-1");
    assert!((left / irr - 1.0).abs() < 1e-9 && (right / irr - 1.0).abs() < 1e-9);
    assert!((irr_naive / irr - 1.0).abs() < 1e-9);
    assert!(
        (right_naive / left_naive - 16.0).abs() < 0.05,
        "{right_naive} {left_naive}"
    );
}

#[test]
fn rates_need_noise() {
    let fluxonium = circuit("fluxonium.net");
    let o = run(&["rates", fluxonium.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let o = run(&["rates", fluxonium.to_str().unwrap(), "--sigma", "0.001", "--tc", "0.05"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("gamma1.m1 [1/ns]"));
}

#[test]
fn output_file_receives_report() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.txt");
    let o = run(&["quantize", &squid(), "-o", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    assert!(std::fs::read_to_string(&path).unwrap().starts_with("[config]\ncommand"));
}

#[test]
fn simulate_is_reproducible_across_schedules() {
    let path = squid();
    let mut args = vec!["simulate", path.as_str(), "--seed", "7"];
    args.extend(FAST);
    let a = run(&args);
    assert_eq!(a.status.code(), Some(0), "{}", stderr(&a));
    args.push("--sequential");
    let b = run(&args);
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&a);
    assert!(text.contains("[summary]"));
    assert!(text.contains("t [ns],avg_prob [dimensionless],stderr [dimensionless]"));
}

#[test]
fn empty_fit_window_is_numerical_failure() {
    let path = squid();
    let mut args = vec!["simulate", path.as_str(), "--fit-start", "0.2", "--fit-end", "0.2"];
    args.extend(FAST);
    let o = run(&args);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains("noisesim::averaged_transition_probability"));
}

#[test]
fn coarse_step_is_rejected() {
    let path = squid();
    let mut args = vec!["simulate", path.as_str(), "--dt", "0.01"];
    args.extend(FAST);
    let o = run(&args);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("too coarse"), "{}", stderr(&o));
}

#[test]
fn check_gauge_passes_on_squid() {
    let path = squid();
    let mut args = vec!["check-gauge", path.as_str()];
    args.extend(FAST);
    let o = run(&args);
    assert_eq!(o.status.code(), Some(0), "{}\n{}", stdout(&o), stderr(&o));
    let text = stdout(&o);
    for key in [
        "spectrum_invariance = PASS",
        "element_invariance = PASS",
        "slope_invariance = PASS",
        "slope_golden_rule = PASS",
        "offset_law.1,0 = PASS",
        "overall = PASS",
    ] {
        assert!(text.contains(key), "{key}\n{text}");
    }
}

#[test]
fn failed_property_exits_2() {
    let o = run(&[
        "check-gauge",
        &squid(),
        "--no-simulation",
        "--spectrum-tol",
        "1e-30",
        "--format",
        "kv",
    ]);
    assert_eq!(o.status.code(), Some(2));
    let text = stdout(&o);
    assert!(text.contains("spectrum_invariance = FAIL"), "{text}");
    assert!(text.contains("slope_invariance = SKIPPED"));
}
