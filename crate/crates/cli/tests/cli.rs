//! End-to-end tests of the `diagosc` binary: output schemas, seeded
//! determinism, and the documented exit codes.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_diagosc"))
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    bin()
        .current_dir(dir)
        .args(args)
        .output()
        .expect("spawn diagosc")
}

fn assert_success(out: &Output) {
    assert!(
        out.status.success(),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn mode_curve_zero_coupling_is_identity() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(
        dir.path(),
        &["mode-curve", "--epsilon", "0", "--out", "mc.csv", "--schema-check"],
    );
    assert_success(&out);
    let text = std::fs::read_to_string(dir.path().join("mc.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("a,mu"));
    for line in lines {
        let (a, mu) = line.split_once(',').unwrap();
        let (a, mu): (f64, f64) = (a.parse().unwrap(), mu.parse().unwrap());
        assert!((a - mu).abs() < 1e-12, "{line}");
    }
}

#[test]
fn density_atom_row_has_exact_weight() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["density", "--out", "d.csv", "--schema-check"]);
    assert_success(&out);
    let text = std::fs::read_to_string(dir.path().join("d.csv")).unwrap();
    let atom = text
        .lines()
        .find(|l| l.starts_with("atom,"))
        .expect("atom row");
    let w: f64 = atom.rsplit(',').next().unwrap().parse().unwrap();
    assert!((w - 0.6826894921370859).abs() < 1e-15, "{atom}");
}

#[test]
fn seeded_rerun_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("scan.toml"),
        "[qc_scan]\nn_list = [3]\nepsilon_min = 0.5\nepsilon_max = 1.5\nepsilon_step = 0.5\ntrials = 500\n",
    )
    .unwrap();
    let args = |out: &str, seed: &str| {
        vec![
            "qc-scan".to_string(),
            "--config".into(),
            "scan.toml".into(),
            "--seed".into(),
            seed.into(),
            "--out".into(),
            out.into(),
        ]
    };
    fn to_refs(v: &[String]) -> Vec<&str> {
        v.iter().map(|s| s.as_str()).collect()
    }
    assert_success(&run_in(dir.path(), &to_refs(&args("a.csv", "7"))));
    assert_success(&run_in(dir.path(), &to_refs(&args("b.csv", "7"))));
    assert_success(&run_in(dir.path(), &to_refs(&args("c.csv", "8"))));
    let a = std::fs::read(dir.path().join("a.csv")).unwrap();
    let b = std::fs::read(dir.path().join("b.csv")).unwrap();
    let c = std::fs::read(dir.path().join("c.csv")).unwrap();
    assert_eq!(a, b, "same seed must reproduce identical bytes");
    assert_ne!(a, c, "different seeds must differ");
}

#[test]
fn thread_count_does_not_change_results() {
    let dir = tempfile::tempdir().unwrap();
    let run = |out: &str, threads: &str| {
        assert_success(&run_in(
            dir.path(),
            &[
                "qc-scan", "--n", "4", "--epsilon", "1", "--trials", "2000", "--seed", "3",
                "--threads", threads, "--out", out,
            ],
        ));
    };
    run("t1.csv", "1");
    run("t4.csv", "4");
    let a = std::fs::read(dir.path().join("t1.csv")).unwrap();
    let b = std::fs::read(dir.path().join("t4.csv")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn simulate_emits_report_and_trajectory() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(
        dir.path(),
        &[
            "simulate", "--n", "4", "--t-end", "50", "--seed", "11", "--out", "sim.json",
            "--schema-check",
        ],
    );
    assert_success(&out);
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("sim.json")).unwrap())
            .unwrap();
    for key in [
        "schema_version",
        "N",
        "epsilon",
        "omega",
        "Omega_analytic",
        "Omega_empirical",
        "class",
        "marginal_flags",
        "separation",
    ] {
        assert!(doc.get(key).is_some(), "missing key {key}");
    }
    assert_eq!(doc["N"], 4);
    let traj = std::fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    assert!(traj.starts_with("t,theta1,theta2,theta3,theta4"));
    // separation between the direct and decoupled routes stays tight
    let disc = doc["separation"]["max_discrepancy"].as_f64().unwrap();
    assert!(disc < 1e-4, "{disc}");
}

#[test]
fn unknown_config_key_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.toml"), "not_a_key = 1\n").unwrap();
    let out = run_in(dir.path(), &["qc-scan", "--config", "bad.toml"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn invalid_parameter_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["density", "--epsilon", "-1"]);
    assert_eq!(out.status.code(), Some(1));
    let out = run_in(dir.path(), &["qc-scan", "--n", "1"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn numerical_failure_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    // 3 sample points leave too short a window for frequency regression
    std::fs::write(dir.path().join("sim.toml"), "[simulate]\npoints = 3\n").unwrap();
    let out = run_in(
        dir.path(),
        &["simulate", "--config", "sim.toml", "--n", "3", "--t-end", "10"],
    );
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn verification_failure_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    // orthonormality holds to ~1e-15, so an absurd tolerance must fail
    std::fs::write(dir.path().join("vb.toml"), "[validate_basis]\ntol = 1e-18\n").unwrap();
    let out = run_in(
        dir.path(),
        &["validate-basis", "--config", "vb.toml", "--n", "8", "--out", "b.csv"],
    );
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn basis_csv_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(
        dir.path(),
        &["validate-basis", "--n", "6", "--out", "b.csv", "--schema-check"],
    );
    assert_success(&out);
    let text = std::fs::read_to_string(dir.path().join("b.csv")).unwrap();
    assert_eq!(text.lines().next(), Some("6,5"));
    assert_eq!(text.lines().count(), 7);
}

#[test]
fn flags_override_config_values() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("mc.toml"),
        "[mode_curve]\nepsilon = 1.0\na_min = -1.0\na_max = 1.0\nstep = 0.5\n",
    )
    .unwrap();
    // the flag's epsilon = 0 must win: the curve becomes the identity
    let out = run_in(
        dir.path(),
        &["mode-curve", "--config", "mc.toml", "--epsilon", "0", "--out", "mc.csv"],
    );
    assert_success(&out);
    let text = std::fs::read_to_string(dir.path().join("mc.csv")).unwrap();
    assert!(text.lines().skip(1).all(|l| {
        let (a, mu) = l.split_once(',').unwrap();
        a == mu
    }));
}
