use std::collections::BTreeSet;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn qergo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qergo")).args(args).output().expect("binary runs")
}

fn qergo_to(args: &[&str], out: &Path) -> (i32, String) {
    let mut full: Vec<&str> = args.to_vec();
    let out_str = out.to_str().unwrap();
    full.extend(["--out", out_str]);
    let o = qergo(&full);
    (o.status.code().unwrap(), std::fs::read_to_string(out).unwrap_or_default())
}

#[test]
fn check_passes_and_reports_every_identity_per_trial() {
    let dir = tempfile::tempdir().unwrap();
    let (code, text) = qergo_to(
        &["check", "--dim", "8", "--trials", "50", "--seed", "1", "--tol", "1e-9"],
        &dir.path().join("r.json"),
    );
    assert_eq!(code, 0);
    let reports: Vec<Value> = serde_json::from_str(&text).unwrap();
    assert_eq!(reports.len(), 50 * 9);
    for r in &reports {
        assert!(r["max_abs_residual"].as_f64().unwrap() < 1e-9, "{r}");
        assert_eq!(r["pass"], Value::Bool(true));
    }
    let seeds: BTreeSet<u64> = reports.iter().map(|r| r["seed"].as_u64().unwrap()).collect();
    assert_eq!(seeds, (1..=50).collect());
}

#[test]
fn check_fails_when_tolerance_is_below_roundoff() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _) = qergo_to(&["check", "--dim", "16", "--trials", "3", "--tol", "1e-30"], &dir.path().join("r.json"));
    assert_eq!(code, 1);
}

#[test]
fn dimension_one_is_a_usage_error() {
    let o = qergo(&["check", "--dim", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--dim"));
}

#[test]
fn malformed_and_unknown_flags_are_usage_errors() {
    for args in [
        &["dynamics", "--hbar", "abc"][..],
        &["dynamics", "--hbar", "-1"],
        &["direct", "--shots"],
        &["reconstruct", "--bogus", "1"],
        &["check", "--theta", "0.1"],
        &["frobnicate"],
    ] {
        let o = qergo(args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        assert!(String::from_utf8_lossy(&o.stderr).contains("Usage") || !o.stderr.is_empty());
    }
}

#[test]
fn unsupported_format_is_a_usage_error() {
    assert_eq!(qergo(&["reconstruct", "--format", "csv"]).status.code(), Some(2));
}

#[test]
fn unwritable_output_is_an_io_error() {
    let o = qergo(&["reconstruct", "--out", "/nonexistent-dir/r.json"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn direct_writes_header_and_one_row_per_position() {
    let dir = tempfile::tempdir().unwrap();
    let (code, text) = qergo_to(
        &["direct", "--dim", "8", "--theta", "0.05", "--shots", "1000000", "--seed", "4"],
        &dir.path().join("d.csv"),
    );
    assert_eq!(code, 0);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "x,re_true,im_true,re_est,im_est,stderr_re,stderr_im,postselect_rate");
    assert_eq!(lines.len(), 9);
    for (x, line) in lines[1..].iter().enumerate() {
        let cols: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        assert_eq!(cols.len(), 8);
        assert_eq!(cols[0], x as f64);
        assert!(cols[5] > 0.0 && cols[6] > 0.0);
        assert!(cols[7] > 0.0 && cols[7] <= 1.0);
    }
}

#[test]
fn direct_on_a_position_eigenstate_has_one_dominant_row() {
    let dir = tempfile::tempdir().unwrap();
    let (code, text) = qergo_to(&["direct", "--basis-state", "3", "--seed", "3"], &dir.path().join("d.csv"));
    assert_eq!(code, 0);
    let mags: Vec<f64> = text
        .lines()
        .skip(1)
        .map(|l| {
            let c: Vec<f64> = l.split(',').map(|v| v.parse().unwrap()).collect();
            c[3].hypot(c[4])
        })
        .collect();
    let (argmax, _) = mags.iter().enumerate().fold((0, 0.0), |acc, (i, &m)| if m > acc.1 { (i, m) } else { acc });
    assert_eq!(argmax, 3);
}

#[test]
fn direct_json_format_carries_the_same_columns() {
    let dir = tempfile::tempdir().unwrap();
    let (_, text) = qergo_to(&["direct", "--shots", "100000", "--format", "json"], &dir.path().join("d.json"));
    let rows: Vec<Value> = serde_json::from_str(&text).unwrap();
    assert_eq!(rows.len(), 8);
    let keys: BTreeSet<&str> = rows[0].as_object().unwrap().keys().map(String::as_str).collect();
    assert_eq!(
        keys,
        BTreeSet::from(["x", "re_true", "im_true", "re_est", "im_est", "stderr_re", "stderr_im", "postselect_rate"])
    );
}

#[test]
fn zero_angle_is_rejected() {
    assert_eq!(qergo(&["direct", "--theta", "0"]).status.code(), Some(2));
}

#[test]
fn reconstruct_round_trip_schema() {
    let dir = tempfile::tempdir().unwrap();
    let (code, text) = qergo_to(&["reconstruct", "--dim", "4", "--seed", "7"], &dir.path().join("r.json"));
    assert_eq!(code, 0);
    let v: Value = serde_json::from_str(&text).unwrap();
    let keys: BTreeSet<&str> = v.as_object().unwrap().keys().map(String::as_str).collect();
    assert_eq!(keys, BTreeSet::from(["dim", "seed", "max_entry_error", "unitarity_residual", "pass"]));
    assert!(v["max_entry_error"].as_f64().unwrap() < 1e-10);
    assert_eq!(v["dim"], 4);
    assert_eq!(v["seed"], 7);
}

#[test]
fn orthogonal_reference_fails_and_names_the_index() {
    let o = qergo(&["reconstruct", "--dim", "4", "--orthogonal-ref", "2"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("a=2"));
}

#[test]
fn dynamics_default_passes_every_subcheck() {
    let dir = tempfile::tempdir().unwrap();
    let (code, text) = qergo_to(&["dynamics"], &dir.path().join("y.json"));
    assert_eq!(code, 0);
    let v: Value = serde_json::from_str(&text).unwrap();
    for part in ["qubit", "commutator", "finite_difference", "wavepacket"] {
        assert_eq!(v[part]["pass"], Value::Bool(true), "{part}");
    }
}

#[test]
fn doubling_hbar_doubles_the_wavepacket_correlation() {
    let dir = tempfile::tempdir().unwrap();
    let im_xh = |hbar: &str| {
        let (code, text) = qergo_to(&["dynamics", "--hbar", hbar], &dir.path().join(format!("h{hbar}.json")));
        assert_eq!(code, 0);
        let v: Value = serde_json::from_str(&text).unwrap();
        (v["wavepacket"]["im_xh"].as_f64().unwrap(), v["wavepacket"]["velocity"].as_f64().unwrap())
    };
    let (one, v1) = im_xh("1");
    let (two, v2) = im_xh("2");
    assert!((v1 - v2).abs() < 1e-12);
    assert!((two / one - 2.0).abs() < 1e-6, "{one} {two}");
}

#[test]
fn packet_wider_than_grid_is_a_physics_failure() {
    let o = qergo(&["dynamics", "--dim", "32"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("grid"));
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    for args in [&["check", "--trials", "5"][..], &["direct", "--shots", "20000"], &["reconstruct"], &["dynamics"]] {
        let (_, a) = qergo_to(args, &dir.path().join("a"));
        let (_, b) = qergo_to(args, &dir.path().join("b"));
        assert!(!a.is_empty());
        assert_eq!(a, b, "{args:?}");
    }
}

#[test]
fn stdout_matches_file_output() {
    let dir = tempfile::tempdir().unwrap();
    let (_, file) = qergo_to(&["reconstruct", "--seed", "3"], &dir.path().join("r.json"));
    let o = qergo(&["reconstruct", "--seed", "3"]);
    assert_eq!(String::from_utf8(o.stdout).unwrap(), file);
}

#[test]
fn starved_direct_run_is_degenerate() {
    let o = qergo(&["direct", "--shots", "2", "--seed", "1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("position"));
}
