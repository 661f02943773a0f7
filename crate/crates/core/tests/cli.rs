//! End-to-end runs of the `weylsec` binary.

use std::f64::consts::PI;
use std::process::Command;

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_weylsec");
const SU2: &str = r#"{"kind":"conjugation","family":"SU","n":2}"#;

fn run(args: &[&str]) -> (i32, Value, String) {
    let out = Command::new(BIN).args(args).env_remove("WEYLSEC_WORKERS").output().unwrap();
    let stdout = String::from_utf8(out.stdout).unwrap();
    let v = serde_json::from_str(&stdout).unwrap_or(Value::Null);
    (out.status.code().unwrap(), v, String::from_utf8(out.stderr).unwrap())
}

fn num(v: &Value, path: &[&str]) -> f64 {
    path.iter().fold(v, |v, k| &v[*k]).as_f64().unwrap()
}

#[test]
fn delta_transcripts() {
    let (code, v, _) = run(&["delta", "--point", "1 0; 0 1"]);
    assert_eq!(code, 0);
    assert!((num(&v, &["result", "delta_e_generic"]) - 0.5).abs() < 1e-12);
    assert!((num(&v, &["result", "delta_e_closed_form"]) - 0.5).abs() < 1e-12);

    let (code, v, _) = run(&["delta", "--point", "0 0; 0 0"]);
    assert_eq!(code, 0);
    assert_eq!(v["result"]["regularity"], "Singular");
    assert_eq!(num(&v, &["result", "delta_e_generic"]), 0.0);

    let h = r#"{"kind":"direct_sum","field":"H","n":3,"k":2}"#;
    let (code, v, _) = run(&["--action", h, "delta", "--point", "0.3+1.2i-0.7j+0.1k, -0.4j+2k; 1.1-0.2i, 0.9+0.5k"]);
    assert_eq!(code, 0, "{v}");
    let g = num(&v, &["result", "delta_e_generic"]);
    let c = num(&v, &["result", "delta_e_closed_form"]);
    assert!((g - c).abs() <= 1e-8 * c);
}

#[test]
fn delta_parse_error_reports_position() {
    let (code, _, err) = run(&["delta", "--point", "1 0; 0 q"]);
    assert_eq!(code, 2);
    assert!(err.contains("row 2, column 2"), "{err}");
}

#[test]
fn integrate_transcripts() {
    // constant 1 on SU(2): vol(SU(2)) = 2π²(√2)³
    let (code, v, _) = run(&[
        "--action", SU2, "--n", "200000", "integrate", "--mode", "direct", "--function",
        r#"{"family":"constant","value":1.0}"#,
    ]);
    assert_eq!(code, 0);
    let want = 2.0 * PI * PI * 2f64.sqrt().powi(3);
    let (m, s) = (num(&v, &["result", "direct", "mean"]), num(&v, &["result", "direct", "stderr"]));
    assert!((m - want).abs() <= 3.0 * s, "{m} ± {s} vs {want}");

    // Gaussian on ℝ^6 and its reduced counterpart
    let (code, v, _) = run(&["--n", "400000", "integrate"]);
    assert_eq!(code, 0);
    let (m, s) = (num(&v, &["result", "direct", "mean"]), num(&v, &["result", "direct", "stderr"]));
    assert!((m - (2.0 * PI).powi(3)).abs() <= 3.0 * s);
    assert!(num(&v, &["result", "sigma_distance"]) <= 3.0);

    let (code, v, _) = run(&["integrate", "--n", "1000", "--function", r#"{"family":"constant","value":0.0}"#]);
    assert_eq!(code, 0);
    assert_eq!(num(&v, &["result", "direct", "mean"]), 0.0);
    assert_eq!(num(&v, &["result", "reduced", "mean"]), 0.0);
}

#[test]
fn integrate_rejects_non_invariant_reduction() {
    let (code, _, err) = run(&["integrate", "--function", r#"{"family":"coordinate","row":1,"col":0}"#]);
    assert_eq!(code, 2);
    assert!(err.contains("contract violation"), "{err}");
}

#[test]
fn verify_transcripts() {
    let (code, v, _) = run(&["verify"]);
    assert_eq!(code, 0, "{v}");
    let (code, _, _) = run(&["verify", "--corrupt-metric", "0.05"]);
    assert_eq!(code, 1);
    let (code, v, _) = run(&["--action", SU2, "verify"]);
    assert_eq!(code, 0, "{v}");
    assert_eq!(v["result"]["polar"], true);
}

#[test]
fn ensemble_writes_csv_and_json() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("so3.json");
    let (code, _, _) = run(&["--n", "20000", "--out", out.to_str().unwrap(), "ensemble", "--bins", "20"]);
    assert_eq!(code, 0);
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert!(num(&v, &["result", "chi_square", "p_value"]) >= 0.01);
    let csv = std::fs::read_to_string(dir.path().join("so3.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("bin_lo,bin_hi,empirical,reference"));
    let (mut e, mut r) = (0.0, 0.0);
    for l in lines {
        let f: Vec<f64> = l.split(',').map(|x| x.parse().unwrap()).collect();
        e += f[2];
        r += f[3];
    }
    assert!((e - 1.0).abs() < 1e-12 && (r - 1.0).abs() < 1e-12);

    let (code, v, _) = run(&["--action", SU2, "--n", "20000", "ensemble", "--statistic", "torus_angle"]);
    assert_eq!(code, 0, "{v}");
}

#[test]
fn unwritable_output_is_an_error() {
    let (code, _, err) = run(&["--out", "/nonexistent-dir/x.json", "delta"]);
    assert_eq!(code, 2);
    assert!(err.contains("i/o error"), "{err}");
}

#[test]
fn same_flags_same_bytes() {
    let args = ["--seed", "5", "--n", "20000", "--chunks", "8", "integrate"];
    let a = Command::new(BIN).args(args).env("WEYLSEC_WORKERS", "1").output().unwrap().stdout;
    let b = Command::new(BIN).args(args).env("WEYLSEC_WORKERS", "8").output().unwrap().stdout;
    assert!(!a.is_empty());
    assert_eq!(a, b);
}

#[test]
fn volumes_runs() {
    let (code, v, _) = run(&["--action", SU2, "--n", "20000", "volumes"]);
    assert_eq!(code, 0, "{v}");
    // vol(G/T) for SU(2) is 2π
    let gh = &v["result"]["vol_gh_two_points"]["combined"];
    assert!((num(gh, &["value"]) - 2.0 * PI).abs() <= 4.0 * num(gh, &["stderr"]));
}
