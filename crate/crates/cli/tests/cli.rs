use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn smpath(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_smpath"))
        .args(args)
        .env_remove("SMPATH_THREADS")
        .output()
        .expect("run smpath")
}

fn out_arg(dir: &Path) -> String {
    dir.to_str().unwrap().to_string()
}

/// Every artifact except the manifest, by file name.
fn artifacts(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.file_name().unwrap() != "manifest.json")
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect()
}

fn manifest(dir: &Path) -> serde_json::Value {
    serde_json::from_slice(&fs::read(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn simulate_example() {
    let tmp = tempfile::tempdir().unwrap();
    let o = smpath(&["simulate", "--model", "wiener", "--seed", "7", "--grid", "1024", "--T", "6.283185307", "--out", &out_arg(tmp.path())]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(tmp.path().join("path.csv")).unwrap();
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 1025);
    let first: f64 = rows[0].split(',').nth(1).unwrap().parse().unwrap();
    assert_eq!(first, 0.0);
}

#[test]
fn fourier_example() {
    let tmp = tempfile::tempdir().unwrap();
    let o = smpath(&["fourier", "--model", "lebesgue", "--K", "16", "--method", "parts", "--out", &out_arg(tmp.path())]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(tmp.path().join("coefficients.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("k,xi,eta"));
    for line in lines {
        let v: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        let k = v[0];
        if k == 0.0 {
            assert!((v[1] - TAU).abs() < 1e-9);
        } else {
            assert!(v[1].abs() < 1e-9);
            assert!((v[2] + 2.0 / k).abs() < 1e-9);
        }
    }
    let conv: serde_json::Value = serde_json::from_slice(&fs::read(tmp.path().join("convergence.json")).unwrap()).unwrap();
    assert_eq!(conv["entries"].as_array().unwrap().len(), 5);
}

#[test]
fn pz_example() {
    let tmp = tempfile::tempdir().unwrap();
    let o = smpath(&["verify", "pz", "--m", "3", "--lambdas", "1,1,1", "--exact", "--out", &out_arg(tmp.path())]);
    assert_eq!(o.status.code(), Some(0));
    let r: serde_json::Value = serde_json::from_slice(&fs::read(tmp.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(r["pass"], true);
    assert_eq!(r["statistics"][0]["name"], "exact_probability");
    assert_eq!(r["statistics"][0]["value"], 1.0);
}

#[test]
fn artifacts_independent_of_thread_count() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for (dir, threads) in [(a.path(), "1"), (b.path(), "4")] {
        let o = smpath(&[
            "verify", "cubic", "--model", "fbm", "--hurst", "0.7", "--T", "1.25", "--grid", "1024", "--epsilons", "0.16,0.08",
            "--replicates", "16", "--seed", "3", "--threads", threads, "--out", &out_arg(dir),
        ]);
        assert!(o.status.code().is_some_and(|c| c != 1), "{}", String::from_utf8_lossy(&o.stderr));
    }
    assert_eq!(artifacts(a.path()), artifacts(b.path()));
    let (ma, mb) = (manifest(a.path()), manifest(b.path()));
    assert_eq!(ma["artifacts"], mb["artifacts"]);
    assert_eq!(ma["config_hash"], mb["config_hash"]);
}

#[test]
fn config_file_reproduces_flag_run() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let o = smpath(&["besov", "--model", "wiener", "--seed", "11", "--n-max", "9", "--alpha", "0.3", "--out", &out_arg(a.path())]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let cfg = a.path().join("config.json");
    let o = smpath(&["besov", "--config", cfg.to_str().unwrap(), "--out", &out_arg(b.path())]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(artifacts(a.path()), artifacts(b.path()));
    let report: serde_json::Value = serde_json::from_slice(&fs::read(a.path().join("besov.json")).unwrap()).unwrap();
    assert_eq!(report["verdict"], "CONVERGENT");
}

#[test]
fn flags_override_config() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("cfg.json");
    fs::write(&cfg, r#"{"command": "simulate", "model": "wiener", "grid": 64, "seed": 1}"#).unwrap();
    let out = tmp.path().join("run");
    let o = smpath(&["simulate", "--config", cfg.to_str().unwrap(), "--grid", "32", "--out", &out_arg(&out)]);
    assert!(o.status.success());
    assert_eq!(fs::read_to_string(out.join("path.csv")).unwrap().lines().count(), 34);
}

#[test]
fn failed_verification_exits_two() {
    let tmp = tempfile::tempdir().unwrap();
    // frequencies 2..8 add far more than the 10% stabilization allowance
    let o = smpath(&[
        "verify", "sum-squares", "--j-levels", "1,8", "--replicates", "64", "--grid", "1024", "--out", &out_arg(tmp.path()),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(manifest(tmp.path())["pass"], false);
}

#[test]
fn errors_are_json_with_exit_one() {
    let tmp = tempfile::tempdir().unwrap();
    let cases: [&[&str]; 4] = [
        &["simulate", "--model", "nope"],
        &["simulate", "--grid", "1"],
        &["fourier", "--model", "wiener", "--T", "1"],
        &["simulate", "--unknown-flag"],
    ];
    for args in cases {
        let mut args = args.to_vec();
        let out = out_arg(&tmp.path().join("x"));
        args.extend(["--out", &out]);
        let o = smpath(&args);
        assert_eq!(o.status.code(), Some(1), "{args:?}");
        let err: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
        assert!(err["error"]["kind"].is_string(), "{args:?}");
    }
    let cfg = tmp.path().join("bad.json");
    fs::write(&cfg, r#"{"model": "wiener", "colour": "red"}"#).unwrap();
    let o = smpath(&["simulate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let err: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["error"]["kind"], "invalid_config");
}

#[test]
fn sheet_field_and_env_threads() {
    let tmp = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_smpath"))
        .args(["simulate", "--model", "sheet", "--grid", "16", "--out", &out_arg(tmp.path())])
        .env("SMPATH_THREADS", "2")
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(tmp.path().join("field.csv")).unwrap();
    assert_eq!(text.lines().next(), Some("x1,x2,value"));
    assert_eq!(text.lines().count(), 1 + 17 * 17);
    assert_eq!(manifest(tmp.path())["threads"], 2);
}
