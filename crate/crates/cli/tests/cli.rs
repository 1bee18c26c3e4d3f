use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn zenoloss(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_zenoloss")).args(args).output().expect("binary runs")
}

fn small_config(dir: &Path, extra: &str) -> String {
    let path = dir.join("run.toml");
    let text = format!(
        "[sweep]\ngamma_min = 0.01\ngamma_max = 100.0\ngamma_count = 9\ne_nh = [1.0, 2.0]\ndelta_mu = [0.0, 4.0]\n{extra}"
    );
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_owned()
}

#[test]
fn sweep_csv_is_independent_of_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), "");
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for (out, threads) in [(&a, "1"), (&b, "3")] {
        let o = zenoloss(&["sweep", "--config", &cfg, "--threads", threads, "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let a = fs::read(a).unwrap();
    assert_eq!(a, fs::read(b).unwrap());
    let text = String::from_utf8(a).unwrap();
    assert!(text.starts_with("gamma,e_nh,delta_mu,I_loss"));
    assert_eq!(text.lines().count(), 1 + 9 * 2 * 2);
}

#[test]
fn peak_reports_one_entry_per_selected_curve() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), "");
    let o = zenoloss(&["peak", "--config", &cfg, "--e-nh", "2"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let peaks: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let peaks = peaks.as_array().unwrap();
    assert_eq!(peaks.len(), 2);
    assert!(peaks.iter().all(|p| p["e_nh"] == 2.0 && p["i_loss"].as_f64().unwrap() > 0.0));
}

#[test]
fn configuration_errors_exit_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let typo = dir.path().join("typo.toml");
    fs::write(&typo, "[model]\ntemprature = 0.1\n").unwrap();
    let o = zenoloss(&["sweep", "--config", typo.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("temprature"));

    let cfg = small_config(dir.path(), "");
    fs::write(&cfg, fs::read_to_string(&cfg).unwrap().replace("gamma_min = 0.01", "gamma_min = 0.0")).unwrap();
    let o = zenoloss(&["sweep", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("gamma_min"));

    let o = zenoloss(&["sweep", "--config", dir.path().join("missing.toml").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));

    let o = zenoloss(&["sweep", "--tolerance", "-1"]);
    assert_eq!(o.status.code(), Some(2));

    let o = zenoloss(&["validate", "everything"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn lindblad_suite_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    let o = zenoloss(&["validate", "lindblad", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(out).unwrap()).unwrap();
    assert_eq!(report["suite"], "lindblad");
    assert_eq!(report["passed"], true);
    assert!(report["checks"].as_array().unwrap().len() >= 8);
}

#[test]
fn single_photon_cutoff_fails_the_bridge_suite() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), "[solver]\nfock_cutoff = 1\n");
    let o = zenoloss(&["validate", "bridge", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(4));
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report["passed"], false);
    let failed: Vec<_> = report["checks"].as_array().unwrap().iter().filter(|c| c["passed"] == false).collect();
    assert!(!failed.is_empty());
    assert!(failed.iter().all(|c| c["error"].as_str().is_some_and(|e| e.contains("cutoff"))));
}

#[test]
fn bridge_command_rejects_single_photon_cutoff() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), "[solver]\nfock_cutoff = 1\n");
    let o = zenoloss(&["bridge", "--config", &cfg, "--ratios", "5"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn keldysh_suite_passes() {
    let o = zenoloss(&["validate", "keldysh"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report["suite"], "keldysh");
    assert!(report["checks"].as_array().unwrap().iter().all(|c| c["passed"] == true));
}
