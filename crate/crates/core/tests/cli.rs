use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn workfluct(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_workfluct"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn small_config(dir: &Path) -> String {
    let text = "[scenario]\ntau_grid_ms = [0.05, 0.8]\nbeta_z = [0.6]\nsta = \"both\"\n\
                [sampling]\nn_grid = [10, 100]\nreplicas = 50\nseed = 5\n\
                [waveform]\ntau_ms = 0.05\npoints = 5\n";
    let path = dir.join("scenario.toml");
    fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn sweep_tau_writes_table_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let out = dir.path().join("out");
    let o = workfluct(&["sweep-tau", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("sweep-tau.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "tau_ms,beta_z,kind,n_steps,mean_exp_work,variance_exp_work,exact_mean,jarzynski_residual,p_01,p_10,unitarity_defect,gamma"
    );
    assert_eq!(lines.count(), 2);
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("sweep-tau.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "sweep-tau");
    assert_eq!(manifest["seed"], 5);
    assert_eq!(manifest["version"], env!("CARGO_PKG_VERSION"));
}

#[test]
fn json_format_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let out = dir.path().join("out");
    let o = workfluct(&[
        "gamma",
        "--config",
        &cfg,
        "--out",
        out.to_str().unwrap(),
        "--format",
        "json",
        "--seed",
        "11",
        "--steps",
        "3000",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let table: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("gamma.json")).unwrap()).unwrap();
    assert_eq!(table["columns"][1], "gamma");
    assert_eq!(table["rows"].as_array().unwrap().len(), 2);
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("gamma.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 11);
    assert_eq!(manifest["config"]["scenario"]["n_steps"], 3000);
}

#[test]
fn all_writes_every_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let out = dir.path().join("out");
    let o = workfluct(&["all", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for name in [
        "sweep-tau",
        "sta-compare",
        "joint-probs",
        "estimator",
        "gamma",
        "cd-waveform",
    ] {
        assert!(out.join(format!("{name}.csv")).is_file(), "{name}");
        assert!(out.join(format!("{name}.manifest.json")).is_file(), "{name}");
    }
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    fs::write(
        &bad,
        "[scenario]\ntau_grid_ms = []\nbeta_z = [0.6]\n[sampling]\nn_grid = [10]\nreplicas = 2\nseed = 1\n",
    )
    .unwrap();
    let o = workfluct(&[
        "sweep-tau",
        "--config",
        bad.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("scenario.tau_grid_ms"));

    fs::write(&bad, "[scenario\n").unwrap();
    let o = workfluct(&["gamma", "--config", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 1"));

    let o = workfluct(&["gamma", "--config", dir.path().join("missing.toml").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn sta_compare_requires_both() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    fs::write(
        &cfg,
        fs::read_to_string(&cfg)
            .unwrap()
            .replace("sta = \"both\"", "sta = \"off\""),
    )
    .unwrap();
    let o = workfluct(&["sta-compare", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn default_config_is_printable_and_loadable() {
    let o = workfluct(&["default-config"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(workfluct::config::ScenarioConfig::from_toml_str(&text).is_ok());
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        assert!(workfluct(&["all", "--config", &cfg, "--out", out.to_str().unwrap()])
            .status
            .success());
    }
    for entry in fs::read_dir(&a).unwrap() {
        let name = entry.unwrap().file_name();
        assert_eq!(
            fs::read(a.join(&name)).unwrap(),
            fs::read(b.join(&name)).unwrap(),
            "{name:?}"
        );
    }
}
