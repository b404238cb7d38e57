use std::{
    fs,
    path::{Path, PathBuf},
    process::{Command, Output},
};

const BIN: &str = env!("CARGO_BIN_EXE_qdkerr");

const SMALL: &str = r#"
name = "small"
[model]
omega = 10.0
g = [0.0, 0.1]
coupling = 1.0
[initial]
kind = "coherent"
alpha = 2.0
[time]
stop = 1.0
steps = 40
unit = "rabi_periods"
snapshots = [0.5]
[grid.x]
min = -6.0
max = 6.0
points = 61
[grid.p]
min = -6.0
max = 6.0
points = 61
[[outputs]]
observable = "excitation"
path = "p.csv"
[[outputs]]
observable = "schmidt"
path = "k.csv"
[[outputs]]
observable = "carpet"
path = "carpet.csv"
[[outputs]]
observable = "zones"
path = "zones.csv"
[[outputs]]
observable = "wigner"
path = "w.csv"
[[outputs]]
observable = "photon_distribution"
path = "pn.json"
format = "json"
"#;

fn qdkerr(args: &[&str], cwd: &Path) -> Output {
    Command::new(BIN).args(args).current_dir(cwd).output().expect("binary runs")
}

fn scenario(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("scenario.toml");
    fs::write(&path, text).unwrap();
    path
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.is_file())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    out.sort();
    out
}

#[test]
fn simulate_writes_outputs_with_hash_headers() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = scenario(tmp.path(), SMALL);
    let o = qdkerr(&["simulate", "--config", cfg.to_str().unwrap(), "--out", "out"], tmp.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let out = tmp.path().join("out");
    let summary: serde_json::Value = serde_json::from_slice(&fs::read(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["schema"], "qdkerr.summary/1");
    assert_eq!(summary["passed"], true);
    assert_eq!(summary["samples"], 41);
    assert_eq!(summary["conservation"].as_array().unwrap().len(), 2);
    let hash = summary["config_sha256"].as_str().unwrap();
    assert_eq!(hash.len(), 64);

    let p = fs::read_to_string(out.join("p.csv")).unwrap();
    assert!(p.contains(&format!("# config_sha256 {hash}")));
    let header = p.lines().find(|l| !l.starts_with('#')).unwrap();
    assert_eq!(header, "t,excitation[g=0],excitation[g=0.1]");
    assert_eq!(p.lines().filter(|l| !l.starts_with('#')).count(), 42);

    for name in ["k.csv", "carpet_g0.csv", "carpet_g0.1.csv", "zones_g0.csv", "w_g0.csv", "w_g0.1.csv", "pn_g0.json"] {
        assert!(out.join(name).is_file(), "missing {name}; have {:?}", summary["outputs"]);
    }
    let pn: serde_json::Value = serde_json::from_slice(&fs::read(out.join("pn_g0.1.json")).unwrap()).unwrap();
    let total: f64 = pn["probabilities"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).sum();
    assert!((total - 1.0).abs() < 1e-9, "{total}");
}

#[test]
fn runs_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = scenario(tmp.path(), SMALL);
    let cfg = cfg.to_str().unwrap();
    for out in ["a", "b"] {
        let o = qdkerr(&["simulate", "--config", cfg, "--out", out], tmp.path());
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let a = files(&tmp.path().join("a"));
    assert!(a.len() > 5);
    assert_eq!(a, files(&tmp.path().join("b")));
}

#[test]
fn thread_count_does_not_change_results() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = scenario(tmp.path(), SMALL);
    let cfg = cfg.to_str().unwrap();
    for (out, threads) in [("one", "1"), ("three", "3")] {
        let o = qdkerr(&["simulate", "--config", cfg, "--out", out, "--threads", threads], tmp.path());
        assert!(o.status.success(), "{}", stderr(&o));
    }
    assert_eq!(files(&tmp.path().join("one")), files(&tmp.path().join("three")));
}

#[test]
fn overrides_change_hash_and_format() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = scenario(tmp.path(), SMALL);
    let cfg = cfg.to_str().unwrap();
    let o = qdkerr(&["simulate", "--config", cfg, "--out", "lab"], tmp.path());
    assert!(o.status.success());
    let o = qdkerr(
        &["simulate", "--config", cfg, "--out", "rot", "--frame", "rotating", "--format", "json"],
        tmp.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let read = |d: &str| -> serde_json::Value {
        serde_json::from_slice(&fs::read(tmp.path().join(d).join("summary.json")).unwrap()).unwrap()
    };
    let (lab, rot) = (read("lab"), read("rot"));
    assert_eq!(rot["frame"], "rotating");
    assert_ne!(lab["config_sha256"], rot["config_sha256"]);
    assert!(tmp.path().join("rot/p.json").is_file());
    let series: serde_json::Value = serde_json::from_slice(&fs::read(tmp.path().join("rot/p.json")).unwrap()).unwrap();
    assert_eq!(series["meta"]["config_sha256"], rot["config_sha256"]);
}

#[test]
fn carpet_subcommand_writes_only_carpets() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = scenario(tmp.path(), SMALL);
    let o = qdkerr(&["carpet", "--config", cfg.to_str().unwrap(), "--out", "c"], tmp.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let names: Vec<String> = files(&tmp.path().join("c")).into_iter().map(|(n, _)| n).collect();
    assert!(names.iter().all(|n| n.starts_with("carpet") || n.starts_with("zones") || n == "summary.json"), "{names:?}");
    let carpet = fs::read_to_string(tmp.path().join("c/carpet_g0.csv")).unwrap();
    let header = carpet.lines().find(|l| !l.starts_with('#')).unwrap();
    assert_eq!(header.split(',').count(), 62);
}

#[test]
fn config_errors_exit_2_with_field_path() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = scenario(tmp.path(), &SMALL.replace("steps = 40", "steps = 0"));
    let o = qdkerr(&["simulate", "--config", cfg.to_str().unwrap()], tmp.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("time.steps"), "{}", stderr(&o));

    let cfg = scenario(tmp.path(), &SMALL.replace("kind = \"coherent\"", "kind = \"thermal\""));
    let o = qdkerr(&["simulate", "--config", cfg.to_str().unwrap()], tmp.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("initial"), "{}", stderr(&o));

    let o = qdkerr(&["simulate", "--preset", "fig42"], tmp.path());
    assert_eq!(o.status.code(), Some(2));
    let o = qdkerr(&["simulate"], tmp.path());
    assert_eq!(o.status.code(), Some(2));
    let o = qdkerr(&["simulate", "--bogus"], tmp.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(!tmp.path().join("out").exists());
}

#[test]
fn verify_passes_and_catches_injected_fault() {
    let tmp = tempfile::tempdir().unwrap();
    let o = qdkerr(&["verify", "--out", "ok"], tmp.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert_eq!(stdout.lines().filter(|l| l.starts_with("PASS ")).count(), 6);
    let v: serde_json::Value = serde_json::from_slice(&fs::read(tmp.path().join("ok/verify.json")).unwrap()).unwrap();
    assert_eq!(v["passed"], true);
    assert_eq!(v["fault_injected"], false);

    let o = qdkerr(&["verify", "--out", "bad", "--inject-fault"], tmp.path());
    assert_eq!(o.status.code(), Some(3));
    let v: serde_json::Value = serde_json::from_slice(&fs::read(tmp.path().join("bad/verify.json")).unwrap()).unwrap();
    assert_eq!(v["passed"], false);
    assert!(v["cases"].as_array().unwrap().iter().all(|c| c["passed"] == false));
}

#[test]
fn verify_accepts_a_scenario_and_enforces_the_cap() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = scenario(tmp.path(), SMALL);
    let cfg = cfg.to_str().unwrap();
    let o = qdkerr(&["verify", "--config", cfg, "--out", "v"], tmp.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(String::from_utf8_lossy(&o.stdout).contains("PASS small_g0.1"));

    let o = qdkerr(&["verify", "--config", cfg, "--out", "v", "--oracle-cap", "8"], tmp.path());
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn presets_are_listed_and_showable() {
    let tmp = tempfile::tempdir().unwrap();
    let o = qdkerr(&["presets"], tmp.path());
    assert!(o.status.success());
    let table = String::from_utf8_lossy(&o.stdout);
    for name in ["fig1a", "fig2b", "fig5", "fig7c", "fig9"] {
        assert!(table.contains(name), "{name}");
    }
    let o = qdkerr(&["presets", "--show", "fig3"], tmp.path());
    assert!(o.status.success());
    let text = String::from_utf8_lossy(&o.stdout);
    let body: String = text.lines().filter(|l| !l.starts_with('#')).collect::<Vec<_>>().join("\n");
    let path = tmp.path().join("fig3.toml");
    fs::write(&path, body).unwrap();
    let o = qdkerr(&["presets", "--show", "nope"], tmp.path());
    assert_eq!(o.status.code(), Some(2));
    // the printed preset is itself a valid scenario
    let cfg = qdkerr_cli::ScenarioConfig::load(&path).unwrap();
    assert_eq!(cfg.name, "fig3");
}

#[test]
fn multi_variant_presets_get_subdirectories() {
    let out = PathBuf::from("out");
    assert_eq!(qdkerr_cli::run::variant_dir(&out, "fig7a", 3), out.join("fig7a"));
    assert_eq!(qdkerr_cli::run::variant_dir(&out, "fig5", 1), out);
}
