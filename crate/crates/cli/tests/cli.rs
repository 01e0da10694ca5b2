use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn twistlab(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_twistlab"))
        .args(args)
        .current_dir(dir)
        .env("TWISTLAB_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn artifacts(dir: &Path) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = std::fs::read_dir(dir).map(|d| d.map(|e| e.unwrap().path()).collect()).unwrap_or_default();
    v.sort();
    v
}

fn find(dir: &Path, ext: &str) -> PathBuf {
    artifacts(dir).into_iter().find(|p| p.extension().is_some_and(|e| e == ext)).expect("artifact present")
}

fn report(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(find(dir, "json")).unwrap()).unwrap()
}

const EXACT: &str = r#"{"schema":1,"kind":"exact","outdir":"out","model":{"type":"multiplier","n":1},
  "twist":[0.0],"params":{"degree":0,"lambdas":[0.0,0.25,1.0,2.0,9.0,100.0]}}"#;

#[test]
fn exact_circle_density_is_sqrt_lambda_over_pi() {
    let tmp = tempfile::tempdir().unwrap();
    write_config(tmp.path(), "c.json", EXACT);
    let out = twistlab(&["run", "c.json"], tmp.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(find(&tmp.path().join("out"), "csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("lambda,N"));
    let mut rows = 0;
    for line in lines {
        let (l, n) = line.split_once(',').unwrap();
        let (l, n): (f64, f64) = (l.parse().unwrap(), n.parse().unwrap());
        assert!((n - l.sqrt() / std::f64::consts::PI).abs() < 1e-11, "{line}");
        rows += 1;
    }
    assert_eq!(rows, 6);
    assert!(!csv.contains('\r'));
}

#[test]
fn cos_cos_sweep_reports_stable_counts_and_onset() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = r#"{"schema":1,"kind":"witten-sweep","outdir":"out","model":{"type":"torus","resolution":[32,32]},
      "sweep":{"s0":2.0,"count":12},"params":{"form":"torus-cos-cos"}}"#;
    write_config(tmp.path(), "w.json", cfg);
    let out = twistlab(&["run", "w.json"], tmp.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let r = report(&tmp.path().join("out"));
    assert_eq!(r["result"]["stable_counts"], serde_json::json!([1.0, 2.0, 1.0]));
    assert!(r["result"]["s_star"].as_f64().unwrap() > 0.0);
    assert_eq!(r["environment"]["threads"].as_u64().unwrap().min(2), r["environment"]["threads"].as_u64().unwrap());
    let csv = std::fs::read_to_string(find(&tmp.path().join("out"), "csv")).unwrap();
    assert!(csv.starts_with("s,j,count,gap_ratio\n"));
    assert_eq!(csv.lines().count(), 1 + 12 * 3);
}

#[test]
fn missing_genus_is_an_input_error_without_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = r#"{"schema":1,"kind":"tower","outdir":"out","model":{"type":"surface","n":8,"covers":[1,2]},
      "twist":[0.1,0.2,0.3,0.4]}"#;
    write_config(tmp.path(), "bad.json", cfg);
    let out = twistlab(&["run", "bad.json"], tmp.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("genus"));
    assert!(!tmp.path().join("out").exists());
}

#[test]
fn oversized_models_state_the_limit() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = r#"{"schema":1,"kind":"spectrum","outdir":"out","model":{"type":"torus","resolution":[1024,1024]},
      "twist":[0.0,0.0],"params":{"degree":0}}"#;
    write_config(tmp.path(), "big.json", cfg);
    let out = twistlab(&["run", "big.json"], tmp.path());
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("solver size limit") && err.contains("262144"), "{err}");
    assert!(!tmp.path().join("out").exists());
}

#[test]
fn unknown_fields_and_schema_versions_are_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    write_config(tmp.path(), "a.json", &EXACT.replace("\"seed\"", "\"sede\"").replace("\"kind\"", "\"colour\":1,\"kind\""));
    write_config(tmp.path(), "b.json", &EXACT.replace("\"schema\":1", "\"schema\":2"));
    write_config(tmp.path(), "c.json", EXACT);
    assert_eq!(twistlab(&["validate", "a.json"], tmp.path()).status.code(), Some(1));
    assert_eq!(twistlab(&["validate", "b.json"], tmp.path()).status.code(), Some(1));
    let ok = twistlab(&["validate", "c.json"], tmp.path());
    assert_eq!(ok.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&ok.stdout).contains("exact_"));
    assert!(!tmp.path().join("out").exists());
}

#[test]
fn artifacts_are_byte_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = r#"{"schema":1,"kind":"dualities","seed":11,"outdir":"OUT","model":{"type":"torus","resolution":[8,8]},
      "twist":[0.7,-1.2]}"#;
    write_config(tmp.path(), "a.json", &cfg.replace("OUT", "one"));
    write_config(tmp.path(), "b.json", &cfg.replace("OUT", "two"));
    assert_eq!(twistlab(&["run", "a.json"], tmp.path()).status.code(), Some(0));
    assert_eq!(twistlab(&["run", "b.json"], tmp.path()).status.code(), Some(0));
    let a = find(&tmp.path().join("one"), "csv");
    let b = find(&tmp.path().join("two"), "csv");
    assert_eq!(a.file_name(), b.file_name());
    assert!(a.file_name().unwrap().to_str().unwrap().starts_with("dualities_"));
    assert_eq!(std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
}

#[test]
fn failed_checks_exit_two_and_keep_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    // far too coarse for this twist: the grid bottom misses |θ|²
    let cfg = r#"{"schema":1,"kind":"spectrum","outdir":"out","model":{"type":"torus","resolution":[8]},
      "twist":[40.0],"params":{"degree":0}}"#;
    write_config(tmp.path(), "f.json", cfg);
    let out = twistlab(&["run", "f.json"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    let r = report(&tmp.path().join("out"));
    assert_eq!(r["passed"], serde_json::json!(false));
    assert!(r["checks"].as_array().unwrap().iter().any(|c| c["passed"] == false));
    assert_eq!(artifacts(&tmp.path().join("out")).len(), 2);
}

#[test]
fn circle_suite_reports_s_squared() {
    let tmp = tempfile::tempdir().unwrap();
    let out = twistlab(&["report-all", "circle", "--outdir", "rep"], tmp.path());
    assert_eq!(out.status.code(), Some(0));
    let table = String::from_utf8_lossy(&out.stdout);
    for s in ["0.5", "1", "2"] {
        assert!(table.contains(&format!("circle λ₀ at s = {s} (Fourier model)")), "{table}");
    }
    let r = report(&tmp.path().join("rep"));
    assert_eq!(r["checks"].as_array().unwrap().len(), 6);
    assert!(r["checks"].as_array().unwrap().iter().all(|c| c["source"].is_string()));
    assert!(r["stages"].as_array().unwrap().iter().any(|s| s["name"] == "compute"));
}

#[test]
fn unknown_suite_is_an_input_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out = twistlab(&["report-all", "sphere", "--outdir", "rep"], tmp.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(!tmp.path().join("rep").exists());
}
