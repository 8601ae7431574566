use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rnsplab_core::experiments::ExperimentConfig;

const KINDS: [&str; 8] = [
    "phase",
    "certify",
    "recover",
    "smallball",
    "width",
    "mendelson",
    "lemmas",
    "bounds",
];

fn rnsplab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rnsplab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn small_config(kind: &str) -> serde_json::Value {
    let (m, n, trials) = match kind {
        "mendelson" => (10, 20, 100),
        _ => (6, 12, 4),
    };
    serde_json::json!({
        "kind": kind,
        "ensemble": {
            "m": m, "n": n,
            "seed": {"kind": "constant", "params": {"c": 0.5}},
            "noise": {"default": {"kind": "gaussian", "params": {"mean": 0.0, "sd": 1.0}}}
        },
        "params": {"s": 2, "rho": 0.5, "tau": 1.0},
        "grids": {"m": [m / 2, m], "s": [1, 2], "n": [12, 24]},
        "trials": trials,
        "seed": 42,
        "options": {
            "n_u": 5,
            "samples": 300,
            "falsify_inits": 4,
            "falsify_iters": 30,
            "rnsp_samples": 30,
            "noise_level": if kind == "recover" { 0.01 } else { 0.0 }
        }
    })
}

fn write_config(dir: &Path, value: &serde_json::Value) -> PathBuf {
    let path = dir.join("config.json");
    std::fs::write(&path, serde_json::to_string_pretty(value).unwrap()).unwrap();
    path
}

fn run_kind(kind: &str, config: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![kind, "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    rnsplab(&args)
}

/// `(file name, bytes)` of every CSV and SVG in `dir`, sorted by name.
fn artifacts(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| matches!(p.extension().and_then(|e| e.to_str()), Some("csv" | "svg")))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

#[test]
fn every_kind_is_byte_identical_on_rerun() {
    for kind in KINDS {
        let tmp = tempfile::tempdir().unwrap();
        let config = write_config(tmp.path(), &small_config(kind));
        let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
        let first = run_kind(kind, &config, &a, &["--threads", "1"]);
        assert!(first.status.success(), "{kind}: {}", String::from_utf8_lossy(&first.stderr));
        let second = run_kind(kind, &config, &b, &["--threads", "2"]);
        assert!(second.status.success(), "{kind}: {}", String::from_utf8_lossy(&second.stderr));
        let (fa, fb) = (artifacts(&a), artifacts(&b));
        assert!(!fa.is_empty(), "{kind} wrote no CSV");
        assert_eq!(fa, fb, "{kind} outputs differ between runs");
    }
}

#[test]
fn phase_outputs_have_the_documented_shape() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), &small_config("phase"));
    let out = tmp.path().join("out");
    assert!(run_kind("phase", &config, &out, &[]).status.success());
    let csv = std::fs::read_to_string(out.join("phase.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "m,s,rate,trials");
    assert_eq!(lines.len(), 1 + 2 * 2);
    let svg = std::fs::read_to_string(out.join("phase.svg")).unwrap();
    assert_eq!(svg.matches("<rect").count(), 4);
}

#[test]
fn seed_override_changes_the_draws() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = small_config("width");
    cfg["trials"] = 20.into();
    let config = write_config(tmp.path(), &cfg);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert!(run_kind("width", &config, &a, &[]).status.success());
    assert!(run_kind("width", &config, &b, &["--seed", "43"]).status.success());
    assert_ne!(artifacts(&a), artifacts(&b));
}

#[test]
fn schema_errors_exit_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");

    let mut cfg = small_config("phase");
    cfg["grids"]["m"] = serde_json::json!([]);
    let config = write_config(tmp.path(), &cfg);
    let r = run_kind("phase", &config, &out, &[]);
    assert_eq!(r.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&r.stderr).contains("grids.m"));

    let config = write_config(tmp.path(), &small_config("phase"));
    let r = run_kind("bounds", &config, &out, &[]);
    assert_eq!(r.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&r.stderr).contains("kind"));

    let r = run_kind("phase", &tmp.path().join("missing.json"), &out, &[]);
    assert_eq!(r.status.code(), Some(2));

    let empty = tmp.path().join("empty.csv");
    std::fs::write(&empty, "m,s,rate,trials\n").unwrap();
    assert_eq!(rnsplab(&["plot", empty.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn numeric_failures_exit_with_three() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = small_config("lemmas");
    // the maximum-growth check needs n >= 2
    cfg["grids"]["n"] = serde_json::json!([1]);
    let config = write_config(tmp.path(), &cfg);
    let r = run_kind("lemmas", &config, &tmp.path().join("out"), &[]);
    assert_eq!(r.status.code(), Some(3), "{}", String::from_utf8_lossy(&r.stderr));
}

#[test]
fn plot_subcommand_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let csv = tmp.path().join("rates.csv");
    std::fs::write(&csv, "m,s,rate,trials\n10,1,0.5,2\n20,1,1,2\n10,2,0,2\n20,2,0.5,2\n").unwrap();
    let a = tmp.path().join("a.svg");
    let b = tmp.path().join("b.svg");
    for (kind, out) in [("lines", &a), ("lines", &b)] {
        let r = rnsplab(&["plot", csv.to_str().unwrap(), "--kind", kind, "--out", out.to_str().unwrap()]);
        assert!(r.status.success());
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert!(rnsplab(&["plot", csv.to_str().unwrap()]).status.success());
    assert!(tmp.path().join("rates.svg").exists());
}

#[test]
fn shipped_configs_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut count = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let cfg = ExperimentConfig::from_path(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert!(cfg.kind.is_some());
        count += 1;
    }
    assert!(count >= KINDS.len());
    let schema = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../schema/experiment-config.v1.json");
    let schema: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(schema).unwrap()).unwrap();
    assert_eq!(schema["properties"]["schema_version"]["const"], 1);
}
