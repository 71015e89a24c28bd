use std::path::Path;
use std::process::{Command, Output};

use quadsense::Metric;
use quadsense_cli::{parse, Format};

fn quadsense(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_quadsense"))
        .args(args)
        .current_dir(dir)
        .env_remove(quadsense_cli::WORKERS_ENV)
        .output()
        .unwrap()
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

const ZERO_SWEEP: &str = r#"
channel = "poisson"
schemes = ["singlets", "pairs", "triplets", "quadruplet"]
t_grid = [0.0]
p = 0.5
lambda0 = 2.0
lambda1 = 20.0
samples = 2000
seed = 3
out = "zero.csv"
"#;

#[test]
fn zero_budget_sweep_has_no_information() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "zero.toml", ZERO_SWEEP);
    let out = quadsense(dir.path(), &["sweep-time", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = parse(&std::fs::read(dir.path().join("zero.csv")).unwrap(), Format::Csv).unwrap();
    assert_eq!(rows.len(), 4);
    for r in &rows {
        assert!(r.value.abs() <= 1e-12 + 3.0 * r.stderr, "{r:?}");
    }
    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("zero.csv.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["mode"], "sweep-time");
    assert_eq!(manifest["seed"], 3);
    assert!(manifest["version"].as_str().unwrap().starts_with(env!("CARGO_PKG_VERSION")));
    assert!(manifest["wall_time_seconds"].as_f64().unwrap() >= 0.0);
    assert_eq!(manifest["failures"].as_array().unwrap().len(), 0);
}

#[test]
fn estimate_at_zero_allocation() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "est.toml",
        "mode = 'estimate'\nchannel = 'gaussian'\nT = 0.0\np = 0.5\nlambda0 = 5\nlambda1 = 10\nmetrics = ['mi_bits', 'pd']\nsamples = 4000\nout = 'est.jsonl'\nformat = 'jsonl'\n[estimate]\nscheme = 'triplets'\n",
    );
    let out = quadsense(dir.path(), &["estimate", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = parse(&std::fs::read(dir.path().join("est.jsonl")).unwrap(), Format::Jsonl).unwrap();
    assert_eq!(rows.len(), 2);
    let mi = rows.iter().find(|r| r.metric == Metric::MiBits).unwrap();
    let pd = rows.iter().find(|r| r.metric == Metric::Pd).unwrap();
    assert!(mi.value.abs() <= 1e-12 + 3.0 * mi.stderr);
    assert_eq!(pd.value, 0.0625);
}

#[test]
fn reruns_are_byte_identical_and_flags_override_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "g.toml",
        "channel = 'gaussian'\nschemes = ['pairs', 'quadruplet']\nt_grid = [0.5, 1.0]\np = [0.2, 0.6]\nlambda0 = 5\nlambda1 = 10\nmetrics = ['mi', 'pd']\nsamples = 3000\nseed = 1\nout = 'ignored.csv'\n",
    );
    let run = |out: &str, workers: &str, seed: &str| {
        let o = quadsense(
            dir.path(),
            &["sweep-time", "--config", &cfg, "--out", out, "--workers", workers, "--seed", seed, "--samples", "2000"],
        );
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        std::fs::read(dir.path().join(out)).unwrap()
    };
    let a = run("a.csv", "1", "11");
    let b = run("b.csv", "3", "11");
    let c = run("c.csv", "2", "12");
    assert_eq!(a, b);
    assert_ne!(a, c);
    assert!(!dir.path().join("ignored.csv").exists());
    let rows = parse(&a, Format::Csv).unwrap();
    assert_eq!(rows.len(), 2 * 2 * 2 * 2);
    assert!(rows.iter().all(|r| r.n_samples == 2000));
    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("b.csv.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["workers"], 3);
}

#[test]
fn worker_count_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "zero.toml", &format!("{ZERO_SWEEP}workers = 1\n"));
    let run = |extra: &[&str]| {
        let mut args = vec!["sweep-time", "--config", cfg.as_str()];
        args.extend_from_slice(extra);
        let o = Command::new(env!("CARGO_BIN_EXE_quadsense"))
            .args(&args)
            .current_dir(dir.path())
            .env(quadsense_cli::WORKERS_ENV, "2")
            .output()
            .unwrap();
        assert_eq!(o.status.code(), Some(0));
        let m: serde_json::Value =
            serde_json::from_slice(&std::fs::read(dir.path().join("zero.csv.manifest.json")).unwrap()).unwrap();
        m["workers"].as_u64().unwrap()
    };
    assert_eq!(run(&[]), 2);
    assert_eq!(run(&["--workers", "3"]), 3);
}

#[test]
fn search_writes_trace_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "s.toml",
        "channel = 'gaussian'\nT = 1.0\np = 0.5\nlambda0 = 5\nlambda1 = 10\nsamples = 2000\nout = 's.csv'\n[search]\nmetric = 'mi_bits'\ngrid_resolution = 3\nrefine_iters = 2\n",
    );
    let out = quadsense(dir.path(), &["search", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = parse(&std::fs::read(dir.path().join("s.csv")).unwrap(), Format::Csv).unwrap();
    assert!(rows.len() >= 10);
    assert!(rows.iter().all(|r| r.scheme.starts_with("conjecture(")));
    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("s.csv.manifest.json")).unwrap()).unwrap();
    let best = manifest["searches"][0]["result"]["best_estimate"]["value"].as_f64().unwrap();
    let max = rows.iter().map(|r| r.value).fold(f64::MIN, f64::max);
    assert_eq!(best, max);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    // usage: mode declared in the file disagrees with the subcommand
    let cfg = write_config(dir.path(), "m.toml", &format!("mode = 'search'\n{ZERO_SWEEP}"));
    assert_eq!(quadsense(dir.path(), &["sweep-time", "--config", &cfg]).status.code(), Some(2));
    let bad = write_config(dir.path(), "bad.toml", "channel = 'poisson'\nschemes = []\n");
    assert_eq!(quadsense(dir.path(), &["sweep-time", "--config", &bad]).status.code(), Some(2));
    let cfg = write_config(dir.path(), "zero.toml", ZERO_SWEEP);
    assert_eq!(quadsense(dir.path(), &["sweep-time", "--config", &cfg, "--format", "xml"]).status.code(), Some(2));
    // I/O: missing config, unwritable output
    assert_eq!(quadsense(dir.path(), &["sweep-time", "--config", "missing.toml"]).status.code(), Some(3));
    std::fs::write(dir.path().join("file"), "").unwrap();
    assert_eq!(
        quadsense(dir.path(), &["sweep-time", "--config", &cfg, "--out", "file/sub/x.csv"]).status.code(),
        Some(3)
    );
}

#[test]
fn shipped_experiment_configs_validate() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../experiments");
    let mut seen = 0;
    for sub in ["", "test"] {
        for entry in std::fs::read_dir(root.join(sub)).unwrap() {
            let path = entry.unwrap().path();
            if path.extension().is_some_and(|e| e == "toml") {
                let cfg = quadsense_cli::RunConfig::from_toml(&std::fs::read_to_string(&path).unwrap()).unwrap();
                let run = cfg.validate(cfg.mode.expect("experiment configs declare a mode")).unwrap();
                assert_eq!(run.samples, if sub.is_empty() { 1_000_000 } else { 100_000 }, "{path:?}");
                seen += 1;
            }
        }
    }
    assert_eq!(seen, 8);
}
