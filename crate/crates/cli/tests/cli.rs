use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn toy_config() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/toy/toy.toml")
}

fn run(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_chromanneal"))
        .arg("--config")
        .arg(toy_config())
        .arg("--out")
        .arg(out)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(out: &Path, args: &[&str]) -> String {
    let o = run(out, args);
    assert!(
        o.status.success(),
        "{args:?} failed:\n{}",
        String::from_utf8_lossy(&o.stderr)
    );
    String::from_utf8(o.stdout).unwrap()
}

#[test]
fn stats_writes_summary() {
    let dir = tempfile::tempdir().unwrap();
    let stdout = ok(dir.path(), &["stats"]);
    let line: serde_json::Value = serde_json::from_str(stdout.trim()).unwrap();
    assert_eq!(line["command"], "stats");
    assert_eq!(line["markers"], 4);
    let text = std::fs::read_to_string(dir.path().join("stats.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["mu"].as_array().unwrap().len(), 4);
}

#[test]
fn ingest_csv_has_one_line_per_nucleosome() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["ingest", "--format", "csv"]);
    let csv = std::fs::read_to_string(dir.path().join("incidence.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 100);
}

#[test]
fn sample_without_seed_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["sample"]);
    assert!(!o.status.success());
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("seed"), "{err}");
}

#[test]
fn learn_then_sweep_chain_strength() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["--seed", "7", "learn"]);
    ok(
        dir.path(),
        &[
            "--seed", "7", "sweep", "--axis", "JC", "--grid", "0.5:4:8", "--format", "svg",
        ],
    );
    let csv = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 8);
    assert!(rows[0].starts_with("JC,0.5,"), "{}", rows[0]);
    assert!(rows[7].starts_with("JC,4,"), "{}", rows[7]);
    assert!(rows.iter().all(|r| r.ends_with(",\"\"")), "a grid point failed:\n{csv}");
    assert!(dir.path().join("sweep.svg").exists());
}

#[test]
fn pipeline_is_byte_identical_across_runs() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [a.path(), b.path()] {
        ok(dir, &["--seed", "3", "learn"]);
        ok(dir, &["--seed", "3", "embed"]);
        ok(dir, &["--seed", "3", "sample"]);
        ok(dir, &["eval", "--format", "csv"]);
    }
    for f in [
        "model.json",
        "learn_trace.csv",
        "embedding.json",
        "chains.csv",
        "samples.jsonl",
        "samples.csv",
        "eval.json",
        "eval.csv",
    ] {
        let x = std::fs::read(a.path().join(f)).unwrap();
        let y = std::fs::read(b.path().join(f)).unwrap();
        assert!(x == y, "{f} differs between runs");
    }
}

#[test]
fn help_lists_every_field() {
    let o = Command::new(env!("CARGO_BIN_EXE_chromanneal"))
        .arg("--help")
        .output()
        .unwrap();
    assert!(o.status.success());
    let text = String::from_utf8_lossy(&o.stdout);
    for key in [
        "seed",
        "data.tracks",
        "model.threshold",
        "sampler.reverse_s_r",
        "hardware.chain_strength",
        "sweep.grid",
        "replicate.copies",
    ] {
        assert!(text.contains(key), "--help is missing {key}");
    }
}

#[test]
fn config_errors_list_every_field() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        dir.path(),
        &[
            "--set",
            "sampler.n_smpl=0",
            "--set",
            "hardware.chain_strength=-1",
            "stats",
        ],
    );
    assert!(!o.status.success());
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("sampler.n_smpl"), "{err}");
    assert!(err.contains("hardware.chain_strength"), "{err}");
}

#[test]
fn unknown_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["--set", "model.colour=3", "stats"]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("colour"));
}

#[test]
fn replicate_without_hardware() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["--seed", "2", "learn"]);
    let stdout = ok(
        dir.path(),
        &[
            "--seed",
            "2",
            "--set",
            "hardware.kind=none",
            "replicate",
            "--copies",
            "4",
        ],
    );
    let v: serde_json::Value = serde_json::from_str(stdout.trim()).unwrap();
    assert_eq!(v["copies"], 4);
    assert_eq!(v["reads"], 100);
}
