use intsel::config::{ModelConfig, Quotas, RunConfig};
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn intsel(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_intsel")).args(args).env_remove("INTSEL_CONFIG").output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn tiny(out: &Path) -> RunConfig {
    RunConfig {
        seed: 3,
        quotas: Quotas { train_per_generator: 12, test_per_generator: 4 },
        model: ModelConfig { epochs: 1, embedding: 8, hidden1: 8, hidden2: 4, dense: 4, ..ModelConfig::default() },
        out: out.to_path_buf(),
        workers: Some(1),
        ..RunConfig::default()
    }
}

fn write_config(dir: &Path, cfg: &RunConfig) -> PathBuf {
    let p = dir.join("config.json");
    std::fs::write(&p, serde_json::to_string_pretty(cfg).unwrap()).unwrap();
    p
}

#[test]
fn full_pipeline_through_the_binary() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg = write_config(dir.path(), &tiny(&out));
    let c = cfg.to_str().unwrap();
    for args in [vec!["generate"], vec!["train"], vec!["eval"], vec!["report"]] {
        let mut full = vec!["--config", c];
        full.extend(args.iter().copied());
        let o = intsel(&full);
        assert_eq!(code(&o), 0, "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
    for f in [
        "corpus/train.jsonl",
        "corpus/test.jsonl",
        "corpus/manifest.json",
        "corpus/vocab.txt",
        "models/lstm.json",
        "models/treelstm.json",
        "models/lstm_loss.tsv",
        "models/treelstm_loss.tsv",
        "reports/eval.jsonl",
        "reports/table.txt",
        "reports/bars.tsv",
        "reports/summary.txt",
    ] {
        assert!(out.join(f).exists(), "{f}");
    }
    let table = std::fs::read_to_string(out.join("reports/table.txt")).unwrap();
    for name in ["oracle", "treelstm", "lstm", "baseline"] {
        assert!(table.contains(name), "{table}");
    }
}

#[test]
fn config_from_environment_and_flag_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &tiny(&dir.path().join("unused")));
    let out = dir.path().join("flagged");
    let o = Command::new(env!("CARGO_BIN_EXE_intsel"))
        .args(["--out", out.to_str().unwrap(), "generate"])
        .env("INTSEL_CONFIG", &cfg)
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.join("corpus/manifest.json").exists());
    assert!(!dir.path().join("unused").exists());
}

#[test]
fn configuration_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.json");
    assert_eq!(code(&intsel(&["--config", missing.to_str().unwrap(), "generate"])), 2);
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"seed\": 1}").unwrap();
    assert_eq!(code(&intsel(&["--config", bad.to_str().unwrap(), "generate"])), 2);
    let cfg = write_config(dir.path(), &tiny(&dir.path().join("o")));
    assert_eq!(code(&intsel(&["--config", cfg.to_str().unwrap(), "--workers", "0", "generate"])), 2);
}

#[test]
fn data_errors_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg = write_config(dir.path(), &tiny(&out));
    let c = cfg.to_str().unwrap();
    // nothing generated yet
    assert_eq!(code(&intsel(&["--config", c, "train", "--model", "lstm"])), 3);
    assert_eq!(code(&intsel(&["--config", c, "generate"])), 0);
    // refuses to clobber without --overwrite
    assert_eq!(code(&intsel(&["--config", c, "generate"])), 3);
    assert_eq!(code(&intsel(&["--config", c, "--overwrite", "generate"])), 0);
    // a different seed is a different provenance
    assert_eq!(code(&intsel(&["--config", c, "--seed", "99", "train", "--model", "lstm"])), 3);
    assert_eq!(code(&intsel(&["--config", c, "train", "--model", "lstm"])), 0);
    // a tampered vocabulary is refused
    let vocab = out.join("corpus/vocab.txt");
    let mut text = std::fs::read_to_string(&vocab).unwrap();
    text.push_str("EXTRA\n");
    std::fs::write(&vocab, text).unwrap();
    assert_eq!(code(&intsel(&["--config", c, "eval"])), 3);
}

#[test]
fn numeric_abort_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = tiny(&dir.path().join("out"));
    cfg.model.lr = 1e300;
    cfg.model.epochs = 3;
    let p = write_config(dir.path(), &cfg);
    let c = p.to_str().unwrap();
    assert_eq!(code(&intsel(&["--config", c, "generate"])), 0);
    let o = intsel(&["--config", c, "train", "--model", "treelstm"]);
    assert_eq!(code(&o), 4, "{}", String::from_utf8_lossy(&o.stderr));
}
