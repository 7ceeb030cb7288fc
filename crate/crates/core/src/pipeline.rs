//! The `generate`, `train`, `eval` and `report` stages over one output
//! directory.
//!
//! Layout under `out`:
//!
//! ```text
//! corpus/  train.jsonl test.jsonl manifest.json vocab.txt
//! models/  lstm.json treelstm.json lstm_loss.tsv treelstm_loss.tsv
//! reports/ eval.jsonl table.txt bars.tsv summary.txt
//! ```
//!
//! Every stage checks that its inputs come from the same configuration
//! (by hash) and the same vocabulary.

use crate::calculus::SubAlgorithmId;
use crate::config::{ConfigError, RunConfig};
use crate::datagen::{build_corpus, read_manifest, read_records, write_corpus, CorpusError, IntegrandRecord, Manifest};
use crate::encode::{build_vocabulary, model_input, EncodeError, Vocabulary};
use crate::expr::ExprStore;
use crate::nn::{model_encoding, train, BinaryRelevanceModel, CellKind, Checkpoint, Dims, Example, NnError};
use crate::select::{baseline_meta, compare, oracle, render_bars, render_table, select_with_fallback, EvalReport};
use rayon::prelude::*;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Encode(#[from] EncodeError),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error("{0} already exists; pass --overwrite to replace it")]
    Collision(PathBuf),
    #[error("missing input {0}")]
    Missing(PathBuf),
    #[error("mixed provenance: {0}")]
    Provenance(String),
    #[error("io error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("malformed report {path}: {source}")]
    Report { path: PathBuf, source: serde_json::Error },
}

impl PipelineError {
    /// Process exit code: 2 configuration, 3 data, 4 numeric abort.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) => 2,
            PipelineError::Nn(NnError::NonFinite { .. }) => 4,
            _ => 3,
        }
    }
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io { path: path.to_path_buf(), source }
}

/// Artifact paths under an output root.
#[derive(Clone, Debug)]
pub struct Layout {
    pub root: PathBuf,
}

impl Layout {
    pub fn new(root: &Path) -> Layout {
        Layout { root: root.to_path_buf() }
    }

    pub fn corpus(&self) -> PathBuf {
        self.root.join("corpus")
    }

    pub fn models(&self) -> PathBuf {
        self.root.join("models")
    }

    pub fn reports(&self) -> PathBuf {
        self.root.join("reports")
    }

    pub fn vocab(&self) -> PathBuf {
        self.corpus().join("vocab.txt")
    }

    pub fn checkpoint(&self, kind: CellKind) -> PathBuf {
        self.models().join(format!("{}.json", kind.name()))
    }

    pub fn loss_curve(&self, kind: CellKind) -> PathBuf {
        self.models().join(format!("{}_loss.tsv", kind.name()))
    }

    pub fn eval_reports(&self) -> PathBuf {
        self.reports().join("eval.jsonl")
    }
}

fn ensure_absent(paths: &[PathBuf], overwrite: bool) -> Result<(), PipelineError> {
    match paths.iter().find(|p| p.exists()) {
        Some(p) if !overwrite => Err(PipelineError::Collision(p.clone())),
        _ => Ok(()),
    }
}

fn write(path: &Path, text: &str) -> Result<(), PipelineError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(io(dir))?;
    }
    std::fs::write(path, text).map_err(io(path))
}

/// Label frequencies as a text bar chart.
pub fn label_histogram(m: &Manifest) -> String {
    let mut out = format!("label frequencies over {} records\n", m.train_per_generator * 4 + m.test_per_generator * 4);
    let max = m.label_histogram.values().copied().max().unwrap_or(1).max(1);
    for alg in SubAlgorithmId::ALL {
        let n = m.label_histogram.get(&alg).copied().unwrap_or(0);
        let bar = "#".repeat((40 * n).div_ceil(max));
        let _ = writeln!(out, "{:<17} {:>6} {bar}", alg.name(), n);
    }
    let _ = writeln!(out, "multi-label records: {}", m.multi_label_records);
    let _ = writeln!(out, "portfolio disagreement: {:.3}", m.disagreement);
    out
}

/// Builds the corpus and vocabulary; returns the label histogram.
pub fn cmd_generate(cfg: &RunConfig, overwrite: bool) -> Result<String, PipelineError> {
    cfg.validate()?;
    let lay = Layout::new(&cfg.out);
    let dir = lay.corpus();
    let files = ["train.jsonl", "test.jsonl", "manifest.json", "vocab.txt"].map(|f| dir.join(f));
    ensure_absent(&files, overwrite)?;
    let mut corpus = build_corpus(cfg)?;
    let vocab = build_vocabulary(&corpus.train)?;
    corpus.manifest.vocab_hash = Some(vocab.hash());
    write_corpus(&dir, &corpus)?;
    vocab.save(&lay.vocab())?;
    let mut text = label_histogram(&corpus.manifest);
    let _ = writeln!(text, "vocabulary: {} tokens", vocab.len());
    Ok(text)
}

/// Corpus manifest and vocabulary, checked against `cfg` and each other.
fn load_inputs(cfg: &RunConfig) -> Result<(Manifest, Vocabulary), PipelineError> {
    let lay = Layout::new(&cfg.out);
    let mpath = lay.corpus().join("manifest.json");
    if !mpath.exists() {
        return Err(PipelineError::Missing(mpath));
    }
    let manifest = read_manifest(&lay.corpus())?;
    if manifest.config_hash != cfg.hash() {
        return Err(PipelineError::Provenance(format!(
            "corpus was generated with config {}, current config is {}",
            manifest.config_hash,
            cfg.hash()
        )));
    }
    if !lay.vocab().exists() {
        return Err(PipelineError::Missing(lay.vocab()));
    }
    let vocab = Vocabulary::load(&lay.vocab())?;
    if manifest.vocab_hash.as_deref() != Some(vocab.hash().as_str()) {
        return Err(PipelineError::Provenance("vocabulary file does not match the corpus manifest".into()));
    }
    Ok((manifest, vocab))
}

fn load_split(cfg: &RunConfig, name: &str) -> Result<Vec<IntegrandRecord>, PipelineError> {
    let path = Layout::new(&cfg.out).corpus().join(name);
    if !path.exists() {
        return Err(PipelineError::Missing(path));
    }
    Ok(read_records(&path)?)
}

/// Encodes records for one model kind.
pub fn examples(kind: CellKind, records: &[IntegrandRecord], v: &Vocabulary) -> Result<Vec<Example>, PipelineError> {
    records
        .iter()
        .map(|r| {
            let mut s = ExprStore::new();
            let e = model_input(&mut s, &r.integrand_prefix)?;
            Ok(Example { input: model_encoding(kind, &s, e, v), labels: r.labels.clone() })
        })
        .collect()
}

/// Trains one model kind on the train split; returns a short summary.
pub fn cmd_train(cfg: &RunConfig, kind: CellKind, overwrite: bool) -> Result<String, PipelineError> {
    cfg.validate()?;
    let lay = Layout::new(&cfg.out);
    ensure_absent(&[lay.checkpoint(kind), lay.loss_curve(kind)], overwrite)?;
    let (manifest, vocab) = load_inputs(cfg)?;
    let train_records = load_split(cfg, "train.jsonl")?;
    if build_vocabulary(&train_records)? != vocab {
        return Err(PipelineError::Provenance("vocabulary does not match the train split".into()));
    }
    let ex = examples(kind, &train_records, &vocab)?;
    let dims = Dims::new(vocab.len(), &cfg.model);
    let mut model = BinaryRelevanceModel::init(kind, dims, cfg.seed);
    let report = train(&mut model, &ex, &cfg.model, cfg.seed, &cfg.pool())?;
    let ck = Checkpoint::new(&model, &report, &cfg.model, manifest.config_hash.clone(), vocab.hash());
    std::fs::create_dir_all(lay.models()).map_err(io(&lay.models()))?;
    ck.save(&lay.checkpoint(kind))?;
    let mut tsv = format!("# config_hash {}\nalgorithm\tepoch\tloss\n", manifest.config_hash);
    let mut summary = format!("{} trained on {} records\n", kind.name(), ex.len());
    for (j, curve) in report.loss_curves.iter().enumerate() {
        let alg = SubAlgorithmId::ALL[j];
        for (e, l) in curve.iter().enumerate() {
            let _ = writeln!(tsv, "{}\t{}\t{l}", alg.name(), e + 1);
        }
        let first = curve.first().copied().unwrap_or(f64::NAN);
        let last = curve.last().copied().unwrap_or(f64::NAN);
        let _ = writeln!(summary, "{:<17} loss {first:.4} -> {last:.4}", alg.name());
    }
    write(&lay.loss_curve(kind), &tsv)?;
    Ok(summary)
}

/// Evaluates the oracle, each available checkpoint and the baseline on
/// the test split; returns the comparison table.
pub fn cmd_eval(cfg: &RunConfig, overwrite: bool) -> Result<String, PipelineError> {
    cfg.validate()?;
    let lay = Layout::new(&cfg.out);
    let outputs = [lay.eval_reports(), lay.reports().join("table.txt"), lay.reports().join("bars.tsv")];
    ensure_absent(&outputs, overwrite)?;
    let (manifest, vocab) = load_inputs(cfg)?;
    let test = load_split(cfg, "test.jsonl")?;
    let pool = cfg.pool();
    let mut rows = vec![("oracle".to_string(), false, test.iter().map(oracle).collect::<Vec<_>>())];
    for kind in [CellKind::Treelstm, CellKind::Lstm] {
        let path = lay.checkpoint(kind);
        if !path.exists() {
            continue;
        }
        let ck = Checkpoint::load(&path)?;
        if ck.config_hash != manifest.config_hash || ck.vocab_hash != vocab.hash() || ck.kind != kind {
            return Err(PipelineError::Provenance(format!("{} does not match the corpus", path.display())));
        }
        let model = ck.model()?;
        let ex = examples(kind, &test, &vocab)?;
        let probs: Vec<Vec<f64>> = pool.install(|| ex.par_iter().map(|e| model.predict(&e.input)).collect::<Result<_, _>>())?;
        let sel = test.iter().zip(&probs).map(|(r, p)| select_with_fallback(p, r)).collect();
        rows.push((kind.name().to_string(), true, sel));
    }
    rows.push(("baseline".to_string(), true, test.iter().map(baseline_meta).collect()));
    let reports = compare(&manifest.config_hash, &test, &rows);
    let mut jsonl = String::new();
    for r in &reports {
        jsonl.push_str(&serde_json::to_string(r).expect("report serializes"));
        jsonl.push('\n');
    }
    let table = format!("# config_hash {}\n{}", manifest.config_hash, render_table(&reports));
    write(&outputs[0], &jsonl)?;
    write(&outputs[1], &table)?;
    write(&outputs[2], &format!("# config_hash {}\n{}", manifest.config_hash, render_bars(&reports)))?;
    Ok(table)
}

pub fn read_reports(path: &Path) -> Result<Vec<EvalReport>, PipelineError> {
    let text = std::fs::read_to_string(path).map_err(io(path))?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(|source| PipelineError::Report { path: path.to_path_buf(), source }))
        .collect()
}

/// Human-readable summary of the corpus and the latest evaluation.
pub fn cmd_report(cfg: &RunConfig) -> Result<String, PipelineError> {
    cfg.validate()?;
    let lay = Layout::new(&cfg.out);
    let (manifest, vocab) = load_inputs(cfg)?;
    let mut text = format!("config_hash {}\n\n", manifest.config_hash);
    text.push_str(&label_histogram(&manifest));
    let _ = writeln!(text, "vocabulary: {} tokens\n", vocab.len());
    let path = lay.eval_reports();
    if path.exists() {
        let reports = read_reports(&path)?;
        if reports.iter().any(|r| r.config_hash != manifest.config_hash) {
            return Err(PipelineError::Provenance("evaluation reports come from another config".into()));
        }
        text.push_str(&render_table(&reports));
        for r in &reports {
            let _ = write!(text, "\n{} per generator:", r.strategy);
            for (g, c) in &r.per_generator {
                let _ = write!(text, " {g} {}/{}", c.exact_optimal, c.total);
            }
        }
        text.push('\n');
    } else {
        text.push_str("no evaluation reports yet\n");
    }
    write(&lay.reports().join("summary.txt"), &text)?;
    Ok(text)
}
