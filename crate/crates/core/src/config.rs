//! Run configuration shared by every pipeline stage.

use crate::datagen::SamplerParams;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("malformed config {path}: {source}")]
    Parse { path: PathBuf, source: serde_json::Error },
    #[error("invalid config: {0}")]
    Invalid(String),
}

/// Records kept per generator and split.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Quotas {
    pub train_per_generator: usize,
    pub test_per_generator: usize,
}

/// Hyperparameters shared by the LSTM and TreeLSTM variants.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub embedding: usize,
    pub hidden1: usize,
    pub hidden2: usize,
    pub dense: usize,
    pub dropout: f64,
    pub epochs: usize,
    pub batch: usize,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            embedding: 32,
            hidden1: 64,
            hidden2: 32,
            dense: 32,
            dropout: 0.4,
            epochs: 30,
            batch: 32,
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub quotas: Quotas,
    pub sampler: SamplerParams,
    /// Step budget per integration call.
    pub budget: usize,
    /// Integrands larger than this (tree node count) are skipped.
    pub node_cap: usize,
    pub model: ModelConfig,
    /// Root directory for every artifact.
    pub out: PathBuf,
    /// Worker threads; `None` uses all available cores. Never affects outputs.
    #[serde(default)]
    pub workers: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 1,
            quotas: Quotas { train_per_generator: 1500, test_per_generator: 300 },
            sampler: SamplerParams::default(),
            budget: crate::calculus::DEFAULT_BUDGET,
            node_cap: 200,
            model: ModelConfig::default(),
            out: PathBuf::from("out"),
            workers: None,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Read { path: path.to_path_buf(), source })?;
        let cfg: RunConfig = serde_json::from_str(&text)
            .map_err(|source| ConfigError::Parse { path: path.to_path_buf(), source })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: &str| Err(ConfigError::Invalid(m.to_string()));
        if self.quotas.train_per_generator == 0 || self.quotas.test_per_generator == 0 {
            return bad("generator quotas must be positive");
        }
        if self.budget == 0 {
            return bad("step budget must be positive");
        }
        if self.node_cap == 0 {
            return bad("node cap must be positive");
        }
        if self.workers == Some(0) {
            return bad("worker count must be positive");
        }
        self.sampler.validate().map_err(ConfigError::Invalid)?;
        let m = &self.model;
        if [m.embedding, m.hidden1, m.hidden2, m.dense, m.epochs, m.batch].contains(&0) {
            return bad("model sizes, epochs and batch must be positive");
        }
        if !(0.0..1.0).contains(&m.dropout) {
            return bad("dropout must lie in [0, 1)");
        }
        if !(m.lr >= 0.0 && m.lr.is_finite()) {
            return bad("learning rate must be finite and non-negative");
        }
        if !((0.0..1.0).contains(&m.beta1) && (0.0..1.0).contains(&m.beta2)) {
            return bad("Adam betas must lie in [0, 1)");
        }
        Ok(())
    }

    /// Hash of everything that influences artifact contents. Paths and the
    /// worker count are excluded.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.out = PathBuf::new();
        c.workers = None;
        let text = serde_json::to_string(&c).expect("config serializes");
        hex::encode(Sha256::digest(text.as_bytes()))
    }

    /// Thread pool honoring `workers`.
    pub fn pool(&self) -> rayon::ThreadPool {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(n) = self.workers {
            b = b.num_threads(n);
        }
        b.build().expect("thread pool")
    }
}
