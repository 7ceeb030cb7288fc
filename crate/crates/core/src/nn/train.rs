//! Binary-relevance training with Adam, prediction and checkpoints.

use super::stack::{dropout_mask, loss_bce, CellKind, ClassifierStack, Dims, Input};
use super::tensor::Tensor;
use super::NnError;
use crate::calculus::SubAlgorithmId;
use crate::config::ModelConfig;
use crate::encode::{encode_sequence, encode_tree, Vocabulary};
use crate::expr::{ExprId, ExprStore};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Checkpoint container tag.
pub const CHECKPOINT_FORMAT: &str = "intsel-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

/// Bounds of the positive-class loss weight `#neg / #pos`.
pub const POS_WEIGHT_RANGE: (f64, f64) = (1.0, 10.0);

const ADAM_EPS: f64 = 1e-8;

/// Random streams: initialization and training of classifier `j` use
/// streams `j` and `TRAIN_STREAM + j` of the run seed.
const TRAIN_STREAM: u64 = 1 << 32;

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// One independent classifier per sub-algorithm, in
/// [`SubAlgorithmId::ALL`] order.
#[derive(Clone, Debug, PartialEq)]
pub struct BinaryRelevanceModel {
    pub kind: CellKind,
    pub classifiers: Vec<ClassifierStack>,
}

/// A training example: model input and one label per sub-algorithm.
#[derive(Clone, Debug)]
pub struct Example {
    pub input: Input,
    pub labels: Vec<u8>,
}

/// Per-classifier training results.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainReport {
    /// Mean unweighted train BCE per epoch, one curve per classifier.
    pub loss_curves: Vec<Vec<f64>>,
    pub positive_weights: Vec<f64>,
}

/// The model input of `e` for a given cell kind.
pub fn model_encoding(kind: CellKind, s: &ExprStore, e: ExprId, v: &Vocabulary) -> Input {
    match kind {
        CellKind::Lstm => Input::sequence(&encode_sequence(s, e, v)),
        CellKind::Treelstm => Input::tree(&encode_tree(s, e, v)),
    }
}

impl BinaryRelevanceModel {
    pub fn init(kind: CellKind, dims: Dims, seed: u64) -> BinaryRelevanceModel {
        let classifiers = (0..SubAlgorithmId::ALL.len())
            .map(|j| ClassifierStack::init(dims, &mut stream_rng(seed, j as u64)))
            .collect();
        BinaryRelevanceModel { kind, classifiers }
    }

    pub fn zeros(kind: CellKind, dims: Dims) -> BinaryRelevanceModel {
        BinaryRelevanceModel { kind, classifiers: vec![ClassifierStack::zeros(dims); SubAlgorithmId::ALL.len()] }
    }

    pub fn dims(&self) -> Dims {
        self.classifiers[0].dims
    }

    /// Evaluation-mode probability per sub-algorithm.
    pub fn predict(&self, input: &Input) -> Result<Vec<f64>, NnError> {
        self.classifiers.iter().map(|c| c.forward(input, super::Mode::Eval)).collect()
    }

    /// Probabilities for an expression, encoded for this model's cell kind.
    pub fn predict_expr(&self, s: &ExprStore, e: ExprId, v: &Vocabulary) -> Result<Vec<f64>, NnError> {
        self.predict(&model_encoding(self.kind, s, e, v))
    }
}

/// Adam state mirroring a stack's tensors.
struct Adam {
    m: Vec<Tensor>,
    v: Vec<Tensor>,
    t: i32,
}

impl Adam {
    fn new(p: &ClassifierStack) -> Adam {
        let zeros: Vec<Tensor> = p.tensors().into_iter().map(|(_, t)| t.zeros_like()).collect();
        Adam { m: zeros.clone(), v: zeros, t: 0 }
    }

    fn step(&mut self, p: &mut ClassifierStack, g: &mut ClassifierStack, cfg: &ModelConfig) {
        self.t += 1;
        let (b1, b2) = (cfg.beta1, cfg.beta2);
        let c1 = 1.0 - b1.powi(self.t);
        let c2 = 1.0 - b2.powi(self.t);
        for (((pt, gt), mt), vt) in p.tensors_mut().into_iter().zip(g.tensors_mut()).zip(&mut self.m).zip(&mut self.v) {
            for (((w, gv), m), v) in pt.data.iter_mut().zip(&gt.data).zip(&mut mt.data).zip(&mut vt.data) {
                *m = b1 * *m + (1.0 - b1) * gv;
                *v = b2 * *v + (1.0 - b2) * gv * gv;
                *w -= cfg.lr * (*m / c1) / ((*v / c2).sqrt() + ADAM_EPS);
            }
        }
    }
}

/// Positive-class weight for one label column.
pub fn positive_weight(examples: &[Example], j: usize) -> f64 {
    let pos = examples.iter().filter(|e| e.labels[j] == 1).count();
    let neg = examples.len() - pos;
    if pos == 0 {
        return POS_WEIGHT_RANGE.0;
    }
    (neg as f64 / pos as f64).clamp(POS_WEIGHT_RANGE.0, POS_WEIGHT_RANGE.1)
}

/// Trains every classifier of `model` independently (in parallel on
/// `pool`). Deterministic for a fixed seed regardless of the pool size.
pub fn train(
    model: &mut BinaryRelevanceModel,
    examples: &[Example],
    cfg: &ModelConfig,
    seed: u64,
    pool: &rayon::ThreadPool,
) -> Result<TrainReport, NnError> {
    for ex in examples {
        model.classifiers[0].check_input(&ex.input)?;
    }
    let results: Vec<Result<Trained, NnError>> = pool.install(|| {
        model
            .classifiers
            .par_iter()
            .enumerate()
            .map(|(j, stack)| train_one(stack.clone(), j, examples, cfg, seed))
            .collect()
    });
    let mut report = TrainReport { loss_curves: Vec::new(), positive_weights: Vec::new() };
    for (j, r) in results.into_iter().enumerate() {
        let (stack, curve, w) = r?;
        model.classifiers[j] = stack;
        report.loss_curves.push(curve);
        report.positive_weights.push(w);
    }
    Ok(report)
}

/// Trained parameters, loss curve and positive weight of one classifier.
type Trained = (ClassifierStack, Vec<f64>, f64);

fn train_one(
    mut stack: ClassifierStack,
    j: usize,
    examples: &[Example],
    cfg: &ModelConfig,
    seed: u64,
) -> Result<Trained, NnError> {
    let alg = SubAlgorithmId::ALL[j];
    let mut rng = stream_rng(seed, TRAIN_STREAM + j as u64);
    let w_pos = positive_weight(examples, j);
    let mut adam = Adam::new(&stack);
    let mut grad = ClassifierStack::zeros(stack.dims);
    let mut order: Vec<usize> = (0..examples.len()).collect();
    let mut curve = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for batch in order.chunks(cfg.batch) {
            grad.tensors_mut().into_iter().for_each(|t| t.fill(0.0));
            let scale = 1.0 / batch.len() as f64;
            for &i in batch {
                let ex = &examples[i];
                let y = f64::from(ex.labels[j]);
                let mask = dropout_mask(stack.dims.h2, cfg.dropout, &mut rng);
                let tr = stack.trace(&ex.input, Some(mask));
                total += loss_bce(tr.p, y);
                let w = if ex.labels[j] == 1 { w_pos } else { 1.0 };
                stack.backward(&ex.input, &tr, y, w * scale, &mut grad);
            }
            if !grad.tensors().iter().all(|(_, t)| t.data.iter().all(|v| v.is_finite())) {
                return Err(NnError::NonFinite { classifier: alg, epoch });
            }
            adam.step(&mut stack, &mut grad, cfg);
        }
        let mean = total / examples.len().max(1) as f64;
        if !mean.is_finite() {
            return Err(NnError::NonFinite { classifier: alg, epoch });
        }
        curve.push(mean);
    }
    Ok((stack, curve, w_pos))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NamedTensor {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassifierFile {
    pub algorithm: SubAlgorithmId,
    pub positive_weight: f64,
    pub loss_curve: Vec<f64>,
    pub tensors: Vec<NamedTensor>,
}

/// Versioned checkpoint: provenance, shapes and every parameter.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub kind: CellKind,
    pub config_hash: String,
    pub vocab_hash: String,
    pub vocab_size: usize,
    pub model: ModelConfig,
    pub classifiers: Vec<ClassifierFile>,
}

impl Checkpoint {
    pub fn new(
        model: &BinaryRelevanceModel,
        report: &TrainReport,
        cfg: &ModelConfig,
        config_hash: String,
        vocab_hash: String,
    ) -> Checkpoint {
        let classifiers = model
            .classifiers
            .iter()
            .enumerate()
            .map(|(j, c)| ClassifierFile {
                algorithm: SubAlgorithmId::ALL[j],
                positive_weight: report.positive_weights[j],
                loss_curve: report.loss_curves[j].clone(),
                tensors: c
                    .tensors()
                    .into_iter()
                    .map(|(name, t)| NamedTensor { name: name.to_string(), shape: t.shape.clone(), data: t.data.clone() })
                    .collect(),
            })
            .collect();
        Checkpoint {
            format: CHECKPOINT_FORMAT.to_string(),
            version: CHECKPOINT_VERSION,
            kind: model.kind,
            config_hash,
            vocab_hash,
            vocab_size: model.dims().vocab,
            model: cfg.clone(),
            classifiers,
        }
    }

    /// Rebuilds the model, checking every tensor's name and shape against
    /// the recorded configuration.
    pub fn model(&self) -> Result<BinaryRelevanceModel, NnError> {
        let bad = |m: String| Err(NnError::Checkpoint(m));
        if self.format != CHECKPOINT_FORMAT || self.version != CHECKPOINT_VERSION {
            return bad(format!("unsupported container {} v{}", self.format, self.version));
        }
        if self.classifiers.len() != SubAlgorithmId::ALL.len() {
            return bad(format!("expected {} classifiers, found {}", SubAlgorithmId::ALL.len(), self.classifiers.len()));
        }
        let dims = Dims::new(self.vocab_size, &self.model);
        let mut model = BinaryRelevanceModel::zeros(self.kind, dims);
        for (j, (file, stack)) in self.classifiers.iter().zip(&mut model.classifiers).enumerate() {
            if file.algorithm != SubAlgorithmId::ALL[j] {
                return bad(format!("classifier {j} is {}, expected {}", file.algorithm, SubAlgorithmId::ALL[j]));
            }
            let names: Vec<&str> = stack.tensors().into_iter().map(|(n, _)| n).collect();
            if file.tensors.len() != names.len() {
                return bad(format!("classifier {j} has {} tensors, expected {}", file.tensors.len(), names.len()));
            }
            for ((slot, name), saved) in stack.tensors_mut().into_iter().zip(names).zip(&file.tensors) {
                if saved.name != name || saved.shape != slot.shape || saved.data.len() != slot.data.len() {
                    return bad(format!("tensor {} of classifier {j} does not match {name} {:?}", saved.name, slot.shape));
                }
                slot.data.copy_from_slice(&saved.data);
            }
        }
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<(), NnError> {
        let text = serde_json::to_string(self).expect("checkpoint serializes");
        std::fs::write(path, text).map_err(|source| NnError::Io { path: path.display().to_string(), source })
    }

    pub fn load(path: &Path) -> Result<Checkpoint, NnError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| NnError::Io { path: path.display().to_string(), source })?;
        serde_json::from_str(&text).map_err(|e| NnError::Checkpoint(format!("{}: {e}", path.display())))
    }
}
