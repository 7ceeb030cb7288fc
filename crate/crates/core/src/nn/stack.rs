//! One binary classifier: embedding, two recurrent layers, dropout on the
//! second layer's output, a rectified dense layer and a sigmoid unit.

use super::cell::{lstm_backward, lstm_forward, tree_backward, tree_forward, CellParams, LayerCache};
use super::tensor::{dot, matvec_add, matvec_t_add, outer_add, sigmoid, Tensor};
use super::NnError;
use crate::config::ModelConfig;
use crate::encode::{TokenSequence, TreeEncoding};
use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

/// Recurrent cell type of a stack.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CellKind {
    Lstm,
    Treelstm,
}

impl CellKind {
    pub const ALL: [CellKind; 2] = [CellKind::Lstm, CellKind::Treelstm];

    pub fn name(self) -> &'static str {
        match self {
            CellKind::Lstm => "lstm",
            CellKind::Treelstm => "treelstm",
        }
    }
}

/// Layer sizes of a stack.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Dims {
    pub vocab: usize,
    pub emb: usize,
    pub h1: usize,
    pub h2: usize,
    pub dense: usize,
}

impl Dims {
    pub fn new(vocab: usize, m: &ModelConfig) -> Dims {
        Dims { vocab, emb: m.embedding, h1: m.hidden1, h2: m.hidden2, dense: m.dense }
    }
}

/// Parameters of one classifier. Gradients use the same type.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassifierStack {
    pub dims: Dims,
    pub emb: Tensor,
    pub l1: CellParams,
    pub l2: CellParams,
    pub dense_w: Tensor,
    pub dense_b: Tensor,
    pub out_w: Tensor,
    pub out_b: Tensor,
}

/// Evaluation is deterministic; training draws a fresh dropout mask.
pub enum Mode<'a> {
    Eval,
    Train { dropout: f64, rng: &'a mut dyn RngCore },
}

/// A model input in evaluation order: every step's predecessors come
/// before it and the last step feeds the classifier head.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Input {
    Sequence(Vec<u32>),
    Tree { ids: Vec<u32>, children: Vec<Vec<usize>> },
}

impl Input {
    pub fn sequence(seq: &TokenSequence) -> Input {
        Input::Sequence(seq.ids.clone())
    }

    /// Reverses the pre-order so that children precede parents and the
    /// root comes last.
    pub fn tree(t: &TreeEncoding) -> Input {
        let n = t.len();
        let ids = t.ids.iter().rev().copied().collect();
        let children = (0..n).rev().map(|i| t.children[i].iter().map(|&c| n - 1 - c).collect()).collect();
        Input::Tree { ids, children }
    }

    pub fn ids(&self) -> &[u32] {
        match self {
            Input::Sequence(ids) | Input::Tree { ids, .. } => ids,
        }
    }
}

/// Everything the backward pass needs from one forward pass.
pub struct Trace {
    xs: Vec<f64>,
    c1: LayerCache,
    c2: LayerCache,
    mask: Vec<f64>,
    a: Vec<f64>,
    zd: Vec<f64>,
    r: Vec<f64>,
    pub p: f64,
}

/// Dropout mask with inverted scaling: each unit is kept with probability
/// `1 - rate` and scaled by `1 / (1 - rate)`.
pub fn dropout_mask(n: usize, rate: f64, rng: &mut (impl Rng + ?Sized)) -> Vec<f64> {
    let keep = 1.0 - rate;
    (0..n).map(|_| if rng.gen::<f64>() < keep { 1.0 / keep } else { 0.0 }).collect()
}

/// Binary cross-entropy with the probability clamped to `[1e-7, 1 - 1e-7]`.
pub fn loss_bce(p: f64, y: f64) -> f64 {
    let p = p.clamp(1e-7, 1.0 - 1e-7);
    -(y * p.ln() + (1.0 - y) * (1.0 - p).ln())
}

impl ClassifierStack {
    pub fn zeros(dims: Dims) -> ClassifierStack {
        ClassifierStack {
            dims,
            emb: Tensor::zeros(&[dims.vocab, dims.emb]),
            l1: CellParams::zeros(dims.emb, dims.h1),
            l2: CellParams::zeros(dims.h1, dims.h2),
            dense_w: Tensor::zeros(&[dims.dense, dims.h2]),
            dense_b: Tensor::zeros(&[dims.dense]),
            out_w: Tensor::zeros(&[1, dims.dense]),
            out_b: Tensor::zeros(&[1]),
        }
    }

    /// Every matrix uniform in `+-1/sqrt(h)` with `h` its output width;
    /// forget biases one, other biases zero.
    pub fn init(dims: Dims, rng: &mut impl Rng) -> ClassifierStack {
        let emb = Tensor::uniform(&[dims.vocab, dims.emb], 1.0 / (dims.emb as f64).sqrt(), rng);
        let l1 = CellParams::init(dims.emb, dims.h1, rng);
        let l2 = CellParams::init(dims.h1, dims.h2, rng);
        let dense_w = Tensor::uniform(&[dims.dense, dims.h2], 1.0 / (dims.dense as f64).sqrt(), rng);
        let out_w = Tensor::uniform(&[1, dims.dense], 1.0, rng);
        ClassifierStack {
            dims,
            emb,
            l1,
            l2,
            dense_w,
            dense_b: Tensor::zeros(&[dims.dense]),
            out_w,
            out_b: Tensor::zeros(&[1]),
        }
    }

    /// Named parameter blocks in a fixed order.
    pub fn tensors(&self) -> Vec<(&'static str, &Tensor)> {
        vec![
            ("embedding", &self.emb),
            ("layer1.w", &self.l1.w),
            ("layer1.u", &self.l1.u),
            ("layer1.b", &self.l1.b),
            ("layer2.w", &self.l2.w),
            ("layer2.u", &self.l2.u),
            ("layer2.b", &self.l2.b),
            ("dense.w", &self.dense_w),
            ("dense.b", &self.dense_b),
            ("output.w", &self.out_w),
            ("output.b", &self.out_b),
        ]
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Tensor> {
        vec![
            &mut self.emb,
            &mut self.l1.w,
            &mut self.l1.u,
            &mut self.l1.b,
            &mut self.l2.w,
            &mut self.l2.u,
            &mut self.l2.b,
            &mut self.dense_w,
            &mut self.dense_b,
            &mut self.out_w,
            &mut self.out_b,
        ]
    }

    pub fn param_count(&self) -> usize {
        self.tensors().iter().map(|(_, t)| t.len()).sum()
    }

    pub fn check_input(&self, input: &Input) -> Result<(), NnError> {
        let ids = input.ids();
        if ids.is_empty() {
            return Err(NnError::EmptyInput);
        }
        if let Some(&bad) = ids.iter().find(|&&i| i as usize >= self.dims.vocab) {
            return Err(NnError::TokenOutOfRange { id: bad, vocab: self.dims.vocab });
        }
        Ok(())
    }

    /// Probability for a sequence input under the LSTM recurrence.
    pub fn forward_sequence(&self, seq: &TokenSequence, mode: Mode<'_>) -> Result<f64, NnError> {
        self.forward(&Input::sequence(seq), mode)
    }

    /// Probability for a tree input under the child-sum recurrence.
    pub fn forward_tree(&self, tree: &TreeEncoding, mode: Mode<'_>) -> Result<f64, NnError> {
        self.forward(&Input::tree(tree), mode)
    }

    pub fn forward(&self, input: &Input, mode: Mode<'_>) -> Result<f64, NnError> {
        self.check_input(input)?;
        let mask = match mode {
            Mode::Eval => None,
            Mode::Train { dropout, rng } => Some(dropout_mask(self.dims.h2, dropout, rng)),
        };
        Ok(self.trace(input, mask).p)
    }

    /// Forward pass keeping activations. `mask` multiplies the second
    /// layer's final hidden state; `None` is evaluation mode.
    pub fn trace(&self, input: &Input, mask: Option<Vec<f64>>) -> Trace {
        let d = self.dims;
        let ids = input.ids();
        let steps = ids.len();
        let mut xs = Vec::with_capacity(steps * d.emb);
        for &id in ids {
            xs.extend_from_slice(self.emb.row(id as usize));
        }
        let (c1, c2) = match input {
            Input::Sequence(_) => {
                let c1 = lstm_forward(&self.l1, &xs, steps);
                let c2 = lstm_forward(&self.l2, &c1.h, steps);
                (c1, c2)
            }
            Input::Tree { children, .. } => {
                let c1 = tree_forward(&self.l1, &xs, children);
                let c2 = tree_forward(&self.l2, &c1.h, children);
                (c1, c2)
            }
        };
        let mask = mask.unwrap_or_else(|| vec![1.0; d.h2]);
        let a: Vec<f64> = c2.hidden(steps - 1, d.h2).iter().zip(&mask).map(|(h, m)| h * m).collect();
        let mut zd = self.dense_b.data.clone();
        matvec_add(&mut zd, &self.dense_w.data, d.h2, 0, &a);
        let r: Vec<f64> = zd.iter().map(|&z| z.max(0.0)).collect();
        let p = sigmoid(dot(&self.out_w.data, &r) + self.out_b.data[0]);
        Trace { xs, c1, c2, mask, a, zd, r, p }
    }

    /// Adds `weight * d loss_bce(p, y) / d params` into `g`. The gradient
    /// is zero where the loss clamp is active.
    pub fn backward(&self, input: &Input, tr: &Trace, y: f64, weight: f64, g: &mut ClassifierStack) {
        let d = self.dims;
        let steps = input.ids().len();
        let dz = if tr.p > 1e-7 && tr.p < 1.0 - 1e-7 { weight * (tr.p - y) } else { 0.0 };
        for (gw, r) in g.out_w.data.iter_mut().zip(&tr.r) {
            *gw += dz * r;
        }
        g.out_b.data[0] += dz;
        let dzd: Vec<f64> =
            self.out_w.data.iter().zip(&tr.zd).map(|(w, &z)| if z > 0.0 { w * dz } else { 0.0 }).collect();
        outer_add(&mut g.dense_w.data, d.h2, 0, &dzd, &tr.a);
        for (gb, v) in g.dense_b.data.iter_mut().zip(&dzd) {
            *gb += v;
        }
        let mut da = vec![0.0; d.h2];
        matvec_t_add(&mut da, &self.dense_w.data, d.h2, 0, &dzd);
        let mut dh2 = vec![0.0; steps * d.h2];
        for (k, v) in dh2[(steps - 1) * d.h2..].iter_mut().enumerate() {
            *v = da[k] * tr.mask[k];
        }
        let dxs = match input {
            Input::Sequence(_) => {
                let dh1 = lstm_backward(&self.l2, &mut g.l2, &tr.c1.h, &tr.c2, &dh2);
                lstm_backward(&self.l1, &mut g.l1, &tr.xs, &tr.c1, &dh1)
            }
            Input::Tree { children, .. } => {
                let dh1 = tree_backward(&self.l2, &mut g.l2, &tr.c1.h, children, &tr.c2, &dh2);
                tree_backward(&self.l1, &mut g.l1, &tr.xs, children, &tr.c1, &dh1)
            }
        };
        for (t, &id) in input.ids().iter().enumerate() {
            let row = g.emb.row_mut(id as usize);
            for (a, b) in row.iter_mut().zip(&dxs[t * d.emb..(t + 1) * d.emb]) {
                *a += b;
            }
        }
    }
}
