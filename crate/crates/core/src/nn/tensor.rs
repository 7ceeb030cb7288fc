//! Dense row-major tensors and the few kernels the models need.

use rand::Rng;
use serde::{Deserialize, Serialize};

/// A named-by-position block of parameters or gradients.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tensor {
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(shape: &[usize]) -> Tensor {
        Tensor { shape: shape.to_vec(), data: vec![0.0; shape.iter().product()] }
    }

    /// Uniform in `[-bound, bound]`.
    pub fn uniform(shape: &[usize], bound: f64, rng: &mut impl Rng) -> Tensor {
        let n = shape.iter().product();
        Tensor { shape: shape.to_vec(), data: (0..n).map(|_| rng.gen_range(-bound..=bound)).collect() }
    }

    pub fn zeros_like(&self) -> Tensor {
        Tensor::zeros(&self.shape)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn fill(&mut self, v: f64) {
        self.data.iter_mut().for_each(|d| *d = v);
    }

    /// Row `r` of a matrix.
    pub fn row(&self, r: usize) -> &[f64] {
        let c = self.shape[1];
        &self.data[r * c..(r + 1) * c]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        let c = self.shape[1];
        &mut self.data[r * c..(r + 1) * c]
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0f64; 4];
    let ca = a.chunks_exact(4);
    let cb = b.chunks_exact(4);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for (x, y) in ra.iter().zip(rb) {
        s += x * y;
    }
    s
}

#[inline]
pub fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

/// `y += M[rows] x` for the row block `rows` of a row-major matrix with
/// `cols` columns.
#[inline]
pub fn matvec_add(y: &mut [f64], m: &[f64], cols: usize, row0: usize, x: &[f64]) {
    for (r, yr) in y.iter_mut().enumerate() {
        let off = (row0 + r) * cols;
        *yr += dot(&m[off..off + cols], x);
    }
}

/// `y += M[rows]^T v`.
#[inline]
pub fn matvec_t_add(y: &mut [f64], m: &[f64], cols: usize, row0: usize, v: &[f64]) {
    for (r, &vr) in v.iter().enumerate() {
        if vr != 0.0 {
            let off = (row0 + r) * cols;
            axpy(y, vr, &m[off..off + cols]);
        }
    }
}

/// `G[rows] += v x^T`.
#[inline]
pub fn outer_add(g: &mut [f64], cols: usize, row0: usize, v: &[f64], x: &[f64]) {
    for (r, &vr) in v.iter().enumerate() {
        if vr != 0.0 {
            let off = (row0 + r) * cols;
            axpy(&mut g[off..off + cols], vr, x);
        }
    }
}

#[inline]
pub fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}
