//! LSTM and child-sum TreeLSTM layers with hand-written backward passes.
//!
//! Both cells use one parameter layout. `w` is `4h x n_in` and `u` is
//! `4h x h` with gate rows in the order input, output, update, forget, so
//! the TreeLSTM's `i`, `o`, `u` gates form one contiguous block and its
//! per-child forget gate the last block.
//!
//! Sequence cell, step `t`:
//! `z = W x_t + U h_{t-1} + b`, `c_t = i*u + f*c_{t-1}`, `h_t = o*tanh(c_t)`.
//!
//! Tree cell, node `j` with children `k`:
//! `h~ = sum h_k`, `[i o u] = act(W x + U h~ + b)`,
//! `f_k = sigmoid(W_f x + U_f h_k + b_f)`, `c = i*u + sum f_k*c_k`,
//! `h = o*tanh(c)`.

use super::tensor::{matvec_add, matvec_t_add, outer_add, sigmoid, Tensor};
use rand::Rng;

#[derive(Clone, Debug, PartialEq)]
pub struct CellParams {
    pub h: usize,
    pub n_in: usize,
    pub w: Tensor,
    pub u: Tensor,
    pub b: Tensor,
}

impl CellParams {
    pub fn zeros(n_in: usize, h: usize) -> CellParams {
        CellParams {
            h,
            n_in,
            w: Tensor::zeros(&[4 * h, n_in]),
            u: Tensor::zeros(&[4 * h, h]),
            b: Tensor::zeros(&[4 * h]),
        }
    }

    /// Weights uniform in `+-1/sqrt(h)`, biases zero except the forget
    /// bias, which is one.
    pub fn init(n_in: usize, h: usize, rng: &mut impl Rng) -> CellParams {
        let bound = 1.0 / (h as f64).sqrt();
        let mut b = Tensor::zeros(&[4 * h]);
        b.data[3 * h..].iter_mut().for_each(|v| *v = 1.0);
        CellParams { h, n_in, w: Tensor::uniform(&[4 * h, n_in], bound, rng), u: Tensor::uniform(&[4 * h, h], bound, rng), b }
    }
}

/// Activations kept for the backward pass. All per-step arrays are
/// flattened `steps x width`.
#[derive(Clone, Debug, Default)]
pub struct LayerCache {
    pub steps: usize,
    /// `i, o, u, f` activations per step; unused for tree nodes' `f`.
    gates: Vec<f64>,
    c: Vec<f64>,
    tc: Vec<f64>,
    pub h: Vec<f64>,
    /// Tree only: children sums of hidden states.
    hsum: Vec<f64>,
    /// Tree only: forget activations per edge, in child-list order.
    fk: Vec<f64>,
}

impl LayerCache {
    pub fn hidden(&self, step: usize, h: usize) -> &[f64] {
        &self.h[step * h..(step + 1) * h]
    }
}

#[inline]
fn activate(z: &mut [f64], h: usize) {
    for (k, v) in z.iter_mut().enumerate() {
        *v = if (2 * h..3 * h).contains(&k) { v.tanh() } else { sigmoid(*v) };
    }
}

/// Runs the sequence cell over `xs` (`steps x n_in`).
pub fn lstm_forward(p: &CellParams, xs: &[f64], steps: usize) -> LayerCache {
    let (h, n) = (p.h, p.n_in);
    let mut cache = LayerCache {
        steps,
        gates: vec![0.0; steps * 4 * h],
        c: vec![0.0; steps * h],
        tc: vec![0.0; steps * h],
        h: vec![0.0; steps * h],
        ..Default::default()
    };
    for t in 0..steps {
        let z = &mut cache.gates[t * 4 * h..(t + 1) * 4 * h];
        z.copy_from_slice(&p.b.data);
        matvec_add(z, &p.w.data, n, 0, &xs[t * n..(t + 1) * n]);
        if t > 0 {
            matvec_add(z, &p.u.data, h, 0, &cache.h[(t - 1) * h..t * h]);
        }
        activate(z, h);
        for k in 0..h {
            let (i, o, u, f) = (z[k], z[h + k], z[2 * h + k], z[3 * h + k]);
            let prev = if t > 0 { cache.c[(t - 1) * h + k] } else { 0.0 };
            let c = i * u + f * prev;
            let tc = c.tanh();
            cache.c[t * h + k] = c;
            cache.tc[t * h + k] = tc;
            cache.h[t * h + k] = o * tc;
        }
    }
    cache
}

/// Backward pass of the sequence cell. `dh_ext` is the loss gradient with
/// respect to each step's hidden output; gradients are added into `g` and
/// the input gradient is returned (`steps x n_in`).
pub fn lstm_backward(p: &CellParams, g: &mut CellParams, xs: &[f64], cache: &LayerCache, dh_ext: &[f64]) -> Vec<f64> {
    let (h, n, steps) = (p.h, p.n_in, cache.steps);
    let mut dx = vec![0.0; steps * n];
    let mut dh_next = vec![0.0; h];
    let mut dc_next = vec![0.0; h];
    let mut dz = vec![0.0; 4 * h];
    for t in (0..steps).rev() {
        let z = &cache.gates[t * 4 * h..(t + 1) * 4 * h];
        for k in 0..h {
            let (i, o, u, f) = (z[k], z[h + k], z[2 * h + k], z[3 * h + k]);
            let tc = cache.tc[t * h + k];
            let dh = dh_ext[t * h + k] + dh_next[k];
            let dc = dc_next[k] + dh * o * (1.0 - tc * tc);
            let prev = if t > 0 { cache.c[(t - 1) * h + k] } else { 0.0 };
            dz[k] = dc * u * i * (1.0 - i);
            dz[h + k] = dh * tc * o * (1.0 - o);
            dz[2 * h + k] = dc * i * (1.0 - u * u);
            dz[3 * h + k] = dc * prev * f * (1.0 - f);
            dc_next[k] = dc * f;
        }
        let x = &xs[t * n..(t + 1) * n];
        outer_add(&mut g.w.data, n, 0, &dz, x);
        for (gb, d) in g.b.data.iter_mut().zip(&dz) {
            *gb += d;
        }
        matvec_t_add(&mut dx[t * n..(t + 1) * n], &p.w.data, n, 0, &dz);
        dh_next.iter_mut().for_each(|v| *v = 0.0);
        if t > 0 {
            outer_add(&mut g.u.data, h, 0, &dz, &cache.h[(t - 1) * h..t * h]);
            matvec_t_add(&mut dh_next, &p.u.data, h, 0, &dz);
        }
    }
    dx
}

/// Runs the tree cell. Node `j`'s children must all have indices below
/// `j`; the root is the last node.
pub fn tree_forward(p: &CellParams, xs: &[f64], children: &[Vec<usize>]) -> LayerCache {
    let (h, n) = (p.h, p.n_in);
    let steps = children.len();
    let edges: usize = children.iter().map(Vec::len).sum();
    let mut cache = LayerCache {
        steps,
        gates: vec![0.0; steps * 4 * h],
        c: vec![0.0; steps * h],
        tc: vec![0.0; steps * h],
        h: vec![0.0; steps * h],
        hsum: vec![0.0; steps * h],
        fk: vec![0.0; edges * h],
    };
    let mut edge = 0;
    let mut fbase = vec![0.0; h];
    for (j, kids) in children.iter().enumerate() {
        let x = &xs[j * n..(j + 1) * n];
        let mut hs = vec![0.0; h];
        for &k in kids {
            debug_assert!(k < j, "children precede parents");
            for (a, b) in hs.iter_mut().zip(&cache.h[k * h..(k + 1) * h]) {
                *a += b;
            }
        }
        let z = &mut cache.gates[j * 4 * h..(j + 1) * 4 * h];
        z[..3 * h].copy_from_slice(&p.b.data[..3 * h]);
        matvec_add(&mut z[..3 * h], &p.w.data, n, 0, x);
        matvec_add(&mut z[..3 * h], &p.u.data, h, 0, &hs);
        for (k, v) in z[..3 * h].iter_mut().enumerate() {
            *v = if k >= 2 * h { v.tanh() } else { sigmoid(*v) };
        }
        let mut c: Vec<f64> = (0..h).map(|k| z[k] * z[2 * h + k]).collect();
        if !kids.is_empty() {
            fbase.copy_from_slice(&p.b.data[3 * h..]);
            matvec_add(&mut fbase, &p.w.data, n, 3 * h, x);
        }
        for &k in kids {
            let f = &mut cache.fk[edge * h..(edge + 1) * h];
            f.copy_from_slice(&fbase);
            matvec_add(f, &p.u.data, h, 3 * h, &cache.h[k * h..(k + 1) * h]);
            for (m, fm) in f.iter_mut().enumerate() {
                *fm = sigmoid(*fm);
                c[m] += *fm * cache.c[k * h + m];
            }
            edge += 1;
        }
        for m in 0..h {
            let tc = c[m].tanh();
            cache.c[j * h + m] = c[m];
            cache.tc[j * h + m] = tc;
            cache.h[j * h + m] = z[h + m] * tc;
        }
        cache.hsum[j * h..(j + 1) * h].copy_from_slice(&hs);
    }
    cache
}

/// Backward pass of the tree cell; same contract as [`lstm_backward`].
pub fn tree_backward(
    p: &CellParams,
    g: &mut CellParams,
    xs: &[f64],
    children: &[Vec<usize>],
    cache: &LayerCache,
    dh_ext: &[f64],
) -> Vec<f64> {
    let (h, n, steps) = (p.h, p.n_in, cache.steps);
    let mut dx = vec![0.0; steps * n];
    let mut dh_acc = dh_ext.to_vec();
    let mut dc_acc = vec![0.0; steps * h];
    let mut first_edge = Vec::with_capacity(steps);
    let mut e = 0;
    for kids in children {
        first_edge.push(e);
        e += kids.len();
    }
    let mut dz = vec![0.0; 3 * h];
    let mut dc = vec![0.0; h];
    let mut dhs = vec![0.0; h];
    let mut dzf = vec![0.0; h];
    let mut dhk = vec![0.0; h];
    for j in (0..steps).rev() {
        let z = &cache.gates[j * 4 * h..(j + 1) * 4 * h];
        for k in 0..h {
            let (i, o, u) = (z[k], z[h + k], z[2 * h + k]);
            let tc = cache.tc[j * h + k];
            let dh = dh_acc[j * h + k];
            dc[k] = dc_acc[j * h + k] + dh * o * (1.0 - tc * tc);
            dz[k] = dc[k] * u * i * (1.0 - i);
            dz[h + k] = dh * tc * o * (1.0 - o);
            dz[2 * h + k] = dc[k] * i * (1.0 - u * u);
        }
        let x = &xs[j * n..(j + 1) * n];
        outer_add(&mut g.w.data, n, 0, &dz, x);
        outer_add(&mut g.u.data, h, 0, &dz, &cache.hsum[j * h..(j + 1) * h]);
        for (gb, d) in g.b.data[..3 * h].iter_mut().zip(&dz) {
            *gb += d;
        }
        let dxj = &mut dx[j * n..(j + 1) * n];
        matvec_t_add(dxj, &p.w.data, n, 0, &dz);
        if children[j].is_empty() {
            continue;
        }
        dhs.iter_mut().for_each(|v| *v = 0.0);
        matvec_t_add(&mut dhs, &p.u.data, h, 0, &dz);
        for (slot, &k) in children[j].iter().enumerate() {
            let eo = (first_edge[j] + slot) * h;
            let f = &cache.fk[eo..eo + h];
            for m in 0..h {
                dzf[m] = dc[m] * cache.c[k * h + m] * f[m] * (1.0 - f[m]);
                dc_acc[k * h + m] += dc[m] * f[m];
            }
            outer_add(&mut g.w.data, n, 3 * h, &dzf, x);
            outer_add(&mut g.u.data, h, 3 * h, &dzf, &cache.h[k * h..(k + 1) * h]);
            for (gb, d) in g.b.data[3 * h..].iter_mut().zip(&dzf) {
                *gb += d;
            }
            matvec_t_add(&mut dx[j * n..(j + 1) * n], &p.w.data, n, 3 * h, &dzf);
            dhk.copy_from_slice(&dhs);
            matvec_t_add(&mut dhk, &p.u.data, h, 3 * h, &dzf);
            for (a, b) in dh_acc[k * h..(k + 1) * h].iter_mut().zip(&dhk) {
                *a += b;
            }
        }
    }
    dx
}
