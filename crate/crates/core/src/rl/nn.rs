// Copyright 2026 The critical-prep Authors
// SPDX-License-Identifier: Apache-2.0

//! Small dense networks with tanh hidden layers and hand-written
//! reverse-mode gradients, plus the Adam optimizer.

use rand::Rng;
use serde::{Deserialize, Serialize};

/// Fully connected network; hidden layers use tanh, the output is linear.
/// Parameters are stored flat, layer by layer: W (row-major, out × in) then b.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    sizes: Vec<usize>,
    params: Vec<f64>,
}

/// Activations saved by [`Mlp::forward_cached`]: input, each hidden
/// layer after tanh, and the output.
#[derive(Debug, Clone)]
pub struct MlpCache {
    activations: Vec<Vec<f64>>,
}

impl MlpCache {
    pub fn output(&self) -> &[f64] {
        self.activations.last().unwrap()
    }
}

fn param_count(sizes: &[usize]) -> usize {
    sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
}

impl Mlp {
    pub fn zeros(sizes: &[usize]) -> Self {
        assert!(sizes.len() >= 2, "network needs input and output sizes");
        Self {
            sizes: sizes.to_vec(),
            params: vec![0.0; param_count(sizes)],
        }
    }

    /// Glorot-uniform weights, zero biases; the last layer is scaled by
    /// `out_scale`.
    pub fn new<R: Rng + ?Sized>(sizes: &[usize], out_scale: f64, rng: &mut R) -> Self {
        let mut net = Self::zeros(sizes);
        let mut offset = 0;
        let layers = sizes.len() - 1;
        for (l, w) in sizes.windows(2).enumerate() {
            let (n_in, n_out) = (w[0], w[1]);
            let limit = (6.0 / (n_in + n_out) as f64).sqrt();
            let scale = if l + 1 == layers { out_scale } else { 1.0 };
            for p in &mut net.params[offset..offset + n_in * n_out] {
                *p = rng.random_range(-limit..limit) * scale;
            }
            offset += n_in * n_out + n_out;
        }
        net
    }

    pub fn from_params(sizes: &[usize], params: Vec<f64>) -> Option<Self> {
        (sizes.len() >= 2 && params.len() == param_count(sizes)).then(|| Self {
            sizes: sizes.to_vec(),
            params,
        })
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.sizes.last().unwrap()
    }

    pub fn n_params(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        self.forward_cached(x).activations.pop().unwrap()
    }

    pub fn forward_cached(&self, x: &[f64]) -> MlpCache {
        assert_eq!(x.len(), self.input_dim(), "network input dimension");
        let layers = self.sizes.len() - 1;
        let mut activations = Vec::with_capacity(layers + 1);
        activations.push(x.to_vec());
        let mut offset = 0;
        for l in 0..layers {
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            let w = &self.params[offset..offset + n_in * n_out];
            let b = &self.params[offset + n_in * n_out..offset + n_in * n_out + n_out];
            let input = &activations[l];
            let mut out: Vec<f64> = (0..n_out)
                .map(|o| b[o] + w[o * n_in..(o + 1) * n_in].iter().zip(input).map(|(a, b)| a * b).sum::<f64>())
                .collect();
            if l + 1 < layers {
                out.iter_mut().for_each(|v| *v = v.tanh());
            }
            activations.push(out);
            offset += n_in * n_out + n_out;
        }
        MlpCache { activations }
    }

    /// Accumulates ∂L/∂θ into `grad` given ∂L/∂output.
    pub fn backward(&self, cache: &MlpCache, d_out: &[f64], grad: &mut [f64]) {
        assert_eq!(grad.len(), self.params.len());
        let layers = self.sizes.len() - 1;
        let mut offsets = Vec::with_capacity(layers);
        let mut offset = 0;
        for w in self.sizes.windows(2) {
            offsets.push(offset);
            offset += w[0] * w[1] + w[1];
        }
        let mut delta = d_out.to_vec();
        for l in (0..layers).rev() {
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            let off = offsets[l];
            let input = &cache.activations[l];
            for o in 0..n_out {
                let d = delta[o];
                if d != 0.0 {
                    let row = &mut grad[off + o * n_in..off + (o + 1) * n_in];
                    for (g, a) in row.iter_mut().zip(input) {
                        *g += d * a;
                    }
                }
                grad[off + n_in * n_out + o] += d;
            }
            if l > 0 {
                let w = &self.params[off..off + n_in * n_out];
                let mut prev = vec![0.0; n_in];
                for o in 0..n_out {
                    let d = delta[o];
                    if d != 0.0 {
                        for (p, wv) in prev.iter_mut().zip(&w[o * n_in..(o + 1) * n_in]) {
                            *p += d * wv;
                        }
                    }
                }
                for (p, a) in prev.iter_mut().zip(input) {
                    *p *= 1.0 - a * a;
                }
                delta = prev;
            }
        }
    }
}

/// Adam with bias correction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl Adam {
    pub fn new(n: usize, lr: f64) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    /// One descent step θ ← θ − lr·m̂/(√v̂ + ε).
    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        assert_eq!(params.len(), self.m.len());
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t as i32);
        let c2 = 1.0 - self.beta2.powi(self.t as i32);
        for i in 0..params.len() {
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * grad[i];
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * grad[i] * grad[i];
            params[i] -= self.lr * (self.m[i] / c1) / ((self.v[i] / c2).sqrt() + self.eps);
        }
    }
}
