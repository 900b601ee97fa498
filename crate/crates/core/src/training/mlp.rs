use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Fully connected network with tanh hidden layers and a linear output.
/// Parameters live in one flat vector: per layer the `out × in` weights
/// (row-major) followed by the biases.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub sizes: Vec<usize>,
    pub params: Vec<f64>,
}

/// Activations kept for the backward pass.
#[derive(Clone, Debug)]
pub struct MlpCache {
    /// Input of every layer, then the output.
    acts: Vec<Vec<f64>>,
}

impl MlpCache {
    pub fn output(&self) -> &[f64] {
        self.acts.last().unwrap()
    }
}

impl Mlp {
    /// Weights drawn from N(0, 1/fan_in); the last layer is scaled by
    /// `out_scale`. Biases start at zero.
    pub fn new<R: Rng>(sizes: &[usize], out_scale: f64, rng: &mut R) -> Result<Self> {
        if sizes.len() < 2 || sizes.iter().any(|&s| s == 0) {
            return Err(Error::Shape(format!("invalid layer sizes {sizes:?}")));
        }
        let mut params = Vec::new();
        let layers = sizes.len() - 1;
        for l in 0..layers {
            let (fan_in, fan_out) = (sizes[l], sizes[l + 1]);
            let mut std = (1.0 / fan_in as f64).sqrt();
            if l + 1 == layers {
                std *= out_scale;
            }
            let normal = Normal::new(0.0, std).map_err(|e| Error::Invalid(e.to_string()))?;
            params.extend((0..fan_in * fan_out).map(|_| normal.sample(rng)));
            params.extend(std::iter::repeat_n(0.0, fan_out));
        }
        Ok(Self { sizes: sizes.to_vec(), params })
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    pub fn input_len(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_len(&self) -> usize {
        *self.sizes.last().unwrap()
    }

    pub fn validate(&self) -> Result<()> {
        let expected: usize = self.sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum();
        if self.sizes.len() < 2 || expected != self.params.len() {
            return Err(Error::Shape(format!(
                "network with sizes {:?} needs {expected} parameters, has {}",
                self.sizes,
                self.params.len()
            )));
        }
        Ok(())
    }

    pub fn forward(&self, x: &[f64]) -> MlpCache {
        debug_assert_eq!(x.len(), self.input_len());
        let mut acts = vec![x.to_vec()];
        let mut off = 0;
        let layers = self.sizes.len() - 1;
        for l in 0..layers {
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            let w = &self.params[off..off + n_in * n_out];
            let b = &self.params[off + n_in * n_out..off + n_in * n_out + n_out];
            let input = acts.last().unwrap();
            let mut y: Vec<f64> = (0..n_out)
                .map(|o| b[o] + w[o * n_in..(o + 1) * n_in].iter().zip(input).map(|(a, b)| a * b).sum::<f64>())
                .collect();
            if l + 1 < layers {
                y.iter_mut().for_each(|v| *v = v.tanh());
            }
            acts.push(y);
            off += n_in * n_out + n_out;
        }
        MlpCache { acts }
    }

    pub fn output(&self, x: &[f64]) -> Vec<f64> {
        self.forward(x).acts.pop().unwrap()
    }

    /// Adds `dL/dparams` for the given output gradient into `grad`.
    pub fn backward(&self, cache: &MlpCache, grad_out: &[f64], grad: &mut [f64]) {
        let layers = self.sizes.len() - 1;
        let mut offsets = Vec::with_capacity(layers);
        let mut off = 0;
        for l in 0..layers {
            offsets.push(off);
            off += self.sizes[l] * self.sizes[l + 1] + self.sizes[l + 1];
        }
        let mut g = grad_out.to_vec();
        for l in (0..layers).rev() {
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            if l + 1 < layers {
                // Output of this layer went through tanh.
                for (gi, y) in g.iter_mut().zip(&cache.acts[l + 1]) {
                    *gi *= 1.0 - y * y;
                }
            }
            let off = offsets[l];
            let input = &cache.acts[l];
            for o in 0..n_out {
                let row = off + o * n_in;
                for i in 0..n_in {
                    grad[row + i] += g[o] * input[i];
                }
                grad[off + n_in * n_out + o] += g[o];
            }
            if l > 0 {
                let w = &self.params[off..off + n_in * n_out];
                let mut gin = vec![0.0; n_in];
                for o in 0..n_out {
                    for i in 0..n_in {
                        gin[i] += g[o] * w[o * n_in + i];
                    }
                }
                g = gin;
            }
        }
    }
}

/// Adam optimiser minimising a loss over a flat parameter vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
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
    pub fn new(lr: f64, n: usize) -> Self {
        Self { lr, beta1: 0.9, beta2: 0.999, eps: 1e-8, m: vec![0.0; n], v: vec![0.0; n], t: 0 }
    }

    /// One descent step along `grad`.
    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        self.t += 1;
        let b1t = 1.0 - self.beta1.powi(self.t as i32);
        let b2t = 1.0 - self.beta2.powi(self.t as i32);
        for i in 0..params.len() {
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * grad[i];
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * grad[i] * grad[i];
            let mh = self.m[i] / b1t;
            let vh = self.v[i] / b2t;
            params[i] -= self.lr * mh / (vh.sqrt() + self.eps);
        }
    }
}
