//! Plain dense layer `y = act(W x + b)` — the building block of the
//! orthogonal-autoencoder baseline.

use super::{fan_in_bound, uniform_fill, LayerGrads};
use crate::mat::Mat;
use rand_chacha::ChaCha8Rng;

/// Elementwise activation applied after the affine map.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Identity,
}

impl Activation {
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::Identity => x,
        }
    }

    fn grad(self, pre: f64) -> f64 {
        match self {
            // Subgradient 0 at the kink.
            Activation::Relu => f64::from(u8::from(pre > 0.0)),
            Activation::Identity => 1.0,
        }
    }

    /// Stable name for serialized headers.
    #[must_use]
    pub fn name(self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Identity => "identity",
        }
    }
}

/// Fully connected layer with per-output bias.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    n_in: usize,
    n_out: usize,
    /// `n_out x n_in`, row per output unit.
    weight: Vec<f64>,
    /// `n_out` biases.
    bias: Vec<f64>,
    activation: Activation,
}

/// Forward-pass values needed by the backward pass.
#[derive(Debug, Clone)]
pub struct DenseCache {
    x: Mat,
    pre: Mat,
}

impl DenseLayer {
    /// Fan-in uniform weights, zero biases.
    #[must_use]
    pub fn init(n_in: usize, n_out: usize, activation: Activation, rng: &mut ChaCha8Rng) -> Self {
        let mut weight = vec![0.0; n_out * n_in];
        uniform_fill(rng, &mut weight, fan_in_bound(n_in));
        DenseLayer { n_in, n_out, weight, bias: vec![0.0; n_out], activation }
    }

    #[must_use]
    pub fn n_in(&self) -> usize {
        self.n_in
    }

    #[must_use]
    pub fn n_out(&self) -> usize {
        self.n_out
    }

    #[must_use]
    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub(super) fn forward(&self, x: &Mat) -> (Mat, DenseCache) {
        let batch = x.rows();
        let mut pre = Mat::zeros(batch, self.n_out);
        let mut y = Mat::zeros(batch, self.n_out);
        for b in 0..batch {
            let xb = x.row(b);
            for i in 0..self.n_out {
                let w = &self.weight[i * self.n_in..(i + 1) * self.n_in];
                let mut acc = self.bias[i];
                for (wj, xj) in w.iter().zip(xb) {
                    acc += wj * xj;
                }
                pre[(b, i)] = acc;
                y[(b, i)] = self.activation.apply(acc);
            }
        }
        (y, DenseCache { x: x.clone(), pre })
    }

    pub(super) fn backward(&self, cache: &DenseCache, grad_out: &Mat) -> LayerGrads {
        let batch = cache.x.rows();
        let mut d_weight = vec![0.0; self.weight.len()];
        let mut d_bias = vec![0.0; self.n_out];
        let mut d_input = Mat::zeros(batch, self.n_in);
        for b in 0..batch {
            let xb = cache.x.row(b);
            let gb = grad_out.row(b);
            let dxb = d_input.row_mut(b);
            for i in 0..self.n_out {
                let d_pre = gb[i] * self.activation.grad(cache.pre[(b, i)]);
                if d_pre == 0.0 {
                    continue;
                }
                d_bias[i] += d_pre;
                let w = &self.weight[i * self.n_in..(i + 1) * self.n_in];
                let dw = &mut d_weight[i * self.n_in..(i + 1) * self.n_in];
                for j in 0..self.n_in {
                    dw[j] += d_pre * xb[j];
                    dxb[j] += d_pre * w[j];
                }
            }
        }
        LayerGrads { params: vec![d_weight, d_bias], input: d_input }
    }

    pub(super) fn param_arrays(&self) -> Vec<(&'static str, &[f64])> {
        vec![("weight", &self.weight), ("bias", &self.bias)]
    }

    pub(super) fn param_arrays_mut(&mut self) -> Vec<(&'static str, &mut [f64])> {
        vec![("weight", &mut self.weight), ("bias", &mut self.bias)]
    }
}
