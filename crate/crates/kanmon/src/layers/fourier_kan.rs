//! Fourier Kolmogorov-Arnold layer.
//!
//! Each edge is a truncated Fourier series
//! `phi_ij(x) = sum_k a_ijk cos(kx) + b_ijk sin(kx)` with a per-output bias —
//! `2 * n_out * n_in * modes + n_out` parameters and no base path.

use super::{coef_bound, uniform_fill, LayerGrads};
use crate::basis::{fourier_features, fourier_features_dx, fourier_len};
use crate::mat::Mat;
use rand_chacha::ChaCha8Rng;

/// KAN layer with Fourier edge functions.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierKanLayer {
    n_in: usize,
    n_out: usize,
    modes: usize,
    /// `n_out x n_in x (2 * modes)` coefficients, cos/sin interleaved per mode.
    coef: Vec<f64>,
    /// `n_out` biases.
    bias: Vec<f64>,
}

/// Forward-pass values needed by the backward pass.
#[derive(Debug, Clone)]
pub struct FourierKanCache {
    x: Mat,
    /// `batch x n_in x (2 * modes)` feature values.
    feats: Vec<f64>,
}

impl FourierKanLayer {
    /// Small-uniform coefficients, zero biases.
    #[must_use]
    pub fn init(n_in: usize, n_out: usize, modes: usize, rng: &mut ChaCha8Rng) -> Self {
        let f = fourier_len(modes);
        let mut coef = vec![0.0; n_out * n_in * f];
        uniform_fill(rng, &mut coef, coef_bound(modes));
        FourierKanLayer { n_in, n_out, modes, coef, bias: vec![0.0; n_out] }
    }

    #[must_use]
    pub fn n_in(&self) -> usize {
        self.n_in
    }

    #[must_use]
    pub fn n_out(&self) -> usize {
        self.n_out
    }

    /// Number of Fourier modes per edge.
    #[must_use]
    pub fn modes(&self) -> usize {
        self.modes
    }

    pub(super) fn forward(&self, x: &Mat) -> (Mat, FourierKanCache) {
        let batch = x.rows();
        let f = fourier_len(self.modes);
        let mut feats = vec![0.0; batch * self.n_in * f];
        for b in 0..batch {
            let xb = x.row(b);
            for j in 0..self.n_in {
                let off = (b * self.n_in + j) * f;
                fourier_features(xb[j], self.modes, &mut feats[off..off + f]);
            }
        }
        let mut y = Mat::zeros(batch, self.n_out);
        for b in 0..batch {
            let yb = y.row_mut(b);
            for i in 0..self.n_out {
                let mut acc = self.bias[i];
                for j in 0..self.n_in {
                    let coef = &self.coef[(i * self.n_in + j) * f..(i * self.n_in + j + 1) * f];
                    let ft = &feats[(b * self.n_in + j) * f..(b * self.n_in + j + 1) * f];
                    for (c, v) in coef.iter().zip(ft) {
                        acc += c * v;
                    }
                }
                yb[i] = acc;
            }
        }
        (y, FourierKanCache { x: x.clone(), feats })
    }

    pub(super) fn backward(&self, cache: &FourierKanCache, grad_out: &Mat) -> LayerGrads {
        let batch = cache.x.rows();
        let f = fourier_len(self.modes);
        let mut d_coef = vec![0.0; self.coef.len()];
        let mut d_bias = vec![0.0; self.n_out];
        let mut d_input = Mat::zeros(batch, self.n_in);
        let mut feat_dx = vec![0.0; f];
        for b in 0..batch {
            let xb = cache.x.row(b);
            let gb = grad_out.row(b);
            for i in 0..self.n_out {
                d_bias[i] += gb[i];
            }
            let dxb = d_input.row_mut(b);
            for j in 0..self.n_in {
                fourier_features_dx(xb[j], self.modes, &mut feat_dx);
                let ft = &cache.feats[(b * self.n_in + j) * f..(b * self.n_in + j + 1) * f];
                let mut dx = 0.0;
                for i in 0..self.n_out {
                    let gi = gb[i];
                    if gi == 0.0 {
                        continue;
                    }
                    let coef = &self.coef[(i * self.n_in + j) * f..(i * self.n_in + j + 1) * f];
                    let dc = &mut d_coef[(i * self.n_in + j) * f..(i * self.n_in + j + 1) * f];
                    for k in 0..f {
                        dc[k] += gi * ft[k];
                        dx += gi * coef[k] * feat_dx[k];
                    }
                }
                dxb[j] = dx;
            }
        }
        LayerGrads { params: vec![d_coef, d_bias], input: d_input }
    }

    pub(super) fn param_arrays(&self) -> Vec<(&'static str, &[f64])> {
        vec![("coef", &self.coef), ("bias", &self.bias)]
    }

    pub(super) fn param_arrays_mut(&mut self) -> Vec<(&'static str, &mut [f64])> {
        vec![("coef", &mut self.coef), ("bias", &mut self.bias)]
    }
}
