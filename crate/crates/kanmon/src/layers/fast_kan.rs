//! Gaussian-RBF Kolmogorov-Arnold layer.
//!
//! The RBF path sees a layer-normalized copy of the input (affine gain/shift,
//! per-sample statistics over features) so that inputs stay inside the fixed
//! center range; the SiLU base path and its bias consume the raw input. This
//! mirrors the reference FastKAN layout and its parameter count
//! `n_out * n_in * (1 + g) + n_out + 2 * n_in`.

use super::{coef_bound, fan_in_bound, uniform_fill, LayerGrads};
use crate::basis::{silu, silu_dx, RbfGrid};
use crate::error::Result;
use crate::mat::Mat;
use rand_chacha::ChaCha8Rng;

/// Layer-normalization epsilon (matches common deep-learning defaults).
const LN_EPS: f64 = 1e-5;

/// KAN layer with Gaussian radial edge functions plus a SiLU base path.
#[derive(Debug, Clone, PartialEq)]
pub struct FastKanLayer {
    n_in: usize,
    n_out: usize,
    grid: RbfGrid,
    /// `n_out x n_in x g` RBF coefficients.
    rbf_coef: Vec<f64>,
    /// `n_out x n_in` base-path weights.
    base_weight: Vec<f64>,
    /// `n_out` output biases (on the base linear).
    bias: Vec<f64>,
    /// `n_in` layer-norm gains.
    norm_gain: Vec<f64>,
    /// `n_in` layer-norm shifts.
    norm_shift: Vec<f64>,
}

/// Forward-pass values needed by the backward pass.
#[derive(Debug, Clone)]
pub struct FastKanCache {
    x: Mat,
    silu_x: Mat,
    /// Normalized input before gain/shift.
    xhat: Mat,
    /// Post-affine input `u` fed to the RBF grid.
    u: Mat,
    /// Per-row `1 / sqrt(var + eps)`.
    inv_std: Vec<f64>,
    /// `batch x n_in x g` RBF values at `u`.
    rbf: Vec<f64>,
}

impl FastKanLayer {
    /// Unit gains, zero shifts/biases, fan-in base weights, small RBF coefficients.
    pub fn init(
        n_in: usize,
        n_out: usize,
        centers: usize,
        range: (f64, f64),
        rng: &mut ChaCha8Rng,
    ) -> Result<Self> {
        let grid = RbfGrid::new(centers, range.0, range.1)?;
        let g = grid.count();
        let mut rbf_coef = vec![0.0; n_out * n_in * g];
        uniform_fill(rng, &mut rbf_coef, coef_bound(g));
        let mut base_weight = vec![0.0; n_out * n_in];
        uniform_fill(rng, &mut base_weight, fan_in_bound(n_in));
        Ok(FastKanLayer {
            n_in,
            n_out,
            grid,
            rbf_coef,
            base_weight,
            bias: vec![0.0; n_out],
            norm_gain: vec![1.0; n_in],
            norm_shift: vec![0.0; n_in],
        })
    }

    #[must_use]
    pub fn n_in(&self) -> usize {
        self.n_in
    }

    #[must_use]
    pub fn n_out(&self) -> usize {
        self.n_out
    }

    /// Shared RBF grid.
    #[must_use]
    pub fn grid(&self) -> &RbfGrid {
        &self.grid
    }

    pub(super) fn forward(&self, x: &Mat) -> (Mat, FastKanCache) {
        let batch = x.rows();
        let g = self.grid.count();
        let n = self.n_in as f64;
        let mut silu_x = Mat::zeros(batch, self.n_in);
        let mut xhat = Mat::zeros(batch, self.n_in);
        let mut u = Mat::zeros(batch, self.n_in);
        let mut inv_std = vec![0.0; batch];
        let mut rbf = vec![0.0; batch * self.n_in * g];
        for b in 0..batch {
            let xb = x.row(b);
            let mean = xb.iter().sum::<f64>() / n;
            let var = xb.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
            let inv = 1.0 / (var + LN_EPS).sqrt();
            inv_std[b] = inv;
            for j in 0..self.n_in {
                silu_x[(b, j)] = silu(xb[j]);
                let xh = (xb[j] - mean) * inv;
                xhat[(b, j)] = xh;
                let uj = self.norm_gain[j] * xh + self.norm_shift[j];
                u[(b, j)] = uj;
                let off = (b * self.n_in + j) * g;
                self.grid.eval_into(uj, &mut rbf[off..off + g]);
            }
        }
        let mut y = Mat::zeros(batch, self.n_out);
        for b in 0..batch {
            let sb = silu_x.row(b);
            let yb = y.row_mut(b);
            for i in 0..self.n_out {
                let mut acc = self.bias[i];
                let wrow = &self.base_weight[i * self.n_in..(i + 1) * self.n_in];
                for j in 0..self.n_in {
                    acc += wrow[j] * sb[j];
                    let coef = &self.rbf_coef[(i * self.n_in + j) * g..(i * self.n_in + j + 1) * g];
                    let feats = &rbf[(b * self.n_in + j) * g..(b * self.n_in + j + 1) * g];
                    for (c, v) in coef.iter().zip(feats) {
                        acc += c * v;
                    }
                }
                yb[i] = acc;
            }
        }
        (y, FastKanCache { x: x.clone(), silu_x, xhat, u, inv_std, rbf })
    }

    pub(super) fn backward(&self, cache: &FastKanCache, grad_out: &Mat) -> LayerGrads {
        let batch = cache.x.rows();
        let g = self.grid.count();
        let n = self.n_in as f64;
        let mut d_coef = vec![0.0; self.rbf_coef.len()];
        let mut d_base = vec![0.0; self.base_weight.len()];
        let mut d_bias = vec![0.0; self.n_out];
        let mut d_gain = vec![0.0; self.n_in];
        let mut d_shift = vec![0.0; self.n_in];
        let mut d_input = Mat::zeros(batch, self.n_in);
        let mut feat_tmp = vec![0.0; g];
        let mut feat_dx = vec![0.0; g];
        let mut d_xhat = vec![0.0; self.n_in];
        for b in 0..batch {
            let xb = cache.x.row(b);
            let sb = cache.silu_x.row(b);
            let gb = grad_out.row(b);
            for i in 0..self.n_out {
                d_bias[i] += gb[i];
            }
            for j in 0..self.n_in {
                let feats = &cache.rbf[(b * self.n_in + j) * g..(b * self.n_in + j + 1) * g];
                self.grid.eval_with_dx_into(cache.u[(b, j)], &mut feat_tmp, &mut feat_dx);
                let silu_d = silu_dx(xb[j]);
                let mut du = 0.0;
                let mut dx_base = 0.0;
                for i in 0..self.n_out {
                    let gi = gb[i];
                    if gi == 0.0 {
                        continue;
                    }
                    d_base[i * self.n_in + j] += gi * sb[j];
                    dx_base += gi * self.base_weight[i * self.n_in + j] * silu_d;
                    let coef = &self.rbf_coef[(i * self.n_in + j) * g..(i * self.n_in + j + 1) * g];
                    let dc = &mut d_coef[(i * self.n_in + j) * g..(i * self.n_in + j + 1) * g];
                    for k in 0..g {
                        dc[k] += gi * feats[k];
                        du += gi * coef[k] * feat_dx[k];
                    }
                }
                d_gain[j] += du * cache.xhat[(b, j)];
                d_shift[j] += du;
                d_xhat[j] = du * self.norm_gain[j];
                d_input[(b, j)] = dx_base;
            }
            // Layer-norm backward for this row (biased variance):
            // dx = inv * (dxhat - mean(dxhat) - xhat * mean(dxhat .* xhat))
            let inv = cache.inv_std[b];
            let mean_dxh = d_xhat.iter().sum::<f64>() / n;
            let mean_dxh_xh = d_xhat
                .iter()
                .zip(cache.xhat.row(b))
                .map(|(d, xh)| d * xh)
                .sum::<f64>()
                / n;
            let dxb = d_input.row_mut(b);
            for j in 0..self.n_in {
                dxb[j] += inv * (d_xhat[j] - mean_dxh - cache.xhat[(b, j)] * mean_dxh_xh);
            }
        }
        LayerGrads {
            params: vec![d_coef, d_base, d_bias, d_gain, d_shift],
            input: d_input,
        }
    }

    pub(super) fn param_arrays(&self) -> Vec<(&'static str, &[f64])> {
        vec![
            ("rbf_coef", &self.rbf_coef),
            ("base_weight", &self.base_weight),
            ("bias", &self.bias),
            ("norm_gain", &self.norm_gain),
            ("norm_shift", &self.norm_shift),
        ]
    }

    pub(super) fn param_arrays_mut(&mut self) -> Vec<(&'static str, &mut [f64])> {
        vec![
            ("rbf_coef", &mut self.rbf_coef),
            ("base_weight", &mut self.base_weight),
            ("bias", &mut self.bias),
            ("norm_gain", &mut self.norm_gain),
            ("norm_shift", &mut self.norm_shift),
        ]
    }
}
