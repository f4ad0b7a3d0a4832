//! Wavelet Kolmogorov-Arnold layer.
//!
//! Each edge evaluates a derivative-of-Gaussian mother wavelet at a per-edge
//! affine reparameterization `psi((x - t_ij) / s_ij)` weighted by `w_ij`; a
//! bias-free SiLU linear base path is added, and the summed output passes
//! through a batch-style normalization (batch statistics while training,
//! running statistics at inference). Parameters per layer:
//! `4 * n_out * n_in + 2 * n_out`; the running statistics are buffers, not
//! parameters.

use super::{fan_in_bound, uniform_fill, LayerGrads, Phase};
use crate::basis::{dog, dog_dx, silu, silu_dx};
use crate::error::{Error, Result};
use crate::mat::Mat;
use rand_chacha::ChaCha8Rng;

/// Batch-normalization epsilon.
const BN_EPS: f64 = 1e-5;
/// Running-statistics update rate.
const BN_MOMENTUM: f64 = 0.1;
/// Scales are clamped to at least this before dividing.
const SCALE_FLOOR: f64 = 1e-3;

/// KAN layer with wavelet edge functions and normalized outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct WavKanLayer {
    n_in: usize,
    n_out: usize,
    /// `n_out x n_in` wavelet amplitudes.
    wav_weight: Vec<f64>,
    /// `n_out x n_in` per-edge translations.
    translation: Vec<f64>,
    /// `n_out x n_in` per-edge scales (clamped to [`SCALE_FLOOR`] in use).
    scale: Vec<f64>,
    /// `n_out x n_in` base-path weights (no bias).
    base_weight: Vec<f64>,
    /// `n_out` normalization gains.
    norm_gain: Vec<f64>,
    /// `n_out` normalization shifts.
    norm_shift: Vec<f64>,
    /// `n_out` running means (buffer).
    running_mean: Vec<f64>,
    /// `n_out` running variances (buffer, unbiased updates).
    running_var: Vec<f64>,
}

/// Forward-pass values needed by the backward pass and the stats commit.
#[derive(Debug, Clone)]
pub struct WavKanCache {
    x: Mat,
    silu_x: Mat,
    /// `batch x n_out x n_in` scaled coordinates `(x_j - t_ij) / s_ij`.
    z: Vec<f64>,
    /// Normalized pre-affine outputs, `batch x n_out`.
    phat: Mat,
    /// Per-output `1 / sqrt(var + eps)` actually used.
    inv_std: Vec<f64>,
    /// Batch means/vars (biased) gathered in the train phase.
    batch_mean: Vec<f64>,
    batch_var: Vec<f64>,
    phase: Phase,
}

impl WavKanLayer {
    /// Fan-in wavelet/base weights, translations 0, scales 1, unit norm.
    #[must_use]
    pub fn init(n_in: usize, n_out: usize, rng: &mut ChaCha8Rng) -> Self {
        let mut wav_weight = vec![0.0; n_out * n_in];
        uniform_fill(rng, &mut wav_weight, fan_in_bound(n_in));
        let mut base_weight = vec![0.0; n_out * n_in];
        uniform_fill(rng, &mut base_weight, fan_in_bound(n_in));
        WavKanLayer {
            n_in,
            n_out,
            wav_weight,
            translation: vec![0.0; n_out * n_in],
            scale: vec![1.0; n_out * n_in],
            base_weight,
            norm_gain: vec![1.0; n_out],
            norm_shift: vec![0.0; n_out],
            running_mean: vec![0.0; n_out],
            running_var: vec![1.0; n_out],
        }
    }

    #[must_use]
    pub fn n_in(&self) -> usize {
        self.n_in
    }

    #[must_use]
    pub fn n_out(&self) -> usize {
        self.n_out
    }

    pub(super) fn forward(&self, x: &Mat, phase: Phase) -> Result<(Mat, WavKanCache)> {
        let batch = x.rows();
        if phase == Phase::Train && batch < 2 {
            return Err(Error::contract(
                "wavelet layer needs at least 2 rows per training batch (batch statistics)",
            ));
        }
        let mut silu_x = Mat::zeros(batch, self.n_in);
        let mut z = vec![0.0; batch * self.n_out * self.n_in];
        let mut pre = Mat::zeros(batch, self.n_out);
        for b in 0..batch {
            let xb = x.row(b);
            let sb = silu_x.row_mut(b);
            for j in 0..self.n_in {
                sb[j] = silu(xb[j]);
            }
            for i in 0..self.n_out {
                let row_off = i * self.n_in;
                let mut acc = 0.0;
                for j in 0..self.n_in {
                    let s_eff = self.scale[row_off + j].max(SCALE_FLOOR);
                    let zij = (xb[j] - self.translation[row_off + j]) / s_eff;
                    z[(b * self.n_out + i) * self.n_in + j] = zij;
                    acc += self.wav_weight[row_off + j] * dog(zij);
                    acc += self.base_weight[row_off + j] * sb[j];
                }
                pre[(b, i)] = acc;
            }
        }

        // Batch-style output normalization.
        let (mean, var) = match phase {
            Phase::Train => {
                let nb = batch as f64;
                let mut mean = vec![0.0; self.n_out];
                let mut var = vec![0.0; self.n_out];
                for b in 0..batch {
                    for i in 0..self.n_out {
                        mean[i] += pre[(b, i)];
                    }
                }
                for m in mean.iter_mut() {
                    *m /= nb;
                }
                for b in 0..batch {
                    for i in 0..self.n_out {
                        let d = pre[(b, i)] - mean[i];
                        var[i] += d * d;
                    }
                }
                for v in var.iter_mut() {
                    *v /= nb;
                }
                (mean, var)
            }
            Phase::Eval => (self.running_mean.clone(), self.running_var.clone()),
        };
        let inv_std: Vec<f64> = var.iter().map(|v| 1.0 / (v + BN_EPS).sqrt()).collect();
        let mut phat = Mat::zeros(batch, self.n_out);
        let mut y = Mat::zeros(batch, self.n_out);
        for b in 0..batch {
            for i in 0..self.n_out {
                let ph = (pre[(b, i)] - mean[i]) * inv_std[i];
                phat[(b, i)] = ph;
                y[(b, i)] = self.norm_gain[i] * ph + self.norm_shift[i];
            }
        }
        let (batch_mean, batch_var) = match phase {
            Phase::Train => (mean, var),
            Phase::Eval => (Vec::new(), Vec::new()),
        };
        Ok((
            y,
            WavKanCache {
                x: x.clone(),
                silu_x,
                z,
                phat,
                inv_std,
                batch_mean,
                batch_var,
                phase,
            },
        ))
    }

    pub(super) fn backward(&self, cache: &WavKanCache, grad_out: &Mat) -> LayerGrads {
        let batch = cache.x.rows();
        let nb = batch as f64;
        let mut d_wav = vec![0.0; self.wav_weight.len()];
        let mut d_trans = vec![0.0; self.translation.len()];
        let mut d_scale = vec![0.0; self.scale.len()];
        let mut d_base = vec![0.0; self.base_weight.len()];
        let mut d_gain = vec![0.0; self.n_out];
        let mut d_shift = vec![0.0; self.n_out];
        let mut d_input = Mat::zeros(batch, self.n_in);

        // Through the affine: dL/dphat, plus gain/shift gradients.
        let mut d_phat = Mat::zeros(batch, self.n_out);
        for b in 0..batch {
            for i in 0..self.n_out {
                let g = grad_out[(b, i)];
                d_gain[i] += g * cache.phat[(b, i)];
                d_shift[i] += g;
                d_phat[(b, i)] = g * self.norm_gain[i];
            }
        }

        // Through the normalization to dL/dpre.
        let mut d_pre = Mat::zeros(batch, self.n_out);
        match cache.phase {
            Phase::Train => {
                // Standard batch-norm backward with batch statistics.
                let mut sum_dphat = vec![0.0; self.n_out];
                let mut sum_dphat_phat = vec![0.0; self.n_out];
                for b in 0..batch {
                    for i in 0..self.n_out {
                        sum_dphat[i] += d_phat[(b, i)];
                        sum_dphat_phat[i] += d_phat[(b, i)] * cache.phat[(b, i)];
                    }
                }
                for b in 0..batch {
                    for i in 0..self.n_out {
                        d_pre[(b, i)] = cache.inv_std[i] / nb
                            * (nb * d_phat[(b, i)]
                                - sum_dphat[i]
                                - cache.phat[(b, i)] * sum_dphat_phat[i]);
                    }
                }
            }
            Phase::Eval => {
                // Running statistics are constants.
                for b in 0..batch {
                    for i in 0..self.n_out {
                        d_pre[(b, i)] = d_phat[(b, i)] * cache.inv_std[i];
                    }
                }
            }
        }

        // Through the wavelet and base paths.
        for b in 0..batch {
            let xb = cache.x.row(b);
            let sb = cache.silu_x.row(b);
            let dxb = d_input.row_mut(b);
            for i in 0..self.n_out {
                let dp = d_pre[(b, i)];
                if dp == 0.0 {
                    continue;
                }
                let row_off = i * self.n_in;
                for j in 0..self.n_in {
                    let zij = cache.z[(b * self.n_out + i) * self.n_in + j];
                    let s_raw = self.scale[row_off + j];
                    let s_eff = s_raw.max(SCALE_FLOOR);
                    d_wav[row_off + j] += dp * dog(zij);
                    let dz = dp * self.wav_weight[row_off + j] * dog_dx(zij);
                    d_trans[row_off + j] -= dz / s_eff;
                    if s_raw > SCALE_FLOOR {
                        d_scale[row_off + j] -= dz * zij / s_eff;
                    }
                    d_base[row_off + j] += dp * sb[j];
                    dxb[j] += dz / s_eff + dp * self.base_weight[row_off + j] * silu_dx(xb[j]);
                }
            }
        }
        LayerGrads {
            params: vec![d_wav, d_trans, d_scale, d_base, d_gain, d_shift],
            input: d_input,
        }
    }

    /// Folds a training batch's statistics into the running estimates
    /// (momentum update, unbiased variance). Eval caches are ignored.
    pub(super) fn commit_batch_stats(&mut self, cache: &WavKanCache) {
        if cache.phase != Phase::Train {
            return;
        }
        let nb = cache.x.rows() as f64;
        let unbias = if nb > 1.0 { nb / (nb - 1.0) } else { 1.0 };
        for i in 0..self.n_out {
            self.running_mean[i] =
                (1.0 - BN_MOMENTUM) * self.running_mean[i] + BN_MOMENTUM * cache.batch_mean[i];
            self.running_var[i] = (1.0 - BN_MOMENTUM) * self.running_var[i]
                + BN_MOMENTUM * cache.batch_var[i] * unbias;
        }
    }

    pub(super) fn param_arrays(&self) -> Vec<(&'static str, &[f64])> {
        vec![
            ("wav_weight", &self.wav_weight),
            ("translation", &self.translation),
            ("scale", &self.scale),
            ("base_weight", &self.base_weight),
            ("norm_gain", &self.norm_gain),
            ("norm_shift", &self.norm_shift),
        ]
    }

    pub(super) fn param_arrays_mut(&mut self) -> Vec<(&'static str, &mut [f64])> {
        vec![
            ("wav_weight", &mut self.wav_weight),
            ("translation", &mut self.translation),
            ("scale", &mut self.scale),
            ("base_weight", &mut self.base_weight),
            ("norm_gain", &mut self.norm_gain),
            ("norm_shift", &mut self.norm_shift),
        ]
    }

    pub(super) fn buffers(&self) -> Vec<(&'static str, &[f64])> {
        vec![
            ("running_mean", &self.running_mean),
            ("running_var", &self.running_var),
        ]
    }

    pub(super) fn buffers_mut(&mut self) -> Vec<(&'static str, &mut [f64])> {
        vec![
            ("running_mean", &mut self.running_mean),
            ("running_var", &mut self.running_var),
        ]
    }
}
