//! Autoencoder layers with hand-derived backpropagation.
//!
//! Five layer kinds share one interface: a plain dense layer (the orthogonal
//! autoencoder baseline) and four Kolmogorov-Arnold kinds whose edges carry
//! learnable univariate functions — B-spline, Gaussian-RBF, Fourier, and
//! wavelet parameterizations. Forward passes are pure (`&self`) and return a
//! [`LayerCache`] holding exactly what the matching [`Layer::backward`] needs;
//! batch-statistic side effects (the wavelet kind's output normalization) are
//! applied explicitly via [`Layer::commit_batch_stats`] so that training
//! steps stay deterministic and finite-difference checks stay exact.
//!
//! Parameter arrays are exposed by name in a fixed order
//! ([`Layer::param_arrays`]); the optimizer, the serializer, and the
//! gradient structures all rely on that order.

mod dense;
mod efficient_kan;
mod fast_kan;
mod fourier_kan;
mod penalty;
mod wav_kan;

pub use dense::{Activation, DenseLayer};
pub use efficient_kan::EfficientKanLayer;
pub use fast_kan::FastKanLayer;
pub use fourier_kan::FourierKanLayer;
pub use penalty::{l1_entropy, l1_entropy_with_grad, orthogonality, orthogonality_with_grad};
pub use wav_kan::WavKanLayer;

use crate::error::{Error, Result};
use crate::mat::Mat;
use rand_chacha::ChaCha8Rng;

/// Forward-pass phase. `Train` uses batch statistics where a layer has them;
/// `Eval` uses running statistics and is batch-independent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Train,
    Eval,
}

/// One autoencoder layer of any kind.
#[derive(Debug, Clone, PartialEq)]
pub enum Layer {
    Dense(DenseLayer),
    EfficientKan(EfficientKanLayer),
    FastKan(FastKanLayer),
    FourierKan(FourierKanLayer),
    WavKan(WavKanLayer),
}

/// Values stashed by a forward pass for the matching backward pass.
#[derive(Debug, Clone)]
pub enum LayerCache {
    Dense(dense::DenseCache),
    EfficientKan(efficient_kan::EfficientKanCache),
    FastKan(fast_kan::FastKanCache),
    FourierKan(fourier_kan::FourierKanCache),
    WavKan(wav_kan::WavKanCache),
}

/// Gradients from one backward pass: one array per parameter array (in
/// [`Layer::param_arrays`] order) plus the gradient w.r.t. the layer input.
#[derive(Debug, Clone)]
pub struct LayerGrads {
    /// Per-parameter-array gradients, aligned with `param_arrays()`.
    pub params: Vec<Vec<f64>>,
    /// Gradient of the loss w.r.t. the layer input, same shape as the input.
    pub input: Mat,
}

impl LayerGrads {
    /// All-zero gradients shaped like `layer` applied to a `batch`-row input.
    #[must_use]
    pub fn zeros_like(layer: &Layer, batch: usize) -> Self {
        LayerGrads {
            params: layer
                .param_arrays()
                .iter()
                .map(|(_, a)| vec![0.0; a.len()])
                .collect(),
            input: Mat::zeros(batch, layer.n_in()),
        }
    }

    /// Adds `other * scale` into `self` (used to fold penalty gradients in).
    pub fn add_scaled_params(&mut self, other: &[Vec<f64>], scale: f64) {
        for (mine, theirs) in self.params.iter_mut().zip(other) {
            for (m, t) in mine.iter_mut().zip(theirs) {
                *m += scale * t;
            }
        }
    }
}

impl Layer {
    /// Input width.
    #[must_use]
    pub fn n_in(&self) -> usize {
        match self {
            Layer::Dense(l) => l.n_in(),
            Layer::EfficientKan(l) => l.n_in(),
            Layer::FastKan(l) => l.n_in(),
            Layer::FourierKan(l) => l.n_in(),
            Layer::WavKan(l) => l.n_in(),
        }
    }

    /// Output width.
    #[must_use]
    pub fn n_out(&self) -> usize {
        match self {
            Layer::Dense(l) => l.n_out(),
            Layer::EfficientKan(l) => l.n_out(),
            Layer::FastKan(l) => l.n_out(),
            Layer::FourierKan(l) => l.n_out(),
            Layer::WavKan(l) => l.n_out(),
        }
    }

    /// Short stable name used in serialized headers and error messages.
    #[must_use]
    pub fn kind_name(&self) -> &'static str {
        match self {
            Layer::Dense(_) => "dense",
            Layer::EfficientKan(_) => "efficient_kan",
            Layer::FastKan(_) => "fast_kan",
            Layer::FourierKan(_) => "fourier_kan",
            Layer::WavKan(_) => "wav_kan",
        }
    }

    /// Runs the layer on a batch (rows = samples). Pure: batch-statistic
    /// updates are deferred to [`Layer::commit_batch_stats`].
    pub fn forward(&self, x: &Mat, phase: Phase) -> Result<(Mat, LayerCache)> {
        if x.cols() != self.n_in() {
            return Err(Error::contract(format!(
                "{} layer expects {} inputs, batch has {} columns",
                self.kind_name(),
                self.n_in(),
                x.cols()
            )));
        }
        match self {
            Layer::Dense(l) => {
                let (y, c) = l.forward(x);
                Ok((y, LayerCache::Dense(c)))
            }
            Layer::EfficientKan(l) => {
                let (y, c) = l.forward(x);
                Ok((y, LayerCache::EfficientKan(c)))
            }
            Layer::FastKan(l) => {
                let (y, c) = l.forward(x);
                Ok((y, LayerCache::FastKan(c)))
            }
            Layer::FourierKan(l) => {
                let (y, c) = l.forward(x);
                Ok((y, LayerCache::FourierKan(c)))
            }
            Layer::WavKan(l) => {
                let (y, c) = l.forward(x, phase)?;
                Ok((y, LayerCache::WavKan(c)))
            }
        }
    }

    /// Propagates `grad_out = dL/d(output)` back through the cached pass.
    pub fn backward(&self, cache: &LayerCache, grad_out: &Mat) -> Result<LayerGrads> {
        match (self, cache) {
            (Layer::Dense(l), LayerCache::Dense(c)) => Ok(l.backward(c, grad_out)),
            (Layer::EfficientKan(l), LayerCache::EfficientKan(c)) => Ok(l.backward(c, grad_out)),
            (Layer::FastKan(l), LayerCache::FastKan(c)) => Ok(l.backward(c, grad_out)),
            (Layer::FourierKan(l), LayerCache::FourierKan(c)) => Ok(l.backward(c, grad_out)),
            (Layer::WavKan(l), LayerCache::WavKan(c)) => Ok(l.backward(c, grad_out)),
            _ => Err(Error::contract(format!(
                "cache kind does not match {} layer",
                self.kind_name()
            ))),
        }
    }

    /// Named views of every trainable parameter array, in canonical order.
    #[must_use]
    pub fn param_arrays(&self) -> Vec<(&'static str, &[f64])> {
        match self {
            Layer::Dense(l) => l.param_arrays(),
            Layer::EfficientKan(l) => l.param_arrays(),
            Layer::FastKan(l) => l.param_arrays(),
            Layer::FourierKan(l) => l.param_arrays(),
            Layer::WavKan(l) => l.param_arrays(),
        }
    }

    /// Mutable counterpart of [`Layer::param_arrays`], same order.
    pub fn param_arrays_mut(&mut self) -> Vec<(&'static str, &mut [f64])> {
        match self {
            Layer::Dense(l) => l.param_arrays_mut(),
            Layer::EfficientKan(l) => l.param_arrays_mut(),
            Layer::FastKan(l) => l.param_arrays_mut(),
            Layer::FourierKan(l) => l.param_arrays_mut(),
            Layer::WavKan(l) => l.param_arrays_mut(),
        }
    }

    /// Named non-trainable state (running statistics), possibly empty.
    #[must_use]
    pub fn buffers(&self) -> Vec<(&'static str, &[f64])> {
        match self {
            Layer::WavKan(l) => l.buffers(),
            _ => Vec::new(),
        }
    }

    /// Mutable counterpart of [`Layer::buffers`].
    pub fn buffers_mut(&mut self) -> Vec<(&'static str, &mut [f64])> {
        match self {
            Layer::WavKan(l) => l.buffers_mut(),
            _ => Vec::new(),
        }
    }

    /// Total trainable parameter count (buffers excluded).
    #[must_use]
    pub fn param_count(&self) -> usize {
        self.param_arrays().iter().map(|(_, a)| a.len()).sum()
    }

    /// Folds a training forward's batch statistics into running statistics.
    /// No-op for layers without them or for eval-phase caches.
    pub fn commit_batch_stats(&mut self, cache: &LayerCache) {
        if let (Layer::WavKan(l), LayerCache::WavKan(c)) = (self, cache) {
            l.commit_batch_stats(c);
        }
    }
}

/// Fills `slice` with independent draws from `U(-bound, bound)`.
///
/// All layer initializers funnel through this so the RNG consumption order
/// is fixed by the parameter-array order.
pub(crate) fn uniform_fill(rng: &mut ChaCha8Rng, slice: &mut [f64], bound: f64) {
    use rand::Rng;
    for v in slice.iter_mut() {
        *v = (rng.random::<f64>() * 2.0 - 1.0) * bound;
    }
}

/// Fan-in bound `1/sqrt(n_in)` shared by dense/base/wavelet weights.
pub(crate) fn fan_in_bound(n_in: usize) -> f64 {
    1.0 / (n_in as f64).sqrt()
}

/// Small-coefficient bound `0.1/sqrt(g)` for spline/RBF/Fourier coefficients.
pub(crate) fn coef_bound(g: usize) -> f64 {
    0.1 / (g as f64).sqrt()
}
