//! Kolmogorov-Arnold autoencoders for unsupervised process fault detection.
//!
//! This crate trains autoencoders whose edges carry learnable univariate
//! functions (B-spline, Gaussian-RBF, Fourier, and wavelet parameterizations,
//! alongside a dense orthogonal-autoencoder baseline), monitors reconstruction
//! error with a kernel-density control limit, and compares variants with a
//! Bayesian signed-rank test. All numerics are `f64`, gradients are derived by
//! hand (no autodiff), and every run is deterministic in its seed.
//!
//! The high-level pipeline is:
//!
//! 1. [`data`] — load normal/faulty runs, build training subsets, or simulate
//!    a synthetic plant when no real dataset is at hand.
//! 2. [`train`] — z-score, split at simulation level, and fit a model with
//!    AdamW, plateau-driven learning-rate decay, and early stopping.
//! 3. [`detect`] — squared prediction error, KDE threshold, detection /
//!    false-alarm rates, and aggregation across seeds.
//! 4. [`bayes`] — Bayesian signed-rank posteriors over paired FDR differences.

pub mod basis;
pub mod bayes;
pub mod data;
pub mod detect;
pub mod error;
pub mod layers;
pub mod mat;
pub mod model;
mod model_io;
pub mod report;
pub mod train;

pub mod seed;

pub use error::{Error, Result};
pub use mat::Mat;
pub use model::{build_model, AeArchitecture, LossBreakdown, Model, PenaltyWeights, Variant};
