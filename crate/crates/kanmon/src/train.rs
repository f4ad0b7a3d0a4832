//! Training on fault-free data: z-score scaling, simulation-level splits,
//! a decoupled-weight-decay optimizer, plateau learning-rate decay, early
//! stopping, and multi-seed sweeps.
//!
//! A training cell is deterministic in `(data, seed)`: the split shuffles
//! whole runs, mini-batch order comes from one seeded stream, and the
//! returned model is the best-validation snapshot.

use crate::data::{shuffle, RunMatrix};
use crate::error::{Error, Result};
use crate::layers::{LayerGrads, Phase};
use crate::mat::Mat;
use crate::model::{AeArchitecture, Model, PenaltyWeights, Variant};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Standard deviation floor protecting constant features.
const STD_FLOOR: f64 = 1e-8;

/// Relative improvement in validation loss that resets patience counters.
const IMPROVEMENT_THRESHOLD: f64 = 1e-4;

// ---------------------------------------------------------------------------
// Scaling
// ---------------------------------------------------------------------------

/// Per-feature z-score statistics, fitted on the training partition only.
#[derive(Debug, Clone, PartialEq)]
pub struct Scaler {
    mean: Vec<f64>,
    std: Vec<f64>,
}

impl Scaler {
    /// Fits mean and (population) standard deviation per feature.
    pub fn fit(x: &Mat) -> Result<Self> {
        if x.rows() < 2 {
            return Err(Error::data("scaler needs at least 2 rows"));
        }
        let n = x.rows() as f64;
        let mut mean = vec![0.0; x.cols()];
        for r in 0..x.rows() {
            for (m, v) in mean.iter_mut().zip(x.row(r)) {
                *m += v;
            }
        }
        for m in mean.iter_mut() {
            *m /= n;
        }
        let mut std = vec![0.0; x.cols()];
        for r in 0..x.rows() {
            for (s, (v, m)) in std.iter_mut().zip(x.row(r).iter().zip(&mean)) {
                *s += (v - m) * (v - m);
            }
        }
        for s in std.iter_mut() {
            *s = (*s / n).sqrt().max(STD_FLOOR);
        }
        Ok(Scaler { mean, std })
    }

    /// Rebuilds a scaler from stored statistics (profile deserialization).
    pub(crate) fn from_parts(mean: Vec<f64>, std: Vec<f64>) -> Result<Self> {
        if mean.len() != std.len() || mean.is_empty() {
            return Err(Error::Format("scaler statistics have mismatched lengths".into()));
        }
        if std.iter().any(|s| !s.is_finite() || *s <= 0.0) {
            return Err(Error::Format("scaler standard deviations must be positive".into()));
        }
        Ok(Scaler { mean, std })
    }

    #[must_use]
    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    #[must_use]
    pub fn std(&self) -> &[f64] {
        &self.std
    }

    /// Applies `(x - mean) / std` column-wise.
    pub fn transform(&self, x: &Mat) -> Result<Mat> {
        self.check_width(x)?;
        let mut out = x.clone();
        for r in 0..out.rows() {
            for (v, (m, s)) in out.row_mut(r).iter_mut().zip(self.mean.iter().zip(&self.std)) {
                *v = (*v - m) / s;
            }
        }
        Ok(out)
    }

    /// Inverts [`Scaler::transform`].
    pub fn inverse_transform(&self, x: &Mat) -> Result<Mat> {
        self.check_width(x)?;
        let mut out = x.clone();
        for r in 0..out.rows() {
            for (v, (m, s)) in out.row_mut(r).iter_mut().zip(self.mean.iter().zip(&self.std)) {
                *v = *v * s + m;
            }
        }
        Ok(out)
    }

    fn check_width(&self, x: &Mat) -> Result<()> {
        if x.cols() != self.mean.len() {
            return Err(Error::contract(format!(
                "scaler fitted on {} features, data has {}",
                self.mean.len(),
                x.cols()
            )));
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Simulation-level split
// ---------------------------------------------------------------------------

/// Splits runs into train/validation row blocks at the simulation level.
///
/// Runs are shuffled (seeded) and concatenated; the first
/// `round(fraction · target_samples)` rows become the training partition and
/// the next rows complete `target_samples` as validation. Whole runs land on
/// one side except the single run spanning the boundary, which is sliced.
pub fn split_simulations(
    runs: &[RunMatrix],
    target_samples: usize,
    fraction: f64,
    seed: u64,
) -> Result<(Mat, Mat)> {
    if !(0.0..1.0).contains(&fraction) || fraction == 0.0 {
        return Err(Error::config("split fraction must be in (0, 1)"));
    }
    if runs.is_empty() {
        return Err(Error::data("no runs to split"));
    }
    let n_vars = runs[0].n_vars();
    if runs.iter().any(|r| r.n_vars() != n_vars) {
        return Err(Error::data("runs have differing variable counts"));
    }
    let total: usize = runs.iter().map(RunMatrix::n_samples).sum();
    if total < target_samples {
        return Err(Error::data(format!(
            "need {target_samples} samples, runs hold only {total}"
        )));
    }
    let n_train = (fraction * target_samples as f64).round() as usize;
    let n_val = target_samples - n_train;
    if n_train == 0 || n_val == 0 {
        return Err(Error::data(format!(
            "target {target_samples} at fraction {fraction} leaves an empty partition"
        )));
    }

    let mut order: Vec<usize> = (0..runs.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    shuffle(&mut order, &mut rng);

    let mut train = Mat::zeros(n_train, n_vars);
    let mut val = Mat::zeros(n_val, n_vars);
    let mut filled = 0;
    'outer: for &idx in &order {
        let x = runs[idx].x();
        for r in 0..x.rows() {
            if filled == target_samples {
                break 'outer;
            }
            if filled < n_train {
                train.row_mut(filled).copy_from_slice(x.row(r));
            } else {
                val.row_mut(filled - n_train).copy_from_slice(x.row(r));
            }
            filled += 1;
        }
    }
    Ok((train, val))
}

// ---------------------------------------------------------------------------
// Optimizer
// ---------------------------------------------------------------------------

/// Adam with decoupled weight decay: moments with bias correction, then
/// `w ← w − lr·(m̂/(√v̂ + ε) + wd·w)`. Decay never passes through the
/// gradient moments.
#[derive(Debug, Clone)]
pub struct AdamW {
    lr: f64,
    weight_decay: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    t: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl AdamW {
    /// Zero-moment state shaped like `model`'s parameter arrays.
    #[must_use]
    pub fn new(model: &Model, lr: f64, weight_decay: f64) -> Self {
        let mut m = Vec::new();
        for layer in model.layers() {
            for (_, arr) in layer.param_arrays() {
                m.push(vec![0.0; arr.len()]);
            }
        }
        AdamW {
            lr,
            weight_decay,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            t: 0,
            v: m.clone(),
            m,
        }
    }

    #[must_use]
    pub fn lr(&self) -> f64 {
        self.lr
    }

    pub fn set_lr(&mut self, lr: f64) {
        self.lr = lr;
    }

    /// Applies one update from per-layer gradients.
    pub fn step(&mut self, model: &mut Model, grads: &[LayerGrads]) -> Result<()> {
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        let mut slot = 0;
        for (layer, lg) in model.layers_mut().iter_mut().zip(grads) {
            for ((_, arr), g_arr) in layer.param_arrays_mut().into_iter().zip(&lg.params) {
                let (m, v) = (&mut self.m[slot], &mut self.v[slot]);
                slot += 1;
                for ((w, &g), (mi, vi)) in
                    arr.iter_mut().zip(g_arr).zip(m.iter_mut().zip(v.iter_mut()))
                {
                    if !g.is_finite() {
                        return Err(Error::Numeric("non-finite gradient in optimizer step".into()));
                    }
                    *mi = self.beta1 * *mi + (1.0 - self.beta1) * g;
                    *vi = self.beta2 * *vi + (1.0 - self.beta2) * g * g;
                    let mhat = *mi / bc1;
                    let vhat = *vi / bc2;
                    *w -= self.lr * (mhat / (vhat.sqrt() + self.eps) + self.weight_decay * *w);
                }
            }
        }
        if slot != self.m.len() {
            return Err(Error::contract("optimizer state does not match model shape"));
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Training configuration
// ---------------------------------------------------------------------------

/// Hyperparameters for one training run. Defaults per variant come from the
/// benchmark's tuned values ([`TrainConfig::for_variant`]).
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub initial_lr: f64,
    pub weight_decay: f64,
    /// Learning-rate multiplier applied on plateau, in (0, 1).
    pub scheduler_factor: f64,
    /// Non-improving epochs before the learning rate is reduced.
    pub scheduler_patience: usize,
    /// Non-improving epochs before training stops.
    pub early_stop_patience: usize,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub seed: u64,
    pub penalties: PenaltyWeights,
}

impl TrainConfig {
    /// Tuned defaults per variant: learning rate, weight decay, scheduler
    /// factor, and (where applicable) penalty coefficients.
    #[must_use]
    pub fn for_variant(variant: Variant) -> Self {
        let (initial_lr, weight_decay, scheduler_factor, penalties) = match variant {
            Variant::Oae => {
                (1.00e-3, 1.00e-2, 0.20, PenaltyWeights { orthogonality: 1.00, l1: 0.0, entropy: 0.0 })
            }
            Variant::EfficientKan => (
                4.38e-3,
                2.00e-2,
                0.96,
                PenaltyWeights { orthogonality: 0.0, l1: 1.93e-4, entropy: 7.73e-4 },
            ),
            Variant::FastKan => (1.92e-3, 9.60e-3, 0.93, PenaltyWeights::none()),
            Variant::FourierKan => (3.63e-3, 5.38e-3, 0.98, PenaltyWeights::none()),
            Variant::WavKan => (4.99e-3, 7.60e-3, 0.95, PenaltyWeights::none()),
        };
        TrainConfig {
            initial_lr,
            weight_decay,
            scheduler_factor,
            scheduler_patience: 5,
            early_stop_patience: 15,
            batch_size: 256,
            max_epochs: 600,
            seed: 0,
            penalties,
        }
    }

    /// Checks ranges. A zero learning rate is allowed (frozen model — the
    /// no-progress early-stop contract depends on it).
    pub fn validate(&self) -> Result<()> {
        if !self.initial_lr.is_finite() || self.initial_lr < 0.0 {
            return Err(Error::config("initial_lr must be finite and nonnegative"));
        }
        if !self.weight_decay.is_finite() || self.weight_decay < 0.0 {
            return Err(Error::config("weight_decay must be finite and nonnegative"));
        }
        if !(0.0 < self.scheduler_factor && self.scheduler_factor < 1.0) {
            return Err(Error::config("scheduler_factor must be in (0, 1)"));
        }
        if self.scheduler_patience == 0 || self.early_stop_patience == 0 {
            return Err(Error::config("patience values must be positive"));
        }
        if self.batch_size == 0 {
            return Err(Error::config("batch_size must be positive"));
        }
        if self.max_epochs == 0 {
            return Err(Error::config("max_epochs must be positive"));
        }
        for (name, w) in [
            ("orthogonality", self.penalties.orthogonality),
            ("l1", self.penalties.l1),
            ("entropy", self.penalties.entropy),
        ] {
            if !w.is_finite() || w < 0.0 {
                return Err(Error::config(format!("{name} penalty must be finite and nonnegative")));
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// History
// ---------------------------------------------------------------------------

/// Why a training run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    EarlyStop,
    MaxEpochs,
}

/// One epoch's record: training loss (penalties included), validation
/// reconstruction error, and the learning rate used.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_mse: f64,
    pub lr: f64,
}

/// Full per-epoch trace of a training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub records: Vec<EpochRecord>,
    pub stop_reason: StopReason,
}

impl TrainHistory {
    /// Lowest validation reconstruction error seen.
    #[must_use]
    pub fn best_val_mse(&self) -> f64 {
        self.records.iter().map(|r| r.val_mse).fold(f64::INFINITY, f64::min)
    }

    /// Writes the history as JSON.
    pub fn save(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        let json = serde_json::to_string_pretty(self)
            .map_err(|e| Error::Format(format!("history encoding failed: {e}")))?;
        std::fs::write(path, json)?;
        Ok(())
    }

    /// Reads a history written by [`TrainHistory::save`].
    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())?;
        serde_json::from_str(&text).map_err(|e| {
            Error::Format(format!("{}: malformed history: {e}", path.as_ref().display()))
        })
    }
}

// ---------------------------------------------------------------------------
// Trainer
// ---------------------------------------------------------------------------

/// Incremental trainer: one [`Trainer::step_epoch`] call per epoch, so
/// callers can interleave training with UI updates or checks. [`train`]
/// wraps it for the common run-to-completion case.
#[derive(Debug)]
pub struct Trainer {
    model: Model,
    cfg: TrainConfig,
    opt: AdamW,
    train_x: Mat,
    val_x: Mat,
    rng: ChaCha8Rng,
    epoch: usize,
    best_patience_val: f64,
    best_snapshot_val: f64,
    best_snapshot: Model,
    lr_wait: usize,
    stop_wait: usize,
    records: Vec<EpochRecord>,
    stop: Option<StopReason>,
}

impl Trainer {
    /// Takes ownership of the model and (already scaled) data partitions.
    pub fn new(model: Model, train_x: Mat, val_x: Mat, cfg: TrainConfig) -> Result<Self> {
        cfg.validate()?;
        let n_vars = model.arch().n_vars();
        if train_x.cols() != n_vars || val_x.cols() != n_vars {
            return Err(Error::contract(format!(
                "model expects {n_vars} variables, data has {}/{}",
                train_x.cols(),
                val_x.cols()
            )));
        }
        if train_x.rows() < 2 {
            return Err(Error::data("training partition needs at least 2 rows"));
        }
        if val_x.rows() == 0 {
            return Err(Error::data("validation partition is empty"));
        }
        let opt = AdamW::new(&model, cfg.initial_lr, cfg.weight_decay);
        let rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        Ok(Trainer {
            best_snapshot: model.clone(),
            model,
            opt,
            train_x,
            val_x,
            rng,
            epoch: 0,
            best_patience_val: f64::INFINITY,
            best_snapshot_val: f64::INFINITY,
            lr_wait: 0,
            stop_wait: 0,
            records: Vec::new(),
            stop: None,
            cfg,
        })
    }

    #[must_use]
    pub fn is_finished(&self) -> bool {
        self.stop.is_some()
    }

    #[must_use]
    pub fn epochs_run(&self) -> usize {
        self.epoch
    }

    /// Current (last-epoch) model, not the best snapshot.
    #[must_use]
    pub fn model(&self) -> &Model {
        &self.model
    }

    /// Best-validation snapshot so far.
    #[must_use]
    pub fn best_model(&self) -> &Model {
        &self.best_snapshot
    }

    #[must_use]
    pub fn records(&self) -> &[EpochRecord] {
        &self.records
    }

    /// Runs one epoch: shuffled mini-batches, optimizer steps, running-stat
    /// commits, then a full validation pass.
    pub fn step_epoch(&mut self) -> Result<EpochRecord> {
        if let Some(reason) = self.stop {
            return Err(Error::contract(format!(
                "training already stopped ({})",
                match reason {
                    StopReason::EarlyStop => "early stop",
                    StopReason::MaxEpochs => "epoch limit",
                }
            )));
        }
        self.epoch += 1;
        let lr_used = self.opt.lr();

        let mut order: Vec<usize> = (0..self.train_x.rows()).collect();
        shuffle(&mut order, &mut self.rng);
        let batches = batch_ranges(order.len(), self.cfg.batch_size);

        let mut loss_sum = 0.0;
        for range in batches {
            let idx = &order[range];
            let batch = self.train_x.gather_rows(idx);
            let (breakdown, grads, caches) =
                self.model.loss_and_grads(&batch, &self.cfg.penalties)?;
            if !breakdown.total.is_finite() {
                return Err(Error::Training {
                    epoch: self.epoch,
                    message: "training loss diverged (non-finite)".into(),
                });
            }
            self.opt
                .step(&mut self.model, &grads)
                .map_err(|e| Error::Training { epoch: self.epoch, message: e.to_string() })?;
            self.model.commit_batch_stats(&caches);
            loss_sum += breakdown.total * idx.len() as f64;
        }
        let train_loss = loss_sum / self.train_x.rows() as f64;

        let recon = self.model.reconstruct(&self.val_x, Phase::Eval)?;
        let val_mse = Model::mse(&self.val_x, &recon);
        if !val_mse.is_finite() {
            return Err(Error::Training {
                epoch: self.epoch,
                message: "validation loss diverged (non-finite)".into(),
            });
        }

        // Best snapshot tracks any strict improvement; the patience counters
        // demand a relative margin so vanishing gains still stop the run.
        if val_mse < self.best_snapshot_val {
            self.best_snapshot_val = val_mse;
            self.best_snapshot = self.model.clone();
        }
        if val_mse < self.best_patience_val * (1.0 - IMPROVEMENT_THRESHOLD) {
            self.best_patience_val = val_mse;
            self.lr_wait = 0;
            self.stop_wait = 0;
        } else {
            self.lr_wait += 1;
            self.stop_wait += 1;
            if self.lr_wait >= self.cfg.scheduler_patience {
                self.opt.set_lr(self.opt.lr() * self.cfg.scheduler_factor);
                self.lr_wait = 0;
            }
        }

        let record = EpochRecord { epoch: self.epoch, train_loss, val_mse, lr: lr_used };
        self.records.push(record);

        if self.stop_wait >= self.cfg.early_stop_patience {
            self.stop = Some(StopReason::EarlyStop);
        } else if self.epoch >= self.cfg.max_epochs {
            self.stop = Some(StopReason::MaxEpochs);
        }
        Ok(record)
    }

    /// Consumes the trainer, returning the best snapshot and the history.
    #[must_use]
    pub fn finish(self) -> (Model, TrainHistory) {
        let stop_reason = self.stop.unwrap_or(StopReason::MaxEpochs);
        (self.best_snapshot, TrainHistory { records: self.records, stop_reason })
    }
}

/// Contiguous index ranges of `batch_size`, merging a trailing singleton
/// into the previous batch (batch statistics need at least two rows).
fn batch_ranges(n: usize, batch_size: usize) -> Vec<std::ops::Range<usize>> {
    let mut ranges: Vec<std::ops::Range<usize>> = Vec::new();
    let mut start = 0;
    while start < n {
        let end = (start + batch_size).min(n);
        ranges.push(start..end);
        start = end;
    }
    if ranges.len() >= 2 && ranges.last().is_some_and(|r| r.len() == 1) {
        let last = ranges.pop().unwrap();
        ranges.last_mut().unwrap().end = last.end;
    }
    ranges
}

/// Trains to completion and returns the best snapshot with its history.
pub fn train(
    model: Model,
    train_x: Mat,
    val_x: Mat,
    cfg: TrainConfig,
) -> Result<(Model, TrainHistory)> {
    let mut trainer = Trainer::new(model, train_x, val_x, cfg)?;
    while !trainer.is_finished() {
        trainer.step_epoch()?;
    }
    Ok(trainer.finish())
}

// ---------------------------------------------------------------------------
// Multi-seed sweeps
// ---------------------------------------------------------------------------

/// Optional replacements for the per-variant training defaults.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainOverrides {
    pub initial_lr: Option<f64>,
    pub weight_decay: Option<f64>,
    pub scheduler_factor: Option<f64>,
    pub scheduler_patience: Option<usize>,
    pub early_stop_patience: Option<usize>,
    pub batch_size: Option<usize>,
    pub max_epochs: Option<usize>,
}

impl TrainOverrides {
    /// Applies the set fields on top of `cfg`.
    #[must_use]
    pub fn apply(&self, mut cfg: TrainConfig) -> TrainConfig {
        if let Some(v) = self.initial_lr {
            cfg.initial_lr = v;
        }
        if let Some(v) = self.weight_decay {
            cfg.weight_decay = v;
        }
        if let Some(v) = self.scheduler_factor {
            cfg.scheduler_factor = v;
        }
        if let Some(v) = self.scheduler_patience {
            cfg.scheduler_patience = v;
        }
        if let Some(v) = self.early_stop_patience {
            cfg.early_stop_patience = v;
        }
        if let Some(v) = self.batch_size {
            cfg.batch_size = v;
        }
        if let Some(v) = self.max_epochs {
            cfg.max_epochs = v;
        }
        cfg
    }
}

/// One (size, seed) cell of a sweep for a fixed architecture.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SweepCell {
    pub variant: Variant,
    pub size: usize,
    pub seed_index: u64,
}

impl SweepCell {
    /// File stem encoding variant, size, and seed (`fastkan_n625_s0`).
    #[must_use]
    pub fn stem(&self) -> String {
        format!("{}_n{}_s{}", self.variant.name(), self.size, self.seed_index)
    }

    /// Path of the cell's monitoring-profile container.
    #[must_use]
    pub fn profile_path(&self, dir: &std::path::Path) -> std::path::PathBuf {
        dir.join(format!("{}.kanm", self.stem()))
    }

    /// Path of the cell's training-history file.
    #[must_use]
    pub fn history_path(&self, dir: &std::path::Path) -> std::path::PathBuf {
        dir.join(format!("{}.history.json", self.stem()))
    }

    /// A cell is complete when both its artifacts exist.
    #[must_use]
    pub fn is_complete(&self, dir: &std::path::Path) -> bool {
        self.profile_path(dir).is_file() && self.history_path(dir).is_file()
    }
}

/// Sweep-wide options on top of the per-variant training defaults.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepOptions {
    /// Base seed; every cell derives its own streams from it.
    pub base_seed: u64,
    /// False-alarm design rate for threshold calibration.
    pub alpha: f64,
    /// Worker threads over cells (1 = sequential).
    pub jobs: usize,
    /// Training-parameter replacements applied to every cell.
    pub overrides: TrainOverrides,
}

impl SweepOptions {
    /// Defaults: α = 0.05, sequential, no overrides.
    #[must_use]
    pub fn new(base_seed: u64) -> Self {
        SweepOptions {
            base_seed,
            alpha: crate::detect::DEFAULT_ALPHA,
            jobs: 1,
            overrides: TrainOverrides::default(),
        }
    }
}

/// What happened to each cell of a sweep.
#[derive(Debug, Default)]
pub struct SweepReport {
    /// Cells trained in this invocation.
    pub trained: Vec<SweepCell>,
    /// Cells already complete on disk (no-ops).
    pub skipped: Vec<SweepCell>,
    /// Cells whose run failed, with the error; the sweep itself continues.
    pub failed: Vec<(SweepCell, Error)>,
}

/// Runs one architecture over every (subset size, seed) cell, writing one
/// monitoring profile and one history file per cell into `out_dir`.
///
/// Completed cells are skipped, so an interrupted sweep resumes where it
/// stopped. Every cell is deterministic in `base_seed`: the data split
/// depends only on (size, seed index) — all variants see identical splits —
/// while initialization and batch order also mix in the variant.
pub fn sweep(
    arch: &AeArchitecture,
    subsets: &[crate::data::Subset],
    n_seeds: usize,
    out_dir: impl AsRef<std::path::Path>,
    options: &SweepOptions,
) -> Result<SweepReport> {
    let out_dir = out_dir.as_ref();
    if n_seeds == 0 {
        return Err(Error::config("sweep needs at least one seed"));
    }
    if subsets.is_empty() {
        return Err(Error::config("sweep needs at least one subset"));
    }
    std::fs::create_dir_all(out_dir)?;

    let mut report = SweepReport::default();
    let mut pending: Vec<(usize, SweepCell)> = Vec::new();
    for (subset_idx, subset) in subsets.iter().enumerate() {
        for seed_index in 0..n_seeds as u64 {
            let cell = SweepCell { variant: arch.variant(), size: subset.size(), seed_index };
            if cell.is_complete(out_dir) {
                report.skipped.push(cell);
            } else {
                pending.push((subset_idx, cell));
            }
        }
    }

    let outcomes: Vec<(SweepCell, Result<()>)> = if options.jobs <= 1 || pending.len() <= 1 {
        pending
            .iter()
            .map(|&(subset_idx, cell)| {
                (cell, run_sweep_cell(arch, &subsets[subset_idx], cell, out_dir, options))
            })
            .collect()
    } else {
        let queue = std::sync::Mutex::new(pending.clone().into_iter());
        let done = std::sync::Mutex::new(Vec::with_capacity(pending.len()));
        std::thread::scope(|scope| {
            for _ in 0..options.jobs.min(pending.len()) {
                scope.spawn(|| loop {
                    let next = queue.lock().expect("queue lock").next();
                    let Some((subset_idx, cell)) = next else { break };
                    let outcome =
                        run_sweep_cell(arch, &subsets[subset_idx], cell, out_dir, options);
                    done.lock().expect("result lock").push((cell, outcome));
                });
            }
        });
        let mut outcomes = done.into_inner().expect("result lock");
        // Fixed order regardless of worker scheduling.
        outcomes.sort_by_key(|(cell, _)| (cell.size, cell.seed_index));
        outcomes
    };

    for (cell, outcome) in outcomes {
        match outcome {
            Ok(()) => report.trained.push(cell),
            Err(e) => report.failed.push((cell, e)),
        }
    }
    Ok(report)
}

/// Trains and calibrates one cell, writing profile then history (a cell is
/// complete only once both exist, so interrupts leave it re-runnable).
fn run_sweep_cell(
    arch: &AeArchitecture,
    subset: &crate::data::Subset,
    cell: SweepCell,
    out_dir: &std::path::Path,
    options: &SweepOptions,
) -> Result<()> {
    let variant_rank = Variant::ALL
        .iter()
        .position(|v| *v == cell.variant)
        .expect("variant in canonical list") as u64;
    let split_seed = crate::seed::mix(options.base_seed, &[cell.size as u64, cell.seed_index]);
    let model_seed = crate::seed::mix(
        options.base_seed,
        &[variant_rank, cell.size as u64, cell.seed_index, 0],
    );
    let shuffle_seed = crate::seed::mix(
        options.base_seed,
        &[variant_rank, cell.size as u64, cell.seed_index, 1],
    );

    let (train_raw, val_raw) = split_simulations(subset.runs(), subset.size(), 0.8, split_seed)?;
    let scaler = Scaler::fit(&train_raw)?;
    let train_x = scaler.transform(&train_raw)?;
    let val_x = scaler.transform(&val_raw)?;

    let mut cfg = options.overrides.apply(TrainConfig::for_variant(cell.variant));
    cfg.seed = shuffle_seed;
    let model = crate::model::build_model(arch, model_seed)?;
    let (model, history) = train(model, train_x, val_x, cfg)?;

    let calibration_x = scaler.transform(&train_raw)?;
    let profile =
        crate::detect::MonitoringProfile::calibrate(model, scaler, &calibration_x, options.alpha)?;
    profile.save(cell.profile_path(out_dir))?;
    history.save(cell.history_path(out_dir))?;
    Ok(())
}


#[cfg(test)]
mod proptests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn batch_ranges_cover_everything_without_singletons(
            n in 1usize..2000,
            batch in 1usize..300,
        ) {
            let ranges = batch_ranges(n, batch);
            let mut expect = 0;
            for r in &ranges {
                prop_assert_eq!(r.start, expect);
                expect = r.end;
            }
            prop_assert_eq!(expect, n);
            if n > 1 {
                prop_assert!(ranges.iter().all(|r| r.len() >= 2 || ranges.len() == 1 || batch == 1));
            }
        }

        #[test]
        fn split_partitions_are_exact_and_disjoint(
            target in 10usize..400,
            seed in 0u64..500,
        ) {
            let runs: Vec<RunMatrix> = (0..5)
                .map(|i| {
                    let mut x = Mat::zeros(100, 1);
                    for (k, v) in x.data_mut().iter_mut().enumerate() {
                        *v = i as f64 * 1000.0 + k as f64;
                    }
                    RunMatrix::new(i, 0, None, x).unwrap()
                })
                .collect();
            let n_train = (0.8 * target as f64).round() as usize;
            prop_assume!(n_train > 0 && n_train < target);
            let (train, val) = split_simulations(&runs, target, 0.8, seed).unwrap();
            prop_assert_eq!(train.rows() + val.rows(), target);
            prop_assert_eq!(train.rows(), n_train);
            // Every value is unique across the pool, so overlap means reuse.
            let mut seen: Vec<f64> = train.data().iter().chain(val.data()).copied().collect();
            seen.sort_by(f64::total_cmp);
            let unique = seen.windows(2).all(|w| w[0] != w[1]);
            prop_assert!(unique, "train/val share rows");
        }
    }
}
