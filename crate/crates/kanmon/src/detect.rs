//! Monitoring: squared prediction error, kernel-density control limits,
//! per-run alarm evaluation, and multi-seed aggregation.
//!
//! The detector flags a sample when its SPE exceeds `q_lim`, the
//! `(1 − α)`-quantile of a Gaussian KDE fitted to the SPE of fault-free
//! training data with Scott's-rule bandwidth. Rates with empty denominators
//! are reported as absent, never as zero.

use crate::data::RunMatrix;
use crate::error::{Error, Result};
use crate::layers::Phase;
use crate::mat::Mat;
use crate::model::{Model, Variant};
use crate::model_io::{read_container, write_container};
use crate::train::Scaler;
use std::collections::BTreeMap;
use std::path::Path;

/// Default false-alarm design rate.
pub const DEFAULT_ALPHA: f64 = 0.05;

/// Squared prediction error `‖x − x̂‖²` of one sample.
#[must_use]
pub fn spe(x: &[f64], recon: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), recon.len());
    x.iter().zip(recon).map(|(a, b)| (a - b) * (a - b)).sum()
}

/// SPE of every row in a batch.
#[must_use]
pub fn spe_rows(x: &Mat, recon: &Mat) -> Vec<f64> {
    (0..x.rows()).map(|r| spe(x.row(r), recon.row(r))).collect()
}

// ---------------------------------------------------------------------------
// KDE threshold
// ---------------------------------------------------------------------------

/// Standard normal CDF.
fn phi(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

/// Gaussian kernel density over observed SPE values with Scott's-rule
/// bandwidth `h = σ · n^{−1/5}` (sample standard deviation).
#[derive(Debug, Clone, PartialEq)]
pub struct KdeModel {
    samples: Vec<f64>,
    bandwidth: f64,
}

impl KdeModel {
    /// Fits the density. Needs ≥ 2 samples with nonzero spread.
    pub fn fit(samples: &[f64]) -> Result<Self> {
        let n = samples.len();
        if n < 2 {
            return Err(Error::data("kernel density needs at least 2 samples"));
        }
        if samples.iter().any(|q| !q.is_finite()) {
            return Err(Error::Numeric("non-finite value among density samples".into()));
        }
        let mean = samples.iter().sum::<f64>() / n as f64;
        let ssq: f64 = samples.iter().map(|q| (q - mean) * (q - mean)).sum();
        let sigma = (ssq / (n - 1) as f64).sqrt();
        if sigma == 0.0 {
            return Err(Error::Degenerate(
                "all density samples are identical (zero spread); the model reconstructs \
                 its training data exactly — likely a degenerate fit"
                    .into(),
            ));
        }
        let bandwidth = sigma * (n as f64).powf(-0.2);
        Ok(KdeModel { samples: samples.to_vec(), bandwidth })
    }

    #[must_use]
    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    #[must_use]
    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    /// Closed-form mixture CDF `F̂(q) = (1/n) Σ Φ((q − Q_i)/h)`.
    #[must_use]
    pub fn cdf(&self, q: f64) -> f64 {
        let inv = 1.0 / self.bandwidth;
        self.samples.iter().map(|s| phi((q - s) * inv)).sum::<f64>() / self.samples.len() as f64
    }

    /// Kernel density at `q` (numerical-integration oracles in tests).
    #[must_use]
    pub fn density(&self, q: f64) -> f64 {
        let inv = 1.0 / self.bandwidth;
        let norm = inv / (2.0 * std::f64::consts::PI).sqrt() / self.samples.len() as f64;
        self.samples
            .iter()
            .map(|s| {
                let z = (q - s) * inv;
                (-0.5 * z * z).exp()
            })
            .sum::<f64>()
            * norm
    }

    /// Solves `F̂(q) = p` by bisection to an absolute CDF residual ≤ 1e-10.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(0.0 < p && p < 1.0) {
            return Err(Error::config("quantile probability must be in (0, 1)"));
        }
        let spread = 9.0 * self.bandwidth;
        let mut lo = self.samples.iter().copied().fold(f64::INFINITY, f64::min) - spread;
        let mut hi = self.samples.iter().copied().fold(f64::NEG_INFINITY, f64::max) + spread;
        // Widen until the bracket provably straddles p.
        for _ in 0..64 {
            if self.cdf(lo) < p {
                break;
            }
            lo -= spread;
        }
        for _ in 0..64 {
            if self.cdf(hi) > p {
                break;
            }
            hi += spread;
        }
        for _ in 0..500 {
            let mid = 0.5 * (lo + hi);
            let res = self.cdf(mid) - p;
            if res.abs() <= 1e-10 {
                return Ok(mid);
            }
            if res > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
            if (hi - lo) < f64::EPSILON * mid.abs().max(1.0) {
                break;
            }
        }
        let mid = 0.5 * (lo + hi);
        if (self.cdf(mid) - p).abs() <= 1e-9 {
            Ok(mid)
        } else {
            Err(Error::Numeric(format!(
                "quantile bisection stalled at residual {:.3e}",
                (self.cdf(mid) - p).abs()
            )))
        }
    }
}

/// Detection threshold: the `(1 − α)`-quantile of the fitted SPE density.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Threshold {
    pub q_lim: f64,
    pub alpha: f64,
}

/// Fits the KDE on fault-free SPE values and extracts the control limit.
pub fn kde_threshold(q_train: &[f64], alpha: f64) -> Result<Threshold> {
    if !(0.0 < alpha && alpha < 1.0) {
        return Err(Error::config("alpha must be in (0, 1)"));
    }
    let kde = KdeModel::fit(q_train)?;
    let q_lim = kde.quantile(1.0 - alpha)?;
    Ok(Threshold { q_lim, alpha })
}

// ---------------------------------------------------------------------------
// Per-run evaluation
// ---------------------------------------------------------------------------

/// Alarm outcomes of one run. `fn_` holds the false negatives (`fn` is a
/// reserved word).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub tn: usize,
}

/// Classifies each SPE value against `q_lim` (strictly greater flags a
/// fault): samples before `onset` count as normal ground truth, samples at
/// or after it as faulty.
pub fn evaluate_run(q_seq: &[f64], q_lim: f64, onset: usize) -> Result<ConfusionCounts> {
    if onset > q_seq.len() {
        return Err(Error::contract(format!(
            "onset {onset} beyond run length {}",
            q_seq.len()
        )));
    }
    let mut counts = ConfusionCounts::default();
    for (i, &q) in q_seq.iter().enumerate() {
        let flagged = q > q_lim;
        match (i >= onset, flagged) {
            (true, true) => counts.tp += 1,
            (true, false) => counts.fn_ += 1,
            (false, true) => counts.fp += 1,
            (false, false) => counts.tn += 1,
        }
    }
    Ok(counts)
}

/// `(FDR, FAR)` = `(TP/(TP+FN), FP/(FP+TN))`; `None` when a denominator is
/// empty (never fabricated as zero).
#[must_use]
pub fn rates(counts: &ConfusionCounts) -> (Option<f64>, Option<f64>) {
    let fdr = match counts.tp + counts.fn_ {
        0 => None,
        n => Some(counts.tp as f64 / n as f64),
    };
    let far = match counts.fp + counts.tn {
        0 => None,
        n => Some(counts.fp as f64 / n as f64),
    };
    (fdr, far)
}

// ---------------------------------------------------------------------------
// Fault categories
// ---------------------------------------------------------------------------

/// Process-recovery grouping of the benchmark's 21 fault scenarios.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FaultCategory {
    /// Faults 3, 9, 15.
    Controllable,
    /// Faults 4, 5, 7.
    BackToControl,
    /// Everything else (1, 2, 6, 8, 10–14, 16–21).
    Uncontrollable,
}

impl FaultCategory {
    /// Category of a nonzero fault id; `None` for normal operation (0).
    #[must_use]
    pub fn of_fault(fault_id: u8) -> Option<FaultCategory> {
        match fault_id {
            0 => None,
            3 | 9 | 15 => Some(FaultCategory::Controllable),
            4 | 5 | 7 => Some(FaultCategory::BackToControl),
            _ => Some(FaultCategory::Uncontrollable),
        }
    }

    /// Stable lowercase name used in reports.
    #[must_use]
    pub fn name(self) -> &'static str {
        match self {
            FaultCategory::Controllable => "controllable",
            FaultCategory::BackToControl => "back_to_control",
            FaultCategory::Uncontrollable => "uncontrollable",
        }
    }
}

// ---------------------------------------------------------------------------
// Aggregation
// ---------------------------------------------------------------------------

/// One test run's rates, tagged for grouping.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunRate {
    pub fault_id: u8,
    pub seed: u64,
    pub fdr: Option<f64>,
    pub far: Option<f64>,
}

/// Per-fault aggregate: seed-level means with 95% confidence half-widths.
#[derive(Debug, Clone, PartialEq)]
pub struct FaultSummary {
    pub fault_id: u8,
    pub category: Option<FaultCategory>,
    pub fdr_mean: Option<f64>,
    pub fdr_ci: Option<f64>,
    pub far_mean: Option<f64>,
    pub far_ci: Option<f64>,
    pub n_seeds: usize,
}

/// Per-category aggregate across its faults.
#[derive(Debug, Clone, PartialEq)]
pub struct CategorySummary {
    pub category: FaultCategory,
    pub fdr_mean: Option<f64>,
    pub fdr_ci: Option<f64>,
    pub far_mean: Option<f64>,
    pub far_ci: Option<f64>,
    pub n_seeds: usize,
}

/// Mean and 95% CI half-width (`1.96 · sd/√n`, sample sd) across seeds;
/// the half-width needs ≥ 2 values.
fn mean_ci(values: &[f64]) -> (Option<f64>, Option<f64>) {
    if values.is_empty() {
        return (None, None);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (Some(mean), None);
    }
    let ssq: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    let sd = (ssq / (n - 1.0)).sqrt();
    (Some(mean), Some(1.96 * sd / n.sqrt()))
}

/// Per-seed means of present values, keyed `(group, seed)` → per-group
/// seed-mean lists.
fn seed_means<K: Ord + Copy>(
    rows: impl Iterator<Item = (K, u64, Option<f64>)>,
) -> BTreeMap<K, Vec<f64>> {
    let mut acc: BTreeMap<(K, u64), (f64, usize)> = BTreeMap::new();
    for (key, seed, value) in rows {
        if let Some(v) = value {
            let slot = acc.entry((key, seed)).or_insert((0.0, 0));
            slot.0 += v;
            slot.1 += 1;
        }
    }
    let mut out: BTreeMap<K, Vec<f64>> = BTreeMap::new();
    for ((key, _), (sum, count)) in acc {
        out.entry(key).or_default().push(sum / count as f64);
    }
    out
}

/// Aggregates per-run rates into per-fault summaries: rates are averaged
/// over runs within each seed, then across seeds with a 95% CI.
pub fn aggregate(rates: &[RunRate]) -> Result<Vec<FaultSummary>> {
    if rates.is_empty() {
        return Err(Error::data("no rates to aggregate"));
    }
    let fdr = seed_means(rates.iter().map(|r| (r.fault_id, r.seed, r.fdr)));
    let far = seed_means(rates.iter().map(|r| (r.fault_id, r.seed, r.far)));
    let mut faults: Vec<u8> = rates.iter().map(|r| r.fault_id).collect();
    faults.sort_unstable();
    faults.dedup();
    Ok(faults
        .into_iter()
        .map(|fault_id| {
            let empty = Vec::new();
            let f = fdr.get(&fault_id).unwrap_or(&empty);
            let a = far.get(&fault_id).unwrap_or(&empty);
            let (fdr_mean, fdr_ci) = mean_ci(f);
            let (far_mean, far_ci) = mean_ci(a);
            FaultSummary {
                fault_id,
                category: FaultCategory::of_fault(fault_id),
                fdr_mean,
                fdr_ci,
                far_mean,
                far_ci,
                n_seeds: f.len().max(a.len()),
            }
        })
        .collect())
}

/// Aggregates to fault categories: per seed, rates are first averaged across
/// the category's faults, then across seeds with a 95% CI.
pub fn aggregate_by_category(rates: &[RunRate]) -> Result<Vec<CategorySummary>> {
    if rates.is_empty() {
        return Err(Error::data("no rates to aggregate"));
    }
    // (fault, seed) means first, so faults weigh equally within a category.
    let per_fault_fdr = seed_means(rates.iter().map(|r| ((r.fault_id, r.seed), r.seed, r.fdr)));
    let per_fault_far = seed_means(rates.iter().map(|r| ((r.fault_id, r.seed), r.seed, r.far)));
    let category_rows = |per_fault: &BTreeMap<(u8, u64), Vec<f64>>| {
        let mut rows: Vec<(FaultCategory, u64, Option<f64>)> = Vec::new();
        for (&(fault_id, seed), means) in per_fault {
            if let Some(cat) = FaultCategory::of_fault(fault_id) {
                for &m in means {
                    rows.push((cat, seed, Some(m)));
                }
            }
        }
        rows
    };
    let fdr = seed_means(category_rows(&per_fault_fdr).into_iter());
    let far = seed_means(category_rows(&per_fault_far).into_iter());
    let mut cats: Vec<FaultCategory> = fdr.keys().chain(far.keys()).copied().collect();
    cats.sort_unstable();
    cats.dedup();
    Ok(cats
        .into_iter()
        .map(|category| {
            let empty = Vec::new();
            let f = fdr.get(&category).unwrap_or(&empty);
            let a = far.get(&category).unwrap_or(&empty);
            let (fdr_mean, fdr_ci) = mean_ci(f);
            let (far_mean, far_ci) = mean_ci(a);
            CategorySummary {
                category,
                fdr_mean,
                fdr_ci,
                far_mean,
                far_ci,
                n_seeds: f.len().max(a.len()),
            }
        })
        .collect())
}

// ---------------------------------------------------------------------------
// Monitoring profile
// ---------------------------------------------------------------------------

/// A deployable detector: trained model, its scaler, the calibrated control
/// limit, and the calibration SPE sample (kept so the limit can be re-derived
/// at a different design rate).
#[derive(Debug, Clone, PartialEq)]
pub struct MonitoringProfile {
    model: Model,
    scaler: Scaler,
    threshold: Threshold,
    q_train: Vec<f64>,
}

impl MonitoringProfile {
    /// Calibrates the control limit from the scaled training partition's SPE.
    pub fn calibrate(model: Model, scaler: Scaler, train_scaled: &Mat, alpha: f64) -> Result<Self> {
        let recon = model.reconstruct(train_scaled, Phase::Eval)?;
        let q_train = spe_rows(train_scaled, &recon);
        let threshold = kde_threshold(&q_train, alpha)?;
        Ok(MonitoringProfile { model, scaler, threshold, q_train })
    }

    /// Wraps pre-computed parts (tests, deserialization).
    pub fn from_parts(
        model: Model,
        scaler: Scaler,
        threshold: Threshold,
        q_train: Vec<f64>,
    ) -> Result<Self> {
        if scaler.mean().len() != model.arch().n_vars() {
            return Err(Error::contract(format!(
                "scaler covers {} features, model expects {}",
                scaler.mean().len(),
                model.arch().n_vars()
            )));
        }
        Ok(MonitoringProfile { model, scaler, threshold, q_train })
    }

    /// Re-derives the control limit at a different false-alarm design rate
    /// from the stored calibration sample.
    pub fn with_alpha(&self, alpha: f64) -> Result<Self> {
        if self.q_train.is_empty() {
            return Err(Error::data(
                "profile carries no calibration sample; re-calibrate from training data",
            ));
        }
        let threshold = kde_threshold(&self.q_train, alpha)?;
        Ok(MonitoringProfile { threshold, ..self.clone() })
    }

    /// Calibration SPE values the threshold was fitted on.
    #[must_use]
    pub fn q_train(&self) -> &[f64] {
        &self.q_train
    }

    #[must_use]
    pub fn model(&self) -> &Model {
        &self.model
    }

    #[must_use]
    pub fn scaler(&self) -> &Scaler {
        &self.scaler
    }

    #[must_use]
    pub fn q_lim(&self) -> f64 {
        self.threshold.q_lim
    }

    #[must_use]
    pub fn alpha(&self) -> f64 {
        self.threshold.alpha
    }

    #[must_use]
    pub fn variant(&self) -> Variant {
        self.model.arch().variant()
    }

    /// SPE sequence of a raw (unscaled) run.
    pub fn spe_of_run(&self, run: &RunMatrix) -> Result<Vec<f64>> {
        let scaled = self.scaler.transform(run.x())?;
        let recon = self.model.reconstruct(&scaled, Phase::Eval)?;
        Ok(spe_rows(&scaled, &recon))
    }

    /// Evaluates a run's alarms against its fault onset (normal runs count
    /// every sample as pre-fault).
    pub fn evaluate(&self, run: &RunMatrix) -> Result<ConfusionCounts> {
        let q_seq = self.spe_of_run(run)?;
        let onset = run.onset().unwrap_or(q_seq.len());
        evaluate_run(&q_seq, self.threshold.q_lim, onset)
    }

    /// Saves the profile (model, scaler, threshold, calibration sample) to
    /// one container file.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let extras = vec![
            ("scaler.mean".to_string(), self.scaler.mean().to_vec()),
            ("scaler.std".to_string(), self.scaler.std().to_vec()),
            (
                "monitor.threshold".to_string(),
                vec![self.threshold.q_lim, self.threshold.alpha],
            ),
            ("monitor.q_train".to_string(), self.q_train.clone()),
        ];
        write_container(path.as_ref(), "profile", &self.model, &extras)
    }

    /// Loads a profile written by [`MonitoringProfile::save`].
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let (model, extras) = read_container(path, "profile")?;
        let lookup = |name: &str| {
            extras
                .iter()
                .find(|(n, _)| n == name)
                .map(|(_, d)| d.clone())
                .ok_or_else(|| {
                    Error::Format(format!("{}: missing profile section '{name}'", path.display()))
                })
        };
        let mean = lookup("scaler.mean")?;
        let std = lookup("scaler.std")?;
        let thr = lookup("monitor.threshold")?;
        let q_train = lookup("monitor.q_train")?;
        if thr.len() != 2 {
            return Err(Error::Format(format!(
                "{}: malformed threshold section",
                path.display()
            )));
        }
        let scaler = Scaler::from_parts(mean, std)?;
        MonitoringProfile::from_parts(
            model,
            scaler,
            Threshold { q_lim: thr[0], alpha: thr[1] },
            q_train,
        )
    }
}
