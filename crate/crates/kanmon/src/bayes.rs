//! Bayesian signed-rank comparison of two detectors: a Dirichlet-process
//! posterior over paired fault-detection-rate differences, summarized by the
//! probability mass left of, inside, and right of a region of practical
//! equivalence (ROPE).
//!
//! Convention: deltas are detector B minus detector A, so `p_right` is the
//! posterior probability that B practically outperforms A.

use crate::detect::FaultSummary;
use crate::error::{Error, Result};
use crate::seed;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};

/// The hard-to-detect fault subset used for model comparisons.
pub const CHALLENGE_FAULTS: [u8; 9] = [5, 10, 11, 16, 17, 18, 19, 20, 21];

/// Default half-width of the region of practical equivalence.
pub const DEFAULT_ROPE_RADIUS: f64 = 0.01;

/// Default number of Monte-Carlo posterior draws.
pub const DEFAULT_POSTERIOR_DRAWS: usize = 50_000;

// ---------------------------------------------------------------------------
// Inputs
// ---------------------------------------------------------------------------

/// Paired mean-FDR differences, one per compared fault.
#[derive(Debug, Clone, PartialEq)]
pub struct DeltaSample {
    fault_ids: Vec<u8>,
    deltas: Vec<f64>,
}

impl DeltaSample {
    /// Validates one delta per fault, each a rate difference in [−1, 1].
    pub fn new(fault_ids: Vec<u8>, deltas: Vec<f64>) -> Result<Self> {
        if deltas.is_empty() {
            return Err(Error::data("delta sample needs at least one fault"));
        }
        if fault_ids.len() != deltas.len() {
            return Err(Error::contract(format!(
                "{} fault ids for {} deltas",
                fault_ids.len(),
                deltas.len()
            )));
        }
        if let Some(d) = deltas.iter().find(|d| !d.is_finite() || d.abs() > 1.0) {
            return Err(Error::data(format!(
                "delta {d} outside [-1, 1]; rate differences cannot exceed one"
            )));
        }
        Ok(DeltaSample { fault_ids, deltas })
    }

    #[must_use]
    pub fn fault_ids(&self) -> &[u8] {
        &self.fault_ids
    }

    #[must_use]
    pub fn deltas(&self) -> &[f64] {
        &self.deltas
    }

    /// Number of compared faults.
    #[must_use]
    pub fn len(&self) -> usize {
        self.deltas.len()
    }

    #[must_use]
    pub fn is_empty(&self) -> bool {
        self.deltas.is_empty()
    }
}

/// Posterior sampling configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RopeConfig {
    /// Half-width `r` of the practical-equivalence region on FDR differences.
    pub rope_radius: f64,
    /// Dirichlet concentration of the zero pseudo-observation.
    pub concentration: f64,
    /// Monte-Carlo draws.
    pub draws: usize,
    /// Generator seed.
    pub seed: u64,
}

impl RopeConfig {
    /// Defaults: r = 0.01, concentration 1, 50,000 draws.
    #[must_use]
    pub fn new(seed: u64) -> Self {
        RopeConfig {
            rope_radius: DEFAULT_ROPE_RADIUS,
            concentration: 1.0,
            draws: DEFAULT_POSTERIOR_DRAWS,
            seed,
        }
    }

    /// Checks the sampling parameters.
    pub fn validate(&self) -> Result<()> {
        if !self.rope_radius.is_finite() || self.rope_radius < 0.0 {
            return Err(Error::config("rope radius must be finite and >= 0"));
        }
        if !self.concentration.is_finite() || self.concentration <= 0.0 {
            return Err(Error::config("concentration must be finite and > 0"));
        }
        if self.draws < 1000 {
            return Err(Error::config("posterior needs at least 1000 draws"));
        }
        Ok(())
    }
}

/// Posterior mass per outcome region; the three probabilities sum to one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PosteriorSummary {
    /// P(A practically better).
    pub p_left: f64,
    /// P(practically equivalent).
    pub p_rope: f64,
    /// P(B practically better).
    pub p_right: f64,
}

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

/// Paired per-fault differences of mean FDR, `B − A`, over a fault subset.
pub fn fdr_deltas(
    report_a: &[FaultSummary],
    report_b: &[FaultSummary],
    faults: &[u8],
) -> Result<DeltaSample> {
    if faults.is_empty() {
        return Err(Error::config("empty fault subset for comparison"));
    }
    let find = |report: &[FaultSummary], fault: u8, tag: &str| -> Result<(f64, usize)> {
        let s = report
            .iter()
            .find(|s| s.fault_id == fault)
            .ok_or_else(|| Error::data(format!("fault {fault} missing from report {tag}")))?;
        let fdr = s.fdr_mean.ok_or_else(|| {
            Error::data(format!("fault {fault} in report {tag} has no detection rate"))
        })?;
        Ok((fdr, s.n_seeds))
    };
    let mut deltas = Vec::with_capacity(faults.len());
    for &fault in faults {
        let (fdr_a, seeds_a) = find(report_a, fault, "A")?;
        let (fdr_b, seeds_b) = find(report_b, fault, "B")?;
        if seeds_a != seeds_b {
            return Err(Error::contract(format!(
                "fault {fault}: report A averages {seeds_a} seeds, report B {seeds_b}"
            )));
        }
        deltas.push(fdr_b - fdr_a);
    }
    DeltaSample::new(faults.to_vec(), deltas)
}

/// Dirichlet-process signed-rank posterior over the delta sample.
///
/// Each draw samples weights `(w_0..w_q) ~ Dirichlet(s, 1, …, 1)` over a zero
/// pseudo-observation `z_0 = 0` plus the observed deltas, accumulates the
/// pair-sum mass `Σ_{i,j} w_i w_j` per region (`z_i + z_j` below −2r, within
/// ±2r inclusive, above 2r), and votes for the strictly largest region — ties
/// go to the equivalence region. Deterministic in the seed.
pub fn signed_rank_posterior(sample: &DeltaSample, cfg: &RopeConfig) -> Result<PosteriorSummary> {
    cfg.validate()?;
    let q = sample.len();
    let mut z = Vec::with_capacity(q + 1);
    z.push(0.0);
    z.extend_from_slice(sample.deltas());

    // Pair regions are fixed by the deltas; precompute them once.
    let bound = 2.0 * cfg.rope_radius;
    let n = q + 1;
    let mut region = vec![0u8; n * n];
    for i in 0..n {
        for j in 0..n {
            let s = z[i] + z[j];
            region[i * n + j] = if s < -bound {
                0
            } else if s > bound {
                2
            } else {
                1
            };
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let g_pseudo = Gamma::new(cfg.concentration, 1.0)
        .map_err(|e| Error::config(format!("invalid concentration: {e}")))?;
    let g_unit = Gamma::new(1.0, 1.0).expect("unit gamma");

    let mut votes = [0usize; 3];
    let mut w = vec![0.0f64; n];
    for _ in 0..cfg.draws {
        w[0] = g_pseudo.sample(&mut rng);
        for wi in w.iter_mut().skip(1) {
            *wi = g_unit.sample(&mut rng);
        }
        let total: f64 = w.iter().sum();
        let mut theta = [0.0f64; 3];
        for i in 0..n {
            for j in 0..n {
                theta[region[i * n + j] as usize] += w[i] * w[j];
            }
        }
        let norm = total * total;
        let (left, rope, right) = (theta[0] / norm, theta[1] / norm, theta[2] / norm);
        debug_assert!((left + rope + right - 1.0).abs() < 1e-9);
        let vote = if left > rope && left > right {
            0
        } else if right > rope && right > left {
            2
        } else {
            1
        };
        votes[vote] += 1;
    }
    let total = cfg.draws as f64;
    Ok(PosteriorSummary {
        p_left: votes[0] as f64 / total,
        p_rope: votes[1] as f64 / total,
        p_right: votes[2] as f64 / total,
    })
}

/// One entry of a training-size sweep; `posterior` is absent when either
/// variant lacks a report at that size.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub n_train: usize,
    pub posterior: Option<PosteriorSummary>,
}

/// Tracks the pairwise posterior across training-set sizes. Sizes missing
/// from either report table are listed as absent; each present cell draws
/// from an independent substream of `cfg.seed`.
pub fn posterior_sweep(
    reports_a: &[(usize, Vec<FaultSummary>)],
    reports_b: &[(usize, Vec<FaultSummary>)],
    sizes: &[usize],
    faults: &[u8],
    cfg: &RopeConfig,
) -> Result<Vec<SweepPoint>> {
    cfg.validate()?;
    let index = |reports: &[(usize, Vec<FaultSummary>)], tag: &str| -> Result<_> {
        let mut map = std::collections::BTreeMap::new();
        for (size, report) in reports {
            if map.insert(*size, report.clone()).is_some() {
                return Err(Error::data(format!(
                    "duplicate report for training size {size} in table {tag}"
                )));
            }
        }
        Ok(map)
    };
    let table_a = index(reports_a, "A")?;
    let table_b = index(reports_b, "B")?;
    let mut points = Vec::with_capacity(sizes.len());
    for &n_train in sizes {
        let posterior = match (table_a.get(&n_train), table_b.get(&n_train)) {
            (Some(a), Some(b)) => {
                let sample = fdr_deltas(a, b, faults)?;
                let cell_cfg = RopeConfig {
                    seed: seed::mix(cfg.seed, &[n_train as u64]),
                    ..*cfg
                };
                Some(signed_rank_posterior(&sample, &cell_cfg)?)
            }
            _ => None,
        };
        points.push(SweepPoint { n_train, posterior });
    }
    Ok(points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detect::FaultCategory;
    use approx::assert_abs_diff_eq;
    use rand::Rng;

    fn summary(fault_id: u8, fdr: f64, n_seeds: usize) -> FaultSummary {
        FaultSummary {
            fault_id,
            category: FaultCategory::of_fault(fault_id),
            fdr_mean: Some(fdr),
            fdr_ci: Some(0.01),
            far_mean: Some(0.02),
            far_ci: Some(0.005),
            n_seeds,
        }
    }

    #[test]
    fn all_zero_deltas_land_entirely_in_rope() {
        let sample = DeltaSample::new(CHALLENGE_FAULTS.to_vec(), vec![0.0; 9]).unwrap();
        let p = signed_rank_posterior(&sample, &RopeConfig::new(1)).unwrap();
        assert_eq!(p.p_rope, 1.0);
        assert_eq!(p.p_left, 0.0);
        assert_eq!(p.p_right, 0.0);
    }

    /// With every delta at 0.5 only the (z_0, z_0) pair stays in the ROPE,
    /// so its mass is w_0² with w_0 ~ Beta(1, 9): the right region wins
    /// whenever w_0² < 1/2. Checked against the closed form and against an
    /// independent million-draw inverse-CDF Monte-Carlo oracle.
    #[test]
    fn uniform_half_deltas_favor_the_right_region() {
        let sample = DeltaSample::new(CHALLENGE_FAULTS.to_vec(), vec![0.5; 9]).unwrap();
        let p = signed_rank_posterior(&sample, &RopeConfig::new(7)).unwrap();
        assert!(p.p_right > 0.99, "p_right = {}", p.p_right);

        let exact = 1.0 - (1.0 - 1.0 / 2.0_f64.sqrt()).powi(9);
        assert_abs_diff_eq!(p.p_right, exact, epsilon = 1e-3);

        let mut rng = ChaCha8Rng::seed_from_u64(900);
        let hits = (0..1_000_000)
            .filter(|_| {
                let u: f64 = rng.random();
                let w0 = 1.0 - (1.0 - u).powf(1.0 / 9.0);
                w0 < 1.0 / 2.0_f64.sqrt()
            })
            .count();
        let mc = hits as f64 / 1e6;
        assert_abs_diff_eq!(p.p_right, mc, epsilon = 1e-3);
    }

    #[test]
    fn negating_deltas_swaps_the_outer_regions_exactly() {
        let deltas = vec![0.12, -0.03, 0.008, 0.25, -0.01, 0.0, 0.18, -0.002, 0.05];
        let flipped: Vec<f64> = deltas.iter().map(|d| -d).collect();
        let cfg = RopeConfig::new(42);
        let p = signed_rank_posterior(
            &DeltaSample::new(CHALLENGE_FAULTS.to_vec(), deltas).unwrap(),
            &cfg,
        )
        .unwrap();
        let q = signed_rank_posterior(
            &DeltaSample::new(CHALLENGE_FAULTS.to_vec(), flipped).unwrap(),
            &cfg,
        )
        .unwrap();
        assert_eq!(p.p_left, q.p_right);
        assert_eq!(p.p_right, q.p_left);
        assert_eq!(p.p_rope, q.p_rope);
    }

    #[test]
    fn different_seeds_agree_within_monte_carlo_tolerance() {
        let deltas = vec![0.04, -0.02, 0.015, 0.03, -0.005, 0.01, 0.02, 0.0, -0.01];
        let sample = DeltaSample::new(CHALLENGE_FAULTS.to_vec(), deltas).unwrap();
        let p = signed_rank_posterior(&sample, &RopeConfig::new(1)).unwrap();
        let q = signed_rank_posterior(&sample, &RopeConfig::new(2)).unwrap();
        assert!((p.p_left - q.p_left).abs() <= 0.02);
        assert!((p.p_rope - q.p_rope).abs() <= 0.02);
        assert!((p.p_right - q.p_right).abs() <= 0.02);
        // Same seed reproduces bitwise.
        let r = signed_rank_posterior(&sample, &RopeConfig::new(1)).unwrap();
        assert_eq!(p, r);
    }

    #[test]
    fn widening_the_rope_never_sheds_equivalence_mass() {
        let deltas = vec![0.02, -0.01, 0.005, 0.04, -0.03, 0.0, 0.015, -0.008, 0.01];
        let sample = DeltaSample::new(CHALLENGE_FAULTS.to_vec(), deltas).unwrap();
        let mut prev = -1.0;
        for r in [0.0, 0.002, 0.01, 0.03, 0.1, 1.0] {
            let cfg = RopeConfig { rope_radius: r, ..RopeConfig::new(5) };
            let p = signed_rank_posterior(&sample, &cfg).unwrap();
            assert!(
                p.p_rope >= prev,
                "p_rope dropped from {prev} to {} at r = {r}",
                p.p_rope
            );
            prev = p.p_rope;
        }
        // All pair sums fit inside ±2 when r = 1.
        assert_eq!(prev, 1.0);
    }

    #[test]
    fn config_and_sample_validation() {
        let sample = DeltaSample::new(vec![5], vec![0.1]).unwrap();
        let bad_radius = RopeConfig { rope_radius: -0.1, ..RopeConfig::new(0) };
        assert!(signed_rank_posterior(&sample, &bad_radius).is_err());
        let bad_draws = RopeConfig { draws: 999, ..RopeConfig::new(0) };
        assert!(signed_rank_posterior(&sample, &bad_draws).is_err());
        let bad_conc = RopeConfig { concentration: 0.0, ..RopeConfig::new(0) };
        assert!(signed_rank_posterior(&sample, &bad_conc).is_err());

        assert!(DeltaSample::new(vec![], vec![]).is_err());
        assert!(DeltaSample::new(vec![1, 2], vec![0.5]).is_err());
        assert!(DeltaSample::new(vec![1], vec![1.5]).is_err());
        assert!(DeltaSample::new(vec![1], vec![f64::NAN]).is_err());
    }

    #[test]
    fn fdr_delta_pairing_and_antisymmetry() {
        let report_a: Vec<FaultSummary> =
            CHALLENGE_FAULTS.iter().map(|&f| summary(f, 0.6, 3)).collect();
        let report_b: Vec<FaultSummary> =
            CHALLENGE_FAULTS.iter().map(|&f| summary(f, 0.8, 3)).collect();

        let identical = fdr_deltas(&report_a, &report_a, &CHALLENGE_FAULTS).unwrap();
        assert!(identical.deltas().iter().all(|&d| d == 0.0));

        let forward = fdr_deltas(&report_a, &report_b, &CHALLENGE_FAULTS).unwrap();
        assert!(forward.deltas().iter().all(|&d| (d - 0.2).abs() < 1e-15));
        assert_eq!(forward.fault_ids(), &CHALLENGE_FAULTS);

        let backward = fdr_deltas(&report_b, &report_a, &CHALLENGE_FAULTS).unwrap();
        for (f, b) in forward.deltas().iter().zip(backward.deltas()) {
            assert_eq!(*f, -*b);
        }
    }

    #[test]
    fn fdr_delta_errors() {
        let full: Vec<FaultSummary> = CHALLENGE_FAULTS.iter().map(|&f| summary(f, 0.5, 3)).collect();
        let missing: Vec<FaultSummary> = full[1..].to_vec();
        assert!(fdr_deltas(&missing, &full, &CHALLENGE_FAULTS).is_err());
        assert!(fdr_deltas(&full, &missing, &CHALLENGE_FAULTS).is_err());

        let mut fewer_seeds = full.clone();
        fewer_seeds[0].n_seeds = 2;
        assert!(fdr_deltas(&full, &fewer_seeds, &CHALLENGE_FAULTS).is_err());

        let mut no_rate = full.clone();
        no_rate[3].fdr_mean = None;
        assert!(fdr_deltas(&full, &no_rate, &CHALLENGE_FAULTS).is_err());

        assert!(fdr_deltas(&full, &full, &[]).is_err());
    }

    #[test]
    fn sweep_lists_missing_cells_as_absent_and_is_deterministic() {
        let report = |fdr: f64| -> Vec<FaultSummary> {
            CHALLENGE_FAULTS.iter().map(|&f| summary(f, fdr, 3)).collect()
        };
        let table_a = vec![(625usize, report(0.6)), (1250, report(0.7))];
        let table_b = vec![(625usize, report(0.6)), (5000, report(0.9))];
        let cfg = RopeConfig { draws: 2000, ..RopeConfig::new(11) };
        let sizes = [625usize, 1250, 5000];
        let points = posterior_sweep(&table_a, &table_b, &sizes, &CHALLENGE_FAULTS, &cfg).unwrap();
        assert_eq!(points.len(), 3);
        assert!(points[0].posterior.is_some());
        assert!(points[1].posterior.is_none(), "size absent from table B");
        assert!(points[2].posterior.is_none(), "size absent from table A");
        // Identical reports at the shared size → certain equivalence.
        assert_eq!(points[0].posterior.unwrap().p_rope, 1.0);

        let again = posterior_sweep(&table_a, &table_b, &sizes, &CHALLENGE_FAULTS, &cfg).unwrap();
        assert_eq!(points, again);

        let dup = vec![(625usize, report(0.5)), (625, report(0.6))];
        assert!(posterior_sweep(&dup, &table_b, &sizes, &CHALLENGE_FAULTS, &cfg).is_err());
    }
}

#[cfg(test)]
mod proptests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn posterior_is_a_probability_triple(
            deltas in proptest::collection::vec(-1.0f64..=1.0, 1..12),
            seed in 0u64..1000,
        ) {
            let ids: Vec<u8> = (1..=deltas.len() as u8).collect();
            let sample = DeltaSample::new(ids, deltas).unwrap();
            let cfg = RopeConfig { draws: 1000, ..RopeConfig::new(seed) };
            let p = signed_rank_posterior(&sample, &cfg).unwrap();
            prop_assert!((0.0..=1.0).contains(&p.p_left));
            prop_assert!((0.0..=1.0).contains(&p.p_rope));
            prop_assert!((0.0..=1.0).contains(&p.p_right));
            prop_assert!((p.p_left + p.p_rope + p.p_right - 1.0).abs() < 1e-12);
        }

        #[test]
        fn sign_flip_symmetry_holds_generally(
            deltas in proptest::collection::vec(-0.9f64..=0.9, 1..10),
            seed in 0u64..200,
        ) {
            let ids: Vec<u8> = (1..=deltas.len() as u8).collect();
            let flipped: Vec<f64> = deltas.iter().map(|d| -d).collect();
            let cfg = RopeConfig { draws: 1000, ..RopeConfig::new(seed) };
            let p = signed_rank_posterior(&DeltaSample::new(ids.clone(), deltas).unwrap(), &cfg).unwrap();
            let q = signed_rank_posterior(&DeltaSample::new(ids, flipped).unwrap(), &cfg).unwrap();
            prop_assert_eq!(p.p_left, q.p_right);
            prop_assert_eq!(p.p_right, q.p_left);
            prop_assert_eq!(p.p_rope, q.p_rope);
        }
    }
}
