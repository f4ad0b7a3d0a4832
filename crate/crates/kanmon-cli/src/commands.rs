//! Subcommand implementations: synthetic data generation, subset
//! preparation, training sweeps, detection evaluation, Bayesian pairwise
//! comparison, and report emission.

use crate::config::{require, resolve, FileConfig};
use clap::Args;
use kanmon::bayes::{posterior_sweep, RopeConfig, CHALLENGE_FAULTS, DEFAULT_POSTERIOR_DRAWS,
    DEFAULT_ROPE_RADIUS};
use kanmon::data::{
    build_subsets, load_dataset, save_dataset, FaultKind, FaultScenario, RunMatrix, Subset,
    SynthPlant, VariableSchema, SUBSET_SIZES,
};
use kanmon::detect::{aggregate, rates, ConfusionCounts, FaultSummary, MonitoringProfile,
    RunRate, DEFAULT_ALPHA};
use kanmon::report::{
    category_series, fault_table, posterior_rows, read_rows, run_rates, write_rows, DetectionRow,
    PosteriorRow,
};
use kanmon::seed::mix;
use kanmon::train::{sweep, SweepOptions};
use kanmon::{AeArchitecture, Error, Result, Variant};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

// ---------------------------------------------------------------------------
// Shared helpers
// ---------------------------------------------------------------------------

/// Missing input paths are usage errors (exit 2), not runtime failures.
fn check_input(path: &Path, what: &str) -> Result<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(Error::config(format!("{what} not found: {}", path.display())))
    }
}

/// `all` or a comma-separated list of variant names.
fn parse_variants(spec: &str) -> Result<Vec<Variant>> {
    if spec.eq_ignore_ascii_case("all") {
        return Ok(Variant::ALL.to_vec());
    }
    spec.split(',').map(|s| s.trim().parse()).collect()
}

/// Column schema: explicit `tep33`/`all`, or `auto` sniffing the header.
fn parse_schema(spec: &str, data: &Path) -> Result<VariableSchema> {
    match spec.to_ascii_lowercase().as_str() {
        "tep33" => Ok(VariableSchema::Tep33),
        "all" => Ok(VariableSchema::AllColumns),
        "auto" => {
            let text = std::fs::read_to_string(data)
                .map_err(|e| Error::data(format!("{}: {e}", data.display())))?;
            let header = text.lines().next().unwrap_or("").to_ascii_lowercase();
            if header.contains("xmeas") {
                Ok(VariableSchema::Tep33)
            } else {
                Ok(VariableSchema::AllColumns)
            }
        }
        other => Err(Error::config(format!(
            "unknown schema '{other}' (expected auto, tep33, or all)"
        ))),
    }
}

fn canonical_rank(variant: Variant) -> usize {
    Variant::ALL
        .iter()
        .position(|v| *v == variant)
        .expect("variant in canonical list")
}

/// Parses a profile filename `{variant}_n{size}_s{seed}.kanm`.
fn parse_profile_stem(filename: &str) -> Option<(Variant, usize, u64)> {
    let stem = filename.strip_suffix(".kanm")?;
    let mut parts = stem.split('_');
    let variant: Variant = parts.next()?.parse().ok()?;
    let size: usize = parts.next()?.strip_prefix('n')?.parse().ok()?;
    let seed: u64 = parts.next()?.strip_prefix('s')?.parse().ok()?;
    if parts.next().is_some() {
        return None;
    }
    Some((variant, size, seed))
}

/// Subset files written by `prepare`: `subset_{size}.csv`.
fn parse_subset_name(filename: &str) -> Option<usize> {
    filename
        .strip_prefix("subset_")?
        .strip_suffix(".csv")?
        .parse()
        .ok()
}

// ---------------------------------------------------------------------------
// synth
// ---------------------------------------------------------------------------

/// Arguments for `kanmon synth`.
#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Output directory for train.csv and test.csv
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Process variables per sample
    #[arg(long, default_value_t = 8)]
    pub vars: usize,
    /// Fault-free training runs
    #[arg(long, default_value_t = 50)]
    pub normal_runs: usize,
    /// Samples per training run
    #[arg(long, default_value_t = 500)]
    pub samples: usize,
    /// Fault-free test runs
    #[arg(long, default_value_t = 5)]
    pub test_normal_runs: usize,
    /// Faulty test runs per fault kind
    #[arg(long, default_value_t = 5)]
    pub fault_runs: usize,
    /// Samples per test run
    #[arg(long, default_value_t = 500)]
    pub test_samples: usize,
    /// Fault onset sample within test runs
    #[arg(long, default_value_t = 100)]
    pub onset: usize,
    /// Fault magnitude in units of each variable's stationary deviation
    #[arg(long, default_value_t = 3.0)]
    pub magnitude: f64,
    /// Comma-separated fault kinds (default: all five)
    #[arg(long)]
    pub kinds: Option<String>,
    /// Base seed
    #[arg(long)]
    pub seed: Option<u64>,
    /// TOML config file (flags win)
    #[arg(long)]
    pub config: Option<PathBuf>,
}

/// Generates a synthetic plant dataset: fault-free training runs plus a test
/// set of normal and faulty runs, one fault id per fault kind.
pub fn synth(args: SynthArgs) -> Result<()> {
    let file = FileConfig::load(args.config.as_deref())?;
    let out = require(args.out, file.out.clone(), "--out directory")?;
    let seed = resolve(args.seed, file.seed, 0);
    let kinds: Vec<FaultKind> = match &args.kinds {
        Some(list) => list
            .split(',')
            .map(|s| s.trim().parse())
            .collect::<Result<_>>()?,
        None => vec![
            FaultKind::Step,
            FaultKind::Random,
            FaultKind::Drift,
            FaultKind::Stiction,
            FaultKind::ConstantPosition,
        ],
    };
    if args.normal_runs == 0 {
        return Err(Error::config("--normal-runs must be at least 1"));
    }

    let plant = SynthPlant::new(args.vars, mix(seed, &[0]))?;
    let train: Vec<RunMatrix> = (0..args.normal_runs as u64)
        .map(|r| plant.simulate_normal(r, args.samples, mix(seed, &[1, r])))
        .collect::<Result<_>>()?;

    let mut test: Vec<RunMatrix> = Vec::new();
    let mut next_id = args.normal_runs as u64;
    for i in 0..args.test_normal_runs as u64 {
        test.push(plant.simulate_normal(next_id, args.test_samples, mix(seed, &[2, i]))?);
        next_id += 1;
    }
    for (k, &kind) in kinds.iter().enumerate() {
        let fault_id = (k + 1) as u8;
        for i in 0..args.fault_runs as u64 {
            let target = (i as usize) % args.vars;
            let scenario = FaultScenario::new(kind, vec![target], args.magnitude, args.onset)?;
            test.push(plant.simulate_fault(
                next_id,
                fault_id,
                args.test_samples,
                &scenario,
                mix(seed, &[3, k as u64, i]),
            )?);
            next_id += 1;
        }
    }

    std::fs::create_dir_all(&out)?;
    save_dataset(out.join("train.csv"), &train, VariableSchema::AllColumns)?;
    save_dataset(out.join("test.csv"), &test, VariableSchema::AllColumns)?;
    println!(
        "wrote {} training runs and {} test runs ({} fault kinds) to {}",
        train.len(),
        test.len(),
        kinds.len(),
        out.display()
    );
    for (k, kind) in kinds.iter().enumerate() {
        println!("  fault {} = {}", k + 1, kind.name());
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// prepare
// ---------------------------------------------------------------------------

/// Arguments for `kanmon prepare`.
#[derive(Debug, Args)]
pub struct PrepareArgs {
    /// Training dataset (CSV)
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Output directory for subset files
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Comma-separated subset sizes (default: the 13 benchmark sizes)
    #[arg(long, value_delimiter = ',')]
    pub sizes: Option<Vec<usize>>,
    /// Column schema: auto, tep33, or all
    #[arg(long, default_value = "auto")]
    pub schema: String,
    /// Subset shuffle seed
    #[arg(long)]
    pub seed: Option<u64>,
    /// TOML config file (flags win)
    #[arg(long)]
    pub config: Option<PathBuf>,
}

/// Builds fault-free training subsets and writes one CSV per size.
/// Already-present subset files are kept untouched.
pub fn prepare(args: PrepareArgs) -> Result<()> {
    let file = FileConfig::load(args.config.as_deref())?;
    let data = require(args.data, file.data.clone(), "--data path")?;
    let out = require(args.out, file.out.clone(), "--out directory")?;
    check_input(&data, "dataset")?;
    let schema_spec = if args.schema == "auto" {
        file.schema.clone().unwrap_or_else(|| "auto".into())
    } else {
        args.schema.clone()
    };
    let schema = parse_schema(&schema_spec, &data)?;
    let sizes = resolve(args.sizes, file.sizes.clone(), SUBSET_SIZES.to_vec());
    let seed = resolve(args.seed, file.seed, 0);

    let runs = load_dataset(&data, schema)?;
    let total_runs = runs.len();
    let normal: Vec<RunMatrix> = runs.into_iter().filter(|r| r.fault_id() == 0).collect();
    if normal.len() < total_runs {
        println!(
            "ignoring {} faulty runs; subsets draw from {} fault-free runs",
            total_runs - normal.len(),
            normal.len()
        );
    }

    let subsets = build_subsets(&normal, &sizes, seed)?;
    std::fs::create_dir_all(&out)?;
    let mut written = 0usize;
    let mut kept = 0usize;
    for subset in &subsets {
        let path = out.join(format!("subset_{}.csv", subset.size()));
        if path.exists() {
            kept += 1;
            continue;
        }
        save_dataset(&path, subset.runs(), schema)?;
        written += 1;
    }
    println!(
        "wrote {written} subset files to {} ({kept} already present)",
        out.display()
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

/// Arguments for `kanmon train`.
#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Directory of subset files from `prepare`
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Output directory for profiles and histories
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Variant name list or `all`
    #[arg(long)]
    pub variant: Option<String>,
    /// Comma-separated subset sizes (default: every subset file present)
    #[arg(long, value_delimiter = ',')]
    pub sizes: Option<Vec<usize>>,
    /// Seeds per (variant, size) cell
    #[arg(long)]
    pub seeds: Option<usize>,
    /// Parallel worker threads over cells
    #[arg(long)]
    pub jobs: Option<usize>,
    /// False-alarm design rate for threshold calibration
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Base seed
    #[arg(long)]
    pub seed: Option<u64>,
    /// TOML config file (flags win)
    #[arg(long)]
    pub config: Option<PathBuf>,
}

/// Runs training sweeps: one monitoring profile and history per
/// (variant, size, seed) cell. Completed cells are skipped.
pub fn train(args: TrainArgs) -> Result<()> {
    let file = FileConfig::load(args.config.as_deref())?;
    let data = require(args.data, file.data.clone(), "--data directory")?;
    let out = require(args.out, file.out.clone(), "--out directory")?;
    check_input(&data, "subset directory")?;
    let variants = parse_variants(&resolve(
        args.variant,
        file.variant.clone(),
        "all".to_string(),
    ))?;
    let n_seeds = resolve(args.seeds, file.seeds, 1);

    // Discover subset files.
    let mut available: BTreeMap<usize, PathBuf> = BTreeMap::new();
    for entry in std::fs::read_dir(&data)? {
        let entry = entry?;
        if let Some(size) = entry.file_name().to_str().and_then(parse_subset_name) {
            available.insert(size, entry.path());
        }
    }
    if available.is_empty() {
        return Err(Error::data(format!(
            "no subset_<size>.csv files in {}",
            data.display()
        )));
    }
    let sizes = match resolve(args.sizes, file.sizes.clone(), Vec::new()) {
        sizes if sizes.is_empty() => available.keys().copied().collect::<Vec<_>>(),
        sizes => {
            for s in &sizes {
                if !available.contains_key(s) {
                    return Err(Error::data(format!(
                        "no subset file for size {s} in {} (available: {:?})",
                        data.display(),
                        available.keys().collect::<Vec<_>>()
                    )));
                }
            }
            sizes
        }
    };

    let mut subsets: Vec<Subset> = Vec::with_capacity(sizes.len());
    for &size in &sizes {
        let runs = load_dataset(&available[&size], VariableSchema::AllColumns)?;
        subsets.push(Subset::from_runs(size, runs)?);
    }
    let n_vars = subsets[0].runs()[0].n_vars();

    let options = SweepOptions {
        base_seed: resolve(args.seed, file.seed, 0),
        alpha: resolve(args.alpha, file.alpha, DEFAULT_ALPHA),
        jobs: resolve(args.jobs, file.jobs, 1),
        overrides: file.train_overrides(),
    };

    std::fs::create_dir_all(&out)?;
    let mut failures = 0usize;
    for &variant in &variants {
        let arch = AeArchitecture::scaled_default(variant, n_vars)?;
        let report = sweep(&arch, &subsets, n_seeds, &out, &options)?;
        println!(
            "{}: trained {}, skipped {}, failed {}",
            variant.name(),
            report.trained.len(),
            report.skipped.len(),
            report.failed.len()
        );
        for (cell, error) in &report.failed {
            eprintln!("  {} failed: {error}", cell.stem());
            failures += 1;
        }
    }
    if failures > 0 {
        return Err(Error::data(format!("{failures} training cells failed")));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// evaluate
// ---------------------------------------------------------------------------

/// Arguments for `kanmon evaluate`.
#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Directory of monitoring profiles from `train`
    #[arg(long)]
    pub models: Option<PathBuf>,
    /// Test dataset (CSV with fault ids and onsets)
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Output detection CSV
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Variant name list or `all` (default: every profile present)
    #[arg(long)]
    pub variant: Option<String>,
    /// Comma-separated subset sizes (default: every profile present)
    #[arg(long, value_delimiter = ',')]
    pub sizes: Option<Vec<usize>>,
    /// Evaluate only seed indices below this count
    #[arg(long)]
    pub seeds: Option<usize>,
    /// Re-derive every control limit at this false-alarm design rate
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Column schema: auto, tep33, or all
    #[arg(long, default_value = "auto")]
    pub schema: String,
    /// TOML config file (flags win)
    #[arg(long)]
    pub config: Option<PathBuf>,
}

/// Evaluates monitoring profiles against every test run, writing one row per
/// (variant, size, seed, fault): rates averaged over that fault's runs,
/// alarm counts summed.
pub fn evaluate(args: EvaluateArgs) -> Result<()> {
    let file = FileConfig::load(args.config.as_deref())?;
    let models = require(args.models, None, "--models directory")?;
    let data = require(args.data, file.data.clone(), "--data path")?;
    let out = require(args.out, file.out.clone(), "--out path")?;
    check_input(&models, "profile directory")?;
    check_input(&data, "test dataset")?;

    let variant_filter: Option<Vec<Variant>> = match resolve(
        args.variant,
        file.variant.clone(),
        "all".to_string(),
    ) {
        s if s.eq_ignore_ascii_case("all") => None,
        s => Some(parse_variants(&s)?),
    };
    let size_filter = args.sizes.or(file.sizes.clone());
    let seed_limit = args.seeds.or(file.seeds);
    let alpha_override = args.alpha.or(file.alpha);

    // Discover profiles.
    let mut profiles: Vec<(Variant, usize, u64, PathBuf)> = Vec::new();
    for entry in std::fs::read_dir(&models)? {
        let entry = entry?;
        let Some((variant, size, seed)) = entry.file_name().to_str().and_then(parse_profile_stem)
        else {
            continue;
        };
        if let Some(filter) = &variant_filter {
            if !filter.contains(&variant) {
                continue;
            }
        }
        if let Some(filter) = &size_filter {
            if !filter.contains(&size) {
                continue;
            }
        }
        if let Some(limit) = seed_limit {
            if seed >= limit as u64 {
                continue;
            }
        }
        profiles.push((variant, size, seed, entry.path()));
    }
    if profiles.is_empty() {
        return Err(Error::data(format!(
            "no monitoring profiles match in {}",
            models.display()
        )));
    }
    profiles.sort_by_key(|&(v, size, seed, _)| (canonical_rank(v), size, seed));

    let schema_spec = if args.schema == "auto" {
        file.schema.clone().unwrap_or_else(|| "auto".into())
    } else {
        args.schema.clone()
    };
    let schema = parse_schema(&schema_spec, &data)?;
    let runs = load_dataset(&data, schema)?;
    let mut by_fault: BTreeMap<u8, Vec<&RunMatrix>> = BTreeMap::new();
    for run in &runs {
        by_fault.entry(run.fault_id()).or_default().push(run);
    }

    let mut rows: Vec<DetectionRow> = Vec::new();
    for (variant, size, seed, path) in &profiles {
        let mut profile = MonitoringProfile::load(path)?;
        if let Some(alpha) = alpha_override {
            profile = profile.with_alpha(alpha)?;
        }
        for (&fault, fault_runs) in &by_fault {
            let mut total = ConfusionCounts::default();
            let mut fdr_values = Vec::new();
            let mut far_values = Vec::new();
            for run in fault_runs {
                let counts = profile.evaluate(run)?;
                total.tp += counts.tp;
                total.fp += counts.fp;
                total.fn_ += counts.fn_;
                total.tn += counts.tn;
                let (fdr, far) = rates(&counts);
                fdr_values.extend(fdr);
                far_values.extend(far);
            }
            let mean = |v: &[f64]| {
                if v.is_empty() {
                    None
                } else {
                    Some(v.iter().sum::<f64>() / v.len() as f64)
                }
            };
            rows.push(DetectionRow {
                variant: *variant,
                size: *size,
                seed: *seed,
                fault,
                fdr: mean(&fdr_values),
                far: mean(&far_values),
                tp: total.tp,
                fp: total.fp,
                fn_: total.fn_,
                tn: total.tn,
            });
        }
    }
    write_rows(&out, &rows)?;
    println!(
        "wrote {} detection rows ({} profiles x {} faults) to {}",
        rows.len(),
        profiles.len(),
        by_fault.len(),
        out.display()
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// compare
// ---------------------------------------------------------------------------

/// Arguments for `kanmon compare`.
#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Detection CSV from `evaluate`
    #[arg(long)]
    pub detections: Option<PathBuf>,
    /// Output posterior CSV
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Comma-separated `a:b` variant pairs (default: all pairs among
    /// oae, efficientkan, fastkan, wavkan present in the table)
    #[arg(long)]
    pub pairs: Option<String>,
    /// Comma-separated fault ids to compare on (default: the challenge
    /// subset when fully present, otherwise every fault in the table)
    #[arg(long, value_delimiter = ',')]
    pub faults: Option<Vec<u8>>,
    /// Comma-separated training sizes (default: every size in the table)
    #[arg(long, value_delimiter = ',')]
    pub sizes: Option<Vec<usize>>,
    /// Half-width of the region of practical equivalence
    #[arg(long)]
    pub rope: Option<f64>,
    /// Monte-Carlo posterior draws
    #[arg(long)]
    pub draws: Option<usize>,
    /// Dirichlet concentration of the zero pseudo-observation
    #[arg(long)]
    pub concentration: Option<f64>,
    /// Posterior sampling seed
    #[arg(long)]
    pub seed: Option<u64>,
    /// TOML config file (flags win)
    #[arg(long)]
    pub config: Option<PathBuf>,
}

/// Runs the Bayesian signed-rank comparison for each variant pair across
/// training sizes and writes the posterior table.
pub fn compare(args: CompareArgs) -> Result<()> {
    let file = FileConfig::load(args.config.as_deref())?;
    let detections = require(args.detections, file.data.clone(), "--detections path")?;
    let out = require(args.out, file.out.clone(), "--out path")?;
    check_input(&detections, "detection table")?;
    let rows: Vec<DetectionRow> = read_rows(&detections)?;
    if rows.is_empty() {
        return Err(Error::data("detection table is empty"));
    }

    let present_variants: Vec<Variant> = Variant::ALL
        .into_iter()
        .filter(|v| rows.iter().any(|r| r.variant == *v))
        .collect();
    let mut sizes: Vec<usize> = rows.iter().map(|r| r.size).collect();
    sizes.sort_unstable();
    sizes.dedup();
    if let Some(requested) = args.sizes.or(file.sizes.clone()) {
        sizes.retain(|s| requested.contains(s));
    }

    // Default pairs: every unordered pair among the four compared variants
    // (the Fourier variant joins only when named explicitly).
    let pairs: Vec<(Variant, Variant)> = match args.pairs.or(file.pairs.clone()) {
        Some(spec) => spec
            .split(',')
            .map(|p| {
                let (a, b) = p
                    .trim()
                    .split_once(':')
                    .ok_or_else(|| Error::config(format!("pair '{p}' is not 'a:b'")))?;
                Ok((a.trim().parse()?, b.trim().parse()?))
            })
            .collect::<Result<_>>()?,
        None => {
            let compared: Vec<Variant> = present_variants
                .iter()
                .copied()
                .filter(|v| *v != Variant::FourierKan)
                .collect();
            compared
                .iter()
                .enumerate()
                .flat_map(|(i, &a)| compared[i + 1..].iter().map(move |&b| (a, b)))
                .collect()
        }
    };
    if pairs.is_empty() {
        return Err(Error::config("no variant pairs to compare"));
    }

    // Default faults: the challenge subset when the table covers it,
    // otherwise every fault id present.
    let faults: Vec<u8> = match args.faults.or(file.faults.clone()) {
        Some(f) => f,
        None => {
            let present: Vec<u8> = {
                let mut f: Vec<u8> = rows.iter().map(|r| r.fault).filter(|&f| f != 0).collect();
                f.sort_unstable();
                f.dedup();
                f
            };
            if CHALLENGE_FAULTS.iter().all(|f| present.contains(f)) {
                CHALLENGE_FAULTS.to_vec()
            } else {
                eprintln!(
                    "note: challenge faults not all present; comparing on faults {present:?}"
                );
                present
            }
        }
    };

    // Per-variant, per-size aggregated reports.
    let mut reports: BTreeMap<usize, Vec<(usize, Vec<FaultSummary>)>> = BTreeMap::new();
    for &variant in &present_variants {
        let mut per_size = Vec::new();
        for &size in &sizes {
            let group: Vec<RunRate> = run_rates(
                &rows
                    .iter()
                    .filter(|r| r.variant == variant && r.size == size)
                    .cloned()
                    .collect::<Vec<_>>(),
            );
            if group.is_empty() {
                continue;
            }
            per_size.push((size, aggregate(&group)?));
        }
        reports.insert(canonical_rank(variant), per_size);
    }

    let base_seed = resolve(args.seed, file.seed, 0);
    let mut out_rows: Vec<PosteriorRow> = Vec::new();
    for &(a, b) in &pairs {
        let (rank_a, rank_b) = (canonical_rank(a), canonical_rank(b));
        let (Some(report_a), Some(report_b)) = (reports.get(&rank_a), reports.get(&rank_b))
        else {
            return Err(Error::data(format!(
                "pair {}:{} references a variant absent from the detection table",
                a.name(),
                b.name()
            )));
        };
        let cfg = RopeConfig {
            rope_radius: resolve(args.rope, file.rope, DEFAULT_ROPE_RADIUS),
            concentration: resolve(args.concentration, file.concentration, 1.0),
            draws: resolve(args.draws, file.draws, DEFAULT_POSTERIOR_DRAWS),
            seed: mix(base_seed, &[rank_a as u64, rank_b as u64]),
        };
        let points = posterior_sweep(report_a, report_b, &sizes, &faults, &cfg)?;
        let label = format!("{}:{}", a.name(), b.name());
        out_rows.extend(posterior_rows(&label, &points));
    }
    write_rows(&out, &out_rows)?;
    println!(
        "wrote {} posterior rows ({} pairs x {} sizes) to {}",
        out_rows.len(),
        pairs.len(),
        sizes.len(),
        out.display()
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// report
// ---------------------------------------------------------------------------

/// Arguments for `kanmon report`.
#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Detection CSV from `evaluate`
    #[arg(long)]
    pub detections: Option<PathBuf>,
    /// Output directory for summary tables
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// TOML config file (flags win)
    #[arg(long)]
    pub config: Option<PathBuf>,
}

/// Aggregates detection rows into a per-fault summary table and a
/// plot-ready category series (with training-size regime labels).
pub fn report(args: ReportArgs) -> Result<()> {
    let file = FileConfig::load(args.config.as_deref())?;
    let detections = require(args.detections, file.data.clone(), "--detections path")?;
    let out = require(args.out, file.out.clone(), "--out directory")?;
    check_input(&detections, "detection table")?;
    let rows: Vec<DetectionRow> = read_rows(&detections)?;
    if rows.is_empty() {
        return Err(Error::data("detection table is empty"));
    }

    std::fs::create_dir_all(&out)?;
    let table = fault_table(&rows)?;
    let table_path = out.join("fault_table.csv");
    write_rows(&table_path, &table)?;
    let series = category_series(&rows)?;
    let series_path = out.join("category_series.csv");
    write_rows(&series_path, &series)?;
    println!(
        "wrote {} summary rows to {} and {} series rows to {}",
        table.len(),
        table_path.display(),
        series.len(),
        series_path.display()
    );
    Ok(())
}
