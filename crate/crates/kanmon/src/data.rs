//! Dataset ingestion, fault-free subset construction, and synthetic plant
//! generation.
//!
//! Real plant data arrives as delimited text with bookkeeping columns
//! (`run`, `sample`, `fault`, optional `onset`) followed by variable columns.
//! The standard schema keeps the 22 continuous measurements `xmeas_1..22`
//! and 11 manipulated variables `xmv_1..11` (33 of 52), dropping
//! `xmeas_23..41`. The synthetic plant is a stable first-order vector
//! autoregression with cross-correlated noise — a controllable stand-in for
//! desk-scale verification, not a physical emulator.

use crate::error::{Error, Result};
use crate::mat::Mat;
use crate::seed::mix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use std::collections::BTreeMap;
use std::path::Path;

/// Fault-free subset sizes (samples prior to the train/validation split).
pub const SUBSET_SIZES: [usize; 13] = [
    625, 1_250, 1_875, 3_125, 5_000, 8_125, 13_750, 23_125, 38_125, 64_375, 107_500, 180_000,
    250_000,
];

/// Sampling interval of the benchmark plant data, in minutes.
pub const SAMPLING_INTERVAL_MINUTES: u32 = 3;

/// Default fault-onset sample index for benchmark test runs that do not
/// carry an explicit onset column.
pub const DEFAULT_FAULT_ONSET: usize = 160;

/// Highest valid fault id (0 = normal operation).
pub const MAX_FAULT_ID: u8 = 21;

/// Which columns of a delimited file count as process variables.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VariableSchema {
    /// Keep `xmeas_1..22` and `xmv_1..11` (exactly 33), drop `xmeas_23..41`,
    /// reject anything else.
    Tep33,
    /// Keep every non-bookkeeping column in file order (synthetic data).
    AllColumns,
}

impl VariableSchema {
    /// Canonical kept-variable names for [`VariableSchema::Tep33`].
    #[must_use]
    pub fn tep33_names() -> Vec<String> {
        let mut names: Vec<String> = (1..=22).map(|i| format!("xmeas_{i}")).collect();
        names.extend((1..=11).map(|i| format!("xmv_{i}")));
        names
    }
}

/// One simulation run: time-ordered samples of every process variable,
/// tagged with its fault id and (for faulty runs) the fault-onset index.
#[derive(Debug, Clone, PartialEq)]
pub struct RunMatrix {
    run_id: u64,
    fault_id: u8,
    onset: Option<usize>,
    x: Mat,
}

impl RunMatrix {
    /// Builds a run, validating fault id and onset bounds.
    pub fn new(run_id: u64, fault_id: u8, onset: Option<usize>, x: Mat) -> Result<Self> {
        if fault_id > MAX_FAULT_ID {
            return Err(Error::data(format!(
                "run {run_id}: fault id {fault_id} outside 0..={MAX_FAULT_ID}"
            )));
        }
        if fault_id == 0 && onset.is_some() {
            return Err(Error::data(format!("run {run_id}: normal run carries a fault onset")));
        }
        if let Some(o) = onset {
            if o > x.rows() {
                return Err(Error::data(format!(
                    "run {run_id}: onset {o} beyond run length {}",
                    x.rows()
                )));
            }
        }
        Ok(RunMatrix { run_id, fault_id, onset, x })
    }

    #[must_use]
    pub fn run_id(&self) -> u64 {
        self.run_id
    }

    /// 0 for normal operation, 1–21 for fault scenarios.
    #[must_use]
    pub fn fault_id(&self) -> u8 {
        self.fault_id
    }

    /// Index of the first faulty sample; `None` for normal runs.
    #[must_use]
    pub fn onset(&self) -> Option<usize> {
        self.onset
    }

    /// Samples × variables matrix, time-ordered.
    #[must_use]
    pub fn x(&self) -> &Mat {
        &self.x
    }

    #[must_use]
    pub fn n_samples(&self) -> usize {
        self.x.rows()
    }

    #[must_use]
    pub fn n_vars(&self) -> usize {
        self.x.cols()
    }

    /// A copy holding only the first `t` samples.
    pub fn truncated(&self, t: usize) -> Result<RunMatrix> {
        if t == 0 || t > self.n_samples() {
            return Err(Error::data(format!(
                "cannot truncate a {}-sample run to {t} samples",
                self.n_samples()
            )));
        }
        let idx: Vec<usize> = (0..t).collect();
        RunMatrix::new(
            self.run_id,
            self.fault_id,
            self.onset.map(|o| o.min(t)),
            self.x.gather_rows(&idx),
        )
    }
}

// ---------------------------------------------------------------------------
// Delimited-text ingestion
// ---------------------------------------------------------------------------

/// Lowercases, strips spaces, and folds `name(k)` into `name_k` so header
/// spellings like `XMEAS(25)` and `xmeas_25` collapse to one key.
fn canonical_header(raw: &str) -> String {
    raw.trim()
        .to_ascii_lowercase()
        .replace(' ', "")
        .replace('(', "_")
        .replace(')', "")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ColumnRole {
    Run,
    Sample,
    Fault,
    Onset,
    Variable(usize), // position in the output variable order
    Dropped,
}

fn classify_columns(headers: &[String], schema: VariableSchema) -> Result<Vec<ColumnRole>> {
    let kept = VariableSchema::tep33_names();
    let mut roles = Vec::with_capacity(headers.len());
    let mut next_generic = 0;
    for h in headers {
        let role = match h.as_str() {
            "run" | "simulationrun" | "simulation_run" => ColumnRole::Run,
            "sample" | "sample_index" => ColumnRole::Sample,
            "fault" | "faultnumber" | "fault_number" => ColumnRole::Fault,
            "onset" | "fault_onset" | "faultonset" => ColumnRole::Onset,
            name => match schema {
                VariableSchema::Tep33 => {
                    if let Some(pos) = kept.iter().position(|k| k == name) {
                        ColumnRole::Variable(pos)
                    } else if is_dropped_tep_name(name) {
                        ColumnRole::Dropped
                    } else {
                        return Err(Error::data(format!("unknown column '{name}'")));
                    }
                }
                VariableSchema::AllColumns => {
                    let pos = next_generic;
                    next_generic += 1;
                    ColumnRole::Variable(pos)
                }
            },
        };
        roles.push(role);
    }
    for required in [ColumnRole::Run, ColumnRole::Sample, ColumnRole::Fault] {
        if !roles.contains(&required) {
            return Err(Error::data(format!("missing bookkeeping column {required:?}")));
        }
    }
    let n_vars = roles
        .iter()
        .filter(|r| matches!(r, ColumnRole::Variable(_)))
        .count();
    if schema == VariableSchema::Tep33 && n_vars != kept.len() {
        for k in &kept {
            if !headers.iter().any(|h| h == k) {
                return Err(Error::data(format!("missing variable column '{k}'")));
            }
        }
    }
    if n_vars == 0 {
        return Err(Error::data("no variable columns found"));
    }
    Ok(roles)
}

/// `xmeas_23` through `xmeas_41`: recognized but excluded from the schema.
fn is_dropped_tep_name(name: &str) -> bool {
    name.strip_prefix("xmeas_")
        .and_then(|k| k.parse::<u32>().ok())
        .is_some_and(|k| (23..=41).contains(&k))
}

struct RawRow {
    sample: usize,
    fault: u8,
    onset: Option<usize>,
    values: Vec<f64>,
}

/// Loads a delimited dataset into per-run matrices.
///
/// Rows are grouped by run id and ordered by sample index; sample indices
/// within a run must be consecutive (starting at 0 or 1) with no duplicates.
/// Faulty runs without an onset column default to sample 160.
pub fn load_dataset(path: impl AsRef<Path>, schema: VariableSchema) -> Result<Vec<RunMatrix>> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::data(format!("{}: {e}", path.display())))?;
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| Error::data(format!("{}: {e}", path.display())))?
        .iter()
        .map(canonical_header)
        .collect();
    let roles = classify_columns(&headers, schema)?;
    let n_vars = roles
        .iter()
        .filter(|r| matches!(r, ColumnRole::Variable(_)))
        .count();

    let mut by_run: BTreeMap<u64, Vec<RawRow>> = BTreeMap::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::data(format!("{}: {e}", path.display())))?;
        if record.len() != roles.len() {
            return Err(Error::data(format!(
                "{}: data row {} has {} fields, header has {}",
                path.display(),
                line + 2,
                record.len(),
                roles.len()
            )));
        }
        let ctx = |what: &str, field: &str| {
            Error::data(format!("{}: row {}: bad {what} '{field}'", path.display(), line + 2))
        };
        let mut run = 0u64;
        let mut row =
            RawRow { sample: 0, fault: 0, onset: None, values: vec![0.0; n_vars] };
        for (role, field) in roles.iter().zip(record.iter()) {
            match role {
                ColumnRole::Run => run = field.parse().map_err(|_| ctx("run id", field))?,
                ColumnRole::Sample => {
                    row.sample = field.parse().map_err(|_| ctx("sample index", field))?;
                }
                ColumnRole::Fault => {
                    row.fault = field.parse().map_err(|_| ctx("fault id", field))?;
                }
                ColumnRole::Onset => {
                    row.onset = if field.is_empty() {
                        None
                    } else {
                        Some(field.parse().map_err(|_| ctx("onset", field))?)
                    };
                }
                ColumnRole::Variable(pos) => {
                    row.values[*pos] = field.parse().map_err(|_| ctx("value", field))?;
                }
                ColumnRole::Dropped => {}
            }
        }
        by_run.entry(run).or_default().push(row);
    }

    let mut runs = Vec::with_capacity(by_run.len());
    for (run_id, mut rows) in by_run {
        rows.sort_by_key(|r| r.sample);
        let base = rows[0].sample;
        if base > 1 {
            return Err(Error::data(format!(
                "run {run_id}: sample indices must start at 0 or 1, found {base}"
            )));
        }
        for (k, r) in rows.iter().enumerate() {
            if r.sample != base + k {
                return Err(Error::data(format!(
                    "run {run_id}: ragged run (expected sample {}, found {})",
                    base + k,
                    r.sample
                )));
            }
        }
        let fault = rows[0].fault;
        if rows.iter().any(|r| r.fault != fault) {
            return Err(Error::data(format!("run {run_id}: inconsistent fault ids within run")));
        }
        let onset_field = rows.iter().find_map(|r| r.onset);
        if rows
            .iter()
            .any(|r| r.onset.is_some() && r.onset != onset_field)
        {
            return Err(Error::data(format!("run {run_id}: inconsistent onsets within run")));
        }
        let onset = if fault == 0 {
            None
        } else {
            Some(onset_field.unwrap_or(DEFAULT_FAULT_ONSET))
        };
        let mut x = Mat::zeros(rows.len(), n_vars);
        for (k, r) in rows.iter().enumerate() {
            x.row_mut(k).copy_from_slice(&r.values);
        }
        runs.push(RunMatrix::new(run_id, fault, onset, x)?);
    }
    if runs.is_empty() {
        return Err(Error::data(format!("{}: no data rows", path.display())));
    }
    Ok(runs)
}

/// Writes runs to delimited text in the format [`load_dataset`] reads.
///
/// With [`VariableSchema::Tep33`] the canonical 33 variable names are used
/// (runs must have 33 columns); with [`VariableSchema::AllColumns`] columns
/// are named `var_1..var_V`.
pub fn save_dataset(
    path: impl AsRef<Path>,
    runs: &[RunMatrix],
    schema: VariableSchema,
) -> Result<()> {
    let path = path.as_ref();
    if runs.is_empty() {
        return Err(Error::data("cannot save an empty dataset"));
    }
    let n_vars = runs[0].n_vars();
    if runs.iter().any(|r| r.n_vars() != n_vars) {
        return Err(Error::data("runs have differing variable counts"));
    }
    let names = match schema {
        VariableSchema::Tep33 => {
            if n_vars != 33 {
                return Err(Error::data(format!(
                    "standard schema expects 33 variables, runs have {n_vars}"
                )));
            }
            VariableSchema::tep33_names()
        }
        VariableSchema::AllColumns => (1..=n_vars).map(|i| format!("var_{i}")).collect(),
    };
    let mut writer = csv::Writer::from_path(path)
        .map_err(|e| Error::data(format!("{}: {e}", path.display())))?;
    let mut header = vec![
        "run".to_string(),
        "sample".to_string(),
        "fault".to_string(),
        "onset".to_string(),
    ];
    header.extend(names);
    writer
        .write_record(&header)
        .map_err(|e| Error::data(format!("{}: {e}", path.display())))?;
    for run in runs {
        for s in 0..run.n_samples() {
            let mut record = vec![
                run.run_id().to_string(),
                s.to_string(),
                run.fault_id().to_string(),
                run.onset().map_or(String::new(), |o| o.to_string()),
            ];
            record.extend(run.x().row(s).iter().map(|v| v.to_string()));
            writer
                .write_record(&record)
                .map_err(|e| Error::data(format!("{}: {e}", path.display())))?;
        }
    }
    writer
        .flush()
        .map_err(|e| Error::data(format!("{}: {e}", path.display())))?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Fault-free subsets
// ---------------------------------------------------------------------------

/// A fault-free dataset of exactly `size` samples, made of whole runs with
/// the final run truncated to hit the count.
#[derive(Debug, Clone, PartialEq)]
pub struct Subset {
    size: usize,
    runs: Vec<RunMatrix>,
}

impl Subset {
    /// Re-wraps fault-free runs loaded from disk as a subset; their sample
    /// counts must add up to exactly `size`.
    pub fn from_runs(size: usize, runs: Vec<RunMatrix>) -> Result<Self> {
        if let Some(bad) = runs.iter().find(|r| r.fault_id() != 0) {
            return Err(Error::data(format!(
                "subset must be fault-free; run {} has fault {}",
                bad.run_id(),
                bad.fault_id()
            )));
        }
        let total: usize = runs.iter().map(RunMatrix::n_samples).sum();
        if total != size {
            return Err(Error::data(format!(
                "subset holds {total} samples, expected {size}"
            )));
        }
        Ok(Subset { size, runs })
    }

    #[must_use]
    pub fn size(&self) -> usize {
        self.size
    }

    #[must_use]
    pub fn runs(&self) -> &[RunMatrix] {
        &self.runs
    }
}

/// Draws fault-free subsets of the requested sizes from a pool of normal
/// runs. Each size shuffles the pool independently (seed-derived), takes
/// whole runs, and truncates the last one so the sample count is exact.
pub fn build_subsets(normal_runs: &[RunMatrix], sizes: &[usize], seed: u64) -> Result<Vec<Subset>> {
    if let Some(bad) = normal_runs.iter().find(|r| r.fault_id() != 0) {
        return Err(Error::data(format!(
            "subset pool must be fault-free; run {} has fault {}",
            bad.run_id(),
            bad.fault_id()
        )));
    }
    if normal_runs.is_empty() {
        return Err(Error::data("subset pool is empty"));
    }
    let total: usize = normal_runs.iter().map(RunMatrix::n_samples).sum();
    let mut subsets = Vec::with_capacity(sizes.len());
    for &size in sizes {
        if size == 0 {
            return Err(Error::config("subset size must be positive"));
        }
        if size > total {
            return Err(Error::data(format!(
                "subset size {size} exceeds pool of {total} samples"
            )));
        }
        let mut order: Vec<usize> = (0..normal_runs.len()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(mix(seed, &[size as u64]));
        shuffle(&mut order, &mut rng);
        let mut picked = Vec::new();
        let mut have = 0;
        for &idx in &order {
            if have == size {
                break;
            }
            let run = &normal_runs[idx];
            let need = size - have;
            if run.n_samples() <= need {
                picked.push(run.clone());
                have += run.n_samples();
            } else {
                picked.push(run.truncated(need)?);
                have = size;
            }
        }
        subsets.push(Subset { size, runs: picked });
    }
    Ok(subsets)
}

/// Fisher–Yates shuffle driven by the caller's generator.
pub(crate) fn shuffle<T>(items: &mut [T], rng: &mut ChaCha8Rng) {
    for i in (1..items.len()).rev() {
        let j = rng.random_range(0..=i);
        items.swap(i, j);
    }
}

// ---------------------------------------------------------------------------
// Synthetic plant
// ---------------------------------------------------------------------------

/// Fault families mirroring the benchmark's scenario taxonomy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaultKind {
    /// Additive mean shift of `magnitude · σ` from onset onward.
    Step,
    /// Additional zero-mean noise with standard deviation `magnitude · σ`.
    Random,
    /// Linear ramp reaching `magnitude · σ` at the final sample.
    Drift,
    /// Valve-style stick/slip: the reading holds until the underlying
    /// signal moves more than `magnitude · σ` from the held value.
    Stiction,
    /// Reading frozen at its onset value.
    ConstantPosition,
}

impl FaultKind {
    /// Stable lowercase name used in flags and reports.
    #[must_use]
    pub fn name(self) -> &'static str {
        match self {
            FaultKind::Step => "step",
            FaultKind::Random => "random",
            FaultKind::Drift => "drift",
            FaultKind::Stiction => "stiction",
            FaultKind::ConstantPosition => "constant_position",
        }
    }
}

impl std::str::FromStr for FaultKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "step" => Ok(FaultKind::Step),
            "random" => Ok(FaultKind::Random),
            "drift" => Ok(FaultKind::Drift),
            "stiction" => Ok(FaultKind::Stiction),
            "constant_position" | "constant-position" | "constant" => {
                Ok(FaultKind::ConstantPosition)
            }
            other => Err(Error::config(format!(
                "unknown fault kind '{other}' (expected step, random, drift, stiction, constant_position)"
            ))),
        }
    }
}

/// A fault to inject into synthetic runs.
#[derive(Debug, Clone, PartialEq)]
pub struct FaultScenario {
    kind: FaultKind,
    variables: Vec<usize>,
    magnitude: f64,
    onset: usize,
}

impl FaultScenario {
    /// Builds a scenario; magnitude is in units of the target variable's
    /// stationary standard deviation.
    pub fn new(kind: FaultKind, variables: Vec<usize>, magnitude: f64, onset: usize) -> Result<Self> {
        if variables.is_empty() {
            return Err(Error::config("fault scenario needs at least one target variable"));
        }
        if !magnitude.is_finite() || magnitude < 0.0 {
            return Err(Error::config("fault magnitude must be finite and nonnegative"));
        }
        Ok(FaultScenario { kind, variables, magnitude, onset })
    }

    #[must_use]
    pub fn kind(&self) -> FaultKind {
        self.kind
    }

    #[must_use]
    pub fn variables(&self) -> &[usize] {
        &self.variables
    }

    #[must_use]
    pub fn magnitude(&self) -> f64 {
        self.magnitude
    }

    #[must_use]
    pub fn onset(&self) -> usize {
        self.onset
    }
}

const BURN_IN: usize = 200;
const TARGET_SPECTRAL_RADIUS: f64 = 0.9;
/// Per-channel geometric decay of the innovation spectrum (see
/// [`SynthPlant::new`]): channel k drives the plant with weight `0.5^k`.
const INNOVATION_DECAY: f64 = 0.5;

/// A stable VAR(1) process `x_{t+1} = A x_t + M ε_t` with cross-correlated
/// Gaussian noise, plus fault injection on the measured outputs.
#[derive(Debug, Clone)]
pub struct SynthPlant {
    n_vars: usize,
    a: Mat,
    mixing: Mat,
    stationary_std: Vec<f64>,
}

impl SynthPlant {
    /// Builds a random stable plant with `n_vars ≥ 2` variables.
    pub fn new(n_vars: usize, seed: u64) -> Result<Self> {
        if n_vars < 2 {
            return Err(Error::config("synthetic plant needs at least 2 variables"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let scale = 1.0 / (n_vars as f64).sqrt();
        let mut a = Mat::zeros(n_vars, n_vars);
        for v in a.data_mut() {
            let z: f64 = rng.sample(StandardNormal);
            *v = z * scale;
        }
        let rho = spectral_radius_estimate(&a, &mut rng);
        if rho <= 0.0 {
            return Err(Error::Numeric("transition matrix collapsed to zero".into()));
        }
        let factor = TARGET_SPECTRAL_RADIUS / rho;
        for v in a.data_mut() {
            *v *= factor;
        }
        let check = spectral_radius_estimate(&a, &mut rng);
        if check >= 0.999 {
            return Err(Error::Numeric(format!(
                "plant dynamics unstable after scaling (spectral radius ≈ {check:.4})"
            )));
        }
        // Innovations get a geometrically decaying spectrum: a few strong
        // driving factors plus progressively weaker ones, so the process
        // concentrates near a low-dimensional operating manifold the way
        // monitored plants do. Channel k of the noise enters with weight
        // INNOVATION_DECAY^k through a dense random mixing column.
        let mut mixing = Mat::zeros(n_vars, n_vars);
        for i in 0..n_vars {
            for k in 0..n_vars {
                let z: f64 = rng.sample(StandardNormal);
                mixing[(i, k)] = z * scale * INNOVATION_DECAY.powi(k as i32);
            }
        }
        let stationary_std = stationary_std(&a, &mixing)?;
        Ok(SynthPlant { n_vars, a, mixing, stationary_std })
    }

    #[must_use]
    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    /// Stationary standard deviation per variable (fault magnitudes are
    /// expressed in these units).
    #[must_use]
    pub fn stationary_std(&self) -> &[f64] {
        &self.stationary_std
    }

    /// Simulates a fault-free run of `t` samples.
    pub fn simulate_normal(&self, run_id: u64, t: usize, seed: u64) -> Result<RunMatrix> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = self.trajectory(t, &mut rng)?;
        RunMatrix::new(run_id, 0, None, x)
    }

    /// Simulates a faulty run: the normal trajectory with `scenario` applied
    /// to the measured outputs from its onset onward.
    pub fn simulate_fault(
        &self,
        run_id: u64,
        fault_id: u8,
        t: usize,
        scenario: &FaultScenario,
        seed: u64,
    ) -> Result<RunMatrix> {
        if fault_id == 0 {
            return Err(Error::config("faulty runs need a nonzero fault id"));
        }
        if scenario.onset() >= t {
            return Err(Error::config(format!(
                "fault onset {} must precede run length {t}",
                scenario.onset()
            )));
        }
        if let Some(&bad) = scenario.variables().iter().find(|&&v| v >= self.n_vars) {
            return Err(Error::config(format!(
                "fault targets variable {bad}, plant has {}",
                self.n_vars
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut x = self.trajectory(t, &mut rng)?;
        let onset = scenario.onset();
        for &var in scenario.variables() {
            let sigma = self.stationary_std[var];
            let amount = scenario.magnitude() * sigma;
            match scenario.kind() {
                FaultKind::Step => {
                    for s in onset..t {
                        x[(s, var)] += amount;
                    }
                }
                FaultKind::Random => {
                    for s in onset..t {
                        let z: f64 = rng.sample(StandardNormal);
                        x[(s, var)] += amount * z;
                    }
                }
                FaultKind::Drift => {
                    let span = (t - 1 - onset).max(1) as f64;
                    for s in onset..t {
                        x[(s, var)] += amount * (s - onset) as f64 / span;
                    }
                }
                FaultKind::Stiction => {
                    let mut held = x[(onset, var)];
                    for s in onset..t {
                        if (x[(s, var)] - held).abs() > amount {
                            held = x[(s, var)];
                        }
                        x[(s, var)] = held;
                    }
                }
                FaultKind::ConstantPosition => {
                    let frozen = x[(onset, var)];
                    for s in onset..t {
                        x[(s, var)] = frozen;
                    }
                }
            }
        }
        RunMatrix::new(run_id, fault_id, Some(onset), x)
    }

    /// Runs the recurrence from a zero state through a burn-in, then records
    /// `t` samples.
    fn trajectory(&self, t: usize, rng: &mut ChaCha8Rng) -> Result<Mat> {
        if t == 0 {
            return Err(Error::config("run length must be positive"));
        }
        let v = self.n_vars;
        let mut state = vec![0.0; v];
        let mut noise = vec![0.0; v];
        let mut next = vec![0.0; v];
        let mut out = Mat::zeros(t, v);
        for step in 0..BURN_IN + t {
            for n in noise.iter_mut() {
                *n = rng.sample(StandardNormal);
            }
            for i in 0..v {
                let mut acc = 0.0;
                for j in 0..v {
                    acc += self.a[(i, j)] * state[j] + self.mixing[(i, j)] * noise[j];
                }
                next[i] = acc;
            }
            std::mem::swap(&mut state, &mut next);
            if step >= BURN_IN {
                out.row_mut(step - BURN_IN).copy_from_slice(&state);
            }
        }
        Ok(out)
    }
}

/// Spectral-radius estimate by normalized power iteration (geometric mean of
/// late growth factors, robust to complex-conjugate dominant pairs).
fn spectral_radius_estimate(a: &Mat, rng: &mut ChaCha8Rng) -> f64 {
    let v = a.rows();
    let mut x: Vec<f64> = (0..v).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    let norm = |y: &[f64]| y.iter().map(|u| u * u).sum::<f64>().sqrt();
    let n0 = norm(&x);
    if n0 == 0.0 {
        return 0.0;
    }
    for u in x.iter_mut() {
        *u /= n0;
    }
    let mut log_sum = 0.0;
    let mut counted = 0;
    let mut y = vec![0.0; v];
    for iter in 0..200 {
        for i in 0..v {
            y[i] = (0..v).map(|j| a[(i, j)] * x[j]).sum();
        }
        let n = norm(&y);
        if n == 0.0 {
            return 0.0;
        }
        for (xi, yi) in x.iter_mut().zip(&y) {
            *xi = yi / n;
        }
        if iter >= 100 {
            log_sum += n.ln();
            counted += 1;
        }
    }
    (log_sum / f64::from(counted)).exp()
}

/// Stationary standard deviations of the VAR(1): diagonal square roots of
/// the fixed point of `Σ ← A Σ Aᵀ + M Mᵀ`.
fn stationary_std(a: &Mat, mixing: &Mat) -> Result<Vec<f64>> {
    let v = a.rows();
    let mut q = Mat::zeros(v, v);
    for i in 0..v {
        for j in 0..v {
            q[(i, j)] = (0..v).map(|k| mixing[(i, k)] * mixing[(j, k)]).sum();
        }
    }
    let mut sigma = q.clone();
    for _ in 0..4000 {
        // next = A Σ Aᵀ + Q
        let mut asig = Mat::zeros(v, v);
        for i in 0..v {
            for j in 0..v {
                asig[(i, j)] = (0..v).map(|k| a[(i, k)] * sigma[(k, j)]).sum();
            }
        }
        let mut next = q.clone();
        let mut delta: f64 = 0.0;
        for i in 0..v {
            for j in 0..v {
                let val: f64 = (0..v).map(|k| asig[(i, k)] * a[(j, k)]).sum::<f64>() + q[(i, j)];
                delta = delta.max((val - sigma[(i, j)]).abs());
                next[(i, j)] = val;
            }
        }
        sigma = next;
        if delta < 1e-13 {
            let std: Vec<f64> = (0..v).map(|i| sigma[(i, i)].sqrt()).collect();
            if std.iter().any(|s| !s.is_finite() || *s <= 0.0) {
                return Err(Error::Numeric("degenerate stationary covariance".into()));
            }
            return Ok(std);
        }
    }
    Err(Error::Numeric("stationary covariance iteration did not converge".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn tiny_run(run_id: u64, fault: u8, onset: Option<usize>, t: usize, v: usize) -> RunMatrix {
        let mut x = Mat::zeros(t, v);
        for s in 0..t {
            for c in 0..v {
                x[(s, c)] = (run_id as f64) + s as f64 * 0.01 + c as f64 * 100.0;
            }
        }
        RunMatrix::new(run_id, fault, onset, x).unwrap()
    }

    #[test]
    fn subset_from_runs_checks_size_and_purity() {
        let runs = vec![tiny_run(0, 0, None, 30, 2), tiny_run(1, 0, None, 20, 2)];
        let subset = Subset::from_runs(50, runs.clone()).unwrap();
        assert_eq!(subset.size(), 50);
        assert_eq!(subset.runs().len(), 2);
        assert!(Subset::from_runs(49, runs).is_err());
        let faulty = vec![tiny_run(0, 3, Some(5), 50, 2)];
        assert!(Subset::from_runs(50, faulty).is_err());
    }

    #[test]
    fn run_matrix_validation() {
        let x = Mat::zeros(4, 2);
        assert!(RunMatrix::new(1, 22, None, x.clone()).is_err());
        assert!(RunMatrix::new(1, 0, Some(2), x.clone()).is_err());
        assert!(RunMatrix::new(1, 3, Some(5), x.clone()).is_err());
        assert!(RunMatrix::new(1, 3, Some(4), x.clone()).is_ok());
        assert!(RunMatrix::new(1, 0, None, x).is_ok());
    }

    #[test]
    fn dataset_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("runs.csv");
        let runs = vec![
            tiny_run(1, 0, None, 5, 3),
            tiny_run(2, 4, Some(2), 6, 3),
            tiny_run(7, 0, None, 4, 3),
        ];
        save_dataset(&path, &runs, VariableSchema::AllColumns).unwrap();
        let loaded = load_dataset(&path, VariableSchema::AllColumns).unwrap();
        assert_eq!(loaded, runs);
    }

    #[test]
    fn standard_schema_keeps_33_and_drops_tail_measurements() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("tep.csv");
        // Header mixes spellings and includes a dropped column and shuffled order.
        let mut header = vec!["faultNumber".to_string(), "simulationRun".into(), "sample".into()];
        header.push("XMEAS(25)".into()); // recognized, dropped
        for i in (1..=22).rev() {
            header.push(format!("XMEAS({i})"));
        }
        for i in 1..=11 {
            header.push(format!("xmv_{i}"));
        }
        let mut text = header.join(",") + "\n";
        for sample in 1..=3 {
            let mut fields = vec!["0".to_string(), "9".into(), sample.to_string(), "999".into()];
            for i in (1..=22).rev() {
                fields.push(format!("{}", i as f64));
            }
            for i in 1..=11 {
                fields.push(format!("{}", 100.0 + i as f64));
            }
            text.push_str(&(fields.join(",") + "\n"));
        }
        std::fs::write(&path, text).unwrap();
        let runs = load_dataset(&path, VariableSchema::Tep33).unwrap();
        assert_eq!(runs.len(), 1);
        let run = &runs[0];
        assert_eq!(run.run_id(), 9);
        assert_eq!(run.n_samples(), 3);
        assert_eq!(run.n_vars(), 33);
        // Schema order: xmeas_1..22 then xmv_1..11, regardless of file order.
        assert_eq!(run.x()[(0, 0)], 1.0);
        assert_eq!(run.x()[(0, 21)], 22.0);
        assert_eq!(run.x()[(0, 22)], 101.0);
        assert_eq!(run.x()[(0, 32)], 111.0);
    }

    #[test]
    fn loader_rejects_unknown_and_missing_columns() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        // Unknown column under the standard schema.
        std::fs::write(&path, "run,sample,fault,bogus\n1,0,0,1.0\n").unwrap();
        let err = load_dataset(&path, VariableSchema::Tep33).unwrap_err().to_string();
        assert!(err.contains("unknown column 'bogus'"), "{err}");
        // Missing variable columns.
        std::fs::write(&path, "run,sample,fault,xmeas_1\n1,0,0,1.0\n").unwrap();
        let err = load_dataset(&path, VariableSchema::Tep33).unwrap_err().to_string();
        assert!(err.contains("missing variable column"), "{err}");
        // Missing bookkeeping column.
        std::fs::write(&path, "sample,fault,var_1\n0,0,1.0\n").unwrap();
        assert!(load_dataset(&path, VariableSchema::AllColumns).is_err());
    }

    #[test]
    fn loader_rejects_ragged_and_inconsistent_runs() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ragged.csv");
        // Duplicate sample index.
        std::fs::write(&path, "run,sample,fault,var_1\n1,0,0,1.0\n1,0,0,2.0\n").unwrap();
        let err = load_dataset(&path, VariableSchema::AllColumns).unwrap_err().to_string();
        assert!(err.contains("ragged"), "{err}");
        // Gap in sample indices.
        std::fs::write(&path, "run,sample,fault,var_1\n1,0,0,1.0\n1,2,0,2.0\n").unwrap();
        assert!(load_dataset(&path, VariableSchema::AllColumns).is_err());
        // Fault id changes mid-run.
        std::fs::write(&path, "run,sample,fault,var_1\n1,0,0,1.0\n1,1,3,2.0\n").unwrap();
        let err = load_dataset(&path, VariableSchema::AllColumns).unwrap_err().to_string();
        assert!(err.contains("inconsistent fault"), "{err}");
        // Fault id out of range.
        std::fs::write(&path, "run,sample,fault,var_1\n1,0,77,1.0\n").unwrap();
        assert!(load_dataset(&path, VariableSchema::AllColumns).is_err());
    }

    #[test]
    fn faulty_runs_default_to_onset_160() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("onset.csv");
        let mut text = String::from("run,sample,fault,var_1\n");
        for s in 0..200 {
            text.push_str(&format!("1,{s},4,0.5\n"));
        }
        for s in 0..200 {
            text.push_str(&format!("2,{s},0,0.5\n"));
        }
        std::fs::write(&path, text).unwrap();
        let runs = load_dataset(&path, VariableSchema::AllColumns).unwrap();
        assert_eq!(runs[0].onset(), Some(DEFAULT_FAULT_ONSET));
        assert_eq!(runs[1].onset(), None);
    }

    #[test]
    fn explicit_onset_column_wins_over_default() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("onset2.csv");
        std::fs::write(
            &path,
            "run,sample,fault,onset,var_1\n1,0,4,2,0.5\n1,1,4,2,0.5\n1,2,4,2,0.9\n",
        )
        .unwrap();
        let runs = load_dataset(&path, VariableSchema::AllColumns).unwrap();
        assert_eq!(runs[0].onset(), Some(2));
    }

    #[test]
    fn subset_ladder_has_thirteen_sizes() {
        assert_eq!(SUBSET_SIZES.len(), 13);
        assert_eq!(SUBSET_SIZES[0], 625);
        assert_eq!(SUBSET_SIZES[12], 250_000);
        assert!(SUBSET_SIZES.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn subsets_hit_exact_sizes_with_truncated_final_run() {
        let pool: Vec<RunMatrix> = (0..10).map(|i| tiny_run(i, 0, None, 500, 2)).collect();
        let subsets = build_subsets(&pool, &[625, 1_250], 7).unwrap();
        assert_eq!(subsets.len(), 2);
        for subset in &subsets {
            let total: usize = subset.runs().iter().map(RunMatrix::n_samples).sum();
            assert_eq!(total, subset.size());
        }
        assert_eq!(subsets[0].runs().len(), 2);
        assert_eq!(subsets[0].runs()[0].n_samples(), 500);
        assert_eq!(subsets[0].runs()[1].n_samples(), 125);
    }

    #[test]
    fn subsets_are_deterministic_and_validate_input() {
        let pool: Vec<RunMatrix> = (0..5).map(|i| tiny_run(i, 0, None, 300, 2)).collect();
        let a = build_subsets(&pool, &[700], 3).unwrap();
        let b = build_subsets(&pool, &[700], 3).unwrap();
        assert_eq!(a, b);
        let c = build_subsets(&pool, &[700], 4).unwrap();
        assert!(a != c || a[0].runs()[0].run_id() == c[0].runs()[0].run_id());
        assert!(build_subsets(&pool, &[2_000], 3).is_err());
        let faulty = vec![tiny_run(1, 2, Some(0), 10, 2)];
        assert!(build_subsets(&faulty, &[5], 3).is_err());
    }

    #[test]
    fn plant_is_deterministic_in_seed() {
        let plant = SynthPlant::new(4, 11).unwrap();
        let a = plant.simulate_normal(1, 50, 77).unwrap();
        let b = plant.simulate_normal(1, 50, 77).unwrap();
        assert_eq!(a, b);
        let c = plant.simulate_normal(1, 50, 78).unwrap();
        assert_ne!(a, c);
        // Same seed rebuilds the same plant.
        let plant2 = SynthPlant::new(4, 11).unwrap();
        assert_eq!(plant2.simulate_normal(1, 50, 77).unwrap(), a);
    }

    #[test]
    fn zero_magnitude_step_is_bitwise_identical_to_normal() {
        let plant = SynthPlant::new(3, 5).unwrap();
        let scenario = FaultScenario::new(FaultKind::Step, vec![0], 0.0, 100).unwrap();
        let normal = plant.simulate_normal(1, 400, 9).unwrap();
        let faulty = plant.simulate_fault(1, 1, 400, &scenario, 9).unwrap();
        assert_eq!(normal.x(), faulty.x());
        assert_eq!(faulty.fault_id(), 1);
        assert_eq!(faulty.onset(), Some(100));
    }

    #[test]
    fn normal_process_is_stationary() {
        let plant = SynthPlant::new(4, 21).unwrap();
        let run = plant.simulate_normal(1, 10_000, 3).unwrap();
        let x = run.x();
        for v in 0..4 {
            let half = x.rows() / 2;
            let first: f64 = (0..half).map(|s| x[(s, v)]).sum::<f64>() / half as f64;
            let second: f64 = (half..x.rows()).map(|s| x[(s, v)]).sum::<f64>() / half as f64;
            let sigma = plant.stationary_std()[v];
            assert!(
                (first - second).abs() < 0.1 * sigma,
                "variable {v}: halves differ by {:.4} (σ = {sigma:.4})",
                (first - second).abs()
            );
        }
    }

    #[test]
    fn sample_std_matches_stationary_std() {
        let plant = SynthPlant::new(3, 31).unwrap();
        let run = plant.simulate_normal(1, 20_000, 13).unwrap();
        let x = run.x();
        for v in 0..3 {
            let n = x.rows() as f64;
            let mean: f64 = (0..x.rows()).map(|s| x[(s, v)]).sum::<f64>() / n;
            let var: f64 = (0..x.rows()).map(|s| (x[(s, v)] - mean).powi(2)).sum::<f64>() / n;
            let sigma = plant.stationary_std()[v];
            assert!(
                (var.sqrt() - sigma).abs() < 0.15 * sigma,
                "variable {v}: sample std {:.4} vs stationary {sigma:.4}",
                var.sqrt()
            );
        }
    }

    #[test]
    fn step_fault_shifts_post_onset_mean_by_three_sigma() {
        let plant = SynthPlant::new(4, 41).unwrap();
        let scenario = FaultScenario::new(FaultKind::Step, vec![0], 3.0, 100).unwrap();
        let run = plant.simulate_fault(1, 1, 10_000, &scenario, 17).unwrap();
        let sigma = plant.stationary_std()[0];
        let x = run.x();
        let post: f64 =
            (100..x.rows()).map(|s| x[(s, 0)]).sum::<f64>() / (x.rows() - 100) as f64;
        // Stationary mean is zero, so the post-onset mean is the shift.
        assert!(
            (post - 3.0 * sigma).abs() < 0.2 * sigma,
            "post-onset mean {post:.4}, expected {:.4} ± {:.4}",
            3.0 * sigma,
            0.2 * sigma
        );
    }

    #[test]
    fn additive_faults_differ_from_normal_exactly_as_specified() {
        let plant = SynthPlant::new(3, 51).unwrap();
        let normal = plant.simulate_normal(1, 300, 23).unwrap();
        let sigma = plant.stationary_std()[1];

        let step = FaultScenario::new(FaultKind::Step, vec![1], 2.0, 50).unwrap();
        let run = plant.simulate_fault(1, 1, 300, &step, 23).unwrap();
        for s in 0..300 {
            let diff = run.x()[(s, 1)] - normal.x()[(s, 1)];
            if s < 50 {
                assert_eq!(diff, 0.0);
            } else {
                assert_abs_diff_eq!(diff, 2.0 * sigma, epsilon = 1e-12);
            }
        }

        let drift = FaultScenario::new(FaultKind::Drift, vec![1], 2.0, 50).unwrap();
        let run = plant.simulate_fault(1, 2, 300, &drift, 23).unwrap();
        assert_eq!(run.x()[(50, 1)], normal.x()[(50, 1)]);
        assert_abs_diff_eq!(
            run.x()[(299, 1)] - normal.x()[(299, 1)],
            2.0 * sigma,
            epsilon = 1e-12
        );
        let mid = run.x()[(174, 1)] - normal.x()[(174, 1)]; // halfway up the ramp
        assert_abs_diff_eq!(mid, sigma * 124.0 / 249.0 * 2.0, epsilon = 1e-12);

        let random = FaultScenario::new(FaultKind::Random, vec![1], 2.0, 50).unwrap();
        let run = plant.simulate_fault(1, 3, 300, &random, 23).unwrap();
        assert!((0..50).all(|s| run.x()[(s, 1)] == normal.x()[(s, 1)]));
        assert!((50..300).any(|s| run.x()[(s, 1)] != normal.x()[(s, 1)]));
    }

    #[test]
    fn holding_faults_freeze_or_quantize_the_reading() {
        let plant = SynthPlant::new(3, 61).unwrap();
        let frozen = FaultScenario::new(FaultKind::ConstantPosition, vec![2], 1.0, 20).unwrap();
        let run = plant.simulate_fault(1, 4, 200, &frozen, 29).unwrap();
        let v0 = run.x()[(20, 2)];
        assert!((20..200).all(|s| run.x()[(s, 2)] == v0));

        let stuck = FaultScenario::new(FaultKind::Stiction, vec![2], 1.5, 20).unwrap();
        let run = plant.simulate_fault(1, 5, 200, &stuck, 29).unwrap();
        let normal = plant.simulate_normal(1, 200, 29).unwrap();
        let changes = (21..200)
            .filter(|&s| run.x()[(s, 2)] != run.x()[(s - 1, 2)])
            .count();
        let normal_changes = (21..200)
            .filter(|&s| normal.x()[(s, 2)] != normal.x()[(s - 1, 2)])
            .count();
        assert!(changes > 0, "stiction should release occasionally");
        assert!(
            changes < normal_changes / 2,
            "stiction should hold most of the time ({changes} vs {normal_changes})"
        );
    }

    #[test]
    fn plant_and_scenario_validation() {
        assert!(SynthPlant::new(1, 0).is_err());
        let plant = SynthPlant::new(3, 0).unwrap();
        assert!(FaultScenario::new(FaultKind::Step, vec![], 1.0, 0).is_err());
        assert!(FaultScenario::new(FaultKind::Step, vec![0], -1.0, 0).is_err());
        let s = FaultScenario::new(FaultKind::Step, vec![5], 1.0, 0).unwrap();
        assert!(plant.simulate_fault(1, 1, 100, &s, 0).is_err()); // bad variable
        let s = FaultScenario::new(FaultKind::Step, vec![0], 1.0, 100).unwrap();
        assert!(plant.simulate_fault(1, 1, 100, &s, 0).is_err()); // onset == length
        assert!(plant.simulate_fault(1, 0, 100, &s, 0).is_err()); // zero fault id
    }

    #[test]
    fn fault_kind_names_round_trip() {
        for kind in [
            FaultKind::Step,
            FaultKind::Random,
            FaultKind::Drift,
            FaultKind::Stiction,
            FaultKind::ConstantPosition,
        ] {
            assert_eq!(kind.name().parse::<FaultKind>().unwrap(), kind);
        }
        assert!("sticky".parse::<FaultKind>().is_err());
    }

    #[test]
    fn truncated_run_keeps_prefix() {
        let run = tiny_run(3, 0, None, 10, 2);
        let cut = run.truncated(4).unwrap();
        assert_eq!(cut.n_samples(), 4);
        assert_eq!(cut.x().row(3), run.x().row(3));
        assert!(run.truncated(0).is_err());
        assert!(run.truncated(11).is_err());
    }
}
