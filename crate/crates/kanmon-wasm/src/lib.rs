//! Browser demo bindings: basis-function exploration, live training of a
//! small autoencoder monitor on synthetic plant data with fault injection,
//! and the Bayesian pairwise-comparison posterior.
//!
//! Every exported call exchanges JSON strings, so the same API works both
//! from JavaScript (via `wasm-bindgen`) and from native tests.

use kanmon::basis::{dog, fourier_features, fourier_len, BsplineGrid, RbfGrid};
use kanmon::bayes::{signed_rank_posterior, DeltaSample, RopeConfig, CHALLENGE_FAULTS};
use kanmon::data::{FaultKind, FaultScenario, RunMatrix, SynthPlant};
use kanmon::detect::{rates, MonitoringProfile, DEFAULT_ALPHA};
use kanmon::seed::mix;
use kanmon::train::{split_simulations, Scaler, TrainConfig, Trainer};
use kanmon::{build_model, AeArchitecture, Mat, Variant};
use serde_json::json;
use wasm_bindgen::prelude::*;

const DEMO_VARS: usize = 6;
const DEMO_RUNS: u64 = 8;
const DEMO_RUN_LEN: usize = 150;
const DEMO_TEST_LEN: usize = 240;
const DEMO_ONSET: usize = 60;

fn fail(e: impl ToString) -> String {
    e.to_string()
}

// ---------------------------------------------------------------------------
// Operation 1: basis curves
// ---------------------------------------------------------------------------

/// Samples every basis function of a family on its natural range.
///
/// `family` is one of `bspline`, `rbf`, `fourier`, `dog`. Returns
/// `{"x": [...], "curves": [{"label": ..., "y": [...]}, ...]}`.
#[wasm_bindgen]
pub fn basis_curves(family: &str, points: usize) -> Result<String, String> {
    if !(2..=100_000).contains(&points) {
        return Err("points must be between 2 and 100000".into());
    }
    let grid = |lo: f64, hi: f64| -> Vec<f64> {
        (0..points)
            .map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64)
            .collect()
    };
    let (x, curves): (Vec<f64>, Vec<(String, Vec<f64>)>) = match family {
        "bspline" => {
            let basis = BsplineGrid::new(3, 3, -1.0, 1.0).map_err(fail)?;
            let x = grid(-1.0, 1.0);
            let mut curves: Vec<(String, Vec<f64>)> = (0..basis.count())
                .map(|k| (format!("B{k}"), Vec::with_capacity(points)))
                .collect();
            for &xi in &x {
                for (k, v) in basis.eval(xi).into_iter().enumerate() {
                    curves[k].1.push(v);
                }
            }
            (x, curves)
        }
        "rbf" => {
            let basis = RbfGrid::new(5, -2.0, 2.0).map_err(fail)?;
            let x = grid(-3.0, 3.0);
            let mut curves: Vec<(String, Vec<f64>)> = basis
                .centers()
                .iter()
                .map(|c| (format!("c={c:.1}"), Vec::with_capacity(points)))
                .collect();
            for &xi in &x {
                for (k, v) in basis.eval(xi).into_iter().enumerate() {
                    curves[k].1.push(v);
                }
            }
            (x, curves)
        }
        "fourier" => {
            let modes = 3;
            let x = grid(-std::f64::consts::PI, std::f64::consts::PI);
            let labels: Vec<String> = (1..=modes)
                .flat_map(|m| [format!("cos {m}x"), format!("sin {m}x")])
                .collect();
            let mut curves: Vec<(String, Vec<f64>)> = labels
                .into_iter()
                .map(|l| (l, Vec::with_capacity(points)))
                .collect();
            let mut feats = vec![0.0; fourier_len(modes)];
            for &xi in &x {
                fourier_features(xi, modes, &mut feats);
                for (k, &v) in feats.iter().enumerate() {
                    curves[k].1.push(v);
                }
            }
            (x, curves)
        }
        "dog" => {
            let x = grid(-4.0, 4.0);
            let y = x.iter().map(|&v| dog(v)).collect();
            (x, vec![("-x exp(-x^2/2)".to_string(), y)])
        }
        other => return Err(format!("unknown basis family '{other}'")),
    };
    let curves_json: Vec<serde_json::Value> = curves
        .into_iter()
        .map(|(label, y)| json!({"label": label, "y": y}))
        .collect();
    Ok(json!({"x": x, "curves": curves_json}).to_string())
}

// ---------------------------------------------------------------------------
// Operation 2: train-and-detect demo
// ---------------------------------------------------------------------------

/// A live monitoring session: a small synthetic plant, an autoencoder being
/// trained on its normal data, and fault injection against the current model.
#[wasm_bindgen]
pub struct DetectionDemo {
    plant: SynthPlant,
    trainer: Trainer,
    scaler: Scaler,
    train_scaled: Mat,
    seed: u64,
}

#[wasm_bindgen]
impl DetectionDemo {
    /// Builds the plant, generates normal data, and prepares a trainer for
    /// `variant` (`oae`, `efficientkan`, `fastkan`, `fourierkan`, `wavkan`).
    #[wasm_bindgen(constructor)]
    pub fn new(variant: &str, seed: u32) -> Result<DetectionDemo, String> {
        let variant: Variant = variant.parse().map_err(fail)?;
        let seed = u64::from(seed);
        let plant = SynthPlant::new(DEMO_VARS, mix(seed, &[0])).map_err(fail)?;
        let runs: Vec<RunMatrix> = (0..DEMO_RUNS)
            .map(|r| plant.simulate_normal(r, DEMO_RUN_LEN, mix(seed, &[1, r])))
            .collect::<kanmon::Result<_>>()
            .map_err(fail)?;
        let total = (DEMO_RUNS as usize) * DEMO_RUN_LEN;
        let (train_raw, val_raw) =
            split_simulations(&runs, total, 0.8, mix(seed, &[2])).map_err(fail)?;
        let scaler = Scaler::fit(&train_raw).map_err(fail)?;
        let train_scaled = scaler.transform(&train_raw).map_err(fail)?;
        let val_scaled = scaler.transform(&val_raw).map_err(fail)?;

        let arch = AeArchitecture::scaled_default(variant, DEMO_VARS).map_err(fail)?;
        let model = build_model(&arch, mix(seed, &[3])).map_err(fail)?;
        let mut cfg = TrainConfig::for_variant(variant);
        cfg.max_epochs = 300;
        cfg.batch_size = 128;
        cfg.seed = mix(seed, &[4]);
        let trainer = Trainer::new(model, train_scaled.clone(), val_scaled, cfg).map_err(fail)?;
        Ok(DetectionDemo { plant, trainer, scaler, train_scaled, seed })
    }

    /// Runs up to `epochs` further training epochs. Returns
    /// `{"records": [{"epoch", "train_loss", "val_mse", "lr"}...],
    ///   "finished": bool, "epochs_run": n}`.
    pub fn step(&mut self, epochs: usize) -> Result<String, String> {
        let mut records = Vec::new();
        for _ in 0..epochs {
            if self.trainer.is_finished() {
                break;
            }
            let record = self.trainer.step_epoch().map_err(fail)?;
            records.push(json!({
                "epoch": record.epoch,
                "train_loss": record.train_loss,
                "val_mse": record.val_mse,
                "lr": record.lr,
            }));
        }
        Ok(json!({
            "records": records,
            "finished": self.trainer.is_finished(),
            "epochs_run": self.trainer.epochs_run(),
        })
        .to_string())
    }

    /// Calibrates a monitor from the best model so far, injects one fault
    /// run, and reports the squared-prediction-error trace. `run_seed`
    /// varies the test run; `variable` picks the faulted sensor. Returns
    /// `{"spe": [...], "q_lim", "onset", "fdr", "far"}`.
    pub fn detect(
        &self,
        fault_kind: &str,
        magnitude: f64,
        variable: usize,
        run_seed: u32,
    ) -> Result<String, String> {
        let kind: FaultKind = fault_kind.parse().map_err(fail)?;
        if variable >= DEMO_VARS {
            return Err(format!("variable must be below {DEMO_VARS}"));
        }
        let profile = MonitoringProfile::calibrate(
            self.trainer.best_model().clone(),
            self.scaler.clone(),
            &self.train_scaled,
            DEFAULT_ALPHA,
        )
        .map_err(fail)?;

        let scenario =
            FaultScenario::new(kind, vec![variable], magnitude, DEMO_ONSET).map_err(fail)?;
        let run = self
            .plant
            .simulate_fault(
                1000,
                1,
                DEMO_TEST_LEN,
                &scenario,
                mix(self.seed, &[5, u64::from(run_seed)]),
            )
            .map_err(fail)?;
        let spe = profile.spe_of_run(&run).map_err(fail)?;
        let counts = profile.evaluate(&run).map_err(fail)?;
        let (fdr, far) = rates(&counts);
        Ok(json!({
            "spe": spe,
            "q_lim": profile.q_lim(),
            "onset": DEMO_ONSET,
            "fdr": fdr,
            "far": far,
        })
        .to_string())
    }
}

// ---------------------------------------------------------------------------
// Operation 3: comparison posterior
// ---------------------------------------------------------------------------

/// Posterior of the Bayesian signed-rank comparison for a vector of
/// per-fault detection-rate differences (one entry per challenge fault).
/// Returns `{"p_left", "p_rope", "p_right"}`.
#[wasm_bindgen]
pub fn comparison_posterior(
    deltas_json: &str,
    rope: f64,
    draws: usize,
    seed: u32,
) -> Result<String, String> {
    let deltas: Vec<f64> = serde_json::from_str(deltas_json).map_err(fail)?;
    if deltas.len() != CHALLENGE_FAULTS.len() {
        return Err(format!(
            "expected {} deltas (one per challenge fault), got {}",
            CHALLENGE_FAULTS.len(),
            deltas.len()
        ));
    }
    let sample = DeltaSample::new(CHALLENGE_FAULTS.to_vec(), deltas).map_err(fail)?;
    let mut cfg = RopeConfig::new(u64::from(seed));
    cfg.rope_radius = rope;
    cfg.draws = draws;
    let posterior = signed_rank_posterior(&sample, &cfg).map_err(fail)?;
    Ok(json!({
        "p_left": posterior.p_left,
        "p_rope": posterior.p_rope,
        "p_right": posterior.p_right,
    })
    .to_string())
}
