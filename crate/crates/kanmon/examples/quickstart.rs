//! Minimal train-and-detect loop on synthetic plant data.
//!
//! Run with: cargo run --example quickstart

use kanmon::data::{FaultKind, FaultScenario, SynthPlant};
use kanmon::detect::{MonitoringProfile, DEFAULT_ALPHA};
use kanmon::train::{split_simulations, train, Scaler, TrainConfig};
use kanmon::{build_model, AeArchitecture, Variant};

fn main() -> kanmon::Result<()> {
    // Simulate fault-free runs and split them into train/validation rows.
    let plant = SynthPlant::new(8, 1)?;
    let runs: Vec<_> = (0..10u64)
        .map(|r| plant.simulate_normal(r, 500, 100 + r))
        .collect::<kanmon::Result<_>>()?;
    let (train_raw, val_raw) = split_simulations(&runs, 4_000, 0.8, 42)?;

    // Standardize, build, and train one variant.
    let scaler = Scaler::fit(&train_raw)?;
    let (train_x, val_x) = (scaler.transform(&train_raw)?, scaler.transform(&val_raw)?);
    let arch = AeArchitecture::scaled_default(Variant::FastKan, 8)?;
    let model = build_model(&arch, 7)?;
    let cfg = TrainConfig::for_variant(Variant::FastKan);
    let (model, history) = train(model, train_x.clone(), val_x, cfg)?;

    // Calibrate a control limit and score a faulty run against it.
    let profile = MonitoringProfile::calibrate(model, scaler, &train_x, DEFAULT_ALPHA)?;
    let fault = FaultScenario::new(FaultKind::Step, vec![0], 3.0, 100)?;
    let faulty = plant.simulate_fault(99, 1, 500, &fault, 777)?;
    let counts = profile.evaluate(&faulty)?;

    println!(
        "control limit {:.3} after {} epochs; fault run: {} of {} post-onset samples flagged",
        profile.q_lim(),
        history.records.len(),
        counts.tp,
        counts.tp + counts.fn_,
    );
    Ok(())
}
