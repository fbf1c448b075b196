#![allow(dead_code)]

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use tactile_core::calibration::{
    calibrate, protocol_weights, CalibratedModel, CalibrationDataset, CalibrationSample, CvOptions,
};
use tactile_core::estimator::EstimatorConfig;
use tactile_core::io::ToolkitConfig;
use tactile_core::physics::{LoadPoint, LoadScenario};
use tactile_core::sim::SensorChain;
use tactile_core::units::gw_to_newtons;

pub const MODEL1_INTERCEPT: f64 = -0.0650;
pub const MODEL1_SLOPE: f64 = 0.0889;

/// Signal at which the reference linear model reads `force`.
pub fn model1_signal(force: f64) -> f64 {
    (force - MODEL1_INTERCEPT) / MODEL1_SLOPE
}

/// The 100-press weight protocol mapped through the linear model, with
/// additive Gaussian force noise of standard deviation `sigma`.
pub fn synthetic_protocol_dataset(sigma: f64, seed: u64) -> CalibrationDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, sigma.max(f64::MIN_POSITIVE)).unwrap();
    let mut samples = Vec::new();
    for (gw, reps) in protocol_weights() {
        let f = gw_to_newtons(gw).unwrap();
        for _ in 0..reps {
            let e = if sigma > 0.0 {
                noise.sample(&mut rng)
            } else {
                0.0
            };
            samples.push(CalibrationSample {
                signal: model1_signal(f),
                force: f + e,
                weight_gw: Some(gw),
            });
        }
    }
    CalibrationDataset::new(samples).unwrap()
}

pub fn scenario(points: &[(f64, f64, &str)]) -> LoadScenario {
    LoadScenario::new(
        points
            .iter()
            .map(|&(time, force, q)| LoadPoint {
                time,
                force,
                quadrants: q.parse().unwrap(),
            })
            .collect(),
    )
    .unwrap()
}

/// Simulated calibration run followed by estimator setup, all from `cfg`.
pub fn calibrated_pipeline(cfg: &ToolkitConfig) -> (SensorChain, EstimatorConfig, CalibratedModel) {
    let chain = SensorChain::from_config(cfg).unwrap();
    let dataset = chain.protocol_dataset(cfg.seed).unwrap();
    let opts = CvOptions {
        k: cfg.folds,
        repeats: cfg.repeats,
        seed: cfg.seed,
        ..CvOptions::default()
    };
    let cal = calibrate(&dataset, &opts, cfg.signal_units.clone()).unwrap();
    let est = cfg.estimator_config(&cal.model).unwrap();
    (chain, est, cal.model)
}

/// 20, 50 and 100 gw placed one after another on quadrant 1, 3 s each with
/// 1 s of rest around them.
pub fn accuracy_scenario() -> LoadScenario {
    let f = |gw: f64| gw_to_newtons(gw).unwrap();
    scenario(&[
        (0.0, 0.0, ""),
        (1.0, f(20.0), "1"),
        (4.0, 0.0, ""),
        (5.0, f(50.0), "1"),
        (8.0, 0.0, ""),
        (9.0, f(100.0), "1"),
        (12.0, 0.0, ""),
        (13.0, 0.0, ""),
    ])
}

/// Presses on quadrants 1 to 4 in turn; the third press overloads the sensor.
pub fn location_sweep_scenario() -> LoadScenario {
    scenario(&[
        (0.0, 0.0, ""),
        (0.5, 0.5, "1"),
        (1.5, 0.0, ""),
        (2.5, 0.6, "2"),
        (3.5, 0.0, ""),
        (4.5, 1.5, "3"),
        (5.5, 0.0, ""),
        (6.5, 0.4, "4"),
        (7.5, 0.0, ""),
        (8.5, 0.0, ""),
    ])
}
