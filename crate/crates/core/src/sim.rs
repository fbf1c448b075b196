//! The simulated sensor: load scenario in, five-channel ADC stream out.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bridge::{adc_sample, amplify, bridge_output, dequantize, AdcConfig, BridgeConfig};
use crate::calibration::{protocol_weights, CalibrationDataset, CalibrationSample, SignalUnits};
use crate::error::{Error, Result};
use crate::estimator::{EstimateFrame, Estimator, EstimatorConfig, CHANNELS};
use crate::exec::Execution;
use crate::io::{SampleLine, ToolkitConfig};
use crate::physics::{
    load_response, ElementModel, FabricModel, LoadPoint, LoadScenario, Quadrants, ELEMENT_COUNT,
};
use crate::units::{gw_to_newtons, rmse};

#[derive(Debug, Clone)]
pub struct SensorChain {
    pub fabric: FabricModel,
    pub elements: [ElementModel; ELEMENT_COUNT],
    pub force_bridge: BridgeConfig,
    pub element_bridges: [BridgeConfig; ELEMENT_COUNT],
    pub adc: AdcConfig,
    pub units: SignalUnits,
}

/// Uniform noise samples in [−1, 1] from a seeded generator.
pub struct NoiseSource(ChaCha8Rng);

impl NoiseSource {
    pub fn new(seed: u64) -> Self {
        NoiseSource(ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn next_sample(&mut self) -> f64 {
        self.0.random_range(-1.0..=1.0)
    }
}

impl SensorChain {
    pub fn from_config(cfg: &ToolkitConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(SensorChain {
            fabric: cfg.fabric,
            elements: cfg.elements,
            force_bridge: cfg.bridge,
            element_bridges: cfg
                .elements
                .map(|e| cfg.bridge.rebalanced_for(e.rest_resistance)),
            adc: cfg.adc,
            units: cfg.signal_units.clone(),
        })
    }

    /// Bridge → amplifier → ADC, reported in the chain's signal units.
    pub fn signal(&self, bridge: &BridgeConfig, delta_r: f64, noise: f64) -> Result<f64> {
        let v = amplify(bridge, bridge_output(bridge, delta_r)?, noise);
        let code = adc_sample(&self.adc, v);
        Ok(if self.units == SignalUnits::volt() {
            dequantize(&self.adc, code)?
        } else {
            code as f64
        })
    }

    /// Samples all five channels for one load state. Noise is drawn in
    /// channel order.
    pub fn sample(&self, point: &LoadPoint, noise: &mut NoiseSource) -> Result<[f64; CHANNELS]> {
        let r = load_response(point, &self.fabric, &self.elements)?;
        let mut out = [0.0; CHANNELS];
        out[0] = self.signal(&self.force_bridge, r.fabric_delta_r, noise.next_sample())?;
        for i in 0..ELEMENT_COUNT {
            let delta = r.elements[i] - self.elements[i].rest_resistance;
            out[i + 1] = self.signal(&self.element_bridges[i], delta, noise.next_sample())?;
        }
        Ok(out)
    }

    /// Noise-free force-channel signal for a force in newtons.
    pub fn force_signal(&self, force: f64) -> Result<f64> {
        self.signal(&self.force_bridge, self.fabric.delta_r(force)?, 0.0)
    }

    /// Per-element on-threshold in signal units: halfway between the
    /// noise-free rest and triggered readings.
    pub fn element_threshold_levels(&self) -> Result<[f64; ELEMENT_COUNT]> {
        let mut out = [0.0; ELEMENT_COUNT];
        for (i, slot) in out.iter_mut().enumerate() {
            let e = &self.elements[i];
            let bridge = &self.element_bridges[i];
            let rest = self.signal(bridge, 0.0, 0.0)?;
            let triggered = e.resistance(e.trigger_threshold)? - e.rest_resistance;
            let on = self.signal(bridge, triggered, 0.0)?;
            if on <= rest {
                return Err(Error::Config(format!(
                    "element {} does not produce a measurable signal when triggered",
                    i + 1
                )));
            }
            *slot = 0.5 * (rest + on);
        }
        Ok(out)
    }

    /// Sample times k/rate that fall inside [start, end] of the scenario.
    pub fn sample_times(&self, scenario: &LoadScenario) -> impl Iterator<Item = f64> + '_ {
        let (start, end) = (scenario.start(), scenario.end());
        let first = (start * self.adc.sample_rate).ceil().max(0.0) as u64;
        (first..)
            .map(move |k| self.adc.sample_time(k))
            .skip_while(move |&t| t < start)
            .take_while(move |&t| t <= end)
    }

    /// Runs the scenario through the chain at the ADC sample clock.
    pub fn simulate(&self, scenario: &LoadScenario, seed: u64) -> Result<Vec<SampleLine>> {
        let mut noise = NoiseSource::new(seed);
        self.sample_times(scenario)
            .map(|t| {
                let point = scenario.at(t)?;
                Ok(SampleLine {
                    time: t,
                    channels: self.sample(&point, &mut noise)?,
                })
            })
            .collect()
    }

    /// The 100-press calibration protocol on quadrant 1, one noisy force
    /// reading per press.
    pub fn protocol_dataset(&self, seed: u64) -> Result<CalibrationDataset> {
        let mut noise = NoiseSource::new(seed);
        let mut samples = Vec::with_capacity(100);
        for (gw, reps) in protocol_weights() {
            let force = gw_to_newtons(gw)?;
            let point = LoadPoint {
                time: 0.0,
                force,
                quadrants: Quadrants::single(1)?,
            };
            for _ in 0..reps {
                let r = load_response(&point, &self.fabric, &self.elements)?;
                let signal =
                    self.signal(&self.force_bridge, r.fabric_delta_r, noise.next_sample())?;
                samples.push(CalibrationSample {
                    signal,
                    force,
                    weight_gw: Some(gw),
                });
            }
        }
        CalibrationDataset::new(samples)
    }
}

/// Simulates `scenario` and feeds it straight into an estimator.
pub fn simulate_and_estimate(
    chain: &SensorChain,
    est_cfg: &EstimatorConfig,
    scenario: &LoadScenario,
    seed: u64,
) -> Result<Vec<EstimateFrame>> {
    let mut est = Estimator::new(est_cfg.clone())?;
    chain
        .simulate(scenario, seed)?
        .iter()
        .map(|s| est.process_frame(s.time, &s.channels))
        .collect()
}

/// RMSE of filtered force against scenario truth over frames under load.
pub fn loaded_rmse(frames: &[EstimateFrame], scenario: &LoadScenario) -> Result<f64> {
    let mut est = Vec::new();
    let mut truth = Vec::new();
    for f in frames {
        let p = scenario.at(f.time)?;
        if p.force > 0.0 {
            est.push(f.filtered_force);
            truth.push(p.force);
        }
    }
    rmse(&est, &truth)
}

/// Monte-Carlo accuracy sweep: `trials` independent noise seeds
/// (`base_seed + i`), returning the loaded-frame RMSE of each trial.
pub fn accuracy_trials(
    chain: &SensorChain,
    est_cfg: &EstimatorConfig,
    scenario: &LoadScenario,
    base_seed: u64,
    trials: usize,
    exec: Execution,
) -> Result<Vec<f64>> {
    exec.try_map(trials, |i| {
        let frames =
            simulate_and_estimate(chain, est_cfg, scenario, base_seed.wrapping_add(i as u64))?;
        loaded_rmse(&frames, scenario)
    })
}
