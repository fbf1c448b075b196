//! Electrical sensing chain: quarter Wheatstone bridge, its Thevenin
//! resistance, an instrumentation amplifier with gain, noise and rail
//! clipping, and the microcontroller ADC.
//!
//! Bridge orientation: R1 over R2 forms the reference divider, R3 over Rx the
//! sensing divider, and the output is (sensing node − reference node), so a
//! rising Rx drives the output positive from zero.

use crate::error::{Error, Result};

/// Gain preset with the widest sensing range.
pub const GAIN_WIDE_RANGE: f64 = 22.0;
/// Gain preset with the finer resolution; the prototype default.
pub const GAIN_FINE_RESOLUTION: f64 = 41.36;

const BALANCE_REL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BridgeConfig {
    pub supply_voltage: f64,
    pub r1: f64,
    pub r2: f64,
    pub r3: f64,
    pub rx_rest: f64,
    pub amplifier_gain: f64,
    /// Amplitude of the multiplicative amplifier noise.
    pub noise_fraction: f64,
    pub rail_low: f64,
    pub rail_high: f64,
}

impl Default for BridgeConfig {
    fn default() -> Self {
        BridgeConfig::equal_arm(100e3)
    }
}

impl BridgeConfig {
    /// All four arms equal to the sensor's rest resistance, 5 V supply, the
    /// 41.36 gain preset and 1 % amplifier noise.
    pub fn equal_arm(rx_rest: f64) -> Self {
        BridgeConfig {
            supply_voltage: 5.0,
            r1: rx_rest,
            r2: rx_rest,
            r3: rx_rest,
            rx_rest,
            amplifier_gain: GAIN_FINE_RESOLUTION,
            noise_fraction: 0.01,
            rail_low: 0.0,
            rail_high: 5.0,
        }
    }

    /// Same electrical settings with all arms matched to a different sensor.
    pub fn rebalanced_for(&self, rx_rest: f64) -> Self {
        BridgeConfig {
            r1: rx_rest,
            r2: rx_rest,
            r3: rx_rest,
            rx_rest,
            ..*self
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, r) in [
            ("r1", self.r1),
            ("r2", self.r2),
            ("r3", self.r3),
            ("rx_rest", self.rx_rest),
        ] {
            if !(r > 0.0 && r.is_finite()) {
                return Err(Error::Config(format!("{name} must be > 0, got {r}")));
            }
        }
        if !(self.supply_voltage.is_finite()) {
            return Err(Error::Config("supply voltage must be finite".into()));
        }
        if !(self.amplifier_gain > 0.0 && self.amplifier_gain.is_finite()) {
            return Err(Error::Config(format!(
                "amplifier gain must be > 0, got {}",
                self.amplifier_gain
            )));
        }
        if !(0.0..1.0).contains(&self.noise_fraction) {
            return Err(Error::Config(format!(
                "noise fraction must be in [0, 1), got {}",
                self.noise_fraction
            )));
        }
        if self.rail_low.is_nan() || self.rail_high.is_nan() || self.rail_low >= self.rail_high {
            return Err(Error::Config(format!(
                "rail_low ({}) must be below rail_high ({})",
                self.rail_low, self.rail_high
            )));
        }
        Ok(())
    }
}

/// R1/R2 = R3/Rx within 1e-9 relative.
pub fn is_balanced(cfg: &BridgeConfig) -> bool {
    // cross-multiplied to avoid dividing by a tiny arm
    let lhs = cfg.r1 * cfg.rx_rest;
    let rhs = cfg.r2 * cfg.r3;
    (lhs - rhs).abs() <= BALANCE_REL_TOL * lhs.abs().max(rhs.abs())
}

/// Thevenin resistance seen at the output of an equal-arm bridge whose sensing
/// arm has moved by `delta_rx`.
pub fn thevenin_resistance(rx: f64, delta_rx: f64) -> f64 {
    rx / 2.0 + rx * (rx + delta_rx) / (2.0 * rx + delta_rx)
}

/// dRt/dΔRx of [`thevenin_resistance`]: rx² / (2rx + ΔRx)².
pub fn thevenin_slope(rx: f64, delta_rx: f64) -> f64 {
    let d = 2.0 * rx + delta_rx;
    rx * rx / (d * d)
}

/// Open-circuit bridge output for a sensing-arm change of `delta_rx`.
///
/// The amplifier input is treated as high impedance, so the Thevenin
/// resistance does not load the dividers.
pub fn bridge_output(cfg: &BridgeConfig, delta_rx: f64) -> Result<f64> {
    if !is_balanced(cfg) {
        return Err(Error::Config(format!(
            "bridge is not balanced at rest: r1/r2 = {} but r3/rx = {}",
            cfg.r1 / cfg.r2,
            cfg.r3 / cfg.rx_rest
        )));
    }
    if !(delta_rx >= 0.0 && delta_rx.is_finite()) {
        return Err(Error::Domain(format!(
            "delta_rx must be >= 0, got {delta_rx}"
        )));
    }
    let rx = cfg.rx_rest + delta_rx;
    let sensing = rx / (cfg.r3 + rx);
    let reference = cfg.r2 / (cfg.r1 + cfg.r2);
    Ok(cfg.supply_voltage * (sensing - reference))
}

/// Amplifier output: gain · v_in · (1 + noise_fraction · noise_sample), clipped
/// to the rails. `noise_sample` is expected in [−1, 1].
pub fn amplify(cfg: &BridgeConfig, v_in: f64, noise_sample: f64) -> f64 {
    let v = cfg.amplifier_gain * v_in * (1.0 + cfg.noise_fraction * noise_sample);
    v.clamp(cfg.rail_low, cfg.rail_high)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdcConfig {
    pub bits: u32,
    pub sample_rate: f64,
    pub full_scale: f64,
}

impl Default for AdcConfig {
    fn default() -> Self {
        AdcConfig {
            bits: 8,
            sample_rate: 9.6,
            full_scale: 5.0,
        }
    }
}

impl AdcConfig {
    pub fn validate(&self) -> Result<()> {
        if !(1..=31).contains(&self.bits) {
            return Err(Error::Config(format!(
                "adc bits must be in 1..=31, got {}",
                self.bits
            )));
        }
        if !(self.sample_rate > 0.0 && self.sample_rate.is_finite()) {
            return Err(Error::Config(format!(
                "adc sample rate must be > 0, got {}",
                self.sample_rate
            )));
        }
        if !(self.full_scale > 0.0 && self.full_scale.is_finite()) {
            return Err(Error::Config(format!(
                "adc full scale must be > 0, got {}",
                self.full_scale
            )));
        }
        Ok(())
    }

    pub fn max_code(&self) -> u32 {
        (1u32 << self.bits) - 1
    }

    /// Volts per code step.
    pub fn lsb(&self) -> f64 {
        self.full_scale / self.max_code() as f64
    }

    /// Time of the k-th sample, computed directly so the clock never drifts.
    pub fn sample_time(&self, k: u64) -> f64 {
        k as f64 / self.sample_rate
    }
}

/// Quantizes `v`, clamping out-of-range input; ties round up.
pub fn adc_sample(adc: &AdcConfig, v: f64) -> u32 {
    let max = adc.max_code();
    // NaN clamps to the bottom code
    let clamped = if v.is_nan() {
        0.0
    } else {
        v.clamp(0.0, adc.full_scale)
    };
    let scaled = clamped / adc.full_scale * max as f64;
    ((scaled + 0.5).floor() as u32).min(max)
}

pub fn dequantize(adc: &AdcConfig, code: u32) -> Result<f64> {
    let max = adc.max_code();
    if code > max {
        return Err(Error::Usage(format!("adc code {code} exceeds {max}")));
    }
    Ok(code as f64 / max as f64 * adc.full_scale)
}
