//! Runtime estimation: signal → force through the calibration model, then a
//! moving-average filter, plus per-element contact detection and a coarse
//! contact-pattern label.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use crate::bridge::{GAIN_FINE_RESOLUTION, GAIN_WIDE_RANGE};
use crate::calibration::PolynomialModel;
use crate::error::{Error, Result};
use crate::physics::ELEMENT_COUNT;

/// Channels per sample: force layer first, then the four elements.
pub const CHANNELS: usize = 1 + ELEMENT_COUNT;

pub const DEFAULT_FILTER_WINDOW: usize = 4;

// (gain, sensing range N, resolution N) measured on the prototype
const GAIN_TABLE: [(f64, f64, f64); 2] = [
    (GAIN_WIDE_RANGE, 1.5, 0.1),
    (GAIN_FINE_RESOLUTION, 1.0, 0.05),
];

/// Sensing range and resolution for an amplifier gain.
///
/// Exact at the two measured gains. Elsewhere both quantities follow the
/// power law through those two points (straight line in log-value vs
/// log(1/gain)), which keeps them positive and decreasing in gain.
pub fn range_for_gain(gain: f64) -> Result<(f64, f64)> {
    if !(gain > 0.0 && gain.is_finite()) {
        return Err(Error::Domain(format!(
            "amplifier gain must be > 0, got {gain}"
        )));
    }
    if let Some(&(_, range, res)) = GAIN_TABLE.iter().find(|&&(g, _, _)| g == gain) {
        return Ok((range, res));
    }
    let [(g0, r0, s0), (g1, r1, s1)] = GAIN_TABLE;
    let t = (gain.ln() - g0.ln()) / (g1.ln() - g0.ln());
    let interp = |a: f64, b: f64| (a.ln() + t * (b.ln() - a.ln())).exp();
    Ok((interp(r0, r1), interp(s0, s1)))
}

/// Equal-weight mean of the last `window` values; averages whatever is
/// available during warm-up.
#[derive(Debug, Clone)]
pub struct MovingAverage {
    window: usize,
    buf: VecDeque<f64>,
}

impl MovingAverage {
    pub fn new(window: usize) -> Result<Self> {
        if window == 0 {
            return Err(Error::Usage("filter window must be >= 1".into()));
        }
        Ok(MovingAverage {
            window,
            buf: VecDeque::with_capacity(window),
        })
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn push(&mut self, value: f64) -> f64 {
        if self.buf.len() == self.window {
            self.buf.pop_front();
        }
        self.buf.push_back(value);
        window_mean(self.buf.iter().copied()).expect("buffer is non-empty")
    }

    pub fn current(&self) -> Result<f64> {
        window_mean(self.buf.iter().copied())
    }

    pub fn reset(&mut self) {
        self.buf.clear();
    }
}

// Offset by the window minimum so a constant window averages to itself
// exactly, then clamp to the window's range.
fn window_mean(values: impl Iterator<Item = f64> + Clone) -> Result<f64> {
    let (mut min, mut max, mut n) = (f64::INFINITY, f64::NEG_INFINITY, 0usize);
    for v in values.clone() {
        min = min.min(v);
        max = max.max(v);
        n += 1;
    }
    if n == 0 {
        return Err(Error::Usage("moving average of an empty window".into()));
    }
    let offset: f64 = values.map(|v| v - min).sum::<f64>() / n as f64;
    Ok((min + offset).clamp(min, max))
}

/// Mean of the most recent `min(window, samples.len())` values.
pub fn moving_average(samples: &[f64], window: usize) -> Result<f64> {
    if window == 0 {
        return Err(Error::Usage("filter window must be >= 1".into()));
    }
    let start = samples.len().saturating_sub(window);
    window_mean(samples[start..].iter().copied())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ContactPattern {
    None,
    Point,
    Line,
    Area,
}

impl ContactPattern {
    pub fn as_str(self) -> &'static str {
        match self {
            ContactPattern::None => "none",
            ContactPattern::Point => "point",
            ContactPattern::Line => "line",
            ContactPattern::Area => "area",
        }
    }
}

impl fmt::Display for ContactPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ContactPattern {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim() {
            "none" => ContactPattern::None,
            "point" => ContactPattern::Point,
            "line" => ContactPattern::Line,
            "area" => ContactPattern::Area,
            other => return Err(Error::Domain(format!("unknown contact pattern {other:?}"))),
        })
    }
}

/// Element i is on iff its signal reaches its threshold (inclusive).
pub fn detect_contacts(
    signals: &[f64; ELEMENT_COUNT],
    thresholds: &[f64; ELEMENT_COUNT],
) -> [bool; ELEMENT_COUNT] {
    std::array::from_fn(|i| signals[i] >= thresholds[i])
}

/// Label by number of active elements: 0 none, 1 point, 2 line, 3–4 area.
/// Diagonal pairs count as a line.
pub fn classify_pattern(states: &[bool; ELEMENT_COUNT]) -> ContactPattern {
    match states.iter().filter(|&&on| on).count() {
        0 => ContactPattern::None,
        1 => ContactPattern::Point,
        2 => ContactPattern::Line,
        _ => ContactPattern::Area,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorConfig {
    pub model: PolynomialModel,
    pub filter_window: usize,
    /// On-thresholds in signal units, one per element.
    pub element_thresholds: [f64; ELEMENT_COUNT],
    pub sensing_range: f64,
    pub resolution: f64,
    /// An on element turns off only below threshold·(1 − hysteresis_fraction).
    pub hysteresis_fraction: f64,
}

impl EstimatorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.filter_window == 0 {
            return Err(Error::Config("filter window must be >= 1".into()));
        }
        if !(self.sensing_range > 0.0 && self.sensing_range.is_finite()) {
            return Err(Error::Config(format!(
                "sensing range must be > 0, got {}",
                self.sensing_range
            )));
        }
        if !(self.resolution > 0.0 && self.resolution.is_finite()) {
            return Err(Error::Config(format!(
                "resolution must be > 0, got {}",
                self.resolution
            )));
        }
        if let Some(t) = self
            .element_thresholds
            .iter()
            .find(|t| !(**t > 0.0 && t.is_finite()))
        {
            return Err(Error::Config(format!(
                "element thresholds must be > 0, got {t}"
            )));
        }
        if !(0.0..1.0).contains(&self.hysteresis_fraction) {
            return Err(Error::Config(format!(
                "hysteresis fraction must be in [0, 1), got {}",
                self.hysteresis_fraction
            )));
        }
        Ok(())
    }
}

/// Model output clamped to [0, sensing_range].
pub fn estimate_force(cfg: &EstimatorConfig, v: f64) -> f64 {
    cfg.model.eval(v).clamp(0.0, cfg.sensing_range)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateFrame {
    pub time: f64,
    pub raw_force: f64,
    pub filtered_force: f64,
    pub element_state: [bool; ELEMENT_COUNT],
    pub pattern: ContactPattern,
}

impl EstimateFrame {
    /// `t,raw_n,filtered_n,e1,e2,e3,e4,pattern`
    pub fn to_record(&self) -> String {
        let e = self.element_state.map(u8::from);
        format!(
            "{},{},{},{},{},{},{},{}",
            self.time, self.raw_force, self.filtered_force, e[0], e[1], e[2], e[3], self.pattern
        )
    }

    pub fn parse_record(line: &str, line_no: usize) -> Result<Self> {
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 8 {
            return Err(Error::Parse {
                line: line_no,
                msg: format!("frame record needs 8 fields, found {}", fields.len()),
            });
        }
        let num = |i: usize| -> Result<f64> {
            fields[i]
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::Parse {
                    line: line_no,
                    msg: format!("field {} ({:?}) is not a finite number", i + 1, fields[i]),
                })
        };
        let flag = |i: usize| -> Result<bool> {
            match fields[i] {
                "0" => Ok(false),
                "1" => Ok(true),
                other => Err(Error::Parse {
                    line: line_no,
                    msg: format!("element state must be 0 or 1, got {other:?}"),
                }),
            }
        };
        Ok(EstimateFrame {
            time: num(0)?,
            raw_force: num(1)?,
            filtered_force: num(2)?,
            element_state: [flag(3)?, flag(4)?, flag(5)?, flag(6)?],
            pattern: fields[7].parse().map_err(|e: Error| Error::Parse {
                line: line_no,
                msg: e.to_string(),
            })?,
        })
    }
}

/// Stream state: filter buffer, contact states and the last timestamp. Owned
/// by one consumer at a time.
#[derive(Debug, Clone)]
pub struct Estimator {
    cfg: EstimatorConfig,
    filter: MovingAverage,
    states: [bool; ELEMENT_COUNT],
    last_time: Option<f64>,
    frames: usize,
}

impl Estimator {
    pub fn new(cfg: EstimatorConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Estimator {
            filter: MovingAverage::new(cfg.filter_window)?,
            cfg,
            states: [false; ELEMENT_COUNT],
            last_time: None,
            frames: 0,
        })
    }

    pub fn config(&self) -> &EstimatorConfig {
        &self.cfg
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    fn contacts(&self, signals: &[f64; ELEMENT_COUNT]) -> [bool; ELEMENT_COUNT] {
        let on = detect_contacts(signals, &self.cfg.element_thresholds);
        if self.cfg.hysteresis_fraction == 0.0 {
            return on;
        }
        let hold = 1.0 - self.cfg.hysteresis_fraction;
        std::array::from_fn(|i| {
            on[i] || (self.states[i] && signals[i] >= self.cfg.element_thresholds[i] * hold)
        })
    }

    /// Advances the stream by one sample. Channel 0 is the force layer,
    /// channels 1–4 the elements. Timestamps must not decrease.
    pub fn process_frame(
        &mut self,
        time: f64,
        channels: &[f64; CHANNELS],
    ) -> Result<EstimateFrame> {
        let line = self.frames + 1;
        if !time.is_finite() || channels.iter().any(|c| !c.is_finite()) {
            return Err(Error::Stream {
                line,
                msg: "non-finite time or channel".into(),
            });
        }
        if let Some(prev) = self.last_time {
            if time < prev {
                return Err(Error::Stream {
                    line,
                    msg: format!("timestamp {time} goes back from {prev}"),
                });
            }
        }
        let raw_force = estimate_force(&self.cfg, channels[0]);
        let filtered_force = self.filter.push(raw_force);
        let elements: [f64; ELEMENT_COUNT] = std::array::from_fn(|i| channels[i + 1]);
        self.states = self.contacts(&elements);
        self.last_time = Some(time);
        self.frames += 1;
        Ok(EstimateFrame {
            time,
            raw_force,
            filtered_force,
            element_state: self.states,
            pattern: classify_pattern(&self.states),
        })
    }
}
