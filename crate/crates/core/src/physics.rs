//! Forward model from applied load to the resistances of both sensing layers.
//!
//! The force layer is a conductive fabric whose resistance rises linearly with
//! load up to a full-scale force. The location layer is four conductive-rubber
//! elements laid out in a 2×2 grid; each one is a step detector with a trigger
//! threshold and a near-open regime under heavy load.

use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{io_at, Error, Result};

/// Number of location elements (quadrants) in the second layer.
pub const ELEMENT_COUNT: usize = 4;

/// Multiple of the rest resistance an element reads once saturated.
pub const SATURATION_FACTOR: f64 = 100.0;

/// Resistance of a coated fibre stretched by `stretch_ratio` at constant volume.
///
/// Length scales by λ and cross-section by 1/λ, so R = R₀·λ².
pub fn stretched_resistance(rest_ohms: f64, stretch_ratio: f64) -> Result<f64> {
    if !stretch_ratio.is_finite() || stretch_ratio < 1.0 {
        return Err(Error::Domain(format!(
            "stretch ratio must be >= 1 (compression is not modelled), got {stretch_ratio}"
        )));
    }
    if !rest_ohms.is_finite() || rest_ohms <= 0.0 {
        return Err(Error::Domain(format!(
            "rest resistance must be > 0, got {rest_ohms}"
        )));
    }
    Ok(rest_ohms * stretch_ratio * stretch_ratio)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FabricModel {
    pub rest_resistance: f64,
    /// ΔR/R at full scale.
    pub max_fractional_delta: f64,
    /// Force producing `max_fractional_delta`; ΔR is flat above it.
    pub full_scale_force: f64,
}

impl Default for FabricModel {
    fn default() -> Self {
        FabricModel {
            rest_resistance: 100e3,
            max_fractional_delta: 0.35,
            full_scale_force: 3.5,
        }
    }
}

impl FabricModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.rest_resistance > 0.0 && self.rest_resistance.is_finite()) {
            return Err(Error::Config(format!(
                "fabric rest resistance must be > 0, got {}",
                self.rest_resistance
            )));
        }
        if !(self.max_fractional_delta > 0.0 && self.max_fractional_delta <= 1.0) {
            return Err(Error::Config(format!(
                "fabric max fractional delta must be in (0, 1], got {}",
                self.max_fractional_delta
            )));
        }
        if !(self.full_scale_force > 0.0 && self.full_scale_force.is_finite()) {
            return Err(Error::Config(format!(
                "fabric full-scale force must be > 0, got {}",
                self.full_scale_force
            )));
        }
        Ok(())
    }

    /// Resistance change of the fabric under `force` newtons.
    pub fn delta_r(&self, force: f64) -> Result<f64> {
        check_force(force)?;
        let fraction = (force / self.full_scale_force).min(1.0);
        Ok(self.rest_resistance * self.max_fractional_delta * fraction)
    }
}

/// Free-function form of [`FabricModel::delta_r`].
pub fn fabric_delta_r(model: &FabricModel, force: f64) -> Result<f64> {
    model.delta_r(force)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElementModel {
    pub rest_resistance: f64,
    pub trigger_threshold: f64,
    /// Fractional resistance rise while triggered.
    pub active_signal_delta: f64,
    pub saturation_force: f64,
}

impl ElementModel {
    pub fn validate(&self) -> Result<()> {
        if !(1e6..=2e6).contains(&self.rest_resistance) {
            return Err(Error::Config(format!(
                "element rest resistance must lie in [1 MΩ, 2 MΩ], got {}",
                self.rest_resistance
            )));
        }
        if !(self.trigger_threshold > 0.0 && self.trigger_threshold.is_finite()) {
            return Err(Error::Config(format!(
                "element trigger threshold must be > 0, got {}",
                self.trigger_threshold
            )));
        }
        if !(self.active_signal_delta >= 0.0 && self.active_signal_delta.is_finite()) {
            return Err(Error::Config(format!(
                "element active signal delta must be >= 0, got {}",
                self.active_signal_delta
            )));
        }
        if self.saturation_force.is_nan() || self.saturation_force <= self.trigger_threshold {
            return Err(Error::Config(format!(
                "element saturation force ({}) must exceed its trigger threshold ({})",
                self.saturation_force, self.trigger_threshold
            )));
        }
        Ok(())
    }

    pub fn resistance(&self, force: f64) -> Result<f64> {
        check_force(force)?;
        Ok(if force < self.trigger_threshold {
            self.rest_resistance
        } else if force <= self.saturation_force {
            self.rest_resistance * (1.0 + self.active_signal_delta)
        } else {
            self.rest_resistance * SATURATION_FACTOR
        })
    }
}

pub fn element_resistance(model: &ElementModel, force: f64) -> Result<f64> {
    model.resistance(force)
}

/// Four elements with the uneven thresholds measured on the prototype: two
/// near 0.1 N and two between 0.15 and 0.2 N.
pub fn default_elements() -> [ElementModel; ELEMENT_COUNT] {
    let rest = [1.0e6, 1.3e6, 1.6e6, 2.0e6];
    let thresholds = [0.10, 0.10, 0.15, 0.20];
    std::array::from_fn(|i| ElementModel {
        rest_resistance: rest[i],
        trigger_threshold: thresholds[i],
        active_signal_delta: 0.02,
        saturation_force: 1.2,
    })
}

fn check_force(force: f64) -> Result<()> {
    if force.is_finite() && force >= 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "force must be finite and >= 0, got {force}"
        )))
    }
}

/// Set of contacted quadrants, numbered 1 to 4.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Quadrants(u8);

impl Quadrants {
    pub const NONE: Quadrants = Quadrants(0);

    pub fn from_bits(bits: u8) -> Result<Self> {
        if bits & !0b1111 != 0 {
            return Err(Error::Domain(format!(
                "quadrant mask {bits:#b} has bits beyond 4"
            )));
        }
        Ok(Quadrants(bits))
    }

    pub fn single(quadrant: usize) -> Result<Self> {
        Self::NONE.with(quadrant)
    }

    pub fn with(self, quadrant: usize) -> Result<Self> {
        if !(1..=ELEMENT_COUNT).contains(&quadrant) {
            return Err(Error::Domain(format!(
                "quadrant must be 1..=4, got {quadrant}"
            )));
        }
        Ok(Quadrants(self.0 | 1 << (quadrant - 1)))
    }

    pub fn bits(self) -> u8 {
        self.0
    }

    pub fn contains(self, quadrant: usize) -> bool {
        (1..=ELEMENT_COUNT).contains(&quadrant) && self.0 & (1 << (quadrant - 1)) != 0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = usize> {
        (1..=ELEMENT_COUNT).filter(move |&q| self.contains(q))
    }
}

impl fmt::Display for Quadrants {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.iter().map(|q| q.to_string()).collect();
        f.write_str(&parts.join("+"))
    }
}

impl FromStr for Quadrants {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() {
            return Ok(Quadrants::NONE);
        }
        s.split('+').try_fold(Quadrants::NONE, |acc, part| {
            let q: usize = part
                .trim()
                .parse()
                .map_err(|_| Error::Domain(format!("bad quadrant {part:?}")))?;
            acc.with(q)
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoadPoint {
    pub time: f64,
    pub force: f64,
    pub quadrants: Quadrants,
}

/// Piecewise-constant load timeline; each point holds until the next one.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadScenario {
    points: Vec<LoadPoint>,
}

#[derive(Debug, Deserialize, Serialize)]
struct ScenarioRecord {
    t: f64,
    force_n: f64,
    quadrants: String,
}

impl LoadScenario {
    pub fn new(points: Vec<LoadPoint>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Domain("scenario needs at least one point".into()));
        }
        for (i, p) in points.iter().enumerate() {
            if !p.time.is_finite() {
                return Err(Error::Domain(format!("point {i}: time must be finite")));
            }
            check_force(p.force).map_err(|e| e.with_context(format!("point {i}")))?;
            if p.force > 0.0 && p.quadrants.is_empty() {
                return Err(Error::Domain(format!(
                    "point {i}: a non-zero force needs at least one quadrant"
                )));
            }
            if i > 0 && p.time <= points[i - 1].time {
                return Err(Error::Domain(format!(
                    "point {i}: times must be strictly increasing ({} after {})",
                    p.time,
                    points[i - 1].time
                )));
            }
        }
        Ok(LoadScenario { points })
    }

    pub fn points(&self) -> &[LoadPoint] {
        &self.points
    }

    pub fn start(&self) -> f64 {
        self.points[0].time
    }

    pub fn end(&self) -> f64 {
        self.points[self.points.len() - 1].time
    }

    /// Zero-order-hold state at `time`; the last point holds indefinitely.
    pub fn at(&self, time: f64) -> Result<LoadPoint> {
        if time.is_nan() || time < self.start() {
            return Err(Error::Domain(format!(
                "time {time} precedes scenario start {}",
                self.start()
            )));
        }
        let idx = self.points.partition_point(|p| p.time <= time);
        Ok(self.points[idx - 1])
    }

    /// Reads the `t,force_n,quadrants` CSV form.
    pub fn from_csv_reader(reader: impl Read) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut points = Vec::new();
        for (i, rec) in rdr.deserialize::<ScenarioRecord>().enumerate() {
            let line = i + 2;
            let rec = rec.map_err(|e| Error::Parse {
                line,
                msg: e.to_string(),
            })?;
            let quadrants = rec.quadrants.parse().map_err(|e: Error| Error::Parse {
                line,
                msg: e.to_string(),
            })?;
            points.push(LoadPoint {
                time: rec.t,
                force: rec.force_n,
                quadrants,
            });
        }
        LoadScenario::new(points).map_err(|e| Error::Parse {
            line: 0,
            msg: e.to_string(),
        })
    }

    pub fn from_csv_path(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(io_at(path))?;
        Self::from_csv_reader(file)
            .map_err(|e| e.with_context(format!("scenario {}", path.display())))
    }

    pub fn write_csv(&self, writer: impl Write) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        for p in &self.points {
            wtr.serialize(ScenarioRecord {
                t: p.time,
                force_n: p.force,
                quadrants: p.quadrants.to_string(),
            })
            .map_err(|e| Error::Io {
                path: None,
                source: std::io::Error::other(e),
            })?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Per-tick resistances of both layers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LayerResistances {
    pub fabric_delta_r: f64,
    pub elements: [f64; ELEMENT_COUNT],
}

/// Resistances for a single load state. Each listed quadrant sees the full
/// force; the rest see none.
pub fn load_response(
    point: &LoadPoint,
    fabric: &FabricModel,
    elements: &[ElementModel; ELEMENT_COUNT],
) -> Result<LayerResistances> {
    let fabric_delta_r = fabric.delta_r(point.force)?;
    let mut out = [0.0; ELEMENT_COUNT];
    for (i, (slot, model)) in out.iter_mut().zip(elements).enumerate() {
        let f = if point.quadrants.contains(i + 1) {
            point.force
        } else {
            0.0
        };
        *slot = model.resistance(f)?;
    }
    Ok(LayerResistances {
        fabric_delta_r,
        elements: out,
    })
}

pub fn apply_load(
    scenario: &LoadScenario,
    fabric: &FabricModel,
    elements: &[ElementModel; ELEMENT_COUNT],
    time: f64,
) -> Result<LayerResistances> {
    load_response(&scenario.at(time)?, fabric, elements)
}
