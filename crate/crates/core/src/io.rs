//! Text formats shared by the CLI: the serial-style sample stream and the
//! flat `key = value` toolkit configuration.

use std::fmt::Write as _;
use std::io::BufRead;
use std::path::Path;

use crate::bridge::{AdcConfig, BridgeConfig};
use crate::calibration::{CalibratedModel, SignalUnits};
use crate::error::{io_at, Error, Result};
use crate::estimator::{range_for_gain, EstimatorConfig, CHANNELS, DEFAULT_FILTER_WINDOW};
use crate::physics::{default_elements, ElementModel, FabricModel, ELEMENT_COUNT};
use crate::sim::SensorChain;

/// One sample of all five ADC channels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleLine {
    pub time: f64,
    pub channels: [f64; CHANNELS],
}

impl SampleLine {
    /// Canonical `t,v0,v1,v2,v3,v4` form; numbers use the shortest text that
    /// parses back to the same value.
    pub fn format(&self) -> String {
        let mut s = self.time.to_string();
        for c in &self.channels {
            let _ = write!(s, ",{c}");
        }
        s
    }
}

/// Parses `t,v0,v1,v2,v3,v4`; whitespace around fields is ignored.
pub fn parse_sample_line(text: &str, line: usize) -> Result<SampleLine> {
    let fields: Vec<&str> = text.trim().split(',').map(str::trim).collect();
    if fields.len() != CHANNELS + 1 {
        return Err(Error::Arity {
            line,
            expected: CHANNELS,
            found: fields.len().saturating_sub(1),
        });
    }
    let mut values = [0.0; CHANNELS + 1];
    for (i, (slot, field)) in values.iter_mut().zip(&fields).enumerate() {
        *slot = field
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| Error::Parse {
                line,
                msg: format!("field {} ({field:?}) is not a finite decimal", i + 1),
            })?;
    }
    if values[0] < 0.0 {
        return Err(Error::Parse {
            line,
            msg: format!("time must be >= 0, got {}", values[0]),
        });
    }
    Ok(SampleLine {
        time: values[0],
        channels: std::array::from_fn(|i| values[i + 1]),
    })
}

/// Lines worth parsing: not blank, not a `#` comment, not a header starting
/// with a letter.
pub(crate) fn is_record(line: &str) -> bool {
    let t = line.trim();
    !t.is_empty() && !t.starts_with('#') && !t.starts_with(|c: char| c.is_ascii_alphabetic())
}

/// Streams `(line number, text)` of record lines, reusing one buffer.
pub(crate) fn for_each_record<R: BufRead>(
    mut reader: R,
    mut f: impl FnMut(usize, &str) -> Result<()>,
) -> Result<usize> {
    let mut buf = String::new();
    let mut line_no = 0;
    let mut records = 0;
    loop {
        buf.clear();
        if reader.read_line(&mut buf)? == 0 {
            return Ok(records);
        }
        line_no += 1;
        if is_record(&buf) {
            f(line_no, buf.trim_end_matches(['\n', '\r']))?;
            records += 1;
        }
    }
}

/// Everything the CLI needs: sensor models, electronics, estimator and
/// calibration settings. Defaults reproduce the prototype.
#[derive(Debug, Clone, PartialEq)]
pub struct ToolkitConfig {
    pub seed: u64,
    pub fabric: FabricModel,
    pub elements: [ElementModel; ELEMENT_COUNT],
    /// Force-layer bridge; the element bridges reuse its supply, gain,
    /// noise and rails with arms matched to each element.
    pub bridge: BridgeConfig,
    pub adc: AdcConfig,
    pub signal_units: SignalUnits,
    pub filter_window: usize,
    pub hysteresis_fraction: f64,
    pub folds: usize,
    pub repeats: usize,
    /// Overrides the gain-derived sensing range.
    pub sensing_range: Option<f64>,
    pub resolution: Option<f64>,
    /// Overrides the thresholds derived from the simulated element chain.
    pub element_threshold_levels: Option<[f64; ELEMENT_COUNT]>,
}

impl Default for ToolkitConfig {
    fn default() -> Self {
        let fabric = FabricModel::default();
        ToolkitConfig {
            seed: 0,
            fabric,
            elements: default_elements(),
            bridge: BridgeConfig::equal_arm(fabric.rest_resistance),
            adc: AdcConfig::default(),
            signal_units: SignalUnits::adc_code(),
            filter_window: DEFAULT_FILTER_WINDOW,
            hysteresis_fraction: 0.0,
            folds: 5,
            repeats: 20,
            sensing_range: None,
            resolution: None,
            element_threshold_levels: None,
        }
    }
}

fn parse_list<const N: usize>(key: &str, value: &str, line: usize) -> Result<[f64; N]> {
    let parts: Vec<&str> = value.split(',').map(str::trim).collect();
    if parts.len() != N {
        return Err(Error::Parse {
            line,
            msg: format!(
                "{key} needs {N} comma-separated values, got {}",
                parts.len()
            ),
        });
    }
    let mut out = [0.0; N];
    for (slot, p) in out.iter_mut().zip(parts) {
        *slot = parse_num(key, p, line)?;
    }
    Ok(out)
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str, line: usize) -> Result<T> {
    value.parse().map_err(|_| Error::Parse {
        line,
        msg: format!("{key}: cannot parse {value:?}"),
    })
}

fn join<const N: usize>(xs: &[f64; N]) -> String {
    xs.iter().map(f64::to_string).collect::<Vec<_>>().join(",")
}

impl ToolkitConfig {
    /// Parses the flat `key = value` format. Unknown keys are errors; `#`
    /// starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = ToolkitConfig::default();
        let mut arms: [Option<f64>; 3] = [None; 3];
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| Error::Parse {
                line,
                msg: format!("expected key = value, got {content:?}"),
            })?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "seed" => cfg.seed = parse_num(key, value, line)?,
                "supply_voltage" => cfg.bridge.supply_voltage = parse_num(key, value, line)?,
                "r1" => arms[0] = Some(parse_num(key, value, line)?),
                "r2" => arms[1] = Some(parse_num(key, value, line)?),
                "r3" => arms[2] = Some(parse_num(key, value, line)?),
                "gain" => cfg.bridge.amplifier_gain = parse_num(key, value, line)?,
                "noise_fraction" => cfg.bridge.noise_fraction = parse_num(key, value, line)?,
                "rail_low" => cfg.bridge.rail_low = parse_num(key, value, line)?,
                "rail_high" => cfg.bridge.rail_high = parse_num(key, value, line)?,
                "fabric_rest_ohms" => cfg.fabric.rest_resistance = parse_num(key, value, line)?,
                "fabric_max_fractional_delta" => {
                    cfg.fabric.max_fractional_delta = parse_num(key, value, line)?
                }
                "fabric_full_scale_n" => cfg.fabric.full_scale_force = parse_num(key, value, line)?,
                "element_rest_ohms" => {
                    let v: [f64; ELEMENT_COUNT] = parse_list(key, value, line)?;
                    cfg.elements
                        .iter_mut()
                        .zip(v)
                        .for_each(|(e, r)| e.rest_resistance = r);
                }
                "element_thresholds_n" => {
                    let v: [f64; ELEMENT_COUNT] = parse_list(key, value, line)?;
                    cfg.elements
                        .iter_mut()
                        .zip(v)
                        .for_each(|(e, t)| e.trigger_threshold = t);
                }
                "element_active_delta" => {
                    let d: f64 = parse_num(key, value, line)?;
                    cfg.elements
                        .iter_mut()
                        .for_each(|e| e.active_signal_delta = d);
                }
                "element_saturation_n" => {
                    let s: f64 = parse_num(key, value, line)?;
                    cfg.elements.iter_mut().for_each(|e| e.saturation_force = s);
                }
                "adc_bits" => cfg.adc.bits = parse_num(key, value, line)?,
                "adc_sample_rate_hz" => cfg.adc.sample_rate = parse_num(key, value, line)?,
                "adc_full_scale_v" => cfg.adc.full_scale = parse_num(key, value, line)?,
                "signal_units" => cfg.signal_units = SignalUnits(value.to_string()),
                "filter_window" => cfg.filter_window = parse_num(key, value, line)?,
                "hysteresis_fraction" => cfg.hysteresis_fraction = parse_num(key, value, line)?,
                "kfold_k" => cfg.folds = parse_num(key, value, line)?,
                "repeats" => cfg.repeats = parse_num(key, value, line)?,
                "sensing_range_n" => cfg.sensing_range = Some(parse_num(key, value, line)?),
                "resolution_n" => cfg.resolution = Some(parse_num(key, value, line)?),
                "element_threshold_levels" => {
                    cfg.element_threshold_levels = Some(parse_list(key, value, line)?)
                }
                other => {
                    return Err(Error::Parse {
                        line,
                        msg: format!("unknown key {other:?}"),
                    })
                }
            }
        }
        let rest = cfg.fabric.rest_resistance;
        cfg.bridge.rx_rest = rest;
        cfg.bridge.r1 = arms[0].unwrap_or(rest);
        cfg.bridge.r2 = arms[1].unwrap_or(rest);
        cfg.bridge.r3 = arms[2].unwrap_or(rest);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(io_at(path))?;
        Self::parse(&text).map_err(|e| e.with_context(format!("config {}", path.display())))
    }

    pub fn validate(&self) -> Result<()> {
        self.fabric.validate()?;
        for (i, e) in self.elements.iter().enumerate() {
            e.validate()
                .map_err(|err| err.with_context(format!("element {}", i + 1)))?;
        }
        self.bridge.validate()?;
        if !crate::bridge::is_balanced(&self.bridge) {
            return Err(Error::Config(
                "force-layer bridge is not balanced at rest".into(),
            ));
        }
        self.adc.validate()?;
        if self.filter_window == 0 {
            return Err(Error::Config("filter_window must be >= 1".into()));
        }
        if !(0.0..1.0).contains(&self.hysteresis_fraction) {
            return Err(Error::Config(
                "hysteresis_fraction must be in [0, 1)".into(),
            ));
        }
        if self.folds < 2 {
            return Err(Error::Config("kfold_k must be >= 2".into()));
        }
        if self.repeats == 0 {
            return Err(Error::Config("repeats must be >= 1".into()));
        }
        let units = self.signal_units.as_str();
        if units != "adc_code" && units != "volt" {
            return Err(Error::Config(format!(
                "signal_units must be adc_code or volt, got {units:?}"
            )));
        }
        Ok(())
    }

    /// Canonical text form; parsing it yields an equal config.
    pub fn to_text(&self) -> String {
        let e = &self.elements;
        let mut s = String::new();
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "supply_voltage = {}", self.bridge.supply_voltage);
        let _ = writeln!(s, "r1 = {}", self.bridge.r1);
        let _ = writeln!(s, "r2 = {}", self.bridge.r2);
        let _ = writeln!(s, "r3 = {}", self.bridge.r3);
        let _ = writeln!(s, "gain = {}", self.bridge.amplifier_gain);
        let _ = writeln!(s, "noise_fraction = {}", self.bridge.noise_fraction);
        let _ = writeln!(s, "rail_low = {}", self.bridge.rail_low);
        let _ = writeln!(s, "rail_high = {}", self.bridge.rail_high);
        let _ = writeln!(s, "fabric_rest_ohms = {}", self.fabric.rest_resistance);
        let _ = writeln!(
            s,
            "fabric_max_fractional_delta = {}",
            self.fabric.max_fractional_delta
        );
        let _ = writeln!(s, "fabric_full_scale_n = {}", self.fabric.full_scale_force);
        let _ = writeln!(
            s,
            "element_rest_ohms = {}",
            join(&e.map(|m| m.rest_resistance))
        );
        let _ = writeln!(
            s,
            "element_thresholds_n = {}",
            join(&e.map(|m| m.trigger_threshold))
        );
        let _ = writeln!(s, "element_active_delta = {}", e[0].active_signal_delta);
        let _ = writeln!(s, "element_saturation_n = {}", e[0].saturation_force);
        let _ = writeln!(s, "adc_bits = {}", self.adc.bits);
        let _ = writeln!(s, "adc_sample_rate_hz = {}", self.adc.sample_rate);
        let _ = writeln!(s, "adc_full_scale_v = {}", self.adc.full_scale);
        let _ = writeln!(s, "signal_units = {}", self.signal_units);
        let _ = writeln!(s, "filter_window = {}", self.filter_window);
        let _ = writeln!(s, "hysteresis_fraction = {}", self.hysteresis_fraction);
        let _ = writeln!(s, "kfold_k = {}", self.folds);
        let _ = writeln!(s, "repeats = {}", self.repeats);
        if let Some(r) = self.sensing_range {
            let _ = writeln!(s, "sensing_range_n = {r}");
        }
        if let Some(r) = self.resolution {
            let _ = writeln!(s, "resolution_n = {r}");
        }
        if let Some(t) = &self.element_threshold_levels {
            let _ = writeln!(s, "element_threshold_levels = {}", join(t));
        }
        s
    }

    /// Sensing range and resolution: explicit overrides, else the gain table.
    pub fn range_and_resolution(&self) -> Result<(f64, f64)> {
        let (range, res) = range_for_gain(self.bridge.amplifier_gain)?;
        Ok((
            self.sensing_range.unwrap_or(range),
            self.resolution.unwrap_or(res),
        ))
    }

    /// Estimator settings for `model`; the model's signal units must match
    /// the configured stream units.
    pub fn estimator_config(&self, model: &CalibratedModel) -> Result<EstimatorConfig> {
        if model.signal_units != self.signal_units {
            return Err(Error::Config(format!(
                "model was trained on {} signals but the stream is configured as {}",
                model.signal_units, self.signal_units
            )));
        }
        let (sensing_range, resolution) = self.range_and_resolution()?;
        let element_thresholds = match self.element_threshold_levels {
            Some(t) => t,
            None => SensorChain::from_config(self)?.element_threshold_levels()?,
        };
        let cfg = EstimatorConfig {
            model: model.model.clone(),
            filter_window: self.filter_window,
            element_thresholds,
            sensing_range,
            resolution,
            hysteresis_fraction: self.hysteresis_fraction,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn sample_line_examples() {
        let s = parse_sample_line("0.000,0,0,0,0,0", 1).unwrap();
        assert_eq!(
            s,
            SampleLine {
                time: 0.0,
                channels: [0.0; 5]
            }
        );
        let s = parse_sample_line(" 1.25, 2.5 ,0.1,0,0,0 ", 1).unwrap();
        assert_eq!(s.time, 1.25);
        assert_eq!(s.channels[0], 2.5);
        assert_eq!(s.channels[1], 0.1);
        assert!(matches!(
            parse_sample_line("1.0,2.5,0.1,0", 7),
            Err(Error::Arity {
                line: 7,
                expected: 5,
                found: 3
            })
        ));
        assert!(matches!(
            parse_sample_line("1.0,2.5,x,0,0,0", 3),
            Err(Error::Parse { line: 3, .. })
        ));
        assert!(parse_sample_line("-1,0,0,0,0,0", 1).is_err());
        assert!(parse_sample_line("1,NaN,0,0,0,0", 1).is_err());
    }

    #[test]
    fn canonical_form() {
        let s = parse_sample_line("0.000,0,0,0,0,0", 1).unwrap();
        assert_eq!(s.format(), "0,0,0,0,0,0");
        let s = parse_sample_line("0.9375,251,0,52.0,0,0", 1).unwrap();
        assert_eq!(s.format(), "0.9375,251,0,52,0,0");
    }

    proptest! {
        #[test]
        fn format_parse_round_trip(t in 0.0f64..1e6, ch in prop::array::uniform5(-1e3f64..1e3)) {
            let s = SampleLine { time: t, channels: ch };
            let text = s.format();
            let back = parse_sample_line(&text, 1).unwrap();
            prop_assert_eq!(back, s);
            prop_assert_eq!(back.format(), text);
        }
    }

    #[test]
    fn record_filter() {
        assert!(is_record("0,1,2,3,4,5"));
        assert!(!is_record("   "));
        assert!(!is_record("# comment"));
        assert!(!is_record("t,v0,v1,v2,v3,v4"));
    }

    #[test]
    fn default_config_matches_prototype() {
        let c = ToolkitConfig::default();
        assert_eq!(c.bridge.amplifier_gain, 41.36);
        assert_eq!(c.filter_window, 4);
        assert_eq!(c.folds, 5);
        assert_eq!(c.repeats, 20);
        assert_eq!(c.adc.bits, 8);
        assert_eq!(c.adc.sample_rate, 9.6);
        c.validate().unwrap();
        assert_eq!(c.range_and_resolution().unwrap(), (1.0, 0.05));
    }

    #[test]
    fn config_text_round_trip() {
        let mut c = ToolkitConfig {
            seed: 17,
            ..ToolkitConfig::default()
        };
        c.bridge.amplifier_gain = 22.0;
        c.sensing_range = Some(1.2);
        c.element_threshold_levels = Some([20.0, 21.0, 22.0, 23.5]);
        assert_eq!(ToolkitConfig::parse(&c.to_text()).unwrap(), c);
        assert_eq!(ToolkitConfig::parse("").unwrap(), ToolkitConfig::default());
    }

    #[test]
    fn config_errors() {
        assert!(matches!(
            ToolkitConfig::parse("bogus = 1"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            ToolkitConfig::parse("# c\ngain"),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(
            ToolkitConfig::parse("gain = -2"),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            ToolkitConfig::parse("r1 = 5000"),
            Err(Error::Config(_))
        ));
        assert!(ToolkitConfig::parse("element_rest_ohms = 1e6,1e6").is_err());
        assert!(ToolkitConfig::parse("signal_units = furlong").is_err());
    }

    #[test]
    fn fabric_rest_change_rebalances_the_bridge() {
        let c = ToolkitConfig::parse("fabric_rest_ohms = 80000 # smaller sheet").unwrap();
        assert_eq!(c.bridge.rx_rest, 80e3);
        assert_eq!(c.bridge.r1, 80e3);
    }

    #[test]
    fn units_mismatch_is_a_config_error() {
        let cfg = ToolkitConfig::default();
        let model = CalibratedModel {
            model: crate::calibration::prototype_models()[0].clone(),
            signal_units: SignalUnits::volt(),
            fit: None,
        };
        assert!(matches!(
            cfg.estimator_config(&model),
            Err(Error::Config(_))
        ));
        let model = CalibratedModel {
            signal_units: SignalUnits::adc_code(),
            ..model
        };
        let est = cfg.estimator_config(&model).unwrap();
        assert_eq!(est.sensing_range, 1.0);
        assert!(est.element_thresholds.iter().all(|t| *t > 0.0));
    }
}
