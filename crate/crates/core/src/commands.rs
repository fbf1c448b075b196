//! The four CLI verbs (plus the protocol-dataset generator) as library
//! functions over readers and writers, so they can be driven from tests.

use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::path::Path;

use crate::calibration::{self, Calibration, CalibrationDataset, CvOptions};
use crate::error::{io_at, Error, Result};
use crate::estimator::{EstimateFrame, Estimator};
use crate::exec::Execution;
use crate::io::{for_each_record, parse_sample_line, ToolkitConfig};
use crate::physics::{LoadScenario, ELEMENT_COUNT};
use crate::sim::SensorChain;

/// Writes the sample-line stream for `scenario`, seeded from `cfg.seed`.
pub fn cmd_simulate(
    cfg: &ToolkitConfig,
    scenario: &LoadScenario,
    out: &mut impl Write,
) -> Result<usize> {
    let chain = SensorChain::from_config(cfg)?;
    let lines = chain.simulate(scenario, cfg.seed)?;
    for l in &lines {
        writeln!(out, "{}", l.format())?;
    }
    out.flush()?;
    Ok(lines.len())
}

/// Writes a simulated 100-sample calibration dataset (`v,force_n,weight_gw`).
pub fn cmd_protocol(cfg: &ToolkitConfig, out: &mut impl Write) -> Result<CalibrationDataset> {
    let dataset = SensorChain::from_config(cfg)?.protocol_dataset(cfg.seed)?;
    dataset.write_csv(&mut *out)?;
    Ok(dataset)
}

/// `"1..5"`, `"1-5"`, `"2,3,5"` or a single order.
pub fn parse_orders(text: &str) -> Result<Vec<usize>> {
    let bad = || Error::Usage(format!("cannot parse model orders {text:?}"));
    let num = |s: &str| s.trim().parse::<usize>().map_err(|_| bad());
    let range = text.split_once("..").or_else(|| text.split_once('-'));
    let orders: Vec<usize> = match range {
        Some((a, b)) => {
            let (a, b) = (num(a)?, num(b.trim_start_matches('='))?);
            if a > b {
                return Err(bad());
            }
            (a..=b).collect()
        }
        None => text.split(',').map(num).collect::<Result<_>>()?,
    };
    if orders.is_empty() || orders.contains(&0) {
        return Err(Error::Usage("model orders must be >= 1".into()));
    }
    let mut sorted = orders.clone();
    sorted.sort_unstable();
    sorted.dedup();
    Ok(sorted)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrateOptions {
    pub orders: Vec<usize>,
    pub repeats: Option<usize>,
    pub first_fold_only: bool,
    pub execution: Execution,
}

impl Default for CalibrateOptions {
    fn default() -> Self {
        CalibrateOptions {
            orders: (1..=5).collect(),
            repeats: None,
            first_fold_only: false,
            execution: Execution::default(),
        }
    }
}

/// Cross-validates, refits the best order and returns it; nothing is written.
pub fn cmd_calibrate(
    cfg: &ToolkitConfig,
    dataset: &CalibrationDataset,
    opts: &CalibrateOptions,
) -> Result<Calibration> {
    let cv = CvOptions {
        orders: opts.orders.clone(),
        k: cfg.folds,
        repeats: opts.repeats.unwrap_or(cfg.repeats),
        seed: cfg.seed,
        first_fold_only: opts.first_fold_only,
        execution: opts.execution,
    };
    calibration::calibrate(dataset, &cv, cfg.signal_units.clone())
}

/// Runs [`cmd_calibrate`] and persists the model only if every fit succeeded.
pub fn cmd_calibrate_to_file(
    cfg: &ToolkitConfig,
    dataset: &CalibrationDataset,
    opts: &CalibrateOptions,
    model_path: &Path,
) -> Result<Calibration> {
    let cal = cmd_calibrate(cfg, dataset, opts)?;
    std::fs::write(model_path, cal.model.to_toml()).map_err(io_at(model_path))?;
    Ok(cal)
}

/// Streams one frame record per input sample. Memory use does not grow with
/// the stream; records are written as soon as they are computed.
pub fn cmd_estimate(
    cfg: &ToolkitConfig,
    model: &calibration::CalibratedModel,
    input: impl BufRead,
    out: &mut impl Write,
) -> Result<usize> {
    let mut est = Estimator::new(cfg.estimator_config(model)?)?;
    let n = for_each_record(input, |line_no, text| {
        let s = parse_sample_line(text, line_no)?;
        let frame = est
            .process_frame(s.time, &s.channels)
            .map_err(|e| match e {
                Error::Stream { msg, .. } => Error::Stream { line: line_no, msg },
                other => other,
            })?;
        writeln!(out, "{}", frame.to_record())?;
        Ok(())
    })?;
    out.flush()?;
    Ok(n)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevelSummary {
    pub truth: f64,
    pub frames: usize,
    pub mean_estimate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportSummary {
    pub frames: usize,
    pub first_time: f64,
    pub last_time: f64,
    pub sensing_range: f64,
    pub saturated_frames: usize,
    pub duty_cycle: [f64; ELEMENT_COUNT],
    pub pattern_counts: [usize; 4],
    pub rmse: Option<f64>,
    pub loaded_rmse: Option<f64>,
    /// Per distinct non-zero truth force, in order of first appearance.
    pub levels: Vec<LevelSummary>,
}

impl ReportSummary {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "frames = {}", self.frames);
        let _ = writeln!(s, "duration_s = {:.6}", self.last_time - self.first_time);
        let _ = writeln!(s, "sensing_range_n = {:.6}", self.sensing_range);
        let _ = writeln!(s, "saturated_frames = {}", self.saturated_frames);
        for (i, d) in self.duty_cycle.iter().enumerate() {
            let _ = writeln!(s, "duty_cycle_e{} = {:.6}", i + 1, d);
        }
        for (name, count) in ["none", "point", "line", "area"]
            .iter()
            .zip(self.pattern_counts)
        {
            let _ = writeln!(s, "pattern_{name} = {count}");
        }
        if let Some(r) = self.rmse {
            let _ = writeln!(s, "rmse_n = {r:.6}");
        }
        if let Some(r) = self.loaded_rmse {
            let _ = writeln!(s, "rmse_loaded_n = {r:.6}");
        }
        for l in &self.levels {
            let _ = writeln!(
                s,
                "level {:.6} N: frames = {}, mean_n = {:.6}, error_n = {:+.6}",
                l.truth,
                l.frames,
                l.mean_estimate,
                l.mean_estimate - l.truth
            );
        }
        s
    }
}

/// Summarizes a frame stream. With `truth`, also reports RMSE of the
/// filtered force (all frames and loaded frames only) and per-level means.
pub fn cmd_report(
    frames: impl BufRead,
    truth: Option<&LoadScenario>,
    want_rmse: bool,
    sensing_range: f64,
) -> Result<ReportSummary> {
    if want_rmse && truth.is_none() {
        return Err(Error::Usage(
            "RMSE requested but no truth scenario given".into(),
        ));
    }
    let mut n = 0usize;
    let (mut first, mut last) = (f64::NAN, f64::NAN);
    let mut saturated = 0;
    let mut on_counts = [0usize; ELEMENT_COUNT];
    let mut patterns = [0usize; 4];
    let (mut sq_all, mut sq_loaded, mut n_loaded) = (0.0, 0.0, 0usize);
    let mut levels: Vec<(f64, usize, f64)> = Vec::new();

    for_each_record(frames, |line_no, text| {
        let f = EstimateFrame::parse_record(text, line_no)?;
        if n == 0 {
            first = f.time;
        }
        last = f.time;
        n += 1;
        if f.raw_force >= sensing_range {
            saturated += 1;
        }
        for (c, on) in on_counts.iter_mut().zip(f.element_state) {
            *c += usize::from(on);
        }
        patterns[f.pattern as usize] += 1;
        if let Some(scenario) = truth {
            let t = scenario
                .at(f.time)
                .map_err(|e| Error::Parse {
                    line: line_no,
                    msg: e.to_string(),
                })?
                .force;
            let err = f.filtered_force - t;
            sq_all += err * err;
            if t > 0.0 {
                sq_loaded += err * err;
                n_loaded += 1;
                match levels.iter_mut().find(|(lv, ..)| *lv == t) {
                    Some(entry) => {
                        entry.1 += 1;
                        entry.2 += f.filtered_force;
                    }
                    None => levels.push((t, 1, f.filtered_force)),
                }
            }
        }
        Ok(())
    })?;

    if n == 0 {
        return Err(Error::Usage("frame stream is empty".into()));
    }
    Ok(ReportSummary {
        frames: n,
        first_time: first,
        last_time: last,
        sensing_range,
        saturated_frames: saturated,
        duty_cycle: on_counts.map(|c| c as f64 / n as f64),
        pattern_counts: patterns,
        rmse: truth.map(|_| (sq_all / n as f64).sqrt()),
        loaded_rmse: (truth.is_some() && n_loaded > 0)
            .then(|| (sq_loaded / n_loaded as f64).sqrt()),
        levels: levels
            .into_iter()
            .map(|(truth, frames, sum)| LevelSummary {
                truth,
                frames,
                mean_estimate: sum / frames as f64,
            })
            .collect(),
    })
}
