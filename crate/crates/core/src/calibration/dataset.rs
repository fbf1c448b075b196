use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{io_at, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationSample {
    #[serde(rename = "v")]
    pub signal: f64,
    #[serde(rename = "force_n")]
    pub force: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight_gw: Option<f64>,
}

/// (signal, force) pairs; CSV form is `v,force_n[,weight_gw]`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CalibrationDataset {
    samples: Vec<CalibrationSample>,
}

impl CalibrationDataset {
    pub fn new(samples: Vec<CalibrationSample>) -> Result<Self> {
        for (i, s) in samples.iter().enumerate() {
            if !s.signal.is_finite() || !s.force.is_finite() {
                return Err(Error::Domain(format!("sample {i}: non-finite value")));
            }
        }
        Ok(CalibrationDataset { samples })
    }

    pub fn from_pairs(signals: &[f64], forces: &[f64]) -> Result<Self> {
        if signals.len() != forces.len() {
            return Err(Error::Usage("signals and forces differ in length".into()));
        }
        Self::new(
            signals
                .iter()
                .zip(forces)
                .map(|(&signal, &force)| CalibrationSample {
                    signal,
                    force,
                    weight_gw: None,
                })
                .collect(),
        )
    }

    pub fn samples(&self) -> &[CalibrationSample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn signals(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.signal).collect()
    }

    pub fn forces(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.force).collect()
    }

    /// Signals and forces of the samples at `indices`.
    pub fn select(&self, indices: &[usize]) -> (Vec<f64>, Vec<f64>) {
        indices
            .iter()
            .map(|&i| (self.samples[i].signal, self.samples[i].force))
            .unzip()
    }

    pub fn from_csv_reader(reader: impl Read) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut samples = Vec::new();
        for (i, rec) in rdr.deserialize::<CalibrationSample>().enumerate() {
            let line = i + 2;
            let s = rec.map_err(|e| Error::Parse {
                line,
                msg: e.to_string(),
            })?;
            if !s.signal.is_finite() || !s.force.is_finite() {
                return Err(Error::Parse {
                    line,
                    msg: "non-finite value".into(),
                });
            }
            samples.push(s);
        }
        Ok(CalibrationDataset { samples })
    }

    pub fn from_csv_path(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(io_at(path))?;
        Self::from_csv_reader(file)
            .map_err(|e| e.with_context(format!("dataset {}", path.display())))
    }

    pub fn write_csv(&self, writer: impl Write) -> Result<()> {
        let with_weights = self.samples.iter().all(|s| s.weight_gw.is_some());
        let mut wtr = csv::WriterBuilder::new()
            .has_headers(false)
            .from_writer(writer);
        let header: &[&str] = if with_weights {
            &["v", "force_n", "weight_gw"]
        } else {
            &["v", "force_n"]
        };
        let csv_err = |e: csv::Error| Error::Io {
            path: None,
            source: std::io::Error::other(e),
        };
        wtr.write_record(header).map_err(csv_err)?;
        for s in &self.samples {
            let mut rec = vec![s.signal.to_string(), s.force.to_string()];
            if with_weights {
                rec.push(s.weight_gw.unwrap_or_default().to_string());
            }
            wtr.write_record(&rec).map_err(csv_err)?;
        }
        wtr.flush()?;
        Ok(())
    }
}
