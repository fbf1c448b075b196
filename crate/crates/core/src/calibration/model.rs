use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::cv::OrderErrors;
use crate::error::{io_at, Error, Result};

/// f(v) = a₀ + a₁v + … + aₙvⁿ
#[derive(Debug, Clone, PartialEq)]
pub struct PolynomialModel {
    coefficients: Vec<f64>,
}

impl PolynomialModel {
    /// Coefficients in ascending power order; at least two, all finite.
    pub fn new(coefficients: Vec<f64>) -> Result<Self> {
        if coefficients.len() < 2 {
            return Err(Error::Domain(format!(
                "a polynomial model needs order >= 1 (got {} coefficients)",
                coefficients.len()
            )));
        }
        if coefficients.iter().any(|c| !c.is_finite()) {
            return Err(Error::Domain("model coefficients must be finite".into()));
        }
        Ok(PolynomialModel { coefficients })
    }

    pub fn order(&self) -> usize {
        self.coefficients.len() - 1
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    /// Horner evaluation.
    pub fn eval(&self, v: f64) -> f64 {
        self.coefficients
            .iter()
            .rev()
            .fold(0.0, |acc, &c| acc * v + c)
    }
}

impl fmt::Display for PolynomialModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "f = {}", self.coefficients[0])?;
        for (i, c) in self.coefficients.iter().enumerate().skip(1) {
            let sign = if c.is_sign_negative() { '-' } else { '+' };
            let pow = if i == 1 {
                "v".to_string()
            } else {
                format!("v^{i}")
            };
            write!(f, " {sign} {}{pow}", c.abs())?;
        }
        Ok(())
    }
}

pub fn evaluate_model(model: &PolynomialModel, v: f64) -> f64 {
    model.eval(v)
}

/// The five reference models (orders 1 to 5) fitted on the prototype's
/// 100-sample dataset.
pub fn prototype_models() -> [PolynomialModel; 5] {
    let table: [&[f64]; 5] = [
        &[-0.0650, 0.0889],
        &[-0.0301, 0.0737, 0.0012],
        &[0.0653, -0.0047, 0.0169, -0.000863],
        &[0.0924, -0.0405, 0.0295, -0.0025, 0.0000675],
        &[0.0603, 0.0189, -0.0015, 0.0041, -0.000539, 0.00002],
    ];
    table.map(|c| PolynomialModel::new(c.to_vec()).expect("reference coefficients are valid"))
}

/// Unit tag of the signal a model was trained on.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SignalUnits(pub String);

impl SignalUnits {
    pub fn adc_code() -> Self {
        SignalUnits("adc_code".into())
    }

    pub fn volt() -> Self {
        SignalUnits("volt".into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for SignalUnits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitMetadata {
    pub seed: u64,
    pub repeats: usize,
    pub folds: usize,
    pub first_fold_only: bool,
    pub selected_order: usize,
    pub samples: usize,
    pub orders: Vec<OrderErrors>,
}

/// A model plus everything needed to use it safely: its signal units and how
/// it was fitted. Persisted as TOML.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibratedModel {
    pub model: PolynomialModel,
    pub signal_units: SignalUnits,
    pub fit: Option<FitMetadata>,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    order: usize,
    coefficients: Vec<f64>,
    signal_units: SignalUnits,
    #[serde(skip_serializing_if = "Option::is_none")]
    fit: Option<FitMetadata>,
}

impl CalibratedModel {
    pub fn to_toml(&self) -> String {
        let file = ModelFile {
            order: self.model.order(),
            coefficients: self.model.coefficients.clone(),
            signal_units: self.signal_units.clone(),
            fit: self.fit.clone(),
        };
        toml::to_string(&file).expect("model file is always representable")
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let file: ModelFile = toml::from_str(text).map_err(|e| Error::Parse {
            line: e
                .span()
                .map_or(0, |s| text[..s.start].lines().count().max(1)),
            msg: e.message().to_string(),
        })?;
        let model = PolynomialModel::new(file.coefficients).map_err(|e| Error::Parse {
            line: 0,
            msg: e.to_string(),
        })?;
        if model.order() != file.order {
            return Err(Error::Parse {
                line: 0,
                msg: format!(
                    "order {} does not match {} coefficients",
                    file.order,
                    model.coefficients.len()
                ),
            });
        }
        Ok(CalibratedModel {
            model,
            signal_units: file.signal_units,
            fit: file.fit,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(io_at(path))?;
        Self::from_toml(&text).map_err(|e| e.with_context(format!("model {}", path.display())))
    }
}
