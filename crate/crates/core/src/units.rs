//! Physical quantities used across the toolkit and the RMSE error metric.
//!
//! Everything is stored as `f64` in SI units (newtons, volts, ohms) except
//! [`GramWeight`], the unit calibration weights are labelled in.

use std::fmt;

use crate::error::{Error, Result};

/// Newtons per gram-weight. Uses g = 9.8 m/s² so that 100 gw maps to 0.98 N.
pub const NEWTONS_PER_GW: f64 = 0.0098;

macro_rules! quantity {
    ($(#[$meta:meta])* $name:ident, $unit:literal) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
        pub struct $name(pub f64);

        impl $name {
            pub fn value(self) -> f64 {
                self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{} {}", self.0, $unit)
            }
        }
    };
}

quantity!(
    /// Force in newtons.
    Force,
    "N"
);
quantity!(
    /// Calibration-weight force in gram-weight.
    GramWeight,
    "gw"
);
quantity!(Voltage, "V");
quantity!(Resistance, "Ω");

impl Force {
    /// An applied load: finite and non-negative.
    pub fn applied(newtons: f64) -> Result<Self> {
        if newtons.is_finite() && newtons >= 0.0 {
            Ok(Force(newtons))
        } else {
            Err(Error::Domain(format!(
                "applied force must be finite and >= 0, got {newtons}"
            )))
        }
    }
}

impl GramWeight {
    pub fn new(gw: f64) -> Result<Self> {
        if gw.is_finite() && gw >= 0.0 {
            Ok(GramWeight(gw))
        } else {
            Err(Error::Domain(format!(
                "gram-weight must be finite and >= 0, got {gw}"
            )))
        }
    }

    pub fn to_force(self) -> Force {
        Force(self.0 * NEWTONS_PER_GW)
    }
}

impl Voltage {
    pub fn new(volts: f64) -> Result<Self> {
        if volts.is_finite() {
            Ok(Voltage(volts))
        } else {
            Err(Error::Domain(format!(
                "voltage must be finite, got {volts}"
            )))
        }
    }
}

impl Resistance {
    /// A physical resistor value: finite and strictly positive.
    pub fn new(ohms: f64) -> Result<Self> {
        if ohms.is_finite() && ohms > 0.0 {
            Ok(Resistance(ohms))
        } else {
            Err(Error::Domain(format!(
                "resistance must be finite and > 0, got {ohms}"
            )))
        }
    }
}

/// Converts gram-weight to newtons.
pub fn gw_to_newtons(gw: f64) -> Result<f64> {
    Ok(GramWeight::new(gw)?.to_force().value())
}

/// Root-mean-square error between two equally long, non-empty series.
pub fn rmse(predicted: &[f64], truth: &[f64]) -> Result<f64> {
    if predicted.len() != truth.len() {
        return Err(Error::Usage(format!(
            "rmse: length mismatch ({} predicted vs {} truth)",
            predicted.len(),
            truth.len()
        )));
    }
    if predicted.is_empty() {
        return Err(Error::Usage("rmse: empty input".into()));
    }
    let sum_sq: f64 = predicted
        .iter()
        .zip(truth)
        .map(|(p, t)| (p - t) * (p - t))
        .sum();
    Ok((sum_sq / predicted.len() as f64).sqrt())
}
