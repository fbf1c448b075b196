//! Voltage→force calibration.
//!
//! A dataset of (signal, force) pairs is collected with a fixed set of
//! calibration weights, polynomial models of increasing order are fitted by
//! least squares, and the order with the lowest mean k-fold test error is
//! kept.

mod cv;
mod dataset;
mod lsq;
mod model;

pub use cv::{
    calibrate, cross_validate, kfold_split, kfold_split_with, Calibration, CvOptions, FitReport,
    FoldAssignment, OrderErrors, TIE_TOLERANCE,
};
pub use dataset::{CalibrationDataset, CalibrationSample};
pub use lsq::{build_design_matrix, fit_polynomial, least_squares_fit, Matrix};
pub use model::{
    evaluate_model, prototype_models, CalibratedModel, FitMetadata, PolynomialModel, SignalUnits,
};

/// Calibration weights (gram-weight) and how many times each was measured.
///
/// Twelve weights; 20 and 100 gw were measured nine times, 50 gw ten times
/// and the rest eight times, for 100 samples in total.
pub fn protocol_weights() -> Vec<(f64, usize)> {
    [
        5.0, 10.0, 20.0, 25.0, 35.0, 45.0, 50.0, 55.0, 65.0, 75.0, 85.0, 100.0,
    ]
    .into_iter()
    .map(|gw| {
        let reps = match gw as u32 {
            20 | 100 => 9,
            50 => 10,
            _ => 8,
        };
        (gw, reps)
    })
    .collect()
}
