//! Desk-scale model of a dual-layer resistive soft tactile sensor.
//!
//! The signal chain runs load → resistance → Wheatstone bridge → amplifier →
//! ADC, and back again through a polynomial calibration model, a moving-average
//! filter and a four-element contact detector:
//!
//! * [`units`] physical quantities and the RMSE metric
//! * [`physics`] fabric and rubber-element resistance models, load scenarios
//! * [`bridge`] bridge, Thevenin reduction, amplifier and ADC
//! * [`calibration`] protocol datasets, least squares, k-fold cross-validation
//! * [`estimator`] streaming force/contact estimation
//! * [`sim`], [`io`], [`commands`] the simulated sensor and the CLI surface
//!
//! Batch work (cross-validation repeats, Monte-Carlo sweeps) runs on rayon when
//! the `parallel` feature is enabled and falls back to a sequential loop
//! otherwise; see [`exec`].

pub mod bridge;
pub mod calibration;
pub mod commands;
pub mod error;
pub mod estimator;
pub mod exec;
pub mod io;
pub mod physics;
pub mod sim;
pub mod units;

pub use error::{Error, Result};
