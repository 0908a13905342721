//! Simulation, spectral analysis, estimation and prediction of
//! two-dimensional multi-scale-invariant Gaussian random fields.
//!
//! The pipeline runs from gridded accumulations ([`io`]) through scale
//! interval detection and Hurst estimation ([`estimate`]) to a fitted
//! [`model::MsiModel`], which drives prediction ([`predict`]) and, when its
//! `H'` entries allow, exact simulation ([`simulate`]). [`lamperti`],
//! [`spectral`] and [`markov`] cover the periodically correlated
//! counterpart of the field.

pub mod cli;
pub mod error;
pub mod estimate;
pub mod io;
pub mod lamperti;
pub mod markov;
pub mod model;
pub mod predict;
pub mod simulate;
pub mod spectral;

pub use error::{Error, Result};
pub use model::{validate_model, Axis, Breakpoints, GridField, HurstVector, MsiModel, ScaleVector, StripSeries};
