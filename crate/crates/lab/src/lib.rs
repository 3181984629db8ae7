//! Experiment runner for the LG4 NV-NMR simulator: configuration, geometry
//! files, spectra, exports, and sweeps on top of `lg4nmr-core`.

pub mod config;
mod error;
pub mod export;
pub mod molecule;
pub mod run;
pub mod spectrum;
pub mod sweep;

pub use error::{FieldError, LabError, Result};
