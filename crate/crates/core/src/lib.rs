//! Brown-Resnick space-time fields: exact simulation, empirical and
//! bias-corrected extremograms, and generalised least squares fitting of
//! parametric dependence functions with subsampling confidence intervals.

pub mod br;
pub mod config;
pub mod domain;
pub mod error;
pub mod extremogram;
pub mod field_io;
pub mod glse;
pub mod models;
pub mod normal;
pub mod optimize;
pub mod pipeline;
pub mod simulate;
pub mod stats;
pub mod study;
pub mod subsample;

pub use error::{Error, Result};
