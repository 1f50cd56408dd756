//! Estimation of mutual information and multi-information among many variables
//! from finite samples.
//!
//! The pipeline: adaptively quantize each variable into equally populated bins,
//! compute naive plug-in estimates on repeated subsamples, extrapolate the
//! estimates against inverse sample size to the infinite-sample intercept, and
//! calibrate the admissible quantization level against shuffled (independent)
//! data. Batch engines run the procedure over all pairs or all triplets of a
//! group, deterministically under a single seed.

pub mod baseline;
pub mod calibrate;
pub mod engine;
pub mod error;
pub mod extrapolate;
pub mod ingest;
pub mod multiinfo;
pub mod plugin;
pub mod quantize;
pub mod seed;
pub mod testdata;

pub use error::Error;
pub use ingest::{Dataset, JointSample};
pub use quantize::QuantizedVector;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
