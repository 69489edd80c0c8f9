//! Locally robust estimation of semiparametric sample selection models
//! identified without exclusion restrictions.

pub mod analytic;
pub mod cli;
pub mod data;
pub mod dgp;
pub mod error;
pub mod estimators;
pub mod learners;
pub mod linalg;
pub mod moments;
pub mod montecarlo;
pub mod oracle;
pub mod seed;

pub use data::{Dataset, EstimatorTag, FitResult, FoldPartition, Observation};
pub use error::{Error, Result};
pub use seed::Seed;
