//! Lyric corpus curation, exploratory analytics, evaluation metrics and
//! release-year regressors.
//!
//! The numeric modules are generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix the scalar for the common cases.

// `!(x > 0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytics;
pub mod corpus;
mod error;
pub mod metrics;
pub mod regressor;
mod scalar;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Year regressor artifact in double precision, the workspace default.
pub type YearRegressor = regressor::RegressorArtifact<f64>;
/// Year regressor artifact trained directly on `f32` embeddings.
pub type YearRegressor32 = regressor::RegressorArtifact<f32>;
pub type Report = metrics::ClassificationReport<f64>;
pub type Report32 = metrics::ClassificationReport<f32>;
pub type ClassScores = metrics::ClassScores<f64>;
