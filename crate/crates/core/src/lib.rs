//! Future person location and trajectory prediction for egocentric video.
//!
//! The crate provides the LIP-LSTM encoder-decoder (and its location-only
//! L-LSTM variant), the STATS and LR baselines, the Mean IOU / Mean Final IOU /
//! Mean DE metrics, the clip data schema and a synthetic scene generator.

pub mod baselines;
pub mod data;
pub mod error;
pub mod metrics;
pub mod numerics;
pub mod prediction;
pub mod seq2seq;

pub use error::{Error, Result};
pub use prediction::PredictionSet;
