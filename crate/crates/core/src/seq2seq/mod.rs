//! The two-layer LSTM encoder-decoder (LIP-LSTM and its location-only L-LSTM variant).

mod checkpoint;
mod config;
mod lstm;
mod model;
mod train;

pub use checkpoint::{Checkpoint, FORMAT_VERSION, MAGIC};
pub use config::{FeatureMask, ModelConfig, SeedMode, Variant, BOX_DIM};
pub use lstm::{FaultInjection, LstmLayerParams};
pub use model::{init_params, Decoded, EncoderContext, Mode, NormBox, PreparedSample, Seq2Seq};
pub use train::{evaluate_loss, train, EpochStats, TrainConfig};

pub use crate::prediction::PredictionSet;
