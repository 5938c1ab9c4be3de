//! Closed-form predictors: per-direction average displacement (STATS) and
//! per-corner constant-velocity regression (LR).

mod lr;
mod stats;

pub use lr::{lr_fit_predict, CornerLine, CornerRegression, DEGENERATE_X_VARIANCE};
pub use stats::{stats_fit, stats_predict, DirectionDisplacement, DisplacementModel};

/// Observed boxes consumed by both baselines.
pub const OBSERVED_STEPS: usize = 10;
/// Future offsets `+1 ..= +10` computed by both baselines.
pub const HORIZON: usize = 10;
