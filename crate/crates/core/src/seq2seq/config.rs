use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::{IMU_CHANNELS, NUM_KEYPOINTS};
use crate::error::{Error, Result};

pub const BOX_DIM: usize = 4;

/// Which per-frame cues the encoder reads. Location is always present.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureMask {
    pub location: bool,
    pub imu: bool,
    pub pose: bool,
}

impl FeatureMask {
    pub const ALL: FeatureMask = FeatureMask {
        location: true,
        imu: true,
        pose: true,
    };
    pub const LOCATION_ONLY: FeatureMask = FeatureMask {
        location: true,
        imu: false,
        pose: false,
    };
}

impl Default for FeatureMask {
    fn default() -> Self {
        Self::ALL
    }
}

/// The two encoder-decoder variants: full cues, or past locations only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    LipLstm,
    LLstm,
}

impl Variant {
    pub fn features(self) -> FeatureMask {
        match self {
            Variant::LipLstm => FeatureMask::ALL,
            Variant::LLstm => FeatureMask::LOCATION_ONLY,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Variant::LipLstm => "LIP-LSTM",
            Variant::LLstm => "L-LSTM",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lip-lstm" | "lip" => Ok(Variant::LipLstm),
            "l-lstm" | "l" => Ok(Variant::LLstm),
            _ => Err(Error::config(format!("unknown variant `{s}`"))),
        }
    }
}

/// How the first decoder input is chosen at inference.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeedMode {
    /// The last observed box `l_{t0}`.
    #[default]
    LastObserved,
    /// The true box `l_{t0+1}`, matching the training-time seed.
    OracleNext,
}

impl SeedMode {
    pub fn as_str(self) -> &'static str {
        match self {
            SeedMode::LastObserved => "last_observed",
            SeedMode::OracleNext => "oracle_next",
        }
    }
}

impl FromStr for SeedMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "last_observed" | "last-observed" => Ok(SeedMode::LastObserved),
            "oracle_next" | "oracle-next" => Ok(SeedMode::OracleNext),
            _ => Err(Error::config(format!("unknown seed mode `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub keypoints: usize,
    pub t_obsv: usize,
    pub t_pred: usize,
    pub hidden: usize,
    pub layers: usize,
    pub dropout: f64,
    pub features: FeatureMask,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            keypoints: NUM_KEYPOINTS,
            t_obsv: 10,
            t_pred: 10,
            hidden: 384,
            layers: 2,
            dropout: 0.5,
            features: FeatureMask::ALL,
        }
    }
}

impl ModelConfig {
    pub fn for_variant(variant: Variant) -> Self {
        Self {
            features: variant.features(),
            ..Self::default()
        }
    }

    /// Reduced network used for gradient checking.
    pub fn tiny() -> Self {
        Self {
            hidden: 8,
            t_obsv: 5,
            t_pred: 4,
            dropout: 0.0,
            ..Self::default()
        }
    }

    pub fn encoder_input_width(&self) -> usize {
        BOX_DIM
            + if self.features.imu { IMU_CHANNELS } else { 0 }
            + if self.features.pose { 2 * self.keypoints } else { 0 }
    }

    /// Number of decoder steps, i.e. predicted offsets `+2 ..= +t_pred`.
    pub fn decode_steps(&self) -> usize {
        self.t_pred - 1
    }

    pub fn window_len(&self) -> usize {
        self.t_obsv + self.t_pred
    }

    pub fn validate(&self) -> Result<()> {
        if self.t_obsv < 2 || self.t_pred < 2 {
            return Err(Error::config(format!(
                "t_obsv and t_pred must be at least 2, got {} / {}",
                self.t_obsv, self.t_pred
            )));
        }
        if self.hidden == 0 {
            return Err(Error::config("hidden size must be at least 1"));
        }
        if self.layers != 2 {
            return Err(Error::config(format!(
                "the encoder and decoder have exactly 2 layers, got {}",
                self.layers
            )));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::config(format!(
                "dropout must lie in [0, 1), got {}",
                self.dropout
            )));
        }
        if !self.features.location {
            return Err(Error::config("the location feature cannot be masked out"));
        }
        if self.features.pose && self.keypoints != NUM_KEYPOINTS {
            return Err(Error::config(format!(
                "pose input expects {NUM_KEYPOINTS} keypoints, got {}",
                self.keypoints
            )));
        }
        Ok(())
    }
}
