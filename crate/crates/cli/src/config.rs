//! Run configuration: built-in defaults, optional preset, TOML file, then flags.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use egoloc::data::Direction;
use egoloc::seq2seq::{ModelConfig, SeedMode, TrainConfig, Variant};
use serde::{Deserialize, Serialize};

/// Name of the archived resolved config written beside every run's outputs.
pub const RESOLVED_CONFIG_FILE: &str = "config.toml";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    pub root: Option<PathBuf>,
    pub stride: usize,
    /// Overrides the manifest split when non-empty.
    pub test_clips: Vec<String>,
    /// Train only on these walking directions (empty = all).
    pub directions: Vec<Direction>,
    /// Keep only the first `n` training windows.
    pub max_windows: Option<usize>,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            root: None,
            stride: 1,
            test_clips: Vec::new(),
            directions: Vec::new(),
            max_windows: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub variant: Variant,
    pub hidden: usize,
    pub dropout: f64,
    pub t_obsv: usize,
    pub t_pred: usize,
}

impl Default for ModelSection {
    fn default() -> Self {
        let m = ModelConfig::default();
        Self {
            variant: Variant::LipLstm,
            hidden: m.hidden,
            dropout: m.dropout,
            t_obsv: m.t_obsv,
            t_pred: m.t_pred,
        }
    }
}

impl ModelSection {
    pub fn model_config(&self) -> ModelConfig {
        ModelConfig {
            hidden: self.hidden,
            dropout: self.dropout,
            t_obsv: self.t_obsv,
            t_pred: self.t_pred,
            ..ModelConfig::for_variant(self.variant)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSection {
    pub seed_mode: SeedMode,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub data: DataConfig,
    pub model: ModelSection,
    pub train: TrainConfig,
    pub eval: EvalSection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// Batch 64, 100 epochs, dropout 0.5, lr 1e-3.
    Standard,
    /// Batch 32, 1000 epochs, for retraining on one walking direction.
    PerDirection,
    /// 16 windows, hidden 64, no dropout, up to 2000 epochs.
    Overfit,
}

impl FromStr for Preset {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "standard" => Ok(Preset::Standard),
            "per-direction" | "per_direction" => Ok(Preset::PerDirection),
            "overfit" => Ok(Preset::Overfit),
            _ => bail!("unknown preset `{s}` (expected standard, per-direction or overfit)"),
        }
    }
}

impl RunConfig {
    pub fn preset(preset: Preset) -> Self {
        let mut cfg = RunConfig::default();
        match preset {
            Preset::Standard => {}
            Preset::PerDirection => cfg.train = TrainConfig::per_direction(),
            Preset::Overfit => {
                cfg.data.max_windows = Some(16);
                cfg.model.hidden = 64;
                cfg.model.dropout = 0.0;
                cfg.train.epochs = 2000;
                cfg.train.batch_size = 16;
            }
        }
        cfg
    }

    /// `base` overlaid with the keys present in the TOML file at `path`.
    pub fn layered(base: RunConfig, path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(base);
        };
        let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let overlay: toml::Table = toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        let mut merged = toml::Table::try_from(&base).context("serializing defaults")?;
        merge(&mut merged, overlay);
        let cfg: RunConfig = merged
            .try_into()
            .with_context(|| format!("invalid config {}", path.display()))?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Writes the resolved config into `dir`.
    pub fn archive(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join(RESOLVED_CONFIG_FILE), self.to_toml())?;
        Ok(())
    }

    pub fn data_root(&self) -> Result<&Path> {
        self.data
            .root
            .as_deref()
            .context("no data root: pass --data, set EGOLOC_DATA, or set data.root in the config")
    }
}

fn merge(base: &mut toml::Table, overlay: toml::Table) {
    for (k, v) in overlay {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}
