use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::ops::ControlFlow;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use egoloc::data::NormStats;
use egoloc::seq2seq::{evaluate_loss, train, Checkpoint, EpochStats, Seq2Seq};
use serde_json::json;

use crate::config::RunConfig;
use crate::dataset::{require_nonempty, Dataset};

pub const FINAL_CHECKPOINT: &str = "final.ckpt";
pub const BEST_CHECKPOINT: &str = "best.ckpt";
pub const LOSS_LOG: &str = "loss.jsonl";

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub history: Vec<EpochStats>,
    pub train_windows: usize,
    /// Dropout-free loss on the training windows after the last epoch.
    pub final_eval_loss: f64,
    pub final_checkpoint: PathBuf,
    pub best_checkpoint: PathBuf,
}

/// Trains one model on the training split and writes checkpoints, the loss
/// log and the resolved config into `out`.
///
/// With `stop_below`, training ends as soon as the dropout-free training loss
/// falls under that value.
pub fn run(cfg: &RunConfig, out: &Path, stop_below: Option<f64>) -> Result<TrainOutcome> {
    let model_cfg = cfg.model.model_config();
    let data = Dataset::load(cfg.data_root()?, &cfg.data, model_cfg.window_len())?;
    require_nonempty(&data.train, "training")?;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    cfg.archive(out)?;

    let norm = NormStats::fit(&data.train);
    let mut model = Seq2Seq::init(model_cfg, cfg.seed)?;
    let samples = data
        .train
        .iter()
        .map(|w| model.prepare(&norm.normalize(w)))
        .collect::<egoloc::Result<Vec<_>>>()?;
    log::info!(
        "training {} on {} windows for up to {} epochs",
        cfg.model.variant,
        samples.len(),
        cfg.train.epochs
    );

    let mut train_cfg = cfg.train.clone();
    train_cfg.seed = cfg.seed;
    let metadata = |epochs: usize| {
        json!({
            "variant": cfg.model.variant,
            "train": train_cfg,
            "epochs_run": epochs,
            "train_windows": samples.len(),
        })
    };
    let checkpoint = |model: &Seq2Seq, epochs: usize| Checkpoint {
        model: model.clone(),
        norm: norm.clone(),
        seed: cfg.seed,
        metadata: metadata(epochs),
    };

    let log_path = out.join(LOSS_LOG);
    let mut log_file = BufWriter::new(File::create(&log_path)?);
    let best_path = out.join(BEST_CHECKPOINT);
    let mut best = f64::INFINITY;
    let history = train(&mut model, &samples, &train_cfg, |stats, m| {
        writeln!(log_file, "{}", serde_json::to_string(stats).expect("stats serialize"))?;
        log::info!("epoch {:>5}  loss {:.6e}", stats.epoch, stats.mean_loss);
        if stats.mean_loss < best {
            best = stats.mean_loss;
            checkpoint(m, stats.epoch).save(&best_path)?;
        }
        if let Some(target) = stop_below {
            if evaluate_loss(m, &samples, train_cfg.teacher_forcing)? < target {
                return Ok(ControlFlow::Break(()));
            }
        }
        Ok(ControlFlow::Continue(()))
    })?;
    log_file.flush()?;

    let final_path = out.join(FINAL_CHECKPOINT);
    checkpoint(&model, history.len()).save(&final_path)?;
    let final_eval_loss = evaluate_loss(&model, &samples, train_cfg.teacher_forcing)?;
    Ok(TrainOutcome {
        history,
        train_windows: samples.len(),
        final_eval_loss,
        final_checkpoint: final_path,
        best_checkpoint: best_path,
    })
}
