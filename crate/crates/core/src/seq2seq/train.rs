use std::ops::ControlFlow;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::model::{Mode, PreparedSample, Seq2Seq};
use crate::error::{Error, Result};
use crate::numerics::{adam_step, AdamConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub teacher_forcing: f64,
    pub adam: AdamConfig,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 100,
            batch_size: 64,
            teacher_forcing: 0.5,
            adam: AdamConfig::default(),
            seed: 0,
        }
    }
}

impl TrainConfig {
    /// Schedule used when retraining on a single walking-direction subset.
    pub fn per_direction() -> Self {
        Self {
            epochs: 1000,
            batch_size: 32,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.adam.validate()?;
        if self.batch_size == 0 {
            return Err(Error::config("batch size must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.teacher_forcing) {
            return Err(Error::config(format!(
                "teacher forcing ratio must lie in [0, 1], got {}",
                self.teacher_forcing
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EpochStats {
    pub epoch: usize,
    /// Mean training-mode loss over the epoch's samples.
    pub mean_loss: f64,
}

/// Mini-batch Adam over `samples` with a seeded shuffle each epoch.
///
/// `on_epoch` runs after every epoch and may stop training early. Returns the
/// per-epoch statistics.
pub fn train<F>(
    model: &mut Seq2Seq,
    samples: &[PreparedSample],
    cfg: &TrainConfig,
    mut on_epoch: F,
) -> Result<Vec<EpochStats>>
where
    F: FnMut(&EpochStats, &Seq2Seq) -> Result<ControlFlow<()>>,
{
    cfg.validate()?;
    if samples.is_empty() {
        return Err(Error::config("training set is empty"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..samples.len()).collect();
    let mut grads = model.store().grad_buffer();
    let mut history = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            grads.clear();
            for &i in batch {
                total += model.loss_and_grad(&samples[i], cfg.teacher_forcing, Mode::Train, &mut rng, &mut grads)?;
            }
            let store = model.store_mut();
            store.zero_grad();
            store.accumulate(&grads, 1.0 / batch.len() as f64);
            adam_step(store, &cfg.adam)?;
        }
        let stats = EpochStats {
            epoch: epoch + 1,
            mean_loss: total / samples.len() as f64,
        };
        history.push(stats);
        if on_epoch(&stats, model)?.is_break() {
            break;
        }
    }
    Ok(history)
}

/// Mean loss with dropout off.
pub fn evaluate_loss(model: &Seq2Seq, samples: &[PreparedSample], tf_prob: f64) -> Result<f64> {
    if samples.is_empty() {
        return Ok(0.0);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut total = 0.0;
    for s in samples {
        total += model.forward_loss(s, tf_prob, Mode::Eval, &mut rng)?;
    }
    Ok(total / samples.len() as f64)
}
