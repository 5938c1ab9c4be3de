use std::path::Path;

use anyhow::Result;
use egoloc::data::Split;

use super::eval::{predict_all, Method};
use crate::config::RunConfig;
use crate::dataset::{require_nonempty, Dataset};
use crate::records::{write_records, PredictionRecord};

/// Writes one prediction record per window of `split` to `out_file`.
pub fn run(cfg: &RunConfig, method: &Method, split: Split, out_file: &Path) -> Result<usize> {
    let data = Dataset::load(cfg.data_root()?, &cfg.data, cfg.model.t_obsv + cfg.model.t_pred)?;
    let windows = match split {
        Split::Train => &data.train,
        Split::Test => &data.test,
    };
    require_nonempty(windows, if split == Split::Train { "training" } else { "test" })?;
    let (label, _, preds) = predict_all(method, &data.train, windows, cfg.eval.seed_mode)?;
    let records: Vec<_> = windows
        .iter()
        .zip(&preds)
        .map(|(w, p)| PredictionRecord::new(&label, w, p))
        .collect();
    write_records(out_file, &records)?;
    Ok(records.len())
}
