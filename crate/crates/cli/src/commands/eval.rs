use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use egoloc::baselines::{lr_fit_predict, stats_fit, stats_predict, OBSERVED_STEPS};
use egoloc::data::{Direction, TrackWindow};
use egoloc::metrics::{format_per_direction_table, format_table, EvalReport};
use egoloc::seq2seq::{Checkpoint, SeedMode, Variant};
use egoloc::PredictionSet;

use crate::config::RunConfig;
use crate::dataset::{directions_present, require_nonempty, Dataset};
use crate::records::{write_records, PredictionRecord};

pub const REPORT_TABLE: &str = "report.txt";
pub const REPORT_JSONL: &str = "report.jsonl";
pub const PREDICTIONS: &str = "predictions.jsonl";

/// A predictor to evaluate.
#[derive(Debug, Clone, PartialEq)]
pub enum Method {
    Stats,
    Lr,
    Learned(PathBuf),
    /// Ground truth scored as a prediction (upper bound).
    Truth,
}

impl Method {
    fn rank(&self, variant: Option<Variant>) -> u8 {
        match (self, variant) {
            (Method::Stats, _) => 0,
            (Method::Lr, _) => 1,
            (Method::Learned(_), Some(Variant::LLstm)) => 2,
            (Method::Learned(_), _) => 3,
            (Method::Truth, _) => 4,
        }
    }
}

/// Variant a checkpoint was trained as, read from its feature mask.
pub fn checkpoint_variant(ckpt: &Checkpoint) -> Variant {
    let f = ckpt.model.config().features;
    if f.imu || f.pose {
        Variant::LipLstm
    } else {
        Variant::LLstm
    }
}

/// Boxes at offsets `+2 ..= +10` taken from the window itself.
pub fn truth_of(window: &TrackWindow) -> PredictionSet {
    let start = OBSERVED_STEPS + 1;
    PredictionSet::from_boxes(window.frames[start..OBSERVED_STEPS + 10].iter().map(|f| f.bbox).collect())
}

pub fn observed_boxes(window: &TrackWindow) -> Vec<egoloc::data::BoundingBox> {
    window.frames[..OBSERVED_STEPS].iter().map(|f| f.bbox).collect()
}

/// Predictions of one method for every window, in window order.
pub fn predict_all(
    method: &Method,
    train: &[TrackWindow],
    windows: &[TrackWindow],
    seed_mode: SeedMode,
) -> Result<(String, Option<SeedMode>, Vec<PredictionSet>)> {
    match method {
        Method::Stats => {
            require_nonempty(train, "training (STATS fitting)")?;
            let model = stats_fit(train)?;
            let have = model.directions();
            let missing: Vec<Direction> = directions_present(windows)
                .into_iter()
                .filter(|d| !have.contains(d))
                .collect();
            if !missing.is_empty() {
                let names: Vec<_> = missing.iter().map(|d| d.as_str()).collect();
                bail!(
                    "STATS has no training samples for direction(s): {}",
                    names.join(", ")
                );
            }
            let preds = windows
                .iter()
                .map(|w| stats_predict(&model, &observed_boxes(w), w.direction))
                .collect::<egoloc::Result<_>>()?;
            Ok(("STATS".into(), None, preds))
        }
        Method::Lr => {
            let preds = windows
                .iter()
                .map(|w| lr_fit_predict(&observed_boxes(w)))
                .collect::<egoloc::Result<_>>()?;
            Ok(("LR".into(), None, preds))
        }
        Method::Learned(path) => {
            let ckpt = Checkpoint::load(path).with_context(|| format!("loading {}", path.display()))?;
            let preds = windows
                .iter()
                .map(|w| ckpt.model.predict(w, &ckpt.norm, seed_mode))
                .collect::<egoloc::Result<_>>()?;
            Ok((checkpoint_variant(&ckpt).label().into(), Some(seed_mode), preds))
        }
        Method::Truth => Ok(("truth".into(), None, windows.iter().map(truth_of).collect())),
    }
}

/// Sorts methods into reporting order: STATS, LR, L-LSTM, LIP-LSTM, truth.
fn ordered(methods: &[Method]) -> Result<Vec<Method>> {
    let mut keyed = Vec::with_capacity(methods.len());
    for m in methods {
        let variant = match m {
            Method::Learned(p) => Some(checkpoint_variant(
                &Checkpoint::load(p).with_context(|| format!("loading {}", p.display()))?,
            )),
            _ => None,
        };
        keyed.push((m.rank(variant), m.clone()));
    }
    keyed.sort_by_key(|(r, _)| *r);
    Ok(keyed.into_iter().map(|(_, m)| m).collect())
}

/// Evaluates `methods` on the test split and writes the text table, the
/// JSONL reports, all predictions and the resolved config into `out`.
pub fn run(cfg: &RunConfig, methods: &[Method], out: &Path) -> Result<Vec<EvalReport>> {
    if methods.is_empty() {
        bail!("nothing to evaluate: pass --baselines, --truth or --checkpoint");
    }
    let data = Dataset::load(cfg.data_root()?, &cfg.data, 2 * OBSERVED_STEPS)?;
    require_nonempty(&data.test, "test")?;
    fs::create_dir_all(out)?;
    cfg.archive(out)?;

    let truths: Vec<_> = data.test.iter().map(truth_of).collect();
    let directions: Vec<_> = data.test.iter().map(|w| w.direction).collect();
    let mut reports = Vec::new();
    let mut records = Vec::new();
    let mut labels: Vec<String> = Vec::new();
    for method in ordered(methods)? {
        let (mut label, seed_mode, preds) = predict_all(&method, &data.train, &data.test, cfg.eval.seed_mode)?;
        let dup = labels.iter().filter(|l| l.starts_with(&label)).count();
        if dup > 0 {
            label = format!("{label}#{}", dup + 1);
        }
        labels.push(label.clone());
        let report = EvalReport::compute(&label, seed_mode.map(SeedMode::as_str), &preds, &truths, &directions)?;
        records.extend(
            data.test
                .iter()
                .zip(&preds)
                .map(|(w, p)| PredictionRecord::new(&label, w, p)),
        );
        reports.push(report);
    }

    let mut table = format_table(&reports);
    table.push('\n');
    table.push_str(&format_per_direction_table(&reports));
    if methods.contains(&Method::Stats) {
        table.push_str("# STATS reads the ground-truth walking direction of each test window.\n");
    }
    fs::write(out.join(REPORT_TABLE), &table)?;
    let jsonl: String = reports.iter().map(|r| r.to_json_line() + "\n").collect();
    fs::write(out.join(REPORT_JSONL), jsonl)?;
    write_records(&out.join(PREDICTIONS), &records)?;
    print!("{table}");
    Ok(reports)
}
