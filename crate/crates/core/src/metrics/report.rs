use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{iou, mean_de, mean_final_iou, mean_iou, REPORTED_STEPS};
use crate::data::Direction;
use crate::error::{Error, Result};
use crate::prediction::PredictionSet;

pub const COORDINATE_SPACE: &str = "pixels of the 455x256 frame, offsets +2..+10";

/// Metrics over one group of samples. Metric fields are `None` when `count` is 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricCell {
    pub count: usize,
    pub mean_iou: Option<f64>,
    pub mean_final_iou: Option<f64>,
    pub mean_de: Option<f64>,
}

impl MetricCell {
    fn compute(preds: &[PredictionSet], truths: &[PredictionSet]) -> Result<Self> {
        if preds.is_empty() {
            return Ok(Self {
                count: 0,
                mean_iou: None,
                mean_final_iou: None,
                mean_de: None,
            });
        }
        Ok(Self {
            count: preds.len(),
            mean_iou: Some(mean_iou(preds, truths)?),
            mean_final_iou: Some(mean_final_iou(preds, truths)?),
            mean_de: Some(mean_de(preds, truths)?),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub method: String,
    /// Decoder seeding used by learned models; `None` for closed-form baselines.
    pub seed_mode: Option<String>,
    pub coordinate_space: String,
    pub overall: MetricCell,
    /// One cell per direction, in [`Direction::ALL`] order.
    pub per_direction: Vec<(Direction, MetricCell)>,
}

impl EvalReport {
    /// Aggregate and per-direction metrics. Every sample must carry exactly
    /// [`REPORTED_STEPS`] offsets.
    pub fn compute(
        method: impl Into<String>,
        seed_mode: Option<&str>,
        preds: &[PredictionSet],
        truths: &[PredictionSet],
        directions: &[Direction],
    ) -> Result<Self> {
        if directions.len() != preds.len() {
            return Err(Error::contract(format!(
                "{} direction labels for {} samples",
                directions.len(),
                preds.len()
            )));
        }
        for (i, (p, t)) in preds.iter().zip(truths).enumerate() {
            if p.len() != REPORTED_STEPS || t.len() != REPORTED_STEPS {
                return Err(Error::contract(format!(
                    "sample {i} must cover offsets +2..+10 ({REPORTED_STEPS} boxes), got {} predicted / {} true",
                    p.len(),
                    t.len()
                )));
            }
        }
        let overall = MetricCell::compute(preds, truths)?;
        let mut per_direction = Vec::with_capacity(Direction::ALL.len());
        for &d in &Direction::ALL {
            let idx: Vec<usize> = (0..preds.len()).filter(|&i| directions[i] == d).collect();
            let p: Vec<_> = idx.iter().map(|&i| preds[i].clone()).collect();
            let t: Vec<_> = idx.iter().map(|&i| truths[i].clone()).collect();
            per_direction.push((d, MetricCell::compute(&p, &t)?));
        }
        Ok(Self {
            method: method.into(),
            seed_mode: seed_mode.map(str::to_owned),
            coordinate_space: COORDINATE_SPACE.to_owned(),
            overall,
            per_direction,
        })
    }

    pub fn cell(&self, direction: Direction) -> &MetricCell {
        &self
            .per_direction
            .iter()
            .find(|(d, _)| *d == direction)
            .expect("all directions present")
            .1
    }

    /// One JSON object on a single line.
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }
}

/// Per-sample IoU at each offset; handy for plots and debugging.
pub fn per_offset_iou(pred: &PredictionSet, truth: &PredictionSet) -> Vec<f64> {
    pred.boxes.iter().zip(&truth.boxes).map(|(a, b)| iou(a, b)).collect()
}

fn fmt_opt(v: Option<f64>, prec: usize) -> String {
    v.map_or_else(|| "-".to_owned(), |x| format!("{x:.prec$}"))
}

/// Overall results, one row per method.
pub fn format_table(reports: &[EvalReport]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# coordinate space: {COORDINATE_SPACE}");
    let _ = writeln!(
        s,
        "{:<12} {:>8} {:>10} {:>16} {:>10}  seed mode",
        "Method", "Samples", "Mean IOU", "Mean Final IOU", "Mean DE"
    );
    for r in reports {
        let c = &r.overall;
        let _ = writeln!(
            s,
            "{:<12} {:>8} {:>10} {:>16} {:>10}  {}",
            r.method,
            c.count,
            fmt_opt(c.mean_iou, 3),
            fmt_opt(c.mean_final_iou, 3),
            fmt_opt(c.mean_de, 1),
            r.seed_mode.as_deref().unwrap_or("-")
        );
    }
    s
}

/// Results broken down by walking direction, one block per metric.
pub fn format_per_direction_table(reports: &[EvalReport]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# coordinate space: {COORDINATE_SPACE}");
    let metrics: [(&str, fn(&MetricCell) -> Option<f64>, usize); 3] = [
        ("Mean IOU", |c| c.mean_iou, 3),
        ("Mean Final IOU", |c| c.mean_final_iou, 3),
        ("Mean DE", |c| c.mean_de, 1),
    ];
    for (name, get, prec) in metrics {
        let _ = write!(s, "{name:<16}");
        for d in Direction::ALL {
            let _ = write!(s, " {:>10}", d.as_str());
        }
        let _ = writeln!(s);
        for r in reports {
            let _ = write!(s, "{:<16}", r.method);
            for d in Direction::ALL {
                let _ = write!(s, " {:>10}", fmt_opt(get(r.cell(d)), prec));
            }
            let _ = writeln!(s);
        }
        let _ = writeln!(s);
    }
    let _ = write!(s, "{:<16}", "samples");
    if let Some(r) = reports.first() {
        for d in Direction::ALL {
            let _ = write!(s, " {:>10}", r.cell(d).count);
        }
    }
    let _ = writeln!(s);
    s
}
