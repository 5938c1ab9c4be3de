//! Box-overlap and center-distance metrics over offsets `+2 ..= +10`, in pixels.

mod report;

pub use report::{format_per_direction_table, format_table, per_offset_iou, EvalReport, MetricCell, COORDINATE_SPACE};

use crate::data::BoundingBox;
use crate::error::{Error, Result};
use crate::prediction::PredictionSet;

/// Number of offsets every evaluated sample must carry (`+2 ..= +10`).
pub const REPORTED_STEPS: usize = 9;

/// Intersection over union. Inverted extents count as zero width or height;
/// a zero-area union gives 0.
pub fn iou(a: &BoundingBox, b: &BoundingBox) -> f64 {
    let iw = (a.x2.min(b.x2) - a.x1.max(b.x1)).max(0.0);
    let ih = (a.y2.min(b.y2) - a.y1.max(b.y1)).max(0.0);
    let inter = iw * ih;
    let area = |r: &BoundingBox| (r.x2 - r.x1).max(0.0) * (r.y2 - r.y1).max(0.0);
    let union = area(a) + area(b) - inter;
    if union <= 0.0 {
        0.0
    } else {
        inter / union
    }
}

fn check_aligned(preds: &[PredictionSet], truths: &[PredictionSet]) -> Result<()> {
    if preds.len() != truths.len() {
        return Err(Error::contract(format!(
            "{} predictions for {} ground-truth samples",
            preds.len(),
            truths.len()
        )));
    }
    if preds.is_empty() {
        return Err(Error::contract("no samples to evaluate"));
    }
    for (i, (p, t)) in preds.iter().zip(truths).enumerate() {
        if p.is_empty() || p.len() != t.len() || p.centers.len() != p.len() || t.centers.len() != t.len() {
            return Err(Error::contract(format!(
                "sample {i}: {} predicted vs {} true offsets",
                p.len(),
                t.len()
            )));
        }
    }
    Ok(())
}

/// Mean IoU over every sample and every reported offset.
pub fn mean_iou(preds: &[PredictionSet], truths: &[PredictionSet]) -> Result<f64> {
    check_aligned(preds, truths)?;
    let mut sum = 0.0;
    let mut n = 0usize;
    for (p, t) in preds.iter().zip(truths) {
        for (a, b) in p.boxes.iter().zip(&t.boxes) {
            sum += iou(a, b);
            n += 1;
        }
    }
    Ok(sum / n as f64)
}

/// Mean IoU of the last offset only.
pub fn mean_final_iou(preds: &[PredictionSet], truths: &[PredictionSet]) -> Result<f64> {
    check_aligned(preds, truths)?;
    let sum: f64 = preds
        .iter()
        .zip(truths)
        .map(|(p, t)| iou(p.final_box().expect("non-empty"), t.final_box().expect("non-empty")))
        .sum();
    Ok(sum / preds.len() as f64)
}

/// Mean Euclidean distance between predicted and true centers, in pixels.
pub fn mean_de(preds: &[PredictionSet], truths: &[PredictionSet]) -> Result<f64> {
    check_aligned(preds, truths)?;
    let mut sum = 0.0;
    let mut n = 0usize;
    for (p, t) in preds.iter().zip(truths) {
        for (a, b) in p.centers.iter().zip(&t.centers) {
            sum += (a.0 - b.0).hypot(a.1 - b.1);
            n += 1;
        }
    }
    Ok(sum / n as f64)
}
