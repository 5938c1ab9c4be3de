use serde::{Deserialize, Serialize};

use super::{HORIZON, OBSERVED_STEPS};
use crate::data::{BoundingBox, Direction, TrackWindow};
use crate::error::{Error, Result};
use crate::prediction::PredictionSet;

/// Average displacement of future boxes from the running mean location, for one direction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionDisplacement {
    pub direction: Direction,
    pub count: usize,
    /// Row `k` is offset `+(k + 1)`; columns are `x1, y1, x2, y2`.
    pub rows: Vec<[f64; 4]>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DisplacementModel {
    /// One entry per direction seen in training, in [`Direction::ALL`] order.
    pub entries: Vec<DirectionDisplacement>,
}

impl DisplacementModel {
    pub fn get(&self, direction: Direction) -> Option<&DirectionDisplacement> {
        self.entries.iter().find(|e| e.direction == direction)
    }

    pub fn directions(&self) -> Vec<Direction> {
        self.entries.iter().map(|e| e.direction).collect()
    }

    /// All `HORIZON` boxes, offsets `+1 ..= +10`, each computed from the mean
    /// of every earlier box including earlier predictions.
    pub fn predict_all(&self, observed: &[BoundingBox], direction: Direction) -> Result<Vec<BoundingBox>> {
        let entry = self
            .get(direction)
            .ok_or_else(|| Error::UnsupportedDirection(direction.to_string()))?;
        if observed.len() != OBSERVED_STEPS {
            return Err(Error::contract(format!(
                "STATS needs {OBSERVED_STEPS} observed boxes, got {}",
                observed.len()
            )));
        }
        let mut history: Vec<[f64; 4]> = observed.iter().map(|b| b.to_array()).collect();
        let mut out = Vec::with_capacity(HORIZON);
        for row in &entry.rows {
            let mean = mean_location(&history);
            let next = [0, 1, 2, 3].map(|c| mean[c] + row[c]);
            history.push(next);
            out.push(BoundingBox::from_array(next));
        }
        Ok(out)
    }
}

/// Column means, summed front to back.
fn mean_location(boxes: &[[f64; 4]]) -> [f64; 4] {
    let mut sum = [0.0; 4];
    for b in boxes {
        for c in 0..4 {
            sum[c] += b[c];
        }
    }
    sum.map(|s| s / boxes.len() as f64)
}

/// Displacement matrix of one window using true locations throughout.
fn displacement_matrix(boxes: &[[f64; 4]]) -> Vec<[f64; 4]> {
    (OBSERVED_STEPS..OBSERVED_STEPS + HORIZON)
        .map(|t| {
            let mean = mean_location(&boxes[..t]);
            [0, 1, 2, 3].map(|c| boxes[t][c] - mean[c])
        })
        .collect()
}

/// Per-direction mean displacement matrices. Directions without samples are omitted.
pub fn stats_fit<'a>(windows: impl IntoIterator<Item = &'a TrackWindow>) -> Result<DisplacementModel> {
    let mut sums: Vec<(usize, Vec<[f64; 4]>)> = Direction::ALL
        .iter()
        .map(|_| (0, vec![[0.0; 4]; HORIZON]))
        .collect();
    for w in windows {
        if w.len() < OBSERVED_STEPS + HORIZON {
            return Err(Error::contract(format!(
                "window `{}` has {} frames, STATS needs {}",
                w.sample_id(),
                w.len(),
                OBSERVED_STEPS + HORIZON
            )));
        }
        let boxes: Vec<[f64; 4]> = w.boxes().map(BoundingBox::to_array).collect();
        let m = displacement_matrix(&boxes);
        let slot = &mut sums[direction_index(w.direction)];
        slot.0 += 1;
        for (acc, row) in slot.1.iter_mut().zip(&m) {
            for c in 0..4 {
                acc[c] += row[c];
            }
        }
    }
    let entries = Direction::ALL
        .iter()
        .zip(sums)
        .filter(|(_, (n, _))| *n > 0)
        .map(|(&direction, (count, rows))| DirectionDisplacement {
            direction,
            count,
            rows: rows.into_iter().map(|r| r.map(|v| v / count as f64)).collect(),
        })
        .collect();
    Ok(DisplacementModel { entries })
}

fn direction_index(d: Direction) -> usize {
    Direction::ALL.iter().position(|&x| x == d).expect("listed")
}

/// Offsets `+2 ..= +10` predicted from 10 observed boxes and the (oracle) direction label.
pub fn stats_predict(model: &DisplacementModel, observed: &[BoundingBox], direction: Direction) -> Result<PredictionSet> {
    let all = model.predict_all(observed, direction)?;
    Ok(PredictionSet::from_boxes(all[1..].to_vec()))
}
