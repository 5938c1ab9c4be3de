use serde::{Deserialize, Serialize};

use crate::data::BoundingBox;

/// First future offset (relative to the last observed frame) that predictors report.
pub const FIRST_REPORTED_OFFSET: usize = 2;

/// Predicted boxes for offsets `+2 ..= +t_pred` and their centers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionSet {
    pub boxes: Vec<BoundingBox>,
    pub centers: Vec<(f64, f64)>,
}

impl PredictionSet {
    pub fn from_boxes(boxes: Vec<BoundingBox>) -> Self {
        let centers = boxes.iter().map(BoundingBox::center).collect();
        Self { boxes, centers }
    }

    pub fn len(&self) -> usize {
        self.boxes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.boxes.is_empty()
    }

    /// Offset (relative to the last observed frame) of `boxes[i]`.
    pub fn offset(&self, i: usize) -> usize {
        i + FIRST_REPORTED_OFFSET
    }

    pub fn final_box(&self) -> Option<&BoundingBox> {
        self.boxes.last()
    }
}
