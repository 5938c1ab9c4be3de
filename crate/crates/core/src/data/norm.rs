use serde::{Deserialize, Serialize};

use super::types::*;

/// Coordinate scaling and IMU standardization fitted on the training split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    pub width: f64,
    pub height: f64,
    pub imu_mean: [f64; IMU_CHANNELS],
    pub imu_std: [f64; IMU_CHANNELS],
}

impl Default for NormStats {
    fn default() -> Self {
        Self {
            width: FRAME_WIDTH,
            height: FRAME_HEIGHT,
            imu_mean: [0.0; IMU_CHANNELS],
            imu_std: [1.0; IMU_CHANNELS],
        }
    }
}

/// Model-ready view of a window: boxes and pose in `[0, 1]` frame units,
/// IMU channels z-scored. Confidence is dropped.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedWindow {
    pub boxes: Vec<[f64; 4]>,
    pub imu: Vec<[f64; IMU_CHANNELS]>,
    pub pose: Vec<[f64; 2 * NUM_KEYPOINTS]>,
}

impl NormalizedWindow {
    pub fn len(&self) -> usize {
        self.boxes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.boxes.is_empty()
    }
}

impl NormStats {
    /// Fits IMU statistics over every frame of `windows`.
    ///
    /// Channels with zero variance get a standard deviation of 1.
    pub fn fit<'a>(windows: impl IntoIterator<Item = &'a TrackWindow>) -> Self {
        let samples: Vec<&[f64; IMU_CHANNELS]> = windows
            .into_iter()
            .flat_map(|w| w.frames.iter().map(|f| &f.imu))
            .collect();
        let mut stats = Self::default();
        if samples.is_empty() {
            return stats;
        }
        let n = samples.len() as f64;
        for c in 0..IMU_CHANNELS {
            let mean = samples.iter().map(|s| s[c]).sum::<f64>() / n;
            let var = samples.iter().map(|s| (s[c] - mean).powi(2)).sum::<f64>() / n;
            stats.imu_mean[c] = mean;
            stats.imu_std[c] = if var.sqrt() > 1e-9 * mean.abs().max(1.0) {
                var.sqrt()
            } else {
                1.0
            };
        }
        stats
    }

    pub fn normalize_box(&self, b: &BoundingBox) -> [f64; 4] {
        [
            b.x1 / self.width,
            b.y1 / self.height,
            b.x2 / self.width,
            b.y2 / self.height,
        ]
    }

    pub fn denormalize_box(&self, b: &[f64; 4]) -> BoundingBox {
        BoundingBox::new(
            b[0] * self.width,
            b[1] * self.height,
            b[2] * self.width,
            b[3] * self.height,
        )
    }

    pub fn normalize_imu(&self, imu: &[f64; IMU_CHANNELS]) -> [f64; IMU_CHANNELS] {
        std::array::from_fn(|c| (imu[c] - self.imu_mean[c]) / self.imu_std[c])
    }

    pub fn normalize_pose(&self, pose: &[Keypoint; NUM_KEYPOINTS]) -> [f64; 2 * NUM_KEYPOINTS] {
        let mut out = [0.0; 2 * NUM_KEYPOINTS];
        for (k, kp) in pose.iter().enumerate() {
            out[2 * k] = kp.x / self.width;
            out[2 * k + 1] = kp.y / self.height;
        }
        out
    }

    pub fn denormalize_pose(&self, pose: &[f64; 2 * NUM_KEYPOINTS]) -> [(f64, f64); NUM_KEYPOINTS] {
        std::array::from_fn(|k| (pose[2 * k] * self.width, pose[2 * k + 1] * self.height))
    }

    pub fn normalize(&self, window: &TrackWindow) -> NormalizedWindow {
        NormalizedWindow {
            boxes: window
                .frames
                .iter()
                .map(|f| self.normalize_box(&f.bbox))
                .collect(),
            imu: window
                .frames
                .iter()
                .map(|f| self.normalize_imu(&f.imu))
                .collect(),
            pose: window
                .frames
                .iter()
                .map(|f| self.normalize_pose(&f.pose))
                .collect(),
        }
    }
}
