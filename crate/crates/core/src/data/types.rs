use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Frame width in pixels after downsampling.
pub const FRAME_WIDTH: f64 = 455.0;
/// Frame height in pixels after downsampling.
pub const FRAME_HEIGHT: f64 = 256.0;
/// Body keypoints per pose (BODY_25 layout).
pub const NUM_KEYPOINTS: usize = 25;
/// Accelerometer xyz followed by gyroscope xyz.
pub const IMU_CHANNELS: usize = 6;
pub const FPS: f64 = 10.0;
/// Observed plus predicted steps in one sample.
pub const WINDOW_LEN: usize = 20;

/// Axis-aligned box given by its top-left and bottom-right corners, in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BoundingBox {
    pub x1: f64,
    pub y1: f64,
    pub x2: f64,
    pub y2: f64,
}

impl BoundingBox {
    pub const fn new(x1: f64, y1: f64, x2: f64, y2: f64) -> Self {
        Self { x1, y1, x2, y2 }
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        Self::new(a[0], a[1], a[2], a[3])
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.x1, self.y1, self.x2, self.y2]
    }

    pub fn width(&self) -> f64 {
        self.x2 - self.x1
    }

    pub fn height(&self) -> f64 {
        self.y2 - self.y1
    }

    pub fn area(&self) -> f64 {
        self.width().max(0.0) * self.height().max(0.0)
    }

    pub fn center(&self) -> (f64, f64) {
        ((self.x1 + self.x2) / 2.0, (self.y1 + self.y2) / 2.0)
    }

    pub fn translate(&self, dx: f64, dy: f64) -> Self {
        Self::new(self.x1 + dx, self.y1 + dy, self.x2 + dx, self.y2 + dy)
    }

    pub fn scale(&self, k: f64) -> Self {
        Self::new(self.x1 * k, self.y1 * k, self.x2 * k, self.y2 * k)
    }

    /// Clamps the corners into `[0, width] x [0, height]` and restores corner order.
    pub fn clamp(&self, width: f64, height: f64) -> Self {
        let cx = |v: f64| v.clamp(0.0, width);
        let cy = |v: f64| v.clamp(0.0, height);
        let (x1, x2) = (cx(self.x1), cx(self.x2));
        let (y1, y2) = (cy(self.y1), cy(self.y2));
        Self::new(x1.min(x2), y1.min(y2), x1.max(x2), y1.max(y2))
    }

    pub fn is_ordered(&self) -> bool {
        self.x1 <= self.x2 && self.y1 <= self.y2
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }
}

/// Walking direction of the targeted person relative to the camera wearer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Toward,
    Away,
    Across,
    Still,
}

impl Direction {
    pub const ALL: [Direction; 4] = [
        Direction::Toward,
        Direction::Away,
        Direction::Across,
        Direction::Still,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Direction::Toward => "toward",
            Direction::Away => "away",
            Direction::Across => "across",
            Direction::Still => "still",
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Direction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Direction::ALL
            .into_iter()
            .find(|d| d.as_str() == s)
            .ok_or_else(|| Error::config(format!("unknown direction `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Keypoint {
    pub x: f64,
    pub y: f64,
    pub confidence: f64,
}

impl Keypoint {
    pub const MISSING: Keypoint = Keypoint {
        x: 0.0,
        y: 0.0,
        confidence: 0.0,
    };

    pub fn is_detected(&self) -> bool {
        *self != Self::MISSING
    }
}

/// Everything known about the targeted person and the camera at one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameObservation {
    pub frame_index: u64,
    pub bbox: BoundingBox,
    pub pose: [Keypoint; NUM_KEYPOINTS],
    pub imu: [f64; IMU_CHANNELS],
}

/// All frames of one labelled person inside a clip.
#[derive(Debug, Clone, PartialEq)]
pub struct Track {
    pub person_id: u32,
    pub direction: Direction,
    pub frames: Vec<FrameObservation>,
}

/// One recorded clip; the unit of the train/test split.
#[derive(Debug, Clone, PartialEq)]
pub struct Clip {
    pub clip_id: String,
    pub tracks: Vec<Track>,
}

impl Clip {
    pub fn num_frames(&self) -> usize {
        self.tracks.iter().map(|t| t.frames.len()).sum()
    }
}

/// A fixed-length run of consecutive observations used as one sample.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackWindow {
    pub frames: Vec<FrameObservation>,
    pub direction: Direction,
    pub clip_id: String,
    pub person_id: u32,
}

impl TrackWindow {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn start_frame(&self) -> u64 {
        self.frames.first().map_or(0, |f| f.frame_index)
    }

    pub fn end_frame(&self) -> u64 {
        self.frames.last().map_or(0, |f| f.frame_index)
    }

    /// Stable identifier `clip/person/start_frame`.
    pub fn sample_id(&self) -> String {
        format!("{}/{}/{}", self.clip_id, self.person_id, self.start_frame())
    }

    pub fn boxes(&self) -> impl Iterator<Item = BoundingBox> + '_ {
        self.frames.iter().map(|f| f.bbox)
    }
}
