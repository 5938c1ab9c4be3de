use super::types::*;
use crate::error::{Error, Result};

/// Sliding windows of [`WINDOW_LEN`] frames over every track of `clip`.
pub fn window_samples(clip: &Clip, stride: usize) -> Result<Vec<TrackWindow>> {
    window_samples_with_len(clip, WINDOW_LEN, stride)
}

/// Sliding windows of `len` consecutive frames.
///
/// Tracks are first cut at frame-index gaps so that no window spans a gap.
/// Windows containing a frame without any detected keypoint are dropped.
pub fn window_samples_with_len(clip: &Clip, len: usize, stride: usize) -> Result<Vec<TrackWindow>> {
    if stride == 0 || len == 0 {
        return Err(Error::config(format!(
            "window length and stride must be at least 1, got {len} / {stride}"
        )));
    }
    let mut out = Vec::new();
    for track in &clip.tracks {
        for run in contiguous_runs(&track.frames) {
            if run.len() < len {
                continue;
            }
            for start in (0..=run.len() - len).step_by(stride) {
                let frames = &run[start..start + len];
                if frames.iter().any(|f| !f.pose.iter().any(Keypoint::is_detected)) {
                    continue;
                }
                out.push(TrackWindow {
                    frames: frames.to_vec(),
                    direction: track.direction,
                    clip_id: clip.clip_id.clone(),
                    person_id: track.person_id,
                });
            }
        }
    }
    Ok(out)
}

/// Closed-form window count for a gap-free track.
pub fn expected_window_count(track_len: usize, len: usize, stride: usize) -> usize {
    if track_len < len {
        0
    } else {
        (track_len - len) / stride + 1
    }
}

fn contiguous_runs(frames: &[FrameObservation]) -> Vec<&[FrameObservation]> {
    let mut runs = Vec::new();
    let mut start = 0;
    for i in 1..=frames.len() {
        if i == frames.len() || frames[i].frame_index != frames[i - 1].frame_index + 1 {
            if i > start {
                runs.push(&frames[start..i]);
            }
            start = i;
        }
    }
    runs
}
