//! Loading clips, splitting by video and cutting windows.

use std::path::Path;

use anyhow::{bail, Context, Result};
use egoloc::data::{
    load_clips, split_by_video, window_samples_with_len, Clip, Direction, Manifest, Split, TrackWindow, MANIFEST_FILE,
};

use crate::config::DataConfig;

#[derive(Debug, Clone)]
pub struct Dataset {
    pub train: Vec<TrackWindow>,
    pub test: Vec<TrackWindow>,
}

impl Dataset {
    /// Loads `root`, splits by clip, and cuts windows of `window_len` frames.
    ///
    /// The split comes from `cfg.test_clips` when given, else from the
    /// manifest; without either, every clip is training data.
    pub fn load(root: &Path, cfg: &DataConfig, window_len: usize) -> Result<Self> {
        let (clips, report) = load_clips(root).with_context(|| format!("loading clips from {}", root.display()))?;
        log::info!(
            "loaded {} clips, {} tracks, {} frames from {}",
            report.clips,
            report.tracks,
            report.frames,
            root.display()
        );
        let test_ids = if !cfg.test_clips.is_empty() {
            cfg.test_clips.clone()
        } else if root.join(MANIFEST_FILE).exists() {
            Manifest::load(root)?.clip_ids(Split::Test)
        } else {
            Vec::new()
        };
        let (train_clips, test_clips) = split_by_video(clips, &test_ids)?;
        let mut train = windows(&train_clips, cfg.stride, window_len)?;
        let test = windows(&test_clips, cfg.stride, window_len)?;
        if !cfg.directions.is_empty() {
            train.retain(|w| cfg.directions.contains(&w.direction));
        }
        if let Some(n) = cfg.max_windows {
            train.truncate(n);
        }
        Ok(Self { train, test })
    }
}

fn windows(clips: &[Clip], stride: usize, len: usize) -> Result<Vec<TrackWindow>> {
    let mut out = Vec::new();
    for c in clips {
        out.extend(window_samples_with_len(c, len, stride)?);
    }
    Ok(out)
}

pub fn require_nonempty(windows: &[TrackWindow], what: &str) -> Result<()> {
    if windows.is_empty() {
        bail!("{what} split has no windows");
    }
    Ok(())
}

/// Directions present in `windows`, in canonical order.
pub fn directions_present(windows: &[TrackWindow]) -> Vec<Direction> {
    Direction::ALL
        .into_iter()
        .filter(|d| windows.iter().any(|w| w.direction == *d))
        .collect()
}
