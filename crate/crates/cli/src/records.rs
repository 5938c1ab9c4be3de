//! Per-window prediction records shared by `eval`, `predict` and `plot`.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};
use egoloc::data::{BoundingBox, Direction, TrackWindow};
use egoloc::PredictionSet;
use serde::{Deserialize, Serialize};

/// One line of a predictions file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub method: String,
    pub sample_id: String,
    pub direction: Direction,
    /// Offsets of `boxes`, relative to the last observed frame.
    pub offsets: Vec<usize>,
    pub boxes: Vec<[f64; 4]>,
    pub centers: Vec<[f64; 2]>,
}

impl PredictionRecord {
    pub fn new(method: &str, window: &TrackWindow, pred: &PredictionSet) -> Self {
        Self {
            method: method.to_owned(),
            sample_id: window.sample_id(),
            direction: window.direction,
            offsets: (0..pred.len()).map(|i| pred.offset(i)).collect(),
            boxes: pred.boxes.iter().map(|b| b.to_array()).collect(),
            centers: pred.centers.iter().map(|c| [c.0, c.1]).collect(),
        }
    }

    pub fn prediction(&self) -> PredictionSet {
        PredictionSet::from_boxes(self.boxes.iter().map(|b| BoundingBox::from_array(*b)).collect())
    }
}

pub fn write_records(path: &Path, records: &[PredictionRecord]) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut w = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_records(path: &Path) -> Result<Vec<PredictionRecord>> {
    let reader = BufReader::new(File::open(path).with_context(|| format!("opening {}", path.display()))?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).with_context(|| format!("{}:{}", path.display(), i + 1))?);
    }
    Ok(out)
}
