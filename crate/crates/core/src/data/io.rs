//! Line-delimited clip files and the dataset manifest.
//!
//! Each clip lives in `<clip_id>.jsonl`, one frame record per line:
//!
//! ```text
//! {"frame_index":0,"box":[x1,y1,x2,y2],"pose":[[x,y,c],...25],"imu":[ax,ay,az,gx,gy,gz],"person_id":0,"direction":"away","clip_id":"c0000"}
//! ```
//!
//! `manifest.json` lists every clip file and its split assignment.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::types::*;
use crate::error::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const CLIP_EXTENSION: &str = "jsonl";

#[derive(Debug, Serialize, Deserialize)]
struct FrameRecord {
    frame_index: u64,
    #[serde(rename = "box")]
    bbox: [f64; 4],
    pose: Vec<[f64; 3]>,
    imu: Vec<f64>,
    person_id: u32,
    direction: Direction,
    clip_id: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub clip_id: String,
    pub file: String,
    pub direction: Option<Direction>,
    pub split: Option<Split>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Manifest {
    pub clips: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST_FILE);
        let text = fs::read_to_string(&path)?;
        serde_json::from_str(&text).map_err(|e| Error::Parse {
            path,
            line: e.line(),
            msg: e.to_string(),
        })
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self).expect("manifest serializes");
        text.push('\n');
        fs::write(dir.join(MANIFEST_FILE), text)?;
        Ok(())
    }

    pub fn clip_ids(&self, split: Split) -> Vec<String> {
        self.clips
            .iter()
            .filter(|e| e.split == Some(split))
            .map(|e| e.clip_id.clone())
            .collect()
    }
}

/// Counts gathered while loading.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct LoadReport {
    pub clips: usize,
    pub tracks: usize,
    pub frames: usize,
}

pub fn clip_file_name(clip_id: &str) -> String {
    format!("{clip_id}.{CLIP_EXTENSION}")
}

/// Writes one file per clip. Existing files with the same names are replaced.
pub fn write_clips(dir: &Path, clips: &[Clip]) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut paths = Vec::with_capacity(clips.len());
    for clip in clips {
        let path = dir.join(clip_file_name(&clip.clip_id));
        let mut w = BufWriter::new(File::create(&path)?);
        for track in &clip.tracks {
            for f in &track.frames {
                let rec = FrameRecord {
                    frame_index: f.frame_index,
                    bbox: f.bbox.to_array(),
                    pose: f.pose.iter().map(|k| [k.x, k.y, k.confidence]).collect(),
                    imu: f.imu.to_vec(),
                    person_id: track.person_id,
                    direction: track.direction,
                    clip_id: clip.clip_id.clone(),
                };
                serde_json::to_writer(&mut w, &rec).map_err(std::io::Error::from)?;
                w.write_all(b"\n")?;
            }
        }
        w.flush()?;
        paths.push(path);
    }
    Ok(paths)
}

/// Loads every `*.jsonl` clip in `dir`, in file-name order.
pub fn load_clips(dir: &Path) -> Result<(Vec<Clip>, LoadReport)> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == CLIP_EXTENSION))
        .collect();
    files.sort();

    let mut report = LoadReport::default();
    let mut clips = Vec::with_capacity(files.len());
    for path in files {
        let clip = load_clip_file(&path)?;
        report.clips += 1;
        report.tracks += clip.tracks.len();
        report.frames += clip.num_frames();
        clips.push(clip);
    }
    Ok((clips, report))
}

pub fn load_clip_file(path: &Path) -> Result<Clip> {
    let reader = BufReader::new(File::open(path)?);
    let default_id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let mut clip_id: Option<String> = None;
    let mut tracks: Vec<Track> = Vec::new();
    let mut by_person: BTreeMap<u32, usize> = BTreeMap::new();

    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parse_err = |msg: String| Error::Parse {
            path: path.to_path_buf(),
            line: lineno + 1,
            msg,
        };
        let rec: FrameRecord = serde_json::from_str(&line).map_err(|e| parse_err(e.to_string()))?;
        match &clip_id {
            None => clip_id = Some(rec.clip_id.clone()),
            Some(id) if *id != rec.clip_id => {
                return Err(parse_err(format!(
                    "clip_id `{}` differs from `{id}` earlier in the file",
                    rec.clip_id
                )))
            }
            _ => {}
        }
        let frame = validate_record(&rec)?;
        let idx = *by_person.entry(rec.person_id).or_insert_with(|| {
            tracks.push(Track {
                person_id: rec.person_id,
                direction: rec.direction,
                frames: Vec::new(),
            });
            tracks.len() - 1
        });
        let track = &mut tracks[idx];
        let invalid = |field, msg: String| Error::Validation {
            clip_id: rec.clip_id.clone(),
            frame_index: rec.frame_index,
            field,
            msg,
        };
        if track.direction != rec.direction {
            return Err(invalid(
                "direction",
                format!(
                    "person {} labelled `{}` earlier, `{}` here",
                    rec.person_id, track.direction, rec.direction
                ),
            ));
        }
        if let Some(prev) = track.frames.last() {
            if prev.frame_index >= rec.frame_index {
                return Err(invalid(
                    "frame_index",
                    format!("not increasing after frame {}", prev.frame_index),
                ));
            }
        }
        track.frames.push(frame);
    }

    Ok(Clip {
        clip_id: clip_id.unwrap_or(default_id),
        tracks,
    })
}

fn validate_record(rec: &FrameRecord) -> Result<FrameObservation> {
    let invalid = |field, msg: String| Error::Validation {
        clip_id: rec.clip_id.clone(),
        frame_index: rec.frame_index,
        field,
        msg,
    };
    let bbox = BoundingBox::from_array(rec.bbox);
    if !bbox.is_finite() {
        return Err(invalid("box", "non-finite coordinate".into()));
    }
    if bbox.x1 > bbox.x2 {
        return Err(invalid("box", format!("x1 {} > x2 {}", bbox.x1, bbox.x2)));
    }
    if bbox.y1 > bbox.y2 {
        return Err(invalid("box", format!("y1 {} > y2 {}", bbox.y1, bbox.y2)));
    }
    if bbox.x1 < 0.0 || bbox.y1 < 0.0 || bbox.x2 > FRAME_WIDTH || bbox.y2 > FRAME_HEIGHT {
        return Err(invalid(
            "box",
            format!("{:?} outside the {FRAME_WIDTH}x{FRAME_HEIGHT} frame", rec.bbox),
        ));
    }
    if rec.pose.len() != NUM_KEYPOINTS {
        return Err(invalid(
            "pose",
            format!("expected {NUM_KEYPOINTS} keypoints, found {}", rec.pose.len()),
        ));
    }
    let mut pose = [Keypoint::MISSING; NUM_KEYPOINTS];
    for (k, (dst, [x, y, c])) in pose.iter_mut().zip(&rec.pose).enumerate() {
        if !(x.is_finite() && y.is_finite()) || !(0.0..=1.0).contains(c) {
            return Err(invalid("pose", format!("keypoint {k} is ({x}, {y}, {c})")));
        }
        *dst = Keypoint {
            x: *x,
            y: *y,
            confidence: *c,
        };
    }
    let imu: [f64; IMU_CHANNELS] = rec.imu.as_slice().try_into().map_err(|_| {
        invalid(
            "imu",
            format!("expected {IMU_CHANNELS} channels, found {}", rec.imu.len()),
        )
    })?;
    if imu.iter().any(|v| !v.is_finite()) {
        return Err(invalid("imu", "non-finite channel".into()));
    }
    Ok(FrameObservation {
        frame_index: rec.frame_index,
        bbox,
        pose,
        imu,
    })
}
