use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use egoloc::baselines::OBSERVED_STEPS;
use egoloc::data::{BoundingBox, TrackWindow, FRAME_HEIGHT, FRAME_WIDTH};
use image::{Rgb, RgbImage};

use crate::config::RunConfig;
use crate::dataset::Dataset;
use crate::records::{read_records, PredictionRecord};

/// Offsets whose boxes are drawn.
pub const PLOTTED_OFFSETS: [usize; 2] = [5, 10];

const BACKGROUND: Rgb<u8> = Rgb([24, 24, 28]);
const OBSERVED: Rgb<u8> = Rgb([120, 120, 120]);
const TRUTH: Rgb<u8> = Rgb([245, 245, 245]);
const PALETTE: [Rgb<u8>; 6] = [
    Rgb([230, 80, 60]),
    Rgb([250, 190, 40]),
    Rgb([70, 170, 250]),
    Rgb([90, 220, 110]),
    Rgb([200, 100, 230]),
    Rgb([60, 220, 210]),
];

/// Renders one overlay per sample that appears in `prediction_files` and in
/// the dataset. Returns the written image paths in sample order.
pub fn run(cfg: &RunConfig, prediction_files: &[PathBuf], out: &Path, limit: Option<usize>) -> Result<Vec<PathBuf>> {
    let mut records = Vec::new();
    for f in prediction_files {
        records.extend(read_records(f)?);
    }
    let mut methods: Vec<String> = Vec::new();
    let mut by_sample: BTreeMap<String, Vec<PredictionRecord>> = BTreeMap::new();
    for r in records {
        if !methods.contains(&r.method) {
            methods.push(r.method.clone());
        }
        by_sample.entry(r.sample_id.clone()).or_default().push(r);
    }
    if by_sample.is_empty() {
        return Ok(Vec::new());
    }

    let data = Dataset::load(cfg.data_root()?, &cfg.data, 2 * OBSERVED_STEPS)?;
    let windows: BTreeMap<String, &TrackWindow> = data
        .train
        .iter()
        .chain(&data.test)
        .map(|w| (w.sample_id(), w))
        .collect();

    fs::create_dir_all(out)?;
    let mut written = Vec::new();
    for (sample_id, recs) in &by_sample {
        if limit.is_some_and(|n| written.len() >= n) {
            break;
        }
        let Some(window) = windows.get(sample_id) else {
            log::warn!("sample `{sample_id}` not found in the dataset; skipped");
            continue;
        };
        let img = render(window, recs, &methods);
        let path = out.join(format!("{}.png", sample_id.replace('/', "_")));
        img.save(&path).with_context(|| format!("writing {}", path.display()))?;
        written.push(path);
    }
    Ok(written)
}

/// Truth and every method's trajectory, with boxes at [`PLOTTED_OFFSETS`].
pub fn render(window: &TrackWindow, records: &[PredictionRecord], methods: &[String]) -> RgbImage {
    let mut img = RgbImage::from_pixel(FRAME_WIDTH as u32, FRAME_HEIGHT as u32, BACKGROUND);
    let clamp = |b: BoundingBox| b.clamp(FRAME_WIDTH, FRAME_HEIGHT);
    let observed: Vec<(f64, f64)> = window.frames[..OBSERVED_STEPS].iter().map(|f| f.bbox.center()).collect();
    polyline(&mut img, &observed, OBSERVED);

    let truth_at = |k: usize| window.frames.get(OBSERVED_STEPS - 1 + k).map(|f| f.bbox);
    let truth_path: Vec<_> = (1..=10).filter_map(truth_at).map(|b| clamp(b).center()).collect();
    polyline(&mut img, &truth_path, TRUTH);
    for k in PLOTTED_OFFSETS {
        if let Some(b) = truth_at(k) {
            rectangle(&mut img, &clamp(b), TRUTH);
        }
    }

    for r in records {
        let idx = methods.iter().position(|m| *m == r.method).unwrap_or(0);
        let color = PALETTE[idx % PALETTE.len()];
        let path: Vec<_> = r
            .boxes
            .iter()
            .map(|b| clamp(BoundingBox::from_array(*b)).center())
            .collect();
        polyline(&mut img, &path, color);
        for k in PLOTTED_OFFSETS {
            if let Some(i) = r.offsets.iter().position(|&o| o == k) {
                rectangle(&mut img, &clamp(BoundingBox::from_array(r.boxes[i])), color);
            }
        }
    }
    img
}

fn put(img: &mut RgbImage, x: i64, y: i64, c: Rgb<u8>) {
    if x >= 0 && y >= 0 && (x as u32) < img.width() && (y as u32) < img.height() {
        img.put_pixel(x as u32, y as u32, c);
    }
}

/// Bresenham segment between pixel centers.
fn line(img: &mut RgbImage, a: (f64, f64), b: (f64, f64), c: Rgb<u8>) {
    let (mut x0, mut y0) = (a.0.round() as i64, a.1.round() as i64);
    let (x1, y1) = (b.0.round() as i64, b.1.round() as i64);
    let dx = (x1 - x0).abs();
    let dy = -(y1 - y0).abs();
    let sx = if x0 < x1 { 1 } else { -1 };
    let sy = if y0 < y1 { 1 } else { -1 };
    let mut err = dx + dy;
    loop {
        put(img, x0, y0, c);
        if x0 == x1 && y0 == y1 {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x0 += sx;
        }
        if e2 <= dx {
            err += dx;
            y0 += sy;
        }
    }
}

fn polyline(img: &mut RgbImage, pts: &[(f64, f64)], c: Rgb<u8>) {
    for w in pts.windows(2) {
        line(img, w[0], w[1], c);
    }
    for p in pts {
        for (dx, dy) in [(0, 0), (1, 0), (-1, 0), (0, 1), (0, -1)] {
            put(img, p.0.round() as i64 + dx, p.1.round() as i64 + dy, c);
        }
    }
}

fn rectangle(img: &mut RgbImage, b: &BoundingBox, c: Rgb<u8>) {
    let max_x = FRAME_WIDTH - 1.0;
    let max_y = FRAME_HEIGHT - 1.0;
    let (x1, y1) = (b.x1.min(max_x), b.y1.min(max_y));
    let (x2, y2) = (b.x2.min(max_x), b.y2.min(max_y));
    line(img, (x1, y1), (x2, y1), c);
    line(img, (x2, y1), (x2, y2), c);
    line(img, (x2, y2), (x1, y2), c);
    line(img, (x1, y2), (x1, y1), c);
}
