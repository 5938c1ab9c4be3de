use std::path::Path;

use anyhow::{bail, Context, Result};
use egoloc::data::{clip_file_name, synth_generate, write_clips, Direction, Manifest, ManifestEntry, SceneSpec, Split};

/// Scene description archived beside generated clips.
pub const SCENE_FILE: &str = "scene.toml";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SynthSummary {
    /// Clips written per direction, in [`Direction::ALL`] order.
    pub per_class: Vec<(Direction, usize)>,
    pub test_clips: usize,
}

/// Generates clips for `spec` into `out` with a manifest assigning roughly
/// `test_fraction` of each class to the test split, spread evenly.
pub fn run(spec: &SceneSpec, out: &Path, test_fraction: f64) -> Result<SynthSummary> {
    if !(0.0..=1.0).contains(&test_fraction) {
        bail!("test fraction must lie in [0, 1], got {test_fraction}");
    }
    let clips = synth_generate(spec)?;
    write_clips(out, &clips).with_context(|| format!("writing clips to {}", out.display()))?;

    let mut manifest = Manifest::default();
    let mut per_class = Vec::new();
    let mut test_clips = 0;
    for d in Direction::ALL {
        let of_class: Vec<_> = clips
            .iter()
            .filter(|c| c.tracks.first().map(|t| t.direction) == Some(d))
            .collect();
        for (i, clip) in of_class.iter().enumerate() {
            let is_test = ((i + 1) as f64 * test_fraction + 0.5).floor() > (i as f64 * test_fraction + 0.5).floor();
            test_clips += usize::from(is_test);
            manifest.clips.push(ManifestEntry {
                clip_id: clip.clip_id.clone(),
                file: clip_file_name(&clip.clip_id),
                direction: Some(d),
                split: Some(if is_test { Split::Test } else { Split::Train }),
            });
        }
        per_class.push((d, of_class.len()));
    }
    manifest.write(out)?;
    std::fs::write(out.join(SCENE_FILE), spec.to_toml_string())?;
    Ok(SynthSummary { per_class, test_clips })
}
