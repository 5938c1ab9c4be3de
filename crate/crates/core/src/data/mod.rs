//! Clip schema, loading, windowing, splitting, normalization and synthesis.

mod io;
mod norm;
mod split;
mod synth;
mod types;
mod window;

pub use io::{
    clip_file_name, load_clip_file, load_clips, write_clips, LoadReport, Manifest, ManifestEntry,
    Split, MANIFEST_FILE,
};
pub use norm::{NormStats, NormalizedWindow};
pub use split::split_by_video;
pub use synth::{
    synth_generate, synth_generate_traced, CameraMotion, ClassCounts, NoiseLevels, PersonMotion,
    SceneSpec, SynthClip,
};
pub use types::*;
pub use window::{expected_window_count, window_samples, window_samples_with_len};
