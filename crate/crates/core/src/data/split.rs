use std::collections::BTreeSet;

use super::types::Clip;
use crate::error::{Error, Result};

/// Partitions clips into `(train, test)` by clip id; every clip lands in exactly one side.
pub fn split_by_video(clips: Vec<Clip>, test_clip_ids: &[String]) -> Result<(Vec<Clip>, Vec<Clip>)> {
    let known: BTreeSet<&str> = clips.iter().map(|c| c.clip_id.as_str()).collect();
    let unknown: Vec<&str> = test_clip_ids
        .iter()
        .map(String::as_str)
        .filter(|id| !known.contains(id))
        .collect();
    if !unknown.is_empty() {
        return Err(Error::config(format!(
            "unknown test clip ids: {}",
            unknown.join(", ")
        )));
    }
    let test_ids: BTreeSet<&str> = test_clip_ids.iter().map(String::as_str).collect();
    Ok(clips
        .into_iter()
        .partition(|c| !test_ids.contains(c.clip_id.as_str())))
}
