//! Self-describing little-endian checkpoint container.
//!
//! ```text
//! magic   8 bytes  "EGOLOCKP"
//! version u32 LE
//! hlen    u64 LE   length of the JSON header
//! header  hlen bytes UTF-8 JSON (config, normalization, seed, step, tensor directory)
//! body    for each tensor in directory order: value, Adam m, Adam v as f64 LE
//! ```

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::ModelConfig;
use super::model::Seq2Seq;
use crate::data::NormStats;
use crate::error::{Error, Result};
use crate::numerics::{Matrix, Param, ParamStore};

pub const MAGIC: &[u8; 8] = b"EGOLOCKP";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct TensorEntry {
    name: String,
    rows: usize,
    cols: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Header {
    format: String,
    model: ModelConfig,
    norm: NormStats,
    seed: u64,
    step: u64,
    metadata: serde_json::Value,
    tensors: Vec<TensorEntry>,
}

/// Everything needed to resume training or run inference.
#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub model: Seq2Seq,
    pub norm: NormStats,
    pub seed: u64,
    /// Free-form run metadata (training config, variant, ...).
    pub metadata: serde_json::Value,
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Vec<u8> {
        let store = self.model.store();
        let header = Header {
            format: "egoloc-checkpoint".into(),
            model: self.model.config().clone(),
            norm: self.norm.clone(),
            seed: self.seed,
            step: store.step(),
            metadata: self.metadata.clone(),
            tensors: store
                .iter()
                .map(|p| TensorEntry {
                    name: p.name.clone(),
                    rows: p.value.rows(),
                    cols: p.value.cols(),
                })
                .collect(),
        };
        let json = serde_json::to_vec(&header).expect("header serializes");
        let mut out = Vec::with_capacity(24 + json.len() + 24 * store.numel());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&(json.len() as u64).to_le_bytes());
        out.extend_from_slice(&json);
        for p in store.iter() {
            for t in [&p.value, &p.m, &p.v] {
                for v in t.as_slice() {
                    out.extend_from_slice(&v.to_le_bytes());
                }
            }
        }
        out
    }

    pub fn from_bytes(mut bytes: &[u8]) -> Result<Self> {
        let bad = |msg: &str| Error::Checkpoint(msg.to_string());
        let mut magic = [0u8; 8];
        bytes.read_exact(&mut magic).map_err(|_| bad("truncated magic"))?;
        if &magic != MAGIC {
            return Err(bad("not an egoloc checkpoint"));
        }
        let mut word = [0u8; 4];
        bytes.read_exact(&mut word).map_err(|_| bad("truncated version"))?;
        let version = u32::from_le_bytes(word);
        if version != FORMAT_VERSION {
            return Err(Error::Checkpoint(format!(
                "unsupported version {version}, expected {FORMAT_VERSION}"
            )));
        }
        let mut len = [0u8; 8];
        bytes.read_exact(&mut len).map_err(|_| bad("truncated header length"))?;
        let hlen = u64::from_le_bytes(len) as usize;
        if bytes.len() < hlen {
            return Err(bad("truncated header"));
        }
        let header: Header = serde_json::from_slice(&bytes[..hlen])
            .map_err(|e| Error::Checkpoint(format!("header: {e}")))?;
        bytes = &bytes[hlen..];

        let mut read_matrix = |rows: usize, cols: usize| -> Result<Matrix> {
            let n = rows * cols;
            if bytes.len() < 8 * n {
                return Err(bad("truncated tensor data"));
            }
            let data = bytes[..8 * n]
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
                .collect();
            bytes = &bytes[8 * n..];
            Matrix::from_vec(rows, cols, data)
        };
        let mut params = Vec::with_capacity(header.tensors.len());
        for t in &header.tensors {
            let value = read_matrix(t.rows, t.cols)?;
            let m = read_matrix(t.rows, t.cols)?;
            let v = read_matrix(t.rows, t.cols)?;
            params.push(Param {
                name: t.name.clone(),
                grad: Matrix::zeros(t.rows, t.cols),
                value,
                m,
                v,
            });
        }
        if !bytes.is_empty() {
            return Err(bad("trailing bytes after tensor data"));
        }
        let store = ParamStore::from_parts(params, header.step)?;
        Ok(Self {
            model: Seq2Seq::from_store(header.model, store)?,
            norm: header.norm,
            seed: header.seed,
            metadata: header.metadata,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut f = fs::File::create(path)?;
        f.write_all(&self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_bytes(&fs::read(path)?)
    }
}
