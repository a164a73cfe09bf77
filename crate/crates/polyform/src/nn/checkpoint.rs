//! Checkpoint format: one JSON header line describing the architecture,
//! then the raw model state as little-endian f64s in declaration order.

use crate::nn::model::{Model, ModelConfig};
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad header: {0}")]
    Header(#[from] serde_json::Error),
    #[error("state blob has {got} values, model needs {want}")]
    LengthMismatch { got: usize, want: usize },
    #[error("non-finite value in state blob at index {0}")]
    NonFinite(usize),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub config: ModelConfig,
    pub model_seed: u64,
}

pub fn save_checkpoint(path: &Path, model: &Model, model_seed: u64) -> Result<(), CheckpointError> {
    let header = CheckpointHeader {
        config: model.config.clone(),
        model_seed,
    };
    let mut model = model.clone();
    let mut buf = serde_json::to_vec(&header)?;
    buf.push(b'\n');
    for slice in model.state_slices() {
        for v in slice.iter() {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    // atomic replace: write a sibling temp file, then rename
    let tmp = path.with_extension("tmp");
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(&buf)?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<(Model, CheckpointHeader), CheckpointError> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    let newline = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| std::io::Error::new(std::io::ErrorKind::InvalidData, "missing header"))?;
    let header: CheckpointHeader = serde_json::from_slice(&bytes[..newline])?;
    let blob = &bytes[newline + 1..];
    if blob.len() % 8 != 0 {
        return Err(CheckpointError::Io(std::io::Error::new(
            std::io::ErrorKind::InvalidData,
            "state blob not a whole number of f64s",
        )));
    }
    let values: Vec<f64> = blob
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(CheckpointError::NonFinite(i));
    }
    let mut model = Model::init(header.config.clone(), header.model_seed);
    let want: usize = model.state_slices().iter().map(|s| s.len()).sum();
    if values.len() != want {
        return Err(CheckpointError::LengthMismatch {
            got: values.len(),
            want,
        });
    }
    let mut off = 0;
    for slice in model.state_slices() {
        slice.copy_from_slice(&values[off..off + slice.len()]);
        off += slice.len();
    }
    Ok((model, header))
}
