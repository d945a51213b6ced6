//! Feature file container: `"SPFT"`, then `u32` bins, frames and kind code,
//! then `bins * frames` row-major `f64`, all little-endian.

use std::fs;
use std::path::Path;

use super::{FeatureKind, FeatureMatrix};
use crate::error::{Error, Result};

pub const FEATURE_MAGIC: &[u8; 4] = b"SPFT";
pub const FEATURE_EXTENSION: &str = "spft";

pub fn encode_features(fm: &FeatureMatrix) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + 8 * fm.data().len());
    out.extend_from_slice(FEATURE_MAGIC);
    out.extend_from_slice(&(fm.bins() as u32).to_le_bytes());
    out.extend_from_slice(&(fm.frames() as u32).to_le_bytes());
    out.extend_from_slice(&fm.kind().code().to_le_bytes());
    for v in fm.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_features(bytes: &[u8]) -> Result<FeatureMatrix> {
    if bytes.len() < 16 || &bytes[..4] != FEATURE_MAGIC {
        return Err(Error::InvalidInput("not a feature file (bad magic)".into()));
    }
    let word = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap());
    let (bins, frames, code) = (word(4) as usize, word(8) as usize, word(12));
    let kind = FeatureKind::from_code(code)
        .ok_or_else(|| Error::InvalidInput(format!("unknown feature kind code {code}")))?;
    let expected = 16 + 8 * bins * frames;
    if bytes.len() != expected {
        return Err(Error::InvalidInput(format!(
            "feature file is {} bytes, header implies {expected}",
            bytes.len()
        )));
    }
    let data = bytes[16..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    FeatureMatrix::new(data, bins, frames, kind)
}

pub fn write_features(path: &Path, fm: &FeatureMatrix) -> Result<()> {
    fs::write(path, encode_features(fm)).map_err(|e| Error::io(path, e))
}

pub fn read_features(path: &Path) -> Result<FeatureMatrix> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_features(&bytes)
}
