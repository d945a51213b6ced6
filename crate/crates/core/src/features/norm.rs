use super::FeatureMatrix;
use crate::error::{Error, Result};

/// Per-row mean and variance normalization over time. Rows with zero
/// variance are only mean-subtracted.
pub fn cmvn(fm: &FeatureMatrix) -> Result<FeatureMatrix> {
    let frames = fm.frames();
    if frames < 2 {
        return Err(Error::InvalidInput("CMVN needs at least two frames".into()));
    }
    let mut data = Vec::with_capacity(fm.data().len());
    for b in 0..fm.bins() {
        let row = fm.row(b);
        let mean = row.iter().sum::<f64>() / frames as f64;
        let var = row.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / frames as f64;
        let std = var.sqrt();
        // Rows that are constant up to rounding count as zero-variance.
        let constant = std <= 1e-12 * mean.abs().max(1.0);
        data.extend(row.iter().map(|v| {
            let centred = v - mean;
            if constant {
                0.0
            } else {
                centred / std
            }
        }));
    }
    FeatureMatrix::new(data, fm.bins(), frames, fm.kind())
}

/// Keeps the first `target` frames, or tiles the matrix cyclically in time
/// when it is shorter.
pub fn crop_or_pad(fm: &FeatureMatrix, target: usize) -> Result<FeatureMatrix> {
    if target == 0 {
        return Err(Error::InvalidInput(
            "target frame count must be positive".into(),
        ));
    }
    let frames = fm.frames();
    let mut data = Vec::with_capacity(fm.bins() * target);
    for b in 0..fm.bins() {
        let row = fm.row(b);
        data.extend((0..target).map(|t| row[t % frames]));
    }
    FeatureMatrix::new(data, fm.bins(), target, fm.kind())
}
