//! Energy-based speech activity detection.

use super::framing::{frames_with, hop_samples};
use super::{FrontEndConfig, Waveform};
use crate::error::Result;

/// Per-frame log energy in dB; silent frames map to `-inf`.
pub fn frame_energies_db(wave: &Waveform, cfg: &FrontEndConfig) -> Result<Vec<f64>> {
    let hop = hop_samples(cfg.hop_seconds, wave.sample_rate_hz())?;
    let window = cfg.window_fn.coefficients(cfg.window_len_samples);
    Ok(frames_with(wave.samples(), hop, &window)
        .iter()
        .map(|f| 10.0 * f.iter().map(|s| s * s).sum::<f64>().log10())
        .collect())
}

/// A frame is speech when its energy is within `cfg.sad_threshold_db` of the
/// loudest frame. An all-silent signal is treated as all speech.
pub fn energy_sad(wave: &Waveform, cfg: &FrontEndConfig) -> Result<Vec<bool>> {
    let energies = frame_energies_db(wave, cfg)?;
    let max = energies.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return Ok(vec![true; energies.len()]);
    }
    let threshold = max - cfg.sad_threshold_db;
    Ok(energies.iter().map(|&e| e >= threshold).collect())
}
