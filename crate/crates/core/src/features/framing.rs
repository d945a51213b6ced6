//! Shared framing: frame `f` starts at `f * hop` where the hop in samples is
//! `round(hop_seconds * sample_rate)`. Every start index inside the signal
//! yields a frame; frames running past the end are zero-padded.

use super::{FrontEndConfig, Waveform};
use crate::error::{Error, Result};

pub fn hop_samples(hop_seconds: f64, sample_rate_hz: u32) -> Result<usize> {
    let hop = (hop_seconds * f64::from(sample_rate_hz)).round();
    if !(hop >= 1.0) {
        return Err(Error::Config(format!(
            "hop of {hop_seconds} s is shorter than one sample at {sample_rate_hz} Hz"
        )));
    }
    Ok(hop as usize)
}

pub fn num_frames(len: usize, hop: usize) -> usize {
    len.div_ceil(hop)
}

/// Splits `samples` into windowed frames of `window.len()` samples.
pub(crate) fn frames_with(samples: &[f64], hop: usize, window: &[f64]) -> Vec<Vec<f64>> {
    let win_len = window.len();
    (0..num_frames(samples.len(), hop))
        .map(|f| {
            let start = f * hop;
            let end = (start + win_len).min(samples.len());
            let mut frame = vec![0.0; win_len];
            for (dst, (&s, &w)) in frame.iter_mut().zip(samples[start..end].iter().zip(window)) {
                *dst = s * w;
            }
            frame
        })
        .collect()
}

/// Windowed frames of `cfg.window_len_samples` samples.
pub fn frame_signal(wave: &Waveform, cfg: &FrontEndConfig) -> Result<Vec<Vec<f64>>> {
    if wave.is_empty() {
        return Err(Error::InvalidInput("empty waveform".into()));
    }
    if cfg.window_len_samples < 2 {
        return Err(Error::Config(
            "window length must be at least 2 samples".into(),
        ));
    }
    let hop = hop_samples(cfg.hop_seconds, wave.sample_rate_hz())?;
    let window = cfg.window_fn.coefficients(cfg.window_len_samples);
    Ok(frames_with(wave.samples(), hop, &window))
}
