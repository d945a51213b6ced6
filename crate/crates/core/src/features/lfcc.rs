//! Linear-frequency cepstral coefficients.

use rayon::prelude::*;

use super::framing::{frames_with, hop_samples};
use super::spectral::{floored_log, Dct2, PowerSpectrum};
use super::{FeatureKind, FeatureMatrix, FrontEndConfig, Waveform};
use crate::error::{Error, Result};

/// Triangular filters with edges linearly spaced from 0 Hz to Nyquist.
/// Returns one weight row of length `n_fft / 2 + 1` per filter.
pub fn linear_filterbank(n_filters: usize, n_fft: usize, sample_rate_hz: u32) -> Vec<Vec<f64>> {
    let fs = f64::from(sample_rate_hz);
    let n_bins = n_fft / 2 + 1;
    let step = (fs / 2.0) / (n_filters + 1) as f64;
    let edges: Vec<f64> = (0..n_filters + 2).map(|i| i as f64 * step).collect();
    (0..n_filters)
        .map(|j| {
            let (lo, mid, hi) = (edges[j], edges[j + 1], edges[j + 2]);
            (0..n_bins)
                .map(|b| {
                    let f = b as f64 * fs / n_fft as f64;
                    if f <= lo || f >= hi {
                        0.0
                    } else if f <= mid {
                        (f - lo) / (mid - lo)
                    } else {
                        (hi - f) / (hi - mid)
                    }
                })
                .collect()
        })
        .collect()
}

/// Regression deltas over `±half_width` frames with edge replication.
/// `rows` is coefficients × frames, row-major.
pub fn deltas(rows: &[Vec<f64>], half_width: usize) -> Vec<Vec<f64>> {
    let denom: f64 = 2.0 * (1..=half_width).map(|n| (n * n) as f64).sum::<f64>();
    rows.iter()
        .map(|row| {
            let last = row.len() as isize - 1;
            let at = |t: isize| row[t.clamp(0, last) as usize];
            (0..row.len() as isize)
                .map(|t| {
                    (1..=half_width as isize)
                        .map(|n| n as f64 * (at(t + n) - at(t - n)))
                        .sum::<f64>()
                        / denom
                })
                .collect()
        })
        .collect()
}

/// Static cepstra (`n_filters` rows), followed by Δ and ΔΔ rows when
/// `cfg.lfcc_deltas` is set.
pub fn lfcc(wave: &Waveform, cfg: &FrontEndConfig) -> Result<FeatureMatrix> {
    if cfg.kind != FeatureKind::Lfcc {
        return Err(Error::Config(format!(
            "lfcc front-end called with a {} configuration",
            cfg.kind
        )));
    }
    cfg.validate()?;
    let hop = hop_samples(cfg.hop_seconds, wave.sample_rate_hz())?;
    let window = cfg.window_fn.coefficients(cfg.window_len_samples);
    let frames = frames_with(wave.samples(), hop, &window);
    let spectrum = PowerSpectrum::new(cfg.n_fft);
    let bank = linear_filterbank(cfg.n_filters, cfg.n_fft, wave.sample_rate_hz());
    let dct = Dct2::new(cfg.n_filters);

    let cepstra: Vec<Vec<f64>> = frames
        .par_iter()
        .map(|frame| {
            let power = spectrum.process(frame);
            let log_energies: Vec<f64> = bank
                .iter()
                .map(|w| {
                    floored_log(
                        w.iter().zip(&power).map(|(a, p)| a * p).sum(),
                        cfg.log_floor,
                    )
                })
                .collect();
            dct.process(&log_energies)
        })
        .collect();

    let n_frames = cepstra.len();
    let mut rows: Vec<Vec<f64>> = (0..cfg.n_filters)
        .map(|c| cepstra.iter().map(|col| col[c]).collect())
        .collect();
    if cfg.lfcc_deltas {
        let d1 = deltas(&rows, 2);
        let d2 = deltas(&d1, 2);
        rows.extend(d1);
        rows.extend(d2);
    }
    let bins = rows.len();
    FeatureMatrix::new(rows.concat(), bins, n_frames, FeatureKind::Lfcc)
}
