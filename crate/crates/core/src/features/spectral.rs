//! FFT and DCT log-power spectrograms.

use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::framing::{frames_with, hop_samples};
use super::{FeatureKind, FeatureMatrix, FrontEndConfig, Waveform};
use crate::error::{Error, Result};

#[inline]
pub(crate) fn floored_log(power: f64, floor: f64) -> f64 {
    power.max(floor).ln()
}

/// One-sided power spectrum `|X_k|^2`, `k = 0..=n/2`, of a real frame.
pub(crate) struct PowerSpectrum {
    n: usize,
    fft: Arc<dyn Fft<f64>>,
}

impl PowerSpectrum {
    pub(crate) fn new(n: usize) -> Self {
        let fft = FftPlanner::new().plan_fft_forward(n);
        Self { n, fft }
    }

    pub(crate) fn bins(&self) -> usize {
        self.n / 2 + 1
    }

    /// `frame` may be shorter than the transform length; it is zero-padded.
    pub(crate) fn process(&self, frame: &[f64]) -> Vec<f64> {
        let mut buf: Vec<Complex64> = (0..self.n)
            .map(|i| Complex64::new(frame.get(i).copied().unwrap_or(0.0), 0.0))
            .collect();
        self.fft.process(&mut buf);
        buf[..self.bins()].iter().map(|c| c.norm_sqr()).collect()
    }
}

/// Orthonormal type-II DCT computed through a same-length complex FFT
/// (Makhoul's even/odd reordering).
pub struct Dct2 {
    n: usize,
    fft: Arc<dyn Fft<f64>>,
    twiddles: Vec<Complex64>,
}

impl Dct2 {
    pub fn new(n: usize) -> Self {
        assert!(n > 0, "DCT length must be positive");
        let fft = FftPlanner::new().plan_fft_forward(n);
        let n_f = n as f64;
        let twiddles = (0..n)
            .map(|k| {
                let scale = if k == 0 {
                    (1.0 / n_f).sqrt()
                } else {
                    (2.0 / n_f).sqrt()
                };
                Complex64::from_polar(scale, -PI * k as f64 / (2.0 * n_f))
            })
            .collect();
        Self { n, fft, twiddles }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn process(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n, "DCT input length");
        let n = self.n;
        let mut v = vec![Complex64::new(0.0, 0.0); n];
        for i in 0..n.div_ceil(2) {
            v[i].re = x[2 * i];
        }
        for i in 0..n / 2 {
            v[n - 1 - i].re = x[2 * i + 1];
        }
        self.fft.process(&mut v);
        v.iter()
            .zip(&self.twiddles)
            .map(|(a, t)| (a * t).re)
            .collect()
    }
}

/// Convenience wrapper planning a transform for a single call.
pub fn dct2_orthonormal(x: &[f64]) -> Vec<f64> {
    Dct2::new(x.len()).process(x)
}

fn check_kind(cfg: &FrontEndConfig, kind: FeatureKind) -> Result<()> {
    if cfg.kind != kind {
        return Err(Error::Config(format!(
            "{} front-end called with a {} configuration",
            kind, cfg.kind
        )));
    }
    cfg.validate()
}

fn windowed_frames(wave: &Waveform, cfg: &FrontEndConfig) -> Result<Vec<Vec<f64>>> {
    let hop = hop_samples(cfg.hop_seconds, wave.sample_rate_hz())?;
    let window = cfg.window_fn.coefficients(cfg.window_len_samples);
    Ok(frames_with(wave.samples(), hop, &window))
}

/// `log(max(|X_k|^2, floor))` for `k = 0..=window/2` per frame.
pub fn fft_log_power(wave: &Waveform, cfg: &FrontEndConfig) -> Result<FeatureMatrix> {
    check_kind(cfg, FeatureKind::Fft)?;
    let frames = windowed_frames(wave, cfg)?;
    let spectrum = PowerSpectrum::new(cfg.window_len_samples);
    let columns: Vec<Vec<f64>> = frames
        .par_iter()
        .map(|frame| {
            spectrum
                .process(frame)
                .into_iter()
                .map(|p| floored_log(p, cfg.log_floor))
                .collect()
        })
        .collect();
    FeatureMatrix::from_columns(&columns, FeatureKind::Fft)
}

/// `log(max(c_k^2, floor))` of the orthonormal DCT-II of each windowed frame.
pub fn dct_log_power(wave: &Waveform, cfg: &FrontEndConfig) -> Result<FeatureMatrix> {
    check_kind(cfg, FeatureKind::Dct)?;
    let frames = windowed_frames(wave, cfg)?;
    let dct = Dct2::new(cfg.window_len_samples);
    let columns: Vec<Vec<f64>> = frames
        .par_iter()
        .map(|frame| {
            dct.process(frame)
                .into_iter()
                .map(|c| floored_log(c * c, cfg.log_floor))
                .collect()
        })
        .collect();
    FeatureMatrix::from_columns(&columns, FeatureKind::Dct)
}
