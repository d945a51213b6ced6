//! Constant-Q log power spectrogram.
//!
//! Bin `k` is centred at `f_k = f_min * 2^(k / B)` with quality factor
//! `Q = 1 / (2^(1/B) - 1)`. Its kernel is a windowed complex exponential of
//! `N_k = ceil(Q * fs / f_k)` samples, capped at the frame length and centred
//! in the frame, normalized by the window sum so a unit-amplitude sinusoid at
//! `f_k` yields magnitude 1/2 in every bin regardless of kernel length.
//!
//! Inner products are evaluated in the frequency domain: the kernel spectra
//! are precomputed once and each frame costs one FFT plus one dense
//! complex dot product per bin (Parseval).

use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::framing::{frames_with, hop_samples};
use super::spectral::floored_log;
use super::{FeatureKind, FeatureMatrix, FrontEndConfig, Waveform, WindowFn};
use crate::error::{Error, Result};

/// Center frequencies `f_min * 2^(k / bins_per_octave)` for `k < n_bins`.
pub fn cqt_center_frequencies(f_min: f64, bins_per_octave: usize, n_bins: usize) -> Vec<f64> {
    (0..n_bins)
        .map(|k| f_min * (k as f64 / bins_per_octave as f64).exp2())
        .collect()
}

/// Precomputed kernel bank for one (sample rate, configuration) pair.
pub struct CqtKernel {
    frame_len: usize,
    fft_len: usize,
    fft: Arc<dyn Fft<f64>>,
    freqs: Vec<f64>,
    /// Conjugated kernel spectra scaled by `1 / fft_len`, one row per bin.
    spectra: Vec<Vec<Complex64>>,
}

impl CqtKernel {
    pub fn new(cfg: &FrontEndConfig, sample_rate_hz: u32) -> Result<Self> {
        let fs = f64::from(sample_rate_hz);
        let nyquist = fs / 2.0;
        let freqs = cqt_center_frequencies(cfg.cqt_fmin_hz, cfg.bins_per_octave, cfg.cqt_bins);
        let top = *freqs
            .last()
            .ok_or_else(|| Error::Config("CQT needs at least one bin".into()))?;
        if top > nyquist {
            return Err(Error::Config(format!(
                "top CQT bin at {top:.2} Hz exceeds Nyquist {nyquist} Hz"
            )));
        }
        let frame_len = cfg.window_len_samples;
        let fft_len = frame_len.next_power_of_two();
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(fft_len);
        let spectra = freqs
            .iter()
            .map(|&f| {
                let mut buf = time_kernel(f, fs, cfg.bins_per_octave, frame_len, cfg.window_fn);
                buf.resize(fft_len, Complex64::new(0.0, 0.0));
                fft.process(&mut buf);
                buf.iter().map(|c| c.conj() / fft_len as f64).collect()
            })
            .collect();
        Ok(Self {
            frame_len,
            fft_len,
            fft,
            freqs,
            spectra,
        })
    }

    pub fn center_frequencies(&self) -> &[f64] {
        &self.freqs
    }

    pub fn frame_len(&self) -> usize {
        self.frame_len
    }

    /// Complex CQT coefficients of one unwindowed frame.
    pub fn transform(&self, frame: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = (0..self.fft_len)
            .map(|i| Complex64::new(frame.get(i).copied().unwrap_or(0.0), 0.0))
            .collect();
        self.fft.process(&mut buf);
        self.spectra
            .iter()
            .map(|kernel| kernel.iter().zip(&buf).map(|(k, x)| k * x).sum())
            .collect()
    }
}

/// Quality factor for `bins_per_octave` geometric spacing.
pub fn quality_factor(bins_per_octave: usize) -> f64 {
    1.0 / ((1.0 / bins_per_octave as f64).exp2() - 1.0)
}

/// Kernel length for a bin, before capping at the frame length.
pub fn natural_kernel_len(freq: f64, fs: f64, bins_per_octave: usize) -> usize {
    (quality_factor(bins_per_octave) * fs / freq).ceil() as usize
}

/// Time-domain kernel laid out in a `frame_len` buffer. The coefficient of
/// bin `k` is `sum_n x[n] * conj(kernel[n])`.
fn time_kernel(
    freq: f64,
    fs: f64,
    bins_per_octave: usize,
    frame_len: usize,
    window_fn: WindowFn,
) -> Vec<Complex64> {
    let len = natural_kernel_len(freq, fs, bins_per_octave).clamp(1, frame_len);
    let offset = (frame_len - len) / 2;
    let window = window_fn.coefficients(len);
    let norm: f64 = window.iter().sum();
    let mut out = vec![Complex64::new(0.0, 0.0); frame_len];
    for (i, w) in window.iter().enumerate() {
        out[offset + i] = Complex64::from_polar(w / norm, 2.0 * PI * freq * i as f64 / fs);
    }
    out
}

/// Per-frame `log(max(|X_k|^2, floor))` over the constant-Q bins.
pub fn cqt_log_power(wave: &Waveform, cfg: &FrontEndConfig) -> Result<FeatureMatrix> {
    if cfg.kind != FeatureKind::Cqt {
        return Err(Error::Config(format!(
            "cqt front-end called with a {} configuration",
            cfg.kind
        )));
    }
    cfg.validate()?;
    let kernel = CqtKernel::new(cfg, wave.sample_rate_hz())?;
    let hop = hop_samples(cfg.hop_seconds, wave.sample_rate_hz())?;
    // Frames are taken unwindowed; each kernel carries its own window.
    let rect = vec![1.0; cfg.window_len_samples];
    let frames = frames_with(wave.samples(), hop, &rect);
    let columns: Vec<Vec<f64>> = frames
        .par_iter()
        .map(|frame| {
            kernel
                .transform(frame)
                .into_iter()
                .map(|c| floored_log(c.norm_sqr(), cfg.log_floor))
                .collect()
        })
        .collect();
    FeatureMatrix::from_columns(&columns, FeatureKind::Cqt)
}
