//! Spectral front-ends that turn a waveform into the bins × frames matrix
//! fed to the network.
//!
//! Four feature kinds are supported: one-sided FFT log power, constant-Q log
//! power, DCT log power and linear-frequency cepstra (with Δ/ΔΔ). All share the
//! framing in [`framing`], and can optionally be followed by energy-based frame
//! dropping ([`sad`]) and per-coefficient mean/variance normalization
//! ([`norm::cmvn`]).

pub mod cqt;
pub mod framing;
pub mod io;
pub mod lfcc;
pub mod norm;
pub mod sad;
pub mod spectral;
pub mod window;

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

pub use cqt::{cqt_center_frequencies, cqt_log_power, CqtKernel};
pub use framing::{frame_signal, hop_samples, num_frames};
pub use lfcc::lfcc;
pub use norm::{cmvn, crop_or_pad};
pub use sad::energy_sad;
pub use spectral::{dct2_orthonormal, dct_log_power, fft_log_power};
pub use window::WindowFn;

/// Mono audio with its sample rate.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    samples: Vec<f64>,
    sample_rate_hz: u32,
}

impl Waveform {
    pub fn new(samples: Vec<f64>, sample_rate_hz: u32) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InvalidInput("empty waveform".into()));
        }
        if sample_rate_hz == 0 {
            return Err(Error::InvalidInput("sample rate must be positive".into()));
        }
        if let Some(i) = samples.iter().position(|s| !s.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "non-finite sample at index {i}"
            )));
        }
        Ok(Self {
            samples,
            sample_rate_hz,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample_rate_hz(&self) -> u32 {
        self.sample_rate_hz
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_seconds(&self) -> f64 {
        self.samples.len() as f64 / f64::from(self.sample_rate_hz)
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }
}

/// Which front-end produced a [`FeatureMatrix`]. The numeric code is the one
/// stored in feature files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FeatureKind {
    Fft,
    Cqt,
    Dct,
    Lfcc,
}

impl FeatureKind {
    pub fn code(self) -> u32 {
        match self {
            FeatureKind::Fft => 0,
            FeatureKind::Cqt => 1,
            FeatureKind::Dct => 2,
            FeatureKind::Lfcc => 3,
        }
    }

    pub fn from_code(code: u32) -> Option<Self> {
        match code {
            0 => Some(FeatureKind::Fft),
            1 => Some(FeatureKind::Cqt),
            2 => Some(FeatureKind::Dct),
            3 => Some(FeatureKind::Lfcc),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            FeatureKind::Fft => "fft",
            FeatureKind::Cqt => "cqt",
            FeatureKind::Dct => "dct",
            FeatureKind::Lfcc => "lfcc",
        }
    }
}

impl fmt::Display for FeatureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FeatureKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "fft" => Ok(FeatureKind::Fft),
            "cqt" => Ok(FeatureKind::Cqt),
            "dct" => Ok(FeatureKind::Dct),
            "lfcc" => Ok(FeatureKind::Lfcc),
            other => Err(Error::Config(format!("unknown feature kind '{other}'"))),
        }
    }
}

/// Front-end settings. The per-kind constructors carry the published
/// defaults; everything is public so callers can adjust individual fields.
#[derive(Debug, Clone, PartialEq)]
pub struct FrontEndConfig {
    pub kind: FeatureKind,
    pub window_len_samples: usize,
    pub hop_seconds: f64,
    pub window_fn: WindowFn,
    /// CQT only.
    pub bins_per_octave: usize,
    /// CQT only: lowest center frequency.
    pub cqt_fmin_hz: f64,
    /// CQT only: number of geometrically spaced bins.
    pub cqt_bins: usize,
    /// LFCC only.
    pub n_fft: usize,
    /// LFCC only.
    pub n_filters: usize,
    /// LFCC only: append Δ and ΔΔ rows.
    pub lfcc_deltas: bool,
    pub apply_cmvn: bool,
    pub apply_sad: bool,
    /// Frames more than this many dB below the loudest frame are non-speech.
    pub sad_threshold_db: f64,
    pub log_floor: f64,
}

pub const DEFAULT_HOP_SECONDS: f64 = 0.0081;
pub const DEFAULT_LOG_FLOOR: f64 = 1e-30;
pub const DEFAULT_SAD_THRESHOLD_DB: f64 = 30.0;

impl FrontEndConfig {
    fn base(kind: FeatureKind, window_len_samples: usize, window_fn: WindowFn) -> Self {
        Self {
            kind,
            window_len_samples,
            hop_seconds: DEFAULT_HOP_SECONDS,
            window_fn,
            bins_per_octave: 96,
            cqt_fmin_hz: 15.625,
            cqt_bins: 863,
            n_fft: 512,
            n_filters: 20,
            lfcc_deltas: true,
            apply_cmvn: false,
            apply_sad: false,
            sad_threshold_db: DEFAULT_SAD_THRESHOLD_DB,
            log_floor: DEFAULT_LOG_FLOOR,
        }
    }

    /// 1724-sample Blackman window, 0.0081 s hop, 863 one-sided bins.
    pub fn fft() -> Self {
        Self::base(FeatureKind::Fft, 1724, WindowFn::Blackman)
    }

    /// 96 bins per octave from 15.625 Hz, kernels capped at 1724 samples.
    pub fn cqt() -> Self {
        Self::base(FeatureKind::Cqt, 1724, WindowFn::Blackman)
    }

    /// 863-sample frames, 863 coefficients.
    pub fn dct() -> Self {
        Self::base(FeatureKind::Dct, 863, WindowFn::Rect)
    }

    /// 20 ms Hamming frames (at 16 kHz) with 10 ms hop, 512-point FFT,
    /// 20 linear triangular filters.
    pub fn lfcc() -> Self {
        let mut cfg = Self::base(FeatureKind::Lfcc, 320, WindowFn::Hamming);
        cfg.hop_seconds = 0.01;
        cfg
    }

    pub fn for_kind(kind: FeatureKind) -> Self {
        match kind {
            FeatureKind::Fft => Self::fft(),
            FeatureKind::Cqt => Self::cqt(),
            FeatureKind::Dct => Self::dct(),
            FeatureKind::Lfcc => Self::lfcc(),
        }
    }

    /// Reduced front-end for scaled-down networks: roughly an eighth of the
    /// reference frequency resolution (107 rows for FFT, CQT and DCT).
    pub fn desk_scale(kind: FeatureKind) -> Self {
        let mut cfg = Self::for_kind(kind);
        match kind {
            FeatureKind::Fft => cfg.window_len_samples = 212,
            FeatureKind::Cqt => {
                cfg.window_len_samples = 212;
                cfg.bins_per_octave = 12;
                cfg.cqt_fmin_hz = 15.625;
                cfg.cqt_bins = 107;
            }
            FeatureKind::Dct => cfg.window_len_samples = 107,
            FeatureKind::Lfcc => {}
        }
        cfg
    }

    /// Number of output rows this configuration produces.
    pub fn output_bins(&self) -> usize {
        match self.kind {
            FeatureKind::Fft => self.window_len_samples / 2 + 1,
            FeatureKind::Cqt => self.cqt_bins,
            FeatureKind::Dct => self.window_len_samples,
            FeatureKind::Lfcc => {
                if self.lfcc_deltas {
                    3 * self.n_filters
                } else {
                    self.n_filters
                }
            }
        }
    }

    /// Checks the invariants that do not depend on the sample rate.
    pub fn validate(&self) -> Result<()> {
        if self.window_len_samples < 2 {
            return Err(Error::Config(
                "window length must be at least 2 samples".into(),
            ));
        }
        if !(self.hop_seconds > 0.0) || !self.hop_seconds.is_finite() {
            return Err(Error::Config("hop must be a positive duration".into()));
        }
        if !(self.log_floor > 0.0) {
            return Err(Error::Config("log floor must be positive".into()));
        }
        match self.kind {
            FeatureKind::Cqt => {
                if self.bins_per_octave == 0 || self.cqt_bins == 0 {
                    return Err(Error::Config("CQT needs positive bin counts".into()));
                }
                if !(self.cqt_fmin_hz > 0.0) {
                    return Err(Error::Config(
                        "CQT minimum frequency must be positive".into(),
                    ));
                }
            }
            FeatureKind::Lfcc => {
                if self.n_fft < self.window_len_samples {
                    return Err(Error::Config(format!(
                        "n_fft {} shorter than window {}",
                        self.n_fft, self.window_len_samples
                    )));
                }
                if self.n_filters == 0 || self.n_filters > self.n_fft / 2 {
                    return Err(Error::Config(format!(
                        "{} filters do not fit a {}-point FFT",
                        self.n_filters, self.n_fft
                    )));
                }
            }
            FeatureKind::Fft | FeatureKind::Dct => {}
        }
        Ok(())
    }
}

/// Bins × frames matrix stored row-major (one row per frequency bin or
/// coefficient).
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    data: Vec<f64>,
    bins: usize,
    frames: usize,
    kind: FeatureKind,
}

impl FeatureMatrix {
    pub fn new(data: Vec<f64>, bins: usize, frames: usize, kind: FeatureKind) -> Result<Self> {
        if bins == 0 || frames == 0 {
            return Err(Error::Shape(format!(
                "empty feature matrix {bins}x{frames}"
            )));
        }
        if data.len() != bins * frames {
            return Err(Error::Shape(format!(
                "{} values for a {bins}x{frames} matrix",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical(
                "feature matrix has non-finite entries".into(),
            ));
        }
        Ok(Self {
            data,
            bins,
            frames,
            kind,
        })
    }

    /// Builds a matrix from per-frame columns.
    pub fn from_columns(columns: &[Vec<f64>], kind: FeatureKind) -> Result<Self> {
        let frames = columns.len();
        let bins = columns.first().map_or(0, Vec::len);
        let mut data = vec![0.0; bins * frames];
        for (t, col) in columns.iter().enumerate() {
            if col.len() != bins {
                return Err(Error::Shape("ragged feature columns".into()));
            }
            for (b, &v) in col.iter().enumerate() {
                data[b * frames + t] = v;
            }
        }
        Self::new(data, bins, frames, kind)
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn kind(&self) -> FeatureKind {
        self.kind
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn get(&self, bin: usize, frame: usize) -> f64 {
        self.data[bin * self.frames + frame]
    }

    pub fn row(&self, bin: usize) -> &[f64] {
        &self.data[bin * self.frames..(bin + 1) * self.frames]
    }

    pub fn column(&self, frame: usize) -> Vec<f64> {
        (0..self.bins).map(|b| self.get(b, frame)).collect()
    }

    /// Keeps the frames whose mask entry is `true`.
    pub fn select_frames(&self, mask: &[bool]) -> Result<Self> {
        if mask.len() != self.frames {
            return Err(Error::Shape(format!(
                "mask of {} entries for {} frames",
                mask.len(),
                self.frames
            )));
        }
        let keep: Vec<usize> = (0..self.frames).filter(|&t| mask[t]).collect();
        if keep.is_empty() {
            return Err(Error::InvalidInput("frame mask removes every frame".into()));
        }
        let mut data = Vec::with_capacity(self.bins * keep.len());
        for b in 0..self.bins {
            let row = self.row(b);
            data.extend(keep.iter().map(|&t| row[t]));
        }
        Self::new(data, self.bins, keep.len(), self.kind)
    }
}

/// Runs the configured front-end, then SAD frame dropping and CMVN when
/// enabled. Cropping to a fixed frame count is left to [`crop_or_pad`].
pub fn extract(wave: &Waveform, cfg: &FrontEndConfig) -> Result<FeatureMatrix> {
    let fm = match cfg.kind {
        FeatureKind::Fft => fft_log_power(wave, cfg)?,
        FeatureKind::Cqt => cqt_log_power(wave, cfg)?,
        FeatureKind::Dct => dct_log_power(wave, cfg)?,
        FeatureKind::Lfcc => lfcc(wave, cfg)?,
    };
    let fm = if cfg.apply_sad {
        let mask = energy_sad(wave, cfg)?;
        fm.select_frames(&mask)?
    } else {
        fm
    };
    if cfg.apply_cmvn && fm.frames() >= 2 {
        cmvn(&fm)
    } else {
        Ok(fm)
    }
}

/// [`extract`] followed by [`crop_or_pad`] to exactly `frames` columns.
pub fn extract_fixed(
    wave: &Waveform,
    cfg: &FrontEndConfig,
    frames: usize,
) -> Result<FeatureMatrix> {
    crop_or_pad(&extract(wave, cfg)?, frames)
}
