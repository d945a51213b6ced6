//! Synthetic genuine/spoof corpus for desk-scale experiments, plus waveform
//! and protocol file I/O.
//!
//! Genuine utterances are voiced harmonic complexes (random `f0`, three
//! formant resonances, a faint noise floor and a syllabic envelope). Spoofed
//! utterances are drawn the same way and then pass through one attack:
//!
//! * `channel_ir` – convolution with a short random impulse response (one
//!   strong early reflection and a decaying tail), as a replay channel would
//!   add;
//! * `bandlimit` – windowed-sinc low-pass with a 3–4 kHz cutoff;
//! * `quantize` – requantization to 8 bits.

mod protocol;
mod wav;

use std::f64::consts::PI;
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

pub use protocol::{format_protocol, parse_protocol, parse_protocol_str, write_protocol};
pub use wav::{read_wav, write_wav};

use crate::error::{Error, Result};
use crate::features::Waveform;
use crate::metrics::{Label, TrialRecord};

/// Protocol file name used by [`write_corpus`].
pub const PROTOCOL_FILE: &str = "protocol.txt";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AttackKind {
    ChannelIr,
    Bandlimit,
    Quantize,
}

impl AttackKind {
    pub const ALL: [AttackKind; 3] = [
        AttackKind::ChannelIr,
        AttackKind::Bandlimit,
        AttackKind::Quantize,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            AttackKind::ChannelIr => "channel_ir",
            AttackKind::Bandlimit => "bandlimit",
            AttackKind::Quantize => "quantize",
        }
    }
}

impl fmt::Display for AttackKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AttackKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "channel_ir" => Ok(AttackKind::ChannelIr),
            "bandlimit" => Ok(AttackKind::Bandlimit),
            "quantize" => Ok(AttackKind::Quantize),
            other => Err(Error::Config(format!(
                "unknown attack '{other}' (expected channel_ir, bandlimit or quantize)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusSpec {
    pub n_genuine: usize,
    pub n_spoof: usize,
    pub duration_s: f64,
    pub sample_rate_hz: u32,
    pub seed: u64,
    /// Spoofed utterances cycle through these kinds in order.
    pub attack_kinds: Vec<AttackKind>,
    /// Trial ids are `{id_prefix}_{index:05}`.
    pub id_prefix: String,
}

impl Default for CorpusSpec {
    fn default() -> Self {
        Self {
            n_genuine: 100,
            n_spoof: 100,
            duration_s: 1.0,
            sample_rate_hz: 16_000,
            seed: 0,
            attack_kinds: AttackKind::ALL.to_vec(),
            id_prefix: "T".into(),
        }
    }
}

impl CorpusSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_genuine == 0 || self.n_spoof == 0 {
            return Err(Error::Config(
                "a corpus needs at least one genuine and one spoof utterance".into(),
            ));
        }
        if !(self.duration_s > 0.0) || !self.duration_s.is_finite() {
            return Err(Error::Config(format!("bad duration {}", self.duration_s)));
        }
        if self.sample_rate_hz < 8_000 {
            return Err(Error::Config("sample rate must be at least 8 kHz".into()));
        }
        if self.attack_kinds.is_empty() {
            return Err(Error::Config("at least one attack kind is required".into()));
        }
        if self.id_prefix.is_empty() || self.id_prefix.chars().any(char::is_whitespace) {
            return Err(Error::Config("id prefix must be a non-empty word".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Utterance {
    pub trial_id: String,
    pub label: Label,
    pub attack: Option<AttackKind>,
    pub wave: Waveform,
}

impl Utterance {
    pub fn protocol_record(&self) -> TrialRecord {
        TrialRecord {
            trial_id: self.trial_id.clone(),
            label: self.label,
            attack_id: self.attack.map(|a| a.as_str().to_string()),
            score: f64::NAN,
        }
    }
}

/// Generates the corpus; genuine utterances come first. File `i` draws from
/// its own generator seeded with `seed ^ i`, so the result does not depend
/// on scheduling.
pub fn generate_corpus(spec: &CorpusSpec) -> Result<(Vec<Utterance>, Vec<TrialRecord>)> {
    spec.validate()?;
    let total = spec.n_genuine + spec.n_spoof;
    let utterances: Vec<Utterance> = (0..total)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed ^ i as u64);
            let sr = f64::from(spec.sample_rate_hz);
            let len = ((spec.duration_s * sr).round() as usize).max(1);
            let mut x = voiced_signal(len, sr, &mut rng);
            let (label, attack) = if i < spec.n_genuine {
                (Label::Bonafide, None)
            } else {
                let kind = spec.attack_kinds[(i - spec.n_genuine) % spec.attack_kinds.len()];
                x = apply_attack(&x, kind, sr, &mut rng);
                (Label::Spoof, Some(kind))
            };
            let wave = Waveform::new(x, spec.sample_rate_hz)?;
            Ok(Utterance {
                trial_id: format!("{}_{i:05}", spec.id_prefix),
                label,
                attack,
                wave,
            })
        })
        .collect::<Result<_>>()?;
    let protocol = utterances.iter().map(Utterance::protocol_record).collect();
    Ok((utterances, protocol))
}

/// Writes `<trial_id>.wav` for every utterance and the protocol file.
pub fn write_corpus(dir: &Path, utterances: &[Utterance]) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    utterances
        .par_iter()
        .try_for_each(|u| write_wav(&dir.join(format!("{}.wav", u.trial_id)), &u.wave))?;
    let records: Vec<TrialRecord> = utterances.iter().map(Utterance::protocol_record).collect();
    write_protocol(&dir.join(PROTOCOL_FILE), &records)
}

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

/// Harmonic complex through formant resonators, with envelope and noise.
fn voiced_signal<R: Rng + ?Sized>(len: usize, sr: f64, rng: &mut R) -> Vec<f64> {
    let nyquist = sr / 2.0;
    let f0 = rng.random_range(100.0..250.0);
    let vibrato_rate = rng.random_range(3.0..6.0);
    let vibrato_depth = rng.random_range(0.01..0.04);
    let n_harm = ((0.95 * nyquist) / (f0 * (1.0 + vibrato_depth))).floor() as usize;
    // Harmonic h contributes sin(h φ + p_h) / h = Im(c_h z^h) with
    // z = e^{iφ} and c_h = e^{i p_h} / h.
    let coeffs: Vec<(f64, f64)> = (1..=n_harm)
        .map(|h| {
            let p: f64 = rng.random_range(0.0..2.0 * PI);
            (p.cos() / h as f64, p.sin() / h as f64)
        })
        .collect();

    let mut phase = 0.0f64;
    let mut source = Vec::with_capacity(len);
    for n in 0..len {
        let t = n as f64 / sr;
        let f = f0 * (1.0 + vibrato_depth * (2.0 * PI * vibrato_rate * t).sin());
        phase = (phase + 2.0 * PI * f / sr) % (2.0 * PI);
        let (zr, zi) = (phase.cos(), phase.sin());
        let (mut wr, mut wi) = (zr, zi);
        let mut s = 0.0;
        for &(cr, ci) in &coeffs {
            s += cr * wi + ci * wr;
            (wr, wi) = (wr * zr - wi * zi, wr * zi + wi * zr);
        }
        source.push(s);
    }

    let formants = [
        (
            rng.random_range(300.0..900.0),
            rng.random_range(60.0..120.0),
        ),
        (
            rng.random_range(900.0..2500.0),
            rng.random_range(80.0..160.0),
        ),
        (
            rng.random_range(2500.0..3500.0),
            rng.random_range(120.0..250.0),
        ),
    ];
    // Parallel resonators keep energy at every formant.
    let mut voiced = vec![0.0; len];
    for (i, &(fc, bw)) in formants.iter().enumerate() {
        let gain = 1.0 / (i + 1) as f64;
        let y = resonator(&source, fc, bw, sr);
        for (v, s) in voiced.iter_mut().zip(y) {
            *v += gain * s;
        }
    }
    // Slight pre-emphasis-like tilt restores some high-frequency content.
    let mut prev = 0.0;
    for v in &mut voiced {
        let cur = *v;
        *v = cur - 0.5 * prev;
        prev = cur;
    }

    let syllable_rate = rng.random_range(2.0..5.0);
    let env_phase = rng.random_range(0.0..2.0 * PI);
    let fade = ((0.02 * sr) as usize).clamp(1, len.div_ceil(2).max(1));
    for (n, v) in voiced.iter_mut().enumerate() {
        let t = n as f64 / sr;
        let am = 0.6 + 0.4 * (2.0 * PI * syllable_rate * t + env_phase).sin();
        let edge = (n.min(len - 1 - n) as f64 / fade as f64).min(1.0);
        *v *= am * edge;
    }
    normalize_peak(&mut voiced, rng.random_range(0.3..0.9));
    let floor = 1e-4;
    for v in &mut voiced {
        *v += floor * gaussian(rng);
    }
    voiced
}

/// Two-pole resonator with unit gain at its centre frequency.
fn resonator(x: &[f64], fc: f64, bw: f64, sr: f64) -> Vec<f64> {
    let r = (-PI * bw / sr).exp();
    let a1 = 2.0 * r * (2.0 * PI * fc / sr).cos();
    let a2 = -r * r;
    let g = 1.0 - r;
    let (mut y1, mut y2) = (0.0, 0.0);
    x.iter()
        .map(|&s| {
            let y = g * s + a1 * y1 + a2 * y2;
            y2 = y1;
            y1 = y;
            y
        })
        .collect()
}

fn normalize_peak(x: &mut [f64], peak: f64) {
    let m = x.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if m > 0.0 {
        let s = peak / m;
        x.iter_mut().for_each(|v| *v *= s);
    }
}

fn peak(x: &[f64]) -> f64 {
    x.iter().fold(0.0f64, |a, v| a.max(v.abs()))
}

fn apply_attack<R: Rng + ?Sized>(x: &[f64], kind: AttackKind, sr: f64, rng: &mut R) -> Vec<f64> {
    let target_peak = peak(x);
    let mut y = match kind {
        AttackKind::ChannelIr => convolve(x, &random_channel_ir(rng)),
        AttackKind::Bandlimit => {
            let cutoff = rng.random_range(3000.0..4000.0);
            convolve(x, &lowpass_kernel(cutoff, sr, 129))
        }
        AttackKind::Quantize => return quantize_8bit(x),
    };
    normalize_peak(&mut y, target_peak);
    y
}

/// Direct impulse, one strong reflection 8–40 samples later and a short
/// exponentially decaying noise tail.
fn random_channel_ir<R: Rng + ?Sized>(rng: &mut R) -> Vec<f64> {
    let delay = rng.random_range(8..=40);
    let gain = rng.random_range(0.5..0.9) * if rng.random::<bool>() { 1.0 } else { -1.0 };
    let tail = 64;
    let mut h = vec![0.0; delay + tail + 1];
    h[0] = 1.0;
    h[delay] = gain;
    for k in 1..=tail {
        h[delay + k] += 0.05 * gaussian(rng) * (-(k as f64) / 16.0).exp();
    }
    h
}

/// Blackman-windowed sinc, unit DC gain.
pub(crate) fn lowpass_kernel(cutoff_hz: f64, sr: f64, taps: usize) -> Vec<f64> {
    let fc = cutoff_hz / sr;
    let mid = (taps - 1) as f64 / 2.0;
    let window = crate::features::WindowFn::Blackman.coefficients(taps);
    let mut h: Vec<f64> = (0..taps)
        .map(|i| {
            let t = i as f64 - mid;
            let sinc = if t == 0.0 {
                2.0 * fc
            } else {
                (2.0 * PI * fc * t).sin() / (PI * t)
            };
            sinc * window[i]
        })
        .collect();
    let sum: f64 = h.iter().sum();
    h.iter_mut().for_each(|v| *v /= sum);
    h
}

/// Causal convolution truncated to the input length.
fn convolve(x: &[f64], h: &[f64]) -> Vec<f64> {
    (0..x.len())
        .map(|n| {
            h.iter()
                .enumerate()
                .take(n + 1)
                .map(|(k, hk)| hk * x[n - k])
                .sum()
        })
        .collect()
}

/// Rounds to the 255 levels `k / 127`, `k ∈ [-127, 127]`.
pub fn quantize_8bit(x: &[f64]) -> Vec<f64> {
    x.iter()
        .map(|v| (v.clamp(-1.0, 1.0) * 127.0).round() / 127.0)
        .collect()
}
