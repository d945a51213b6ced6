//! Direct-sum oracles for the spectral front-ends.

use std::f64::consts::PI;

use antispoof::features::cqt::CqtKernel;
use antispoof::features::{
    cqt_center_frequencies, cqt_log_power, dct2_orthonormal, dct_log_power, fft_log_power,
    FrontEndConfig, Waveform,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn blackman(n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![1.0];
    }
    (0..n)
        .map(|i| {
            let x = 2.0 * PI * i as f64 / (n - 1) as f64;
            0.42 - 0.5 * x.cos() + 0.08 * (2.0 * x).cos()
        })
        .collect()
}

fn dft_power(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    (0..=n / 2)
        .map(|k| {
            let (mut re, mut im) = (0.0, 0.0);
            for (t, &v) in x.iter().enumerate() {
                let a = -2.0 * PI * (k * t) as f64 / n as f64;
                re += v * a.cos();
                im += v * a.sin();
            }
            re * re + im * im
        })
        .collect()
}

fn dct(x: &[f64]) -> Vec<f64> {
    let n = x.len() as f64;
    (0..x.len())
        .map(|k| {
            let s: f64 = x
                .iter()
                .enumerate()
                .map(|(t, v)| v * (PI * k as f64 * (2 * t + 1) as f64 / (2.0 * n)).cos())
                .sum();
            s * if k == 0 {
                (1.0 / n).sqrt()
            } else {
                (2.0 / n).sqrt()
            }
        })
        .collect()
}

fn cqt_bin(x: &[f64], f: f64, fs: f64, bins_per_octave: usize) -> (f64, f64) {
    let q = 1.0 / (2f64.powf(1.0 / bins_per_octave as f64) - 1.0);
    let n = ((q * fs / f).ceil() as usize).clamp(1, x.len());
    let offset = (x.len() - n) / 2;
    let w = blackman(n);
    let norm: f64 = w.iter().sum();
    (0..n).fold((0.0, 0.0), |(re, im), i| {
        let a = 2.0 * PI * f * i as f64 / fs;
        let v = x[offset + i] * w[i] / norm;
        (re + v * a.cos(), im - v * a.sin())
    })
}

/// Single-frame waveform of exactly `len` samples, analysed with an
/// equally long window.
fn one_frame(x: &[f64], cfg: &mut FrontEndConfig) -> Waveform {
    cfg.window_len_samples = x.len();
    cfg.hop_seconds = x.len() as f64 / 1000.0;
    Waveform::new(x.to_vec(), 1000).unwrap()
}

/// Worst `|got - oracle| / max(1, |oracle|)` in the power domain over FFT,
/// DCT and CQT frames of length 1..=32.
pub fn oracle_gap(seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    let mut track =
        |got: f64, want: f64| worst = worst.max((got - want).abs() / want.abs().max(1.0));
    for len in 1..=32 {
        for _ in 0..5 {
            let x: Vec<f64> = (0..len).map(|_| rng.random_range(-1.0..1.0)).collect();
            if len >= 2 {
                let mut cfg = FrontEndConfig::fft();
                let fm = fft_log_power(&one_frame(&x, &mut cfg), &cfg).unwrap();
                let w = blackman(len);
                let windowed: Vec<f64> = x.iter().zip(&w).map(|(a, b)| a * b).collect();
                for (k, p) in dft_power(&windowed).into_iter().enumerate() {
                    track(fm.get(k, 0).exp(), p.max(cfg.log_floor));
                }
            }
            let want = dct(&x);
            for (a, b) in dct2_orthonormal(&x).iter().zip(&want) {
                track(*a, *b);
            }
            if len < 2 {
                continue;
            }
            let mut cfg = FrontEndConfig::dct();
            let fm = dct_log_power(&one_frame(&x, &mut cfg), &cfg).unwrap();
            for (k, c) in want.iter().enumerate() {
                track(fm.get(k, 0).exp(), (c * c).max(cfg.log_floor));
            }

            let mut cfg = FrontEndConfig::cqt();
            cfg.bins_per_octave = 2;
            cfg.cqt_fmin_hz = 50.0;
            cfg.cqt_bins = 6;
            let wave = one_frame(&x, &mut cfg);
            let kernel = CqtKernel::new(&cfg, 1000).unwrap();
            let coeffs = kernel.transform(&x);
            let fm = cqt_log_power(&wave, &cfg).unwrap();
            for (k, &f) in cqt_center_frequencies(50.0, 2, 6).iter().enumerate() {
                let (re, im) = cqt_bin(&x, f, 1000.0, 2);
                track(coeffs[k].re, re);
                track(coeffs[k].im, im);
                track(fm.get(k, 0).exp(), (re * re + im * im).max(cfg.log_floor));
            }
        }
    }
    worst
}

fn argmax(v: &[f64]) -> usize {
    (0..v.len()).max_by(|&a, &b| v[a].total_cmp(&v[b])).unwrap()
}

/// Number of pure tones placed on a bin centre whose peak lands elsewhere.
pub fn argmax_misses() -> usize {
    let mut misses = 0;
    let mut cfg = FrontEndConfig::fft();
    cfg.window_len_samples = 64;
    cfg.hop_seconds = 0.064;
    for k in 1..32 {
        let x: Vec<f64> = (0..64)
            .map(|n| (2.0 * PI * k as f64 * n as f64 / 64.0 + 0.4).sin())
            .collect();
        let fm = fft_log_power(&Waveform::new(x, 1000).unwrap(), &cfg).unwrap();
        misses += usize::from(argmax(&fm.column(0)) != k);
    }
    let mut cfg = FrontEndConfig::dct();
    cfg.window_len_samples = 32;
    cfg.hop_seconds = 0.032;
    for k in 0..32 {
        let x: Vec<f64> = (0..32)
            .map(|t| (PI * k as f64 * (2 * t + 1) as f64 / 64.0).cos())
            .collect();
        let fm = dct_log_power(&Waveform::new(x, 1000).unwrap(), &cfg).unwrap();
        misses += usize::from(argmax(&fm.column(0)) != k);
    }
    let cfg = FrontEndConfig::cqt();
    let freqs = cqt_center_frequencies(cfg.cqt_fmin_hz, cfg.bins_per_octave, cfg.cqt_bins);
    for k in (480..cfg.cqt_bins).step_by(48) {
        let x: Vec<f64> = (0..cfg.window_len_samples)
            .map(|n| (2.0 * PI * freqs[k] * n as f64 / 16000.0).cos())
            .collect();
        let fm = cqt_log_power(&Waveform::new(x, 16000).unwrap(), &cfg).unwrap();
        misses += usize::from(argmax(&fm.column(0)) != k);
    }
    misses
}

/// Worst deviation of adjacent CQT centre-frequency ratios from `2^(1/96)`.
pub fn spacing_gap() -> f64 {
    let cfg = FrontEndConfig::cqt();
    let ratio = 2f64.powf(1.0 / 96.0);
    cqt_center_frequencies(cfg.cqt_fmin_hz, 96, cfg.cqt_bins)
        .windows(2)
        .map(|w| (w[1] / w[0] - ratio).abs())
        .fold(0.0, f64::max)
}
