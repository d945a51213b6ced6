//! Extracts the four front-ends from one utterance and writes them to disk.
//!
//! ```bash
//! cargo run --release --example feature_extraction -- [input.wav] [out_dir]
//! ```
//!
//! Without an input file a synthetic genuine utterance is used.

use std::path::PathBuf;

use antispoof::corpus::{generate_corpus, read_wav, CorpusSpec};
use antispoof::features::io::write_features;
use antispoof::features::{extract, FeatureKind, FrontEndConfig};
use antispoof::Result;

fn main() -> Result<()> {
    let mut args = std::env::args().skip(1);
    let wave = match args.next() {
        Some(path) => read_wav(&PathBuf::from(path))?,
        None => {
            let spec = CorpusSpec {
                n_genuine: 1,
                n_spoof: 1,
                ..CorpusSpec::default()
            };
            generate_corpus(&spec)?.0.swap_remove(0).wave
        }
    };
    let out_dir = args.next().map(PathBuf::from);
    println!(
        "{:.3} s at {} Hz",
        wave.duration_seconds(),
        wave.sample_rate_hz()
    );

    for kind in [
        FeatureKind::Fft,
        FeatureKind::Cqt,
        FeatureKind::Dct,
        FeatureKind::Lfcc,
    ] {
        let cfg = FrontEndConfig::for_kind(kind);
        let fm = extract(&wave, &cfg)?;
        let (lo, hi) = fm
            .data()
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| {
                (a.min(v), b.max(v))
            });
        println!(
            "{kind:<5} window {:>4}  {:>3} x {:<4} values in [{lo:.1}, {hi:.1}]",
            cfg.window_len_samples,
            fm.bins(),
            fm.frames()
        );
        if let Some(dir) = &out_dir {
            std::fs::create_dir_all(dir)
                .map_err(|e| antispoof::Error::InvalidInput(e.to_string()))?;
            write_features(&dir.join(format!("utterance.{kind}.spft")), &fm)?;
        }
    }
    Ok(())
}
