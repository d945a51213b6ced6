//! Generates a labelled synthetic corpus (WAV files plus protocol) and
//! summarizes it.
//!
//! ```bash
//! cargo run --release --example synth_corpus -- out/corpus [n_per_class] [seed]
//! ```

use std::path::PathBuf;

use antispoof::corpus::{generate_corpus, write_corpus, AttackKind, CorpusSpec, PROTOCOL_FILE};
use antispoof::metrics::Label;
use antispoof::Result;

fn main() -> Result<()> {
    let mut args = std::env::args().skip(1);
    let out = PathBuf::from(args.next().unwrap_or_else(|| "corpus".into()));
    let n = args.next().and_then(|s| s.parse().ok()).unwrap_or(30);
    let seed = args.next().and_then(|s| s.parse().ok()).unwrap_or(0);
    let spec = CorpusSpec {
        n_genuine: n,
        n_spoof: n,
        seed,
        ..CorpusSpec::default()
    };
    let (utterances, protocol) = generate_corpus(&spec)?;
    write_corpus(&out, &utterances)?;

    let rms = |x: &[f64]| (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt();
    println!("class       count  mean_rms");
    let groups: Vec<(String, Vec<&[f64]>)> = std::iter::once(("bonafide".to_string(), None))
        .chain(AttackKind::ALL.iter().map(|k| (k.to_string(), Some(*k))))
        .map(|(name, kind)| {
            let waves = utterances
                .iter()
                .filter(|u| match kind {
                    None => u.label == Label::Bonafide,
                    Some(k) => u.attack == Some(k),
                })
                .map(|u| u.wave.samples())
                .collect();
            (name, waves)
        })
        .collect();
    for (name, waves) in groups {
        let mean = waves.iter().map(|w| rms(w)).sum::<f64>() / waves.len().max(1) as f64;
        println!("{name:<11} {:>5}  {mean:.4}", waves.len());
    }
    println!(
        "{} files and {} written to {}",
        protocol.len(),
        PROTOCOL_FILE,
        out.display()
    );
    Ok(())
}
