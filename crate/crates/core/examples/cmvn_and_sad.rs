//! Energy-based speech activity detection and cepstral mean/variance
//! normalization on an LFCC front-end.
//!
//! ```bash
//! cargo run --release --example cmvn_and_sad
//! ```

use antispoof::corpus::{generate_corpus, CorpusSpec};
use antispoof::features::{cmvn, energy_sad, extract, lfcc, FrontEndConfig, Waveform};
use antispoof::Result;

fn main() -> Result<()> {
    let spec = CorpusSpec {
        n_genuine: 1,
        n_spoof: 1,
        ..CorpusSpec::default()
    };
    let speech = generate_corpus(&spec)?.0.swap_remove(0).wave;
    // Half a second of silence on both sides.
    let mut samples = vec![0.0; 8000];
    samples.extend_from_slice(speech.samples());
    samples.extend(std::iter::repeat_n(0.0, 8000));
    let wave = Waveform::new(samples, 16_000)?;

    let mut cfg = FrontEndConfig::lfcc();
    let mask = energy_sad(&wave, &cfg)?;
    let voiced = mask.iter().filter(|&&m| m).count();
    println!(
        "SAD at -{} dB: {voiced} of {} frames kept",
        cfg.sad_threshold_db,
        mask.len()
    );
    let trace: String = mask
        .iter()
        .step_by(4)
        .map(|&m| if m { '#' } else { '.' })
        .collect();
    println!("{trace}");

    let raw = lfcc(&wave, &cfg)?;
    let normalized = cmvn(&raw)?;
    for (name, fm) in [("raw", &raw), ("cmvn", &normalized)] {
        let row = fm.row(1);
        let mean = row.iter().sum::<f64>() / row.len() as f64;
        let var = row.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / row.len() as f64;
        println!("{name:<4} c1 mean {mean:>8.4} variance {var:>8.4}");
    }

    cfg.apply_sad = true;
    cfg.apply_cmvn = true;
    let fm = extract(&wave, &cfg)?;
    println!("LFCC with SAD + CMVN: {} x {}", fm.bins(), fm.frames());
    Ok(())
}
