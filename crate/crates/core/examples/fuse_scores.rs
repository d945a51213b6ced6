//! Genuine-std normalization and equal-weight fusion of two systems whose
//! errors are partly independent.
//!
//! ```bash
//! cargo run --release --example fuse_scores
//! ```

use antispoof::fusion::{normalize_and_fuse, ScoreSet};
use antispoof::metrics::{compute_eer, Label, TrialRecord};
use antispoof::Result;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn eer(set: &ScoreSet, labels: &[TrialRecord]) -> Result<f64> {
    let records: Vec<TrialRecord> = labels
        .iter()
        .map(|r| TrialRecord::new(r.trial_id.clone(), r.label, set.scores[&r.trial_id]))
        .collect();
    Ok(compute_eer(&records)?.0)
}

fn main() -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let noise = Normal::new(0.0, 1.0).expect("finite parameters");
    let labels: Vec<TrialRecord> = (0..4000)
        .map(|i| {
            TrialRecord::new(
                format!("t{i:04}"),
                if i % 2 == 0 {
                    Label::Bonafide
                } else {
                    Label::Spoof
                },
                0.0,
            )
        })
        .collect();
    // Shared evidence plus system-specific noise, on very different scales.
    let truth: Vec<f64> = labels
        .iter()
        .map(|r| if r.label == Label::Bonafide { 1.5 } else { 0.0 })
        .collect();
    let system = |name: &str, scale: f64, rng: &mut ChaCha8Rng| {
        let scores = labels
            .iter()
            .zip(&truth)
            .map(|(r, t)| (r.trial_id.clone(), scale * (t + noise.sample(rng))));
        ScoreSet::new(name, scores)
    };
    let a = system("fft", 1.0, &mut rng)?;
    let b = system("dct", 40.0, &mut rng)?;
    let fused = normalize_and_fuse(&[a.clone(), b.clone()], &labels)?;
    for s in [&a, &b, &fused] {
        println!("{:<7} EER {:.2}%", s.system_id, 100.0 * eer(s, &labels)?);
    }
    Ok(())
}
