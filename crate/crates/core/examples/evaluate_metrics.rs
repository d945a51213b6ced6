//! EER, min-tDCF and score histograms for two overlapping Gaussian score
//! distributions.
//!
//! ```bash
//! cargo run --release --example evaluate_metrics -- [separation]
//! ```

use antispoof::metrics::{
    compute_eer, compute_min_tdcf, score_histograms, Label, TdcfParams, TrialRecord,
};
use antispoof::Result;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn main() -> Result<()> {
    let separation: f64 = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(2.0);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let bona = Normal::new(separation, 1.0).expect("finite parameters");
    let spoof = Normal::new(0.0, 1.0).expect("finite parameters");
    let mut records = Vec::new();
    for i in 0..2000 {
        records.push(TrialRecord::new(
            format!("B{i}"),
            Label::Bonafide,
            bona.sample(&mut rng),
        ));
        records.push(TrialRecord::new(
            format!("S{i}"),
            Label::Spoof,
            spoof.sample(&mut rng),
        ));
    }

    let params = TdcfParams::default();
    let (c1, c2) = params.weights()?;
    let (eer, eer_threshold) = compute_eer(&records)?;
    let (tdcf, tdcf_threshold) = compute_min_tdcf(&records, &params)?;
    println!(
        "separation {separation}: EER {:.2}% at {eer_threshold:.3}",
        100.0 * eer
    );
    println!("min-tDCF {tdcf:.4} at {tdcf_threshold:.3} (C1 {c1:.4}, C2 {c2:.4})");
    print!("{}", score_histograms(&records, 12)?.to_text());
    Ok(())
}
