//! Trains a 1/8-scale LCNN on a synthetic corpus and reports dev metrics.
//!
//! ```bash
//! cargo run --release --example train_toy -- fft 20
//! ```

use std::time::Instant;

use antispoof::corpus::{generate_corpus, AttackKind, CorpusSpec, Utterance};
use antispoof::features::{extract_fixed, FeatureKind, FrontEndConfig};
use antispoof::lcnn::{
    train, Dataset, Model, NetworkSpec, Scale, ScoreMethod, TrainConfig, DESK_SCALE_DROPOUT,
};
use antispoof::metrics::{eer_from_scores, Label};
use antispoof::Result;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const FRAMES: usize = 75;

fn dataset(utts: &[Utterance], front: &FrontEndConfig) -> Result<Dataset> {
    let features = utts
        .iter()
        .map(|u| extract_fixed(&u.wave, front, FRAMES))
        .collect::<Result<Vec<_>>>()?;
    let labels = utts
        .iter()
        .map(|u| usize::from(u.label == Label::Spoof))
        .collect();
    Dataset::new(features, labels)
}

fn main() -> Result<()> {
    let mut args = std::env::args().skip(1);
    let kind: FeatureKind = args.next().as_deref().unwrap_or("fft").parse()?;
    let epochs: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(20);

    let corpus = |n, seed, prefix: &str| CorpusSpec {
        n_genuine: n,
        n_spoof: n,
        duration_s: 0.625,
        seed,
        id_prefix: prefix.into(),
        ..CorpusSpec::default()
    };
    let t = Instant::now();
    let (train_utts, _) = generate_corpus(&corpus(400, 1, "TRAIN"))?;
    let (dev_utts, _) = generate_corpus(&corpus(100, 2, "DEV"))?;
    let front = FrontEndConfig::desk_scale(kind);
    let train_set = dataset(&train_utts, &front)?;
    let dev_set = dataset(&dev_utts, &front)?;
    eprintln!("corpus + features: {:.1?}", t.elapsed());

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let spec = NetworkSpec::scaled(Scale::new(1, 8)?, front.output_bins(), FRAMES)?
        .with_dropout(DESK_SCALE_DROPOUT)?;
    let mut model = Model::new(spec, 4, &mut rng)?;
    let cfg = TrainConfig {
        epochs,
        ..TrainConfig::default()
    };
    println!("epoch loss dev_eer_pct dev_min_tdcf");
    let report = train(
        &mut model,
        &train_set,
        Some(&dev_set),
        &cfg,
        &mut rng,
        |log| println!("{log}"),
    )?;
    eprintln!(
        "best epoch {:?}, best dev EER {:.2}%, {:.1?}",
        report.best_epoch,
        100.0 * report.best_dev_eer().unwrap_or(f64::NAN),
        t.elapsed()
    );

    // Per-attack breakdown of the restored (best) model.
    let refs: Vec<_> = dev_set.features.iter().collect();
    let scores = model.score_batch(&refs, ScoreMethod::Cosine)?;
    let bona: Vec<f64> = scores
        .iter()
        .zip(&dev_utts)
        .filter(|(_, u)| u.label == Label::Bonafide)
        .map(|(s, _)| *s)
        .collect();
    for kind in AttackKind::ALL {
        let spoof: Vec<f64> = scores
            .iter()
            .zip(&dev_utts)
            .filter(|(_, u)| u.attack == Some(kind))
            .map(|(s, _)| *s)
            .collect();
        let (eer, _) = eer_from_scores(&bona, &spoof)?;
        eprintln!("  {kind:<10} EER {:.2}%", 100.0 * eer);
    }
    Ok(())
}
