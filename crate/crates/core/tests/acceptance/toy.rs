//! End-to-end runs on the synthetic corpus at 1/8 scale.

use std::path::Path;
use std::time::{Duration, Instant};

use antispoof::corpus::{generate_corpus, CorpusSpec, Utterance};
use antispoof::features::{extract_fixed, FeatureKind, FrontEndConfig};
use antispoof::fusion::{normalize_and_fuse, ScoreSet};
use antispoof::lcnn::{
    train, Dataset, Model, NetworkSpec, Scale, ScoreMethod, TrainConfig, TrainReport,
    DESK_SCALE_DROPOUT,
};
use antispoof::metrics::{compute_eer, Label, TrialRecord};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const FRAMES: usize = 75;
pub const EPOCHS: usize = 20;

pub struct Corpus {
    pub train: Vec<Utterance>,
    pub dev: Vec<Utterance>,
    /// Held out from training and model selection.
    pub eval: Vec<Utterance>,
}

fn spec(n: usize, seed: u64, prefix: &str) -> CorpusSpec {
    CorpusSpec {
        n_genuine: n,
        n_spoof: n,
        duration_s: 0.625,
        seed,
        id_prefix: prefix.into(),
        ..CorpusSpec::default()
    }
}

impl Corpus {
    pub fn generate() -> Corpus {
        Corpus {
            train: generate_corpus(&spec(400, 1, "TRAIN")).unwrap().0,
            dev: generate_corpus(&spec(100, 2, "DEV")).unwrap().0,
            eval: generate_corpus(&spec(300, 3, "EVAL")).unwrap().0,
        }
    }

    pub fn empty() -> Corpus {
        Corpus {
            train: Vec::new(),
            dev: Vec::new(),
            eval: Vec::new(),
        }
    }
}

fn dataset(utts: &[Utterance], front: &FrontEndConfig) -> Dataset {
    let features = utts
        .iter()
        .map(|u| extract_fixed(&u.wave, front, FRAMES).unwrap())
        .collect();
    let labels = utts
        .iter()
        .map(|u| usize::from(u.label == Label::Spoof))
        .collect();
    Dataset::new(features, labels).unwrap()
}

pub struct System {
    pub kind: FeatureKind,
    pub report: TrainReport,
    pub elapsed: Duration,
    pub dev_scores: Vec<f64>,
    pub eval_scores: Vec<f64>,
}

/// Extracts features, trains with a fixed seed and scores dev and eval.
pub fn run_system(corpus: &Corpus, kind: FeatureKind) -> System {
    let start = Instant::now();
    let front = FrontEndConfig::desk_scale(kind);
    let train_set = dataset(&corpus.train, &front);
    let dev_set = dataset(&corpus.dev, &front);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let spec = NetworkSpec::scaled(Scale::new(1, 8).unwrap(), front.output_bins(), FRAMES)
        .unwrap()
        .with_dropout(DESK_SCALE_DROPOUT)
        .unwrap();
    let mut model = Model::new(spec, 4, &mut rng).unwrap();
    let cfg = TrainConfig {
        epochs: EPOCHS,
        ..TrainConfig::default()
    };
    let report = train(
        &mut model,
        &train_set,
        Some(&dev_set),
        &cfg,
        &mut rng,
        |log| {
            eprintln!("    {kind} {log}");
        },
    )
    .unwrap();
    let elapsed = start.elapsed();
    let mut score = |ds: &Dataset| {
        let refs: Vec<_> = ds.features.iter().collect();
        model.score_batch(&refs, ScoreMethod::Cosine).unwrap()
    };
    let dev_scores = score(&dev_set);
    let eval_scores = score(&dataset(&corpus.eval, &front));
    System {
        kind,
        report,
        elapsed,
        dev_scores,
        eval_scores,
    }
}

pub fn records(utts: &[Utterance], scores: &[f64]) -> Vec<TrialRecord> {
    utts.iter()
        .zip(scores)
        .map(|(u, &s)| TrialRecord::new(u.trial_id.clone(), u.label, s))
        .collect()
}

/// Eval EERs of each system and of their genuine-std normalized fusion
/// (normalization statistics from dev).
pub fn fusion_eers(corpus: &Corpus, systems: &[&System]) -> (Vec<f64>, f64) {
    let dev_labels = records(&corpus.dev, &vec![0.0; corpus.dev.len()]);
    let sets: Vec<ScoreSet> = systems
        .iter()
        .map(|s| {
            let pairs = corpus
                .dev
                .iter()
                .zip(&s.dev_scores)
                .chain(corpus.eval.iter().zip(&s.eval_scores))
                .map(|(u, &v)| (u.trial_id.clone(), v));
            ScoreSet::new(s.kind.name(), pairs).unwrap()
        })
        .collect();
    let fused = normalize_and_fuse(&sets, &dev_labels).unwrap();
    let fused_eval: Vec<f64> = corpus
        .eval
        .iter()
        .map(|u| fused.scores[&u.trial_id])
        .collect();
    let singles = systems
        .iter()
        .map(|s| {
            compute_eer(&records(&corpus.eval, &s.eval_scores))
                .unwrap()
                .0
        })
        .collect();
    (
        singles,
        compute_eer(&records(&corpus.eval, &fused_eval)).unwrap().0,
    )
}

fn cli(args: &[&str]) -> (i32, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = antispoof::cli::run_with(args.iter().map(|s| s.to_string()), &mut out, &mut err);
    assert_eq!(code, 0, "{args:?}: {}", String::from_utf8_lossy(&err));
    (code, String::from_utf8(out).unwrap())
}

/// Runs synth → extract → train → score through the command line in `dir`
/// and returns the checkpoint, score file and training log bytes.
pub fn cli_pipeline(dir: &Path) -> [Vec<u8>; 3] {
    let p = |name: &str| dir.join(name).to_string_lossy().into_owned();
    for (sub, n, seed, prefix) in [("train", "24", "11", "TR"), ("dev", "10", "12", "DV")] {
        cli(&[
            "antispoof",
            "synth",
            "--out-dir",
            &p(&format!("{sub}_wav")),
            "--n-genuine",
            n,
            "--n-spoof",
            n,
            "--duration",
            "0.625",
            "--seed",
            seed,
            "--id-prefix",
            prefix,
        ]);
        cli(&[
            "antispoof",
            "extract",
            "--in-dir",
            &p(&format!("{sub}_wav")),
            "--out-dir",
            &p(&format!("{sub}_feat")),
            "--features",
            "fft",
            "--preset",
            "desk",
            "--frames",
            "75",
        ]);
    }
    cli(&[
        "antispoof",
        "train",
        "--features-dir",
        &p("train_feat"),
        "--protocol",
        &p("train_wav/protocol.txt"),
        "--dev-features-dir",
        &p("dev_feat"),
        "--dev-protocol",
        &p("dev_wav/protocol.txt"),
        "--scale",
        "1/8",
        "--epochs",
        "2",
        "--seed",
        "5",
        "--dropout",
        "0.25",
        "--ckpt-out",
        &p("model.ckpt"),
        "--log",
        &p("train.log"),
    ]);
    cli(&[
        "antispoof",
        "score",
        "--ckpt",
        &p("model.ckpt"),
        "--features-dir",
        &p("dev_feat"),
        "--out",
        &p("scores.txt"),
    ]);
    ["model.ckpt", "scores.txt", "train.log"].map(|f| std::fs::read(dir.join(f)).unwrap())
}
