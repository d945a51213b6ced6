use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{
    EvaluateArgs, ExtractArgs, FuseArgs, Preset, ScoreArgs, SynthArgs, TrainArgs, EXIT_OK,
    EXIT_PARTIAL,
};
use crate::asoftmax::{GENUINE, SPOOF};
use crate::corpus::{generate_corpus, parse_protocol, read_wav, write_corpus, CorpusSpec};
use crate::error::{Error, Result};
use crate::features::io::{read_features, write_features, FEATURE_EXTENSION};
use crate::features::{extract_fixed, FeatureMatrix, FrontEndConfig};
use crate::fusion::{normalize_and_fuse, ScoreSet};
use crate::lcnn::{self, Dataset, Model, NetworkSpec, TrainConfig};
use crate::metrics::{
    compute_eer, compute_min_tdcf, join_scores, read_scores, read_tdcf_params, score_histograms,
    write_scores, Label, TdcfParams, TrialRecord,
};

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |e| Error::io(path, e)
}

/// Files in `dir` with the given extension, sorted by name.
fn list_files(dir: &Path, extension: &str) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for entry in fs::read_dir(dir).map_err(io_err(dir))? {
        let path = entry.map_err(io_err(dir))?.path();
        let matches = path
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| e.eq_ignore_ascii_case(extension));
        if matches && path.is_file() {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

fn load_tdcf(path: Option<&Path>, err: &mut dyn Write) -> Result<TdcfParams> {
    match path {
        Some(p) => read_tdcf_params(p),
        None => {
            let p = TdcfParams::default();
            let _ = writeln!(
                err,
                "t-DCF: default parameters (illustrative ASV rates: miss {}, fa {}, spoof fa {})",
                p.asv_miss_rate, p.asv_fa_rate, p.asv_spoof_fa_rate
            );
            Ok(p)
        }
    }
}

pub(super) fn synth(args: &SynthArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let spec = CorpusSpec {
        n_genuine: args.n_genuine,
        n_spoof: args.n_spoof,
        duration_s: args.duration,
        sample_rate_hz: args.sample_rate,
        seed: args.seed,
        attack_kinds: args.attacks.clone(),
        id_prefix: args.id_prefix.clone(),
    };
    let (utterances, _) = generate_corpus(&spec)?;
    write_corpus(&args.out_dir, &utterances)?;
    let _ = writeln!(
        err,
        "wrote {} utterances to {}",
        utterances.len(),
        args.out_dir.display()
    );
    writeln!(out, "{} {}", spec.n_genuine, spec.n_spoof).map_err(io_err(Path::new("<stdout>")))?;
    Ok(EXIT_OK)
}

pub(super) fn front_end(args: &ExtractArgs) -> Result<FrontEndConfig> {
    let mut cfg = match args.preset {
        Preset::Reference => FrontEndConfig::for_kind(args.features),
        Preset::Desk => FrontEndConfig::desk_scale(args.features),
    };
    cfg.apply_cmvn = args.cmvn;
    cfg.apply_sad = args.sad;
    if let Some(w) = args.window_len {
        cfg.window_len_samples = w;
    }
    cfg.validate()?;
    if args.frames == 0 {
        return Err(Error::Config("--frames must be positive".into()));
    }
    Ok(cfg)
}

pub(super) fn extract(args: &ExtractArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let cfg = front_end(args)?;
    let inputs = list_files(&args.in_dir, "wav")?;
    fs::create_dir_all(&args.out_dir).map_err(io_err(&args.out_dir))?;
    let results: Vec<Result<()>> = inputs
        .par_iter()
        .map(|path| {
            let wave = read_wav(path)?;
            let fm = extract_fixed(&wave, &cfg, args.frames)?;
            let target = args
                .out_dir
                .join(format!("{}.{FEATURE_EXTENSION}", stem(path)));
            write_features(&target, &fm)
        })
        .collect();
    let mut failed = 0;
    for (path, r) in inputs.iter().zip(&results) {
        match r {
            Ok(()) => {
                let _ = writeln!(err, "ok {}", path.display());
            }
            Err(e) => {
                failed += 1;
                let _ = writeln!(err, "failed {}: {e}", path.display());
            }
        }
    }
    writeln!(out, "{} {}", inputs.len() - failed, failed).map_err(io_err(Path::new("<stdout>")))?;
    Ok(if failed == 0 { EXIT_OK } else { EXIT_PARTIAL })
}

/// Labeled trials of `protocol` with their feature matrices from `dir`.
fn load_dataset(dir: &Path, protocol: &Path) -> Result<Dataset> {
    let records = parse_protocol(protocol)?;
    let labeled: Vec<&TrialRecord> = records
        .iter()
        .filter(|r| r.label != Label::Unknown)
        .collect();
    let features = labeled
        .par_iter()
        .map(|r| {
            let path = dir.join(format!("{}.{FEATURE_EXTENSION}", r.trial_id));
            if !path.is_file() {
                return Err(Error::InvalidInput(format!(
                    "no feature file for trial '{}' ({})",
                    r.trial_id,
                    path.display()
                )));
            }
            read_features(&path)
        })
        .collect::<Result<Vec<_>>>()?;
    let labels = labeled
        .iter()
        .map(|r| {
            if r.label == Label::Bonafide {
                GENUINE
            } else {
                SPOOF
            }
        })
        .collect();
    Dataset::new(features, labels)
}

fn input_shape(data: &Dataset) -> Result<(usize, usize)> {
    let first = data
        .features
        .first()
        .ok_or_else(|| Error::InvalidInput("no labeled training trials".into()))?;
    let shape = (first.bins(), first.frames());
    if let Some(bad) = data
        .features
        .iter()
        .find(|f| (f.bins(), f.frames()) != shape)
    {
        return Err(Error::Shape(format!(
            "feature matrices differ in shape: {}x{} vs {}x{}",
            shape.0,
            shape.1,
            bad.bins(),
            bad.frames()
        )));
    }
    Ok(shape)
}

pub(super) fn train(args: &TrainArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let train_set = load_dataset(&args.features_dir, &args.protocol)?;
    if !train_set.has_both_classes() {
        return Err(Error::InvalidInput(
            "training protocol must contain both bonafide and spoof trials".into(),
        ));
    }
    let dev_set = match &args.dev_protocol {
        Some(p) => Some(load_dataset(
            args.dev_features_dir
                .as_deref()
                .unwrap_or(&args.features_dir),
            p,
        )?),
        None => None,
    };
    let (bins, frames) = input_shape(&train_set)?;
    let tdcf = match (&args.tdcf_params, &dev_set) {
        (Some(p), _) => read_tdcf_params(p)?,
        (None, Some(_)) => load_tdcf(None, err)?,
        (None, None) => TdcfParams::default(),
    };
    let cfg = TrainConfig {
        epochs: args.epochs,
        batch_size: args.batch_size,
        learning_rate: args.lr,
        momentum: args.momentum,
        weight_decay: args.weight_decay,
        lr_decay: args.lr_decay,
        patience: args.patience,
        tdcf,
        ..TrainConfig::default()
    };
    cfg.validate()?;
    let spec = NetworkSpec::scaled(args.scale, bins, frames)?.with_dropout(args.dropout)?;
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let mut model = Model::new(spec, args.margin, &mut rng)?;
    model.head.strict_margin_all_classes = args.strict_margin;
    let _ = writeln!(
        err,
        "training {} trials ({} dev) on {bins}x{frames} inputs, scale {}, {} parameters",
        train_set.len(),
        dev_set.as_ref().map_or(0, Dataset::len),
        args.scale,
        model.param_count()
    );
    let _ = writeln!(err, "epoch loss dev_eer_pct dev_min_tdcf");
    let mut log_lines = Vec::new();
    let mut write_failed = None;
    let report = lcnn::train(
        &mut model,
        &train_set,
        dev_set.as_ref(),
        &cfg,
        &mut rng,
        |line| {
            if let Err(e) = writeln!(out, "{line}") {
                write_failed.get_or_insert(e);
            }
            let _ = out.flush();
            log_lines.push(line.to_string());
        },
    )?;
    if let Some(e) = write_failed {
        return Err(Error::io("<stdout>", e));
    }
    if let Some(path) = &args.log {
        let mut text = log_lines.join("\n");
        text.push('\n');
        fs::write(path, text).map_err(io_err(path))?;
    }
    model.save(&args.ckpt_out)?;
    if let Some(best) = report.best_epoch {
        let _ = writeln!(err, "kept epoch {best} (lowest dev EER)");
    }
    let _ = writeln!(err, "checkpoint written to {}", args.ckpt_out.display());
    Ok(EXIT_OK)
}

/// Scores of every feature file in `dir`, keyed by file stem and sorted.
pub fn score_directory(
    model: &mut Model,
    dir: &Path,
    method: lcnn::ScoreMethod,
) -> Result<Vec<(String, f64)>> {
    let files = list_files(dir, FEATURE_EXTENSION)?;
    let features = files
        .par_iter()
        .map(|p| read_features(p))
        .collect::<Result<Vec<FeatureMatrix>>>()?;
    let refs: Vec<&FeatureMatrix> = features.iter().collect();
    let scores = model.score_batch(&refs, method)?;
    Ok(files.iter().map(|p| stem(p)).zip(scores).collect())
}

pub(super) fn score(args: &ScoreArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let mut model = Model::load(&args.ckpt)?;
    let scores = score_directory(&mut model, &args.features_dir, args.score_method)?;
    write_scores(&args.out, &scores)?;
    let _ = writeln!(err, "scored {} trials", scores.len());
    writeln!(out, "{}", scores.len()).map_err(io_err(Path::new("<stdout>")))?;
    Ok(EXIT_OK)
}

pub(super) fn evaluate(
    args: &EvaluateArgs,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<i32> {
    let scores = read_scores(&args.scores)?;
    let protocol = parse_protocol(&args.protocol)?;
    let records = join_scores(&scores, &protocol)?;
    let params = load_tdcf(args.tdcf_params.as_deref(), err)?;
    let (eer, _) = compute_eer(&records)?;
    let (tdcf, _) = compute_min_tdcf(&records, &params)?;
    let stdout = Path::new("<stdout>");
    writeln!(out, "{:.4} {:.4}", 100.0 * eer, tdcf).map_err(io_err(stdout))?;
    if args.hist {
        let h = score_histograms(&records, args.hist_bins)?;
        write!(out, "{}", h.to_text()).map_err(io_err(stdout))?;
    }
    Ok(EXIT_OK)
}

/// `(system_id, score file)` pairs; relative paths resolve against the
/// manifest's directory.
pub fn parse_manifest(path: &Path) -> Result<Vec<(String, PathBuf)>> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let base = path.parent().unwrap_or(Path::new(""));
    let mut systems = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let (id, file) = match fields.as_slice() {
            [file] => (stem(Path::new(file)), *file),
            [id, file] => (id.to_string(), *file),
            _ => {
                return Err(Error::parse(
                    path,
                    i + 1,
                    "expected 'system_id path' or 'path'",
                ))
            }
        };
        systems.push((id, base.join(file)));
    }
    if systems.is_empty() {
        return Err(Error::InvalidInput(format!(
            "{}: manifest lists no systems",
            path.display()
        )));
    }
    Ok(systems)
}

pub(super) fn fuse(args: &FuseArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let manifest = parse_manifest(&args.manifest)?;
    let systems = manifest
        .iter()
        .map(|(id, path)| ScoreSet::new(id.clone(), read_scores(path)?))
        .collect::<Result<Vec<_>>>()?;
    let dev = parse_protocol(&args.dev_protocol)?;
    let fused = normalize_and_fuse(&systems, &dev)?;
    write_scores(&args.out, &fused.to_pairs())?;
    let _ = writeln!(
        err,
        "fused {} systems over {} trials",
        systems.len(),
        fused.len()
    );
    writeln!(out, "{}", fused.len()).map_err(io_err(Path::new("<stdout>")))?;
    Ok(EXIT_OK)
}
