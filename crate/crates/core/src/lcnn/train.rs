use std::fmt;

use rand::seq::SliceRandom;
use rand::Rng;

use super::network::batch_tensor;
use super::{Model, ScoreMethod};
use crate::asoftmax::{GENUINE, SPOOF};
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::metrics::{eer_from_scores, min_tdcf_from_scores, TdcfParams};
use crate::tensor::{Mode, Tensor};

/// Labeled feature matrices; label `0` is genuine, `1` spoof.
#[derive(Debug, Clone, Default)]
pub struct Dataset {
    pub features: Vec<FeatureMatrix>,
    pub labels: Vec<usize>,
}

impl Dataset {
    pub fn new(features: Vec<FeatureMatrix>, labels: Vec<usize>) -> Result<Self> {
        if features.len() != labels.len() {
            return Err(Error::InvalidInput(format!(
                "{} feature matrices but {} labels",
                features.len(),
                labels.len()
            )));
        }
        if let Some(bad) = labels.iter().find(|&&l| l != GENUINE && l != SPOOF) {
            return Err(Error::InvalidInput(format!(
                "label {bad} is neither genuine nor spoof"
            )));
        }
        Ok(Self { features, labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn has_both_classes(&self) -> bool {
        self.labels.contains(&GENUINE) && self.labels.contains(&SPOOF)
    }
}

/// SGD-with-momentum hyper-parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub weight_decay: f64,
    /// Factor applied to the learning rate when the dev EER plateaus.
    pub lr_decay: f64,
    /// Epochs without a dev-EER improvement before decaying.
    pub patience: usize,
    /// Trailing batches smaller than this are skipped (batch statistics
    /// need at least two samples).
    pub min_batch: usize,
    /// Restore the epoch with the lowest dev EER when training ends.
    pub keep_best: bool,
    pub tdcf: TdcfParams,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 20,
            batch_size: 32,
            learning_rate: 0.01,
            momentum: 0.9,
            weight_decay: 0.0,
            lr_decay: 0.5,
            patience: 2,
            min_batch: 2,
            keep_best: true,
            tdcf: TdcfParams::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size < 2 {
            return Err(Error::Config("batch size must be at least 2".into()));
        }
        if !(self.learning_rate >= 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::Config(format!(
                "bad learning rate {}",
                self.learning_rate
            )));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::Config(format!(
                "momentum {} outside [0, 1)",
                self.momentum
            )));
        }
        if !(self.lr_decay > 0.0 && self.lr_decay <= 1.0) {
            return Err(Error::Config(format!(
                "lr decay {} outside (0, 1]",
                self.lr_decay
            )));
        }
        if !(self.weight_decay >= 0.0) {
            return Err(Error::Config("weight decay must be non-negative".into()));
        }
        self.tdcf.validate()
    }
}

/// One line of the training log.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochLog {
    pub epoch: usize,
    pub loss: f64,
    /// Fraction in `[0, 1]`; `None` without a dev set.
    pub dev_eer: Option<f64>,
    pub dev_min_tdcf: Option<f64>,
    pub learning_rate: f64,
}

impl fmt::Display for EpochLog {
    /// `epoch loss dev_eer dev_min_tdcf`, EER in percent.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let opt =
            |v: Option<f64>, scale: f64| v.map_or("-".to_string(), |v| format!("{:.4}", v * scale));
        write!(
            f,
            "{} {:.6} {} {}",
            self.epoch,
            self.loss,
            opt(self.dev_eer, 100.0),
            opt(self.dev_min_tdcf, 1.0)
        )
    }
}

#[derive(Debug, Clone, Default)]
pub struct TrainReport {
    pub epochs: Vec<EpochLog>,
    /// Epoch whose parameters the model holds after training, when a dev set
    /// was used and `keep_best` is on.
    pub best_epoch: Option<usize>,
}

impl TrainReport {
    pub fn best_dev_eer(&self) -> Option<f64> {
        self.epochs
            .iter()
            .filter_map(|e| e.dev_eer)
            .reduce(f64::min)
    }

    /// Running minimum of the dev EER trace.
    pub fn best_so_far(&self) -> Vec<f64> {
        let mut best = f64::INFINITY;
        self.epochs
            .iter()
            .filter_map(|e| e.dev_eer)
            .map(|e| {
                best = best.min(e);
                best
            })
            .collect()
    }
}

/// Dev EER and min t-DCF of `model` on `data`.
pub fn evaluate(model: &mut Model, data: &Dataset, tdcf: &TdcfParams) -> Result<(f64, f64)> {
    let refs: Vec<&FeatureMatrix> = data.features.iter().collect();
    let scores = model.score_batch(&refs, ScoreMethod::Cosine)?;
    let mut bona = Vec::new();
    let mut spoof = Vec::new();
    for (s, &l) in scores.iter().zip(&data.labels) {
        if l == GENUINE {
            bona.push(*s);
        } else {
            spoof.push(*s);
        }
    }
    let (eer, _) = eer_from_scores(&bona, &spoof)?;
    let (tdcf, _) = min_tdcf_from_scores(&bona, &spoof, tdcf)?;
    Ok((eer, tdcf))
}

/// Mini-batch training of network and head on the angular-margin loss.
///
/// `on_epoch` sees each log line as soon as the epoch finishes. With a dev
/// set the learning rate is multiplied by `lr_decay` after `patience` epochs
/// without a new best dev EER, and (with `keep_best`) the best epoch's
/// parameters are restored at the end.
pub fn train<R: Rng + ?Sized>(
    model: &mut Model,
    train_set: &Dataset,
    dev_set: Option<&Dataset>,
    cfg: &TrainConfig,
    rng: &mut R,
    mut on_epoch: impl FnMut(&EpochLog),
) -> Result<TrainReport> {
    cfg.validate()?;
    if !train_set.has_both_classes() {
        return Err(Error::InvalidInput(
            "training data must contain both genuine and spoof trials".into(),
        ));
    }
    if let Some(dev) = dev_set {
        if !dev.has_both_classes() {
            return Err(Error::InvalidInput(
                "dev data must contain both genuine and spoof trials".into(),
            ));
        }
    }
    let (bins, frames) = (model.spec().input_bins, model.spec().input_frames);
    let mut velocity: Vec<Vec<f64>> = Vec::new();
    let mut lr = cfg.learning_rate;
    let mut report = TrainReport::default();
    let mut best_eer: Option<f64> = None;
    let mut snapshot: Option<Model> = None;
    let mut stale = 0;
    let mut order: Vec<usize> = (0..train_set.len()).collect();

    for epoch in 1..=cfg.epochs {
        order.shuffle(rng);
        let mut loss_sum = 0.0;
        let mut seen = 0usize;
        for batch in order.chunks(cfg.batch_size) {
            if batch.len() < cfg.min_batch.max(2) {
                continue;
            }
            let feats: Vec<&FeatureMatrix> =
                batch.iter().map(|&i| &train_set.features[i]).collect();
            let labels: Vec<usize> = batch.iter().map(|&i| train_set.labels[i]).collect();
            let x = batch_tensor(&feats, bins, frames)?;
            let loss = step(model, &x, &labels, lr, cfg, &mut velocity, rng)?;
            loss_sum += loss * batch.len() as f64;
            seen += batch.len();
        }
        let loss = if seen > 0 {
            loss_sum / seen as f64
        } else {
            f64::NAN
        };

        let (dev_eer, dev_tdcf) = match dev_set {
            Some(dev) => {
                let (e, t) = evaluate(model, dev, &cfg.tdcf)?;
                (Some(e), Some(t))
            }
            None => (None, None),
        };
        let log = EpochLog {
            epoch,
            loss,
            dev_eer,
            dev_min_tdcf: dev_tdcf,
            learning_rate: lr,
        };
        on_epoch(&log);
        report.epochs.push(log);

        if let Some(eer) = dev_eer {
            if best_eer.map_or(true, |b| eer < b) {
                best_eer = Some(eer);
                if cfg.keep_best {
                    snapshot = Some(model.clone());
                    report.best_epoch = Some(epoch);
                }
                stale = 0;
            } else {
                stale += 1;
                if stale >= cfg.patience.max(1) {
                    lr *= cfg.lr_decay;
                    stale = 0;
                }
            }
        }
    }
    if let Some(best) = snapshot {
        *model = best;
    }
    Ok(report)
}

/// One forward/backward pass and parameter update; returns the batch loss.
fn step<R: Rng + ?Sized>(
    model: &mut Model,
    x: &Tensor,
    labels: &[usize],
    lr: f64,
    cfg: &TrainConfig,
    velocity: &mut Vec<Vec<f64>>,
    rng: &mut R,
) -> Result<f64> {
    model.network.zero_grad();
    model.head.weights.zero_grad();
    let emb = model.network.forward(x, Mode::Train, rng)?;
    let out = model.head.loss(&emb, labels)?;
    if !out.loss.is_finite() {
        return Err(Error::Numerical(format!(
            "training loss became {}",
            out.loss
        )));
    }
    model.network.backward(&out.grad_embeddings)?;
    model.head.weights.accumulate_grad(&out.grad_weights);
    model.head.advance();
    if lr == 0.0 {
        return Ok(out.loss);
    }

    let mut params = model.network.parameters_mut();
    params.push(&mut model.head.weights);
    if velocity.is_empty() {
        *velocity = params.iter().map(|p| vec![0.0; p.len()]).collect();
    }
    for (p, v) in params.into_iter().zip(velocity.iter_mut()) {
        let grad = p
            .grad()
            .map(<[f64]>::to_vec)
            .unwrap_or_else(|| vec![0.0; p.len()]);
        for ((w, vel), g) in p.values_mut().iter_mut().zip(v.iter_mut()).zip(grad) {
            *vel = cfg.momentum * *vel + g + cfg.weight_decay * *w;
            *w -= lr * *vel;
        }
    }
    model.head.renormalize_columns()?;
    Ok(out.loss)
}
