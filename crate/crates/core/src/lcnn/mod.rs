//! Light CNN with max-feature-map activations and an angular-margin head.

mod network;
mod spec;
mod train;

use std::path::Path;

use rand::Rng;

pub use network::{batch_tensor, Layer, Network};
pub use spec::{LayerDesc, NetworkSpec, Scale, DEFAULT_DROPOUT, DESK_SCALE_DROPOUT};
pub use train::{evaluate, train, Dataset, EpochLog, TrainConfig, TrainReport};

use crate::asoftmax::{ASoftmaxHead, LambdaSchedule};
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::tensor::checkpoint::Checkpoint;
use crate::tensor::Tensor;

const META_KEY: &str = "meta.spec";
const HEAD_KEY: &str = "asoftmax_head";

/// How a trial score is read off the head.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ScoreMethod {
    /// `cos θ_genuine − cos θ_spoof`.
    #[default]
    Cosine,
    /// `‖x‖ (cos θ_genuine − cos θ_spoof)`.
    Logit,
}

/// Network plus two-class head: everything needed to score a trial.
#[derive(Debug, Clone)]
pub struct Model {
    pub network: Network,
    pub head: ASoftmaxHead,
}

impl Model {
    pub fn new<R: Rng + ?Sized>(spec: NetworkSpec, margin: u32, rng: &mut R) -> Result<Self> {
        let network = Network::build(spec, rng)?;
        let head = ASoftmaxHead::new(network.embedding_dim(), 2, margin, rng)?;
        Ok(Self { network, head })
    }

    pub fn spec(&self) -> &NetworkSpec {
        self.network.spec()
    }

    pub fn param_count(&self) -> usize {
        self.network.param_count() + self.head.param_count()
    }

    /// Eval-mode embedding of one feature matrix.
    pub fn embed(&mut self, fm: &FeatureMatrix) -> Result<Vec<f64>> {
        let spec = self.network.spec();
        let x = batch_tensor(&[fm], spec.input_bins, spec.input_frames)?;
        Ok(self.network.embed(&x)?.into_values())
    }

    /// Higher means more likely genuine.
    pub fn score_trial(&mut self, fm: &FeatureMatrix) -> Result<f64> {
        self.score_trial_with(fm, ScoreMethod::Cosine)
    }

    pub fn score_trial_with(&mut self, fm: &FeatureMatrix, method: ScoreMethod) -> Result<f64> {
        let e = self.embed(fm)?;
        self.score_embedding(&e, method)
    }

    pub fn score_embedding(&self, embedding: &[f64], method: ScoreMethod) -> Result<f64> {
        match method {
            ScoreMethod::Cosine => self.head.score(embedding),
            ScoreMethod::Logit => self.head.logit_score(embedding),
        }
    }

    /// Scores many trials, batching the forward passes.
    pub fn score_batch(
        &mut self,
        features: &[&FeatureMatrix],
        method: ScoreMethod,
    ) -> Result<Vec<f64>> {
        let (bins, frames) = (self.spec().input_bins, self.spec().input_frames);
        let d = self.network.embedding_dim();
        let mut out = Vec::with_capacity(features.len());
        for chunk in features.chunks(64) {
            let x = batch_tensor(chunk, bins, frames)?;
            let e = self.network.embed(&x)?;
            for row in e.values().chunks_exact(d) {
                out.push(self.score_embedding(row, method)?);
            }
        }
        Ok(out)
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        let spec = self.spec();
        let s = &self.head.schedule;
        let meta = vec![
            spec.input_bins as f64,
            spec.input_frames as f64,
            f64::from(spec.scale.num),
            f64::from(spec.scale.den),
            spec.dropout,
            f64::from(self.head.margin),
            if self.head.strict_margin_all_classes {
                1.0
            } else {
                0.0
            },
            s.start,
            s.min,
            s.decay,
            self.head.iteration() as f64,
        ];
        let mut ckpt = Checkpoint::new();
        ckpt.push(
            META_KEY,
            &Tensor::new(vec![meta.len()], meta).expect("flat vector"),
        );
        for (name, t) in self.network.named_tensors() {
            ckpt.push(name, t);
        }
        ckpt.push(HEAD_KEY, &self.head.weights);
        ckpt
    }

    pub fn from_checkpoint(ckpt: &Checkpoint) -> Result<Self> {
        let meta = ckpt.get(META_KEY)?.values();
        if meta.len() != 11 {
            return Err(Error::InvalidInput(format!(
                "'{META_KEY}' has {} fields, expected 11",
                meta.len()
            )));
        }
        let as_u32 = |v: f64, what: &str| -> Result<u32> {
            if v >= 0.0 && v.fract() == 0.0 && v <= f64::from(u32::MAX) {
                Ok(v as u32)
            } else {
                Err(Error::InvalidInput(format!(
                    "checkpoint {what} {v} is not an integer"
                )))
            }
        };
        let scale = Scale::new(as_u32(meta[2], "scale")?, as_u32(meta[3], "scale")?)?;
        let spec = NetworkSpec::scaled(
            scale,
            as_u32(meta[0], "input bins")? as usize,
            as_u32(meta[1], "input frames")? as usize,
        )?
        .with_dropout(meta[4])?;
        // Weights are overwritten below; the initial draw only fixes shapes.
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(0);
        let mut model = Self::new(spec, as_u32(meta[5], "margin")?, &mut rng)?;
        model.network.load_named(|name| ckpt.get(name))?;
        let head = ckpt.get(HEAD_KEY)?;
        if head.shape() != model.head.weights.shape() {
            return Err(Error::Shape(format!(
                "head weights have shape {:?}, expected {:?}",
                head.shape(),
                model.head.weights.shape()
            )));
        }
        model
            .head
            .weights
            .values_mut()
            .copy_from_slice(head.values());
        model.head.strict_margin_all_classes = meta[6] != 0.0;
        model.head.schedule = LambdaSchedule {
            start: meta[7],
            min: meta[8],
            decay: meta[9],
        };
        if !(meta[10] >= 0.0 && meta[10].fract() == 0.0) {
            return Err(Error::InvalidInput(format!(
                "checkpoint iteration {} is not an integer",
                meta[10]
            )));
        }
        model.head.set_iteration(meta[10] as u64);
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.to_checkpoint().save(path)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_checkpoint(&Checkpoint::load(path)?)
    }
}
