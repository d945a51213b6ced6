//! Score-level fusion: each system's scores are divided by the standard
//! deviation of its bona fide dev scores, then systems are averaged with
//! equal weights.

use std::collections::{BTreeMap, HashMap};

use crate::error::{Error, Result};
use crate::metrics::{Label, TrialRecord};

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreSet {
    pub system_id: String,
    pub scores: BTreeMap<String, f64>,
}

impl ScoreSet {
    pub fn new(
        system_id: impl Into<String>,
        scores: impl IntoIterator<Item = (String, f64)>,
    ) -> Result<Self> {
        let system_id = system_id.into();
        let mut map = BTreeMap::new();
        for (id, s) in scores {
            if !s.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "{system_id}: non-finite score for {id}"
                )));
            }
            if map.insert(id.clone(), s).is_some() {
                return Err(Error::InvalidInput(format!(
                    "{system_id}: duplicate trial {id}"
                )));
            }
        }
        if map.is_empty() {
            return Err(Error::InvalidInput(format!("{system_id}: empty score set")));
        }
        Ok(Self {
            system_id,
            scores: map,
        })
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn to_pairs(&self) -> Vec<(String, f64)> {
        self.scores.iter().map(|(k, v)| (k.clone(), *v)).collect()
    }
}

/// Sample standard deviation (`n - 1` denominator).
pub fn sample_std(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

/// Divides every score by the sample std of the scores whose dev label is
/// bona fide. No centering.
pub fn genuine_std_normalize(scores: &ScoreSet, dev_labels: &[TrialRecord]) -> Result<ScoreSet> {
    let labels: HashMap<&str, Label> = dev_labels
        .iter()
        .map(|r| (r.trial_id.as_str(), r.label))
        .collect();
    let genuine: Vec<f64> = scores
        .scores
        .iter()
        .filter(|(id, _)| labels.get(id.as_str()) == Some(&Label::Bonafide))
        .map(|(_, &s)| s)
        .collect();
    if genuine.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "{}: {} bona fide dev trials, need at least 2",
            scores.system_id,
            genuine.len()
        )));
    }
    let std = sample_std(&genuine);
    if !(std > 0.0) {
        return Err(Error::InvalidInput(format!(
            "{}: bona fide scores have zero spread",
            scores.system_id
        )));
    }
    Ok(ScoreSet {
        system_id: scores.system_id.clone(),
        scores: scores
            .scores
            .iter()
            .map(|(k, v)| (k.clone(), v / std))
            .collect(),
    })
}

/// Per-trial arithmetic mean over systems covering the same trials.
pub fn fuse_equal_weights(systems: &[ScoreSet]) -> Result<ScoreSet> {
    let first = systems
        .first()
        .ok_or_else(|| Error::InvalidInput("nothing to fuse".into()))?;
    for s in &systems[1..] {
        if s.scores.len() != first.scores.len()
            || s.scores
                .keys()
                .zip(first.scores.keys())
                .any(|(a, b)| a != b)
        {
            return Err(Error::InvalidInput(format!(
                "systems '{}' and '{}' cover different trials",
                first.system_id, s.system_id
            )));
        }
    }
    let k = systems.len() as f64;
    let fused = first
        .scores
        .keys()
        .map(|id| {
            let sum: f64 = systems.iter().map(|s| s.scores[id]).sum();
            (id.clone(), sum / k)
        })
        .collect();
    Ok(ScoreSet {
        system_id: "fusion".into(),
        scores: fused,
    })
}

/// Normalizes every system with the dev labels, then fuses.
pub fn normalize_and_fuse(systems: &[ScoreSet], dev_labels: &[TrialRecord]) -> Result<ScoreSet> {
    let normalized = systems
        .iter()
        .map(|s| genuine_std_normalize(s, dev_labels))
        .collect::<Result<Vec<_>>>()?;
    fuse_equal_weights(&normalized)
}
