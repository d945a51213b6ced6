//! Detection metrics: equal error rate, normalized minimum tandem detection
//! cost, and per-class score histograms.
//!
//! Convention: a trial is accepted as bona fide when `score >= threshold`, so
//! higher scores mean "more genuine". Thresholds are swept over every
//! observed score plus `±∞`.

pub mod io;

use std::fmt::Write as _;
use std::str::FromStr;

use crate::error::{Error, Result};

pub use io::{join_scores, read_scores, read_tdcf_params, write_scores};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Label {
    Bonafide,
    Spoof,
    Unknown,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Bonafide => "bonafide",
            Label::Spoof => "spoof",
            Label::Unknown => "unknown",
        }
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bonafide" | "genuine" => Ok(Label::Bonafide),
            "spoof" => Ok(Label::Spoof),
            "unknown" | "-" => Ok(Label::Unknown),
            other => Err(Error::InvalidInput(format!("unknown label '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub trial_id: String,
    pub label: Label,
    pub attack_id: Option<String>,
    pub score: f64,
}

impl TrialRecord {
    pub fn new(trial_id: impl Into<String>, label: Label, score: f64) -> Self {
        Self {
            trial_id: trial_id.into(),
            label,
            attack_id: None,
            score,
        }
    }
}

/// Bona fide and spoof scores of the labeled records, in input order.
pub fn split_by_label(records: &[TrialRecord]) -> (Vec<f64>, Vec<f64>) {
    let mut bona = Vec::new();
    let mut spoof = Vec::new();
    for r in records {
        match r.label {
            Label::Bonafide => bona.push(r.score),
            Label::Spoof => spoof.push(r.score),
            Label::Unknown => {}
        }
    }
    (bona, spoof)
}

/// One point of the threshold sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatingPoint {
    pub threshold: f64,
    /// Fraction of spoof trials accepted.
    pub far: f64,
    /// Fraction of bona fide trials rejected.
    pub frr: f64,
}

/// Operating points at `-∞`, every distinct score in ascending order, and
/// `+∞`.
pub fn operating_points(bona: &[f64], spoof: &[f64]) -> Result<Vec<OperatingPoint>> {
    if bona.is_empty() || spoof.is_empty() {
        return Err(Error::InvalidInput(
            "need at least one bona fide and one spoof trial".into(),
        ));
    }
    if bona.iter().chain(spoof).any(|s| !s.is_finite()) {
        return Err(Error::InvalidInput("scores must be finite".into()));
    }
    let mut all: Vec<(f64, bool)> = bona
        .iter()
        .map(|&s| (s, true))
        .chain(spoof.iter().map(|&s| (s, false)))
        .collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (nb, ns) = (bona.len() as f64, spoof.len() as f64);
    let mut points = Vec::with_capacity(all.len() + 2);
    points.push(OperatingPoint {
        threshold: f64::NEG_INFINITY,
        far: 1.0,
        frr: 0.0,
    });
    // Counts of trials strictly below the current threshold.
    let (mut bona_below, mut spoof_below) = (0usize, 0usize);
    let mut i = 0;
    while i < all.len() {
        let t = all[i].0;
        points.push(OperatingPoint {
            threshold: t,
            far: (ns - spoof_below as f64) / ns,
            frr: bona_below as f64 / nb,
        });
        while i < all.len() && all[i].0 == t {
            if all[i].1 {
                bona_below += 1;
            } else {
                spoof_below += 1;
            }
            i += 1;
        }
    }
    points.push(OperatingPoint {
        threshold: f64::INFINITY,
        far: 0.0,
        frr: 1.0,
    });
    Ok(points)
}

/// EER from bona fide and spoof score lists. Returns `(eer, threshold)`.
///
/// The EER is read off where `FAR - FRR` changes sign, interpolating
/// linearly between the two adjacent operating points.
pub fn eer_from_scores(bona: &[f64], spoof: &[f64]) -> Result<(f64, f64)> {
    let points = operating_points(bona, spoof)?;
    let i = points
        .iter()
        .position(|p| p.far - p.frr <= 0.0)
        .expect("the +∞ point always has FAR - FRR = -1");
    let cur = points[i];
    if cur.far == cur.frr {
        return Ok((cur.far, cur.threshold));
    }
    let prev = points[i - 1];
    let (d0, d1) = (prev.far - prev.frr, cur.far - cur.frr);
    let t = d0 / (d0 - d1);
    let eer = prev.far + t * (cur.far - prev.far);
    let threshold = match (prev.threshold.is_finite(), cur.threshold.is_finite()) {
        (true, true) => prev.threshold + t * (cur.threshold - prev.threshold),
        (true, false) => prev.threshold,
        _ => cur.threshold,
    };
    Ok((eer, threshold))
}

/// EER over the labeled records (unknown labels are ignored).
pub fn compute_eer(records: &[TrialRecord]) -> Result<(f64, f64)> {
    let (bona, spoof) = split_by_label(records);
    eer_from_scores(&bona, &spoof)
}

/// Cost model of the tandem detection cost function (ASVspoof 2019
/// formulation). The ASV error rates describe the fixed speaker
/// verification system the countermeasure is paired with.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TdcfParams {
    pub cost_miss_cm: f64,
    pub cost_fa_cm: f64,
    pub cost_miss_asv: f64,
    pub cost_fa_asv: f64,
    pub prior_spoof: f64,
    /// Share of target (vs. non-target) trials among non-spoof trials.
    pub target_share: f64,
    pub asv_miss_rate: f64,
    pub asv_fa_rate: f64,
    /// Fraction of spoof trials the ASV system accepts.
    pub asv_spoof_fa_rate: f64,
}

impl Default for TdcfParams {
    /// ASVspoof 2019 costs and priors with illustrative ASV error rates
    /// (1% miss, 1% false alarm, 30% spoof acceptance). Supply measured ASV
    /// rates through a params file for anything beyond toy experiments.
    fn default() -> Self {
        Self {
            cost_miss_cm: 1.0,
            cost_fa_cm: 10.0,
            cost_miss_asv: 1.0,
            cost_fa_asv: 10.0,
            prior_spoof: 0.05,
            target_share: 0.99,
            asv_miss_rate: 0.01,
            asv_fa_rate: 0.01,
            asv_spoof_fa_rate: 0.30,
        }
    }
}

impl TdcfParams {
    pub const KEYS: [&'static str; 9] = [
        "cost_miss_cm",
        "cost_fa_cm",
        "cost_miss_asv",
        "cost_fa_asv",
        "prior_spoof",
        "target_share",
        "asv_miss_rate",
        "asv_fa_rate",
        "asv_spoof_fa_rate",
    ];

    pub fn set(&mut self, key: &str, value: f64) -> Result<()> {
        let slot = match key {
            "cost_miss_cm" => &mut self.cost_miss_cm,
            "cost_fa_cm" => &mut self.cost_fa_cm,
            "cost_miss_asv" => &mut self.cost_miss_asv,
            "cost_fa_asv" => &mut self.cost_fa_asv,
            "prior_spoof" => &mut self.prior_spoof,
            "target_share" => &mut self.target_share,
            "asv_miss_rate" => &mut self.asv_miss_rate,
            "asv_fa_rate" => &mut self.asv_fa_rate,
            "asv_spoof_fa_rate" => &mut self.asv_spoof_fa_rate,
            other => return Err(Error::Config(format!("unknown t-DCF parameter '{other}'"))),
        };
        *slot = value;
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            self.cost_miss_cm,
            self.cost_fa_cm,
            self.cost_miss_asv,
            self.cost_fa_asv,
        ];
        if positive.iter().any(|c| !(*c > 0.0)) {
            return Err(Error::Config("t-DCF costs must be positive".into()));
        }
        if !(self.prior_spoof > 0.0 && self.prior_spoof < 1.0) {
            return Err(Error::Config("spoof prior must lie in (0, 1)".into()));
        }
        if !(0.0..=1.0).contains(&self.target_share) {
            return Err(Error::Config("target share must lie in [0, 1]".into()));
        }
        for r in [self.asv_miss_rate, self.asv_fa_rate, self.asv_spoof_fa_rate] {
            if !(0.0..=1.0).contains(&r) {
                return Err(Error::Config(format!("ASV rate {r} outside [0, 1]")));
            }
        }
        Ok(())
    }

    /// Weights `(C1, C2)` of the countermeasure miss and false-alarm rates.
    pub fn weights(&self) -> Result<(f64, f64)> {
        self.validate()?;
        let p_target = (1.0 - self.prior_spoof) * self.target_share;
        let p_nontarget = (1.0 - self.prior_spoof) * (1.0 - self.target_share);
        let c1 = p_target * (self.cost_miss_cm - self.cost_miss_asv * self.asv_miss_rate)
            - p_nontarget * self.cost_fa_asv * self.asv_fa_rate;
        let c2 = self.cost_fa_cm * self.prior_spoof * self.asv_spoof_fa_rate;
        if !(c1 > 0.0 && c2 > 0.0) {
            return Err(Error::Config(format!(
                "degenerate t-DCF parameters (C1 = {c1}, C2 = {c2})"
            )));
        }
        Ok((c1, c2))
    }

    /// Normalized t-DCF at one countermeasure operating point.
    pub fn normalized_cost(&self, miss: f64, fa: f64) -> Result<f64> {
        let (c1, c2) = self.weights()?;
        Ok((c1 * miss + c2 * fa) / c1.min(c2))
    }
}

/// Minimum normalized t-DCF over the threshold sweep, from score lists.
pub fn min_tdcf_from_scores(
    bona: &[f64],
    spoof: &[f64],
    params: &TdcfParams,
) -> Result<(f64, f64)> {
    let (c1, c2) = params.weights()?;
    let norm = c1.min(c2);
    let points = operating_points(bona, spoof)?;
    let mut best = (f64::INFINITY, f64::NAN);
    for p in points {
        let cost = (c1 * p.frr + c2 * p.far) / norm;
        if cost < best.0 {
            best = (cost, p.threshold);
        }
    }
    Ok(best)
}

pub fn compute_min_tdcf(records: &[TrialRecord], params: &TdcfParams) -> Result<(f64, f64)> {
    let (bona, spoof) = split_by_label(records);
    min_tdcf_from_scores(&bona, &spoof, params)
}

/// Equal-width histogram of bona fide and spoof scores.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreHistogram {
    /// `n_bins + 1` bin edges.
    pub edges: Vec<f64>,
    pub bonafide: Vec<usize>,
    pub spoof: Vec<usize>,
}

impl ScoreHistogram {
    /// Plot-ready table: `bin_low bin_high bonafide spoof` per line.
    pub fn to_text(&self) -> String {
        let mut out = String::from("# bin_low bin_high bonafide spoof\n");
        for i in 0..self.bonafide.len() {
            let _ = writeln!(
                out,
                "{:.6} {:.6} {} {}",
                self.edges[i],
                self.edges[i + 1],
                self.bonafide[i],
                self.spoof[i]
            );
        }
        out
    }
}

pub fn score_histograms(records: &[TrialRecord], n_bins: usize) -> Result<ScoreHistogram> {
    if n_bins < 2 {
        return Err(Error::InvalidInput(
            "histogram needs at least two bins".into(),
        ));
    }
    let labeled: Vec<&TrialRecord> = records
        .iter()
        .filter(|r| r.label != Label::Unknown)
        .collect();
    if labeled.is_empty() {
        return Err(Error::InvalidInput("no labeled scores to histogram".into()));
    }
    let lo = labeled
        .iter()
        .map(|r| r.score)
        .fold(f64::INFINITY, f64::min);
    let hi = labeled
        .iter()
        .map(|r| r.score)
        .fold(f64::NEG_INFINITY, f64::max);
    let width = (hi - lo) / n_bins as f64;
    let edges = (0..=n_bins).map(|i| lo + width * i as f64).collect();
    let mut bonafide = vec![0; n_bins];
    let mut spoof = vec![0; n_bins];
    for r in labeled {
        let bin = if width > 0.0 {
            (((r.score - lo) / width).floor() as usize).min(n_bins - 1)
        } else {
            0
        };
        match r.label {
            Label::Bonafide => bonafide[bin] += 1,
            Label::Spoof => spoof[bin] += 1,
            Label::Unknown => unreachable!(),
        }
    }
    Ok(ScoreHistogram {
        edges,
        bonafide,
        spoof,
    })
}
