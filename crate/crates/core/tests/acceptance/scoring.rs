//! Threshold-scan oracles for EER / min-tDCF and fusion scale invariance.

use antispoof::fusion::{normalize_and_fuse, ScoreSet};
use antispoof::metrics::{compute_eer, compute_min_tdcf, Label, TdcfParams, TrialRecord};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `(far, frr)` at threshold `t`, counting directly: accept iff `s >= t`.
fn rates(bona: &[f64], spoof: &[f64], t: f64) -> (f64, f64) {
    let far = spoof.iter().filter(|&&s| s >= t).count() as f64 / spoof.len() as f64;
    let frr = bona.iter().filter(|&&s| s < t).count() as f64 / bona.len() as f64;
    (far, frr)
}

fn thresholds(bona: &[f64], spoof: &[f64]) -> Vec<f64> {
    let mut t: Vec<f64> = bona.iter().chain(spoof).copied().collect();
    t.push(f64::NEG_INFINITY);
    t.push(f64::INFINITY);
    t.sort_by(f64::total_cmp);
    t.dedup();
    t
}

/// EER where `far - frr` first turns non-positive over the ascending
/// threshold scan, linearly interpolated from the preceding threshold.
fn oracle_eer(bona: &[f64], spoof: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = thresholds(bona, spoof)
        .iter()
        .map(|&t| rates(bona, spoof, t))
        .collect();
    let i = pts.iter().position(|(far, frr)| far - frr <= 0.0).unwrap();
    let (far1, frr1) = pts[i];
    if far1 == frr1 {
        return far1;
    }
    let (far0, frr0) = pts[i - 1];
    let (d0, d1) = (far0 - frr0, far1 - frr1);
    far0 + d0 / (d0 - d1) * (far1 - far0)
}

fn oracle_min_tdcf(bona: &[f64], spoof: &[f64], p: &TdcfParams) -> f64 {
    let p_tar = (1.0 - p.prior_spoof) * p.target_share;
    let p_non = (1.0 - p.prior_spoof) * (1.0 - p.target_share);
    let c1 = p_tar * (p.cost_miss_cm - p.cost_miss_asv * p.asv_miss_rate)
        - p_non * p.cost_fa_asv * p.asv_fa_rate;
    let c2 = p.cost_fa_cm * p.prior_spoof * p.asv_spoof_fa_rate;
    thresholds(bona, spoof)
        .iter()
        .map(|&t| {
            let (far, frr) = rates(bona, spoof, t);
            (c1 * frr + c2 * far) / c1.min(c2)
        })
        .fold(f64::INFINITY, f64::min)
}

fn records(bona: &[f64], spoof: &[f64]) -> Vec<TrialRecord> {
    bona.iter()
        .enumerate()
        .map(|(i, &s)| TrialRecord::new(format!("b{i}"), Label::Bonafide, s))
        .chain(
            spoof
                .iter()
                .enumerate()
                .map(|(i, &s)| TrialRecord::new(format!("s{i}"), Label::Spoof, s)),
        )
        .collect()
}

fn random_scores(rng: &mut ChaCha8Rng) -> (Vec<f64>, Vec<f64>) {
    let total = rng.random_range(2..=200);
    let nb = rng.random_range(1..total);
    let shift = rng.random_range(-1.0..3.0);
    // Coarse grids make ties common.
    let grid = if rng.random_bool(0.3) {
        Some(rng.random_range(2..12) as f64)
    } else {
        None
    };
    let draw = |offset: f64, rng: &mut ChaCha8Rng| {
        let v = rng.random_range(-2.0..2.0) + offset;
        grid.map_or(v, |g| (v * g).round() / g)
    };
    let bona = (0..nb).map(|_| draw(shift, rng)).collect();
    let spoof = (0..total - nb).map(|_| draw(0.0, rng)).collect();
    (bona, spoof)
}

fn random_params(rng: &mut ChaCha8Rng) -> TdcfParams {
    if rng.random_bool(0.5) {
        return TdcfParams::default();
    }
    loop {
        let p = TdcfParams {
            cost_miss_cm: rng.random_range(0.5..10.0),
            cost_fa_cm: rng.random_range(0.5..10.0),
            cost_miss_asv: rng.random_range(0.5..10.0),
            cost_fa_asv: rng.random_range(0.5..10.0),
            prior_spoof: rng.random_range(0.01..0.5),
            target_share: rng.random_range(0.5..1.0),
            asv_miss_rate: rng.random_range(0.0..0.1),
            asv_fa_rate: rng.random_range(0.0..0.1),
            asv_spoof_fa_rate: rng.random_range(0.05..1.0),
        };
        if p.weights().is_ok() {
            return p;
        }
    }
}

/// Strictly increasing maps used for the invariance check.
fn transform(kind: usize, x: f64) -> f64 {
    match kind {
        0 => 3.5 * x - 7.0,
        1 => x.atan(),
        2 => (x / 2.0).exp(),
        _ => x * x * x + x,
    }
}

/// Largest deviation from the oracles and under monotone transforms.
pub fn metric_oracles(sets: usize, seed: u64) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut oracle_gap, mut invariance_gap) = (0.0f64, 0.0f64);
    for _ in 0..sets {
        let (bona, spoof) = random_scores(&mut rng);
        let params = random_params(&mut rng);
        let recs = records(&bona, &spoof);
        let (eer, _) = compute_eer(&recs).unwrap();
        let (tdcf, _) = compute_min_tdcf(&recs, &params).unwrap();
        oracle_gap = oracle_gap
            .max((eer - oracle_eer(&bona, &spoof)).abs())
            .max((tdcf - oracle_min_tdcf(&bona, &spoof, &params)).abs());

        let kind = rng.random_range(0..4);
        let map = |v: &[f64]| v.iter().map(|&x| transform(kind, x)).collect::<Vec<_>>();
        let moved = records(&map(&bona), &map(&spoof));
        let (eer2, _) = compute_eer(&moved).unwrap();
        let (tdcf2, _) = compute_min_tdcf(&moved, &params).unwrap();
        invariance_gap = invariance_gap
            .max((eer - eer2).abs())
            .max((tdcf - tdcf2).abs());
    }
    (oracle_gap, invariance_gap)
}

/// Largest change of the fused scores when each system's raw scores are
/// multiplied by its own positive constant.
pub fn fusion_scale_gap(trials: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let n = rng.random_range(4..60);
        let labels: Vec<TrialRecord> = (0..n)
            .map(|i| {
                let label = if i < 2 || (i >= 2 && rng.random_bool(0.5)) {
                    Label::Bonafide
                } else {
                    Label::Spoof
                };
                TrialRecord::new(format!("t{i:03}"), label, 0.0)
            })
            .collect();
        let systems: Vec<ScoreSet> = (0..rng.random_range(1..=4))
            .map(|k| {
                let scores = (0..n).map(|i| (format!("t{i:03}"), rng.random_range(-5.0..5.0)));
                ScoreSet::new(format!("sys{k}"), scores).unwrap()
            })
            .collect();
        let scaled: Vec<ScoreSet> = systems
            .iter()
            .map(|s| {
                let c = 10f64.powf(rng.random_range(-3.0..3.0));
                ScoreSet::new(
                    s.system_id.clone(),
                    s.scores.iter().map(|(k, v)| (k.clone(), c * v)),
                )
                .unwrap()
            })
            .collect();
        let a = normalize_and_fuse(&systems, &labels).unwrap();
        let b = normalize_and_fuse(&scaled, &labels).unwrap();
        for (x, y) in a.scores.values().zip(b.scores.values()) {
            worst = worst.max((x - y).abs() / x.abs().max(1.0));
        }
    }
    worst
}
