//! Score files (`trial_id score`) and t-DCF parameter files (`key=value`).

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{Label, TdcfParams, TrialRecord};
use crate::error::{Error, Result};

/// Reads `trial_id score` lines, rejecting duplicates and malformed lines.
pub fn read_scores(path: &Path) -> Result<Vec<(String, f64)>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_scores(&text, path)
}

pub fn parse_scores(text: &str, path: &Path) -> Result<Vec<(String, f64)>> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let (Some(id), Some(score), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(Error::parse(path, i + 1, "expected 'trial_id score'"));
        };
        let score: f64 = score
            .parse()
            .map_err(|_| Error::parse(path, i + 1, format!("bad score '{score}'")))?;
        if !score.is_finite() {
            return Err(Error::parse(path, i + 1, "score is not finite"));
        }
        if !seen.insert(id.to_string()) {
            return Err(Error::parse(
                path,
                i + 1,
                format!("duplicate trial id '{id}'"),
            ));
        }
        out.push((id.to_string(), score));
    }
    Ok(out)
}

/// Shortest round-trip formatting, so reading back gives identical values.
pub fn format_scores(scores: &[(String, f64)]) -> String {
    let mut out = String::new();
    for (id, s) in scores {
        let _ = writeln!(out, "{id} {s}");
    }
    out
}

pub fn write_scores(path: &Path, scores: &[(String, f64)]) -> Result<()> {
    fs::write(path, format_scores(scores)).map_err(|e| Error::io(path, e))
}

/// Attaches protocol labels to scores. Both files must cover the same
/// trials; a mismatch lists up to ten ids missing on each side.
pub fn join_scores(scores: &[(String, f64)], protocol: &[TrialRecord]) -> Result<Vec<TrialRecord>> {
    let by_id: HashMap<&str, &TrialRecord> =
        protocol.iter().map(|r| (r.trial_id.as_str(), r)).collect();
    let scored: HashSet<&str> = scores.iter().map(|(id, _)| id.as_str()).collect();
    let not_in_protocol: Vec<&str> = scores
        .iter()
        .map(|(id, _)| id.as_str())
        .filter(|id| !by_id.contains_key(id))
        .collect();
    let not_scored: Vec<&str> = protocol
        .iter()
        .map(|r| r.trial_id.as_str())
        .filter(|id| !scored.contains(id))
        .collect();
    let mut problems = Vec::new();
    for (ids, what) in [
        (&not_in_protocol, "score ids missing from protocol"),
        (&not_scored, "protocol ids without a score"),
    ] {
        if !ids.is_empty() {
            let shown: Vec<&str> = ids.iter().take(10).copied().collect();
            problems.push(format!("{} {what}: {}", ids.len(), shown.join(" ")));
        }
    }
    if !problems.is_empty() {
        return Err(Error::InvalidInput(problems.join("; ")));
    }
    Ok(scores
        .iter()
        .map(|(id, s)| {
            let p = by_id[id.as_str()];
            TrialRecord {
                trial_id: id.clone(),
                label: p.label,
                attack_id: p.attack_id.clone(),
                score: *s,
            }
        })
        .collect())
}

pub fn parse_tdcf_params(text: &str, path: &Path) -> Result<TdcfParams> {
    let mut params = TdcfParams::default();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::parse(path, i + 1, "expected key=value"))?;
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|_| Error::parse(path, i + 1, format!("bad number '{}'", value.trim())))?;
        params
            .set(key.trim(), value)
            .map_err(|e| Error::parse(path, i + 1, e.to_string()))?;
    }
    params.validate()?;
    Ok(params)
}

pub fn read_tdcf_params(path: &Path) -> Result<TdcfParams> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_tdcf_params(&text, path)
}

/// Records for labeled trials only.
pub fn labeled(records: &[TrialRecord]) -> impl Iterator<Item = &TrialRecord> {
    records.iter().filter(|r| r.label != Label::Unknown)
}
