//! Protocol files: one trial per line, `trial_id label attack_id`, where
//! `label` is `bonafide`, `spoof` or `unknown` and `attack_id` is `-` for
//! none. The attack column may be omitted.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::metrics::TrialRecord;

pub fn parse_protocol(path: &Path) -> Result<Vec<TrialRecord>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_protocol_str(&text, path)
}

/// Parses protocol text; `path` only labels error messages. Scores are NaN.
pub fn parse_protocol_str(text: &str, path: &Path) -> Result<Vec<TrialRecord>> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in text.lines().enumerate() {
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        let (id, label, attack) = match fields.as_slice() {
            [id, label] => (*id, *label, None),
            [id, label, attack] => (*id, *label, Some(*attack)),
            _ => {
                return Err(Error::parse(
                    path,
                    i + 1,
                    format!(
                        "expected 'trial_id label [attack_id]', got {} fields",
                        fields.len()
                    ),
                ))
            }
        };
        let label = label
            .parse()
            .map_err(|e: Error| Error::parse(path, i + 1, e.to_string()))?;
        if !seen.insert(id) {
            return Err(Error::parse(
                path,
                i + 1,
                format!("duplicate trial id '{id}'"),
            ));
        }
        out.push(TrialRecord {
            trial_id: id.to_string(),
            label,
            attack_id: attack.filter(|a| *a != "-").map(str::to_string),
            score: f64::NAN,
        });
    }
    Ok(out)
}

pub fn format_protocol(records: &[TrialRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&r.trial_id);
        out.push(' ');
        out.push_str(r.label.as_str());
        out.push(' ');
        out.push_str(r.attack_id.as_deref().unwrap_or("-"));
        out.push('\n');
    }
    out
}

pub fn write_protocol(path: &Path, records: &[TrialRecord]) -> Result<()> {
    for r in records {
        let bad_id = r.trial_id.is_empty() || r.trial_id.chars().any(char::is_whitespace);
        let bad_attack = r
            .attack_id
            .as_deref()
            .is_some_and(|a| a.is_empty() || a == "-" || a.chars().any(char::is_whitespace));
        if bad_id || bad_attack {
            return Err(Error::InvalidInput(format!(
                "trial '{}' cannot be written as a protocol line",
                r.trial_id
            )));
        }
    }
    fs::write(path, format_protocol(records)).map_err(|e| Error::io(path, e))
}
