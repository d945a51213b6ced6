use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

/// Removes `--config <path>` (or `--config=<path>`) from `args` and splices
/// the file's `key=value` lines in as `--key=value` flags directly after the
/// subcommand, ahead of the user's own flags so those take precedence.
pub(super) fn expand_config(mut args: Vec<OsString>) -> Result<Vec<OsString>> {
    let mut path: Option<PathBuf> = None;
    let mut i = 1;
    while i < args.len() {
        let arg = args[i].to_string_lossy().into_owned();
        if arg == "--" {
            break;
        }
        if arg == "--config" {
            let value = args
                .get(i + 1)
                .ok_or_else(|| Error::Config("--config needs a path".into()))?
                .clone();
            path = Some(PathBuf::from(value));
            args.drain(i..i + 2);
            continue;
        }
        if let Some(value) = arg.strip_prefix("--config=") {
            path = Some(PathBuf::from(value));
            args.remove(i);
            continue;
        }
        i += 1;
    }
    let Some(path) = path else {
        return Ok(args);
    };
    let flags = read_config(&path)?;
    // Insert after the subcommand: the first non-flag argument.
    let at = args
        .iter()
        .skip(1)
        .position(|a| !a.to_string_lossy().starts_with('-'))
        .map(|p| p + 2)
        .ok_or_else(|| Error::Config("--config given without a subcommand".into()))?;
    let tail = args.split_off(at);
    args.extend(flags.into_iter().map(OsString::from));
    args.extend(tail);
    Ok(args)
}

fn read_config(path: &Path) -> Result<Vec<String>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text, path)
}

pub(super) fn parse_config(text: &str, path: &Path) -> Result<Vec<String>> {
    let mut flags = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::parse(path, i + 1, "expected key=value"))?;
        let key = key.trim().replace('_', "-");
        if key.is_empty()
            || key == "config"
            || !key.chars().all(|c| c.is_ascii_alphanumeric() || c == '-')
        {
            return Err(Error::parse(path, i + 1, format!("invalid key '{key}'")));
        }
        flags.push(format!("--{key}={}", value.trim()));
    }
    Ok(flags)
}
