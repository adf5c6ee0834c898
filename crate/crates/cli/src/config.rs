//! `--config path` files of `key=value` lines, merged under the command line.

use std::ffi::OsString;
use std::fs;

use crate::CliError;

/// Parses `key=value` lines; blank lines and `#` comments are skipped.
pub fn parse(text: &str) -> Result<Vec<(String, String)>, CliError> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(CliError::usage(format!("config line {}: expected key=value, got {line:?}", n + 1)));
        };
        let k = k.trim().trim_start_matches("--");
        if k.is_empty() {
            return Err(CliError::usage(format!("config line {}: empty key", n + 1)));
        }
        out.push((k.to_string(), v.trim().to_string()));
    }
    Ok(out)
}

fn flag_present(args: &[OsString], key: &str) -> bool {
    let long = format!("--{key}");
    let with_eq = format!("--{key}=");
    args.iter().any(|a| a.to_str().is_some_and(|s| s == long || s.starts_with(&with_eq)))
}

/// Inserts config entries as flags right after the subcommand, skipping keys
/// already given on the command line. `true`/`false` values toggle switches.
pub fn merge(args: Vec<OsString>) -> Result<Vec<OsString>, CliError> {
    let pos = args.iter().position(|a| a == "--config");
    let path = match pos {
        Some(i) => args.get(i + 1).cloned().ok_or_else(|| CliError::usage("--config needs a path"))?,
        None => match args.iter().find_map(|a| a.to_str().and_then(|s| s.strip_prefix("--config="))) {
            Some(p) => OsString::from(p),
            None => return Ok(args),
        },
    };
    let text = fs::read_to_string(&path).map_err(|e| CliError::usage(format!("{}: {e}", path.to_string_lossy())))?;
    let mut extra = Vec::new();
    for (k, v) in parse(&text)? {
        if k == "config" || flag_present(&args, &k) {
            continue;
        }
        match v.as_str() {
            "true" => extra.push(OsString::from(format!("--{k}"))),
            "false" => {}
            _ => {
                extra.push(OsString::from(format!("--{k}")));
                extra.push(OsString::from(v));
            }
        }
    }
    // argv[0] is the program, argv[1] the subcommand
    let at = 2.min(args.len());
    let mut merged = args[..at].to_vec();
    merged.extend(extra);
    merged.extend_from_slice(&args[at..]);
    Ok(merged)
}
