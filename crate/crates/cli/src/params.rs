//! `--params FILE` support: a `key=value` file whose entries act as extra
//! command-line flags. Flags given explicitly on the command line win.

use std::collections::BTreeSet;
use std::ffi::OsString;
use std::path::Path;

pub const PARAMS_FLAG: &str = "--params";

/// Global options that take a value and may appear before the subcommand.
const GLOBAL_VALUED: [&str; 2] = ["--seed", PARAMS_FLAG];

/// Parses `key=value` lines; blank lines and `#` comments are skipped.
pub fn parse_params(text: &str, origin: &Path) -> Result<Vec<(String, String)>, String> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(format!("{}:{}: expected key=value", origin.display(), i + 1));
        };
        let key = k.trim().replace('_', "-");
        if key.is_empty() || key.starts_with('-') {
            return Err(format!("{}:{}: bad key '{}'", origin.display(), i + 1, k.trim()));
        }
        out.push((key, v.trim().trim_matches('"').to_string()));
    }
    Ok(out)
}

fn flag_name(token: &str) -> Option<&str> {
    let rest = token.strip_prefix("--")?;
    Some(rest.split_once('=').map_or(rest, |(k, _)| k))
}

/// Returns `argv` with the parameters file (if any) expanded into flags
/// placed right after the subcommand name.
pub fn splice(argv: Vec<OsString>) -> Result<Vec<OsString>, String> {
    let tokens: Vec<String> = argv.iter().map(|a| a.to_string_lossy().into_owned()).collect();

    let mut params_path: Option<String> = None;
    let mut subcommand_at: Option<usize> = None;
    let mut i = 1;
    while i < tokens.len() {
        let t = &tokens[i];
        if t == "--" {
            break;
        }
        if let Some(v) = t.strip_prefix("--params=") {
            params_path = Some(v.to_string());
        } else if t == PARAMS_FLAG {
            params_path = tokens.get(i + 1).cloned();
            i += 1;
        } else if subcommand_at.is_none() && GLOBAL_VALUED.contains(&t.as_str()) {
            i += 1;
        } else if subcommand_at.is_none() && !t.starts_with('-') {
            subcommand_at = Some(i);
        }
        i += 1;
    }

    let Some(path) = params_path else {
        return Ok(argv);
    };
    let path = Path::new(&path);
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read parameters file {}: {e}", path.display()))?;
    let given: BTreeSet<&str> = tokens.iter().filter_map(|t| flag_name(t)).collect();

    let mut extra: Vec<OsString> = Vec::new();
    for (key, value) in parse_params(&text, path)? {
        if given.contains(key.as_str()) || key == "params" {
            continue;
        }
        match value.as_str() {
            "true" => extra.push(format!("--{key}").into()),
            "false" => {}
            _ => {
                extra.push(format!("--{key}").into());
                extra.push(value.into());
            }
        }
    }

    let at = subcommand_at.map_or(argv.len(), |s| s + 1);
    let mut out = argv;
    out.splice(at..at, extra);
    Ok(out)
}
