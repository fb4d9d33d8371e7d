//! `--config file.json` support: the file's entries become flags placed
//! right after the subcommand, so anything given on the command line later
//! overrides them.

use std::ffi::OsString;
use std::path::PathBuf;

use anyhow::{bail, Context};
use serde_json::Value;

const SUBCOMMANDS: [&str; 4] = ["generate", "optimize", "evaluate", "sweep"];

fn config_path(argv: &[OsString]) -> Option<PathBuf> {
    let mut it = argv.iter();
    while let Some(arg) = it.next() {
        let arg = arg.to_string_lossy();
        if arg == "--" {
            break;
        }
        if arg == "--config" {
            return it.next().map(PathBuf::from);
        }
        if let Some(path) = arg.strip_prefix("--config=") {
            return Some(PathBuf::from(path));
        }
    }
    None
}

fn scalar(key: &str, v: &Value) -> anyhow::Result<String> {
    match v {
        Value::String(s) => Ok(s.clone()),
        Value::Number(n) => Ok(n.to_string()),
        Value::Bool(b) => Ok(b.to_string()),
        _ => bail!("config entry {key:?}: expected a string, number or list of them"),
    }
}

/// Turns a JSON object into `--flag value` pairs.
pub fn flags_from_json(value: &Value) -> anyhow::Result<Vec<String>> {
    let Value::Object(map) = value else {
        bail!("config file must hold a JSON object");
    };
    let mut out = Vec::new();
    for (key, v) in map {
        let flag = format!("--{}", key.replace('_', "-"));
        if flag == "--config" {
            bail!("config files cannot include other config files");
        }
        match v {
            Value::Null | Value::Bool(false) => {}
            Value::Bool(true) => out.push(flag),
            Value::Number(n) if flag == "--verbose" => {
                let count = n.as_u64().with_context(|| format!("config entry {key:?}: expected a count"))?;
                out.extend((0..count).map(|_| flag.clone()));
            }
            Value::Array(items) => {
                let parts = items.iter().map(|x| scalar(key, x)).collect::<anyhow::Result<Vec<_>>>()?;
                out.push(flag);
                out.push(parts.join(","));
            }
            other => {
                out.push(flag);
                out.push(scalar(key, other)?);
            }
        }
    }
    Ok(out)
}

/// Returns `argv` with the config file's flags spliced in after the
/// subcommand name. Without `--config` the arguments are returned as is.
pub fn expand_args(mut argv: Vec<OsString>) -> anyhow::Result<Vec<OsString>> {
    let Some(path) = config_path(&argv) else {
        return Ok(argv);
    };
    let text = std::fs::read_to_string(&path).with_context(|| format!("reading config {}", path.display()))?;
    let value: Value = serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
    let flags = flags_from_json(&value)?;
    let Some(pos) = argv.iter().position(|a| SUBCOMMANDS.contains(&a.to_string_lossy().as_ref())) else {
        return Ok(argv);
    };
    argv.splice(pos + 1..pos + 1, flags.into_iter().map(OsString::from));
    Ok(argv)
}
