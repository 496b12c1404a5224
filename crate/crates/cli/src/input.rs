//! Turning a file, preset or manifest plus `--set` overrides into a config.

use std::path::Path;

use dce_core::bench::ExperimentConfig;
use serde_json::Value;

use crate::error::{io_error, CliError, CliResult};
use crate::presets;

/// Reads the experiment from `path` or the named preset, then applies
/// `key.path=value` overrides. A manifest is accepted in place of a config.
pub fn load(path: Option<&Path>, preset: Option<&str>, overrides: &[String]) -> CliResult<ExperimentConfig> {
    let text = match (path, preset) {
        (Some(p), None) => std::fs::read_to_string(p).map_err(|e| io_error("cannot read", p, e))?,
        (None, Some(name)) => presets::lookup(name)
            .ok_or_else(|| {
                CliError::Config(format!(
                    "preset: unknown preset {name:?} (available: {})",
                    presets::names().join(", ")
                ))
            })?
            .to_string(),
        (Some(_), Some(_)) => return Err(CliError::Config("pass either a config path or --preset, not both".into())),
        (None, None) => return Err(CliError::Config("pass a config path or --preset".into())),
    };
    let mut value: Value =
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("config: malformed JSON: {e}")))?;
    if is_manifest(&value) {
        value = value["config"].take();
    }
    for o in overrides {
        apply_override(&mut value, o)?;
    }
    Ok(ExperimentConfig::from_json(&value.to_string())?)
}

fn is_manifest(v: &Value) -> bool {
    v.get("config").is_some_and(Value::is_object) && v.get("seed").is_some()
}

/// `grid.m=16`, `noise.snr_db=[0,10]`, `estimators.1.params.epochs=50`.
/// The right-hand side is parsed as JSON, falling back to a plain string.
pub fn apply_override(root: &mut Value, assignment: &str) -> CliResult<()> {
    let (path, raw) = assignment
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("--set {assignment:?}: expected key=value")))?;
    let new: Value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut cur = root;
    let keys: Vec<&str> = path.split('.').collect();
    for (i, key) in keys.iter().enumerate() {
        let last = i + 1 == keys.len();
        cur = match cur {
            Value::Object(map) => {
                if last {
                    map.insert(key.to_string(), new);
                    return Ok(());
                }
                map.entry(key.to_string()).or_insert_with(|| Value::Object(Default::default()))
            }
            Value::Array(items) => {
                let idx: usize = key
                    .parse()
                    .ok()
                    .filter(|&i| i < items.len())
                    .ok_or_else(|| CliError::Config(format!("{path}: no element {key}")))?;
                if last {
                    items[idx] = new;
                    return Ok(());
                }
                &mut items[idx]
            }
            _ => return Err(CliError::Config(format!("{path}: {} is not an object", keys[..i].join(".")))),
        };
    }
    unreachable!("split yields at least one key")
}
