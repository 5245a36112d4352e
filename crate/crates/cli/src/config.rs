//! Flat JSON config files whose keys mirror the long flag names. Flags given
//! on the command line override file values.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::{CliError, CliResult};

fn object(value: Value, what: &str) -> CliResult<Map<String, Value>> {
    match value {
        Value::Object(map) => Ok(map),
        _ => Err(CliError::input(format!("{what} must be a JSON object"))),
    }
}

/// Overlay the explicitly given `flags` on the config file, if any. Absent
/// options and unset switches do not override file values; unknown file keys
/// are rejected.
pub(crate) fn layered<T>(config: Option<&Path>, flags: T) -> CliResult<T>
where
    T: Serialize + DeserializeOwned + Default,
{
    let Some(path) = config else {
        return Ok(flags);
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::input(format!("cannot read config {}: {e}", path.display())))?;
    let file: Value = serde_json::from_str(&text)
        .map_err(|e| CliError::input(format!("config {}: {e}", path.display())))?;
    let mut merged = object(file, "config file")?;
    let known = object(serde_json::to_value(T::default())?, "options")?;
    if let Some(key) = merged.keys().find(|k| !known.contains_key(*k)) {
        return Err(CliError::input(format!(
            "config {}: unknown key `{key}`",
            path.display()
        )));
    }
    for (key, value) in object(serde_json::to_value(&flags)?, "options")? {
        if !(value.is_null() || value == Value::Bool(false)) {
            merged.insert(key, value);
        }
    }
    serde_json::from_value(Value::Object(merged))
        .map_err(|e| CliError::input(format!("config {}: {e}", path.display())))
}
