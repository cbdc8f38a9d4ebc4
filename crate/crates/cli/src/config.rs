//! JSON config files mirror the command-line flags; flags win.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;

use crate::error::{input, CliResult};
use crate::io::read_text;

/// Overlays the explicitly given flags on the config file and returns the
/// effective options. Absent flags serialize as nothing, so config values
/// survive unless a flag names the same key.
pub fn merge<T: Serialize + DeserializeOwned>(flags: &T, config: Option<&Path>) -> CliResult<T> {
    let mut base = match config {
        Some(path) => {
            let v: Value = serde_json::from_str(&read_text(path)?)
                .map_err(|e| crate::error::CliError::Input(format!("{}: {e}", path.display())))?;
            if !v.is_object() {
                return input(format!("{}: config must be a JSON object", path.display()));
            }
            v
        }
        None => Value::Object(Default::default()),
    };
    let over = serde_json::to_value(flags)?;
    if let (Value::Object(b), Value::Object(o)) = (&mut base, over) {
        for (k, v) in o {
            if !v.is_null() && v != Value::Array(Vec::new()) {
                b.insert(k, v);
            }
        }
    }
    serde_json::from_value(base).map_err(|e| crate::error::CliError::Input(format!("config: {e}")))
}
