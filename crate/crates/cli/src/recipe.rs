//! Command configuration: an optional JSON file with flag overrides on top.
//!
//! Relative paths inside a config file are resolved against the file's own
//! directory; paths given as flags are used as given.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

#[derive(Debug, Clone, Default)]
pub struct Recipe {
    fields: Map<String, Value>,
}

impl Recipe {
    pub fn load(path: Option<&Path>, path_keys: &[&str]) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let value: Value = serde_json::from_str(&text)
            .map_err(hapke_elmm::Error::from)
            .with_context(|| format!("parsing config {}", path.display()))?;
        let Value::Object(mut fields) = value else {
            bail!(hapke_elmm::Error::InvalidInput(format!(
                "config {} must contain a JSON object",
                path.display()
            )));
        };
        let base = path.parent().unwrap_or(Path::new(""));
        for key in path_keys {
            if let Some(Value::String(p)) = fields.get(*key) {
                let p = PathBuf::from(p);
                if p.is_relative() {
                    let joined = base.join(p).to_string_lossy().into_owned();
                    fields.insert(key.to_string(), Value::String(joined));
                }
            }
        }
        Ok(Self { fields })
    }

    /// Overrides `key` when a flag value is present.
    pub fn set<T: Serialize>(&mut self, key: &str, value: Option<T>) -> Result<()> {
        if let Some(v) = value {
            self.fields.insert(key.to_string(), serde_json::to_value(v)?);
        }
        Ok(())
    }

    pub fn set_default<T: Serialize>(&mut self, key: &str, value: T) -> Result<()> {
        if !self.fields.contains_key(key) {
            self.fields.insert(key.to_string(), serde_json::to_value(value)?);
        }
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&Value> {
        self.fields.get(key)
    }

    pub fn parse<T: DeserializeOwned>(&self) -> Result<T> {
        serde_json::from_value(Value::Object(self.fields.clone()))
            .map_err(|e| hapke_elmm::Error::InvalidInput(format!("configuration: {e}")).into())
    }

    pub fn echo(&self) -> Value {
        Value::Object(self.fields.clone())
    }
}
