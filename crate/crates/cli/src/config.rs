//! JSON config files. Each command reads the sections it needs; values are
//! layered as defaults, then the file, then command-line flags.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

const KNOWN_KEYS: &[&str] = &[
    "pde", "spec_file", "input", "samples", "generator", "sampler", "train", "sweep", "baseline",
    "cluster",
];

#[derive(Debug, Clone, Default)]
pub struct FileConfig {
    root: Map<String, Value>,
    base_dir: PathBuf,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let value: Value = serde_json::from_str(&text)
            .with_context(|| format!("parsing config {}", path.display()))?;
        let Value::Object(root) = value else {
            bail!("config {} must be a JSON object", path.display());
        };
        if let Some(bad) = root.keys().find(|k| !KNOWN_KEYS.contains(&k.as_str())) {
            bail!(
                "unknown config key '{bad}' in {} (known: {})",
                path.display(),
                KNOWN_KEYS.join(", ")
            );
        }
        Ok(Self {
            root,
            base_dir: path.parent().map(Path::to_path_buf).unwrap_or_default(),
        })
    }

    pub fn string(&self, key: &str) -> Result<Option<String>> {
        match self.root.get(key) {
            None | Some(Value::Null) => Ok(None),
            Some(Value::String(s)) => Ok(Some(s.clone())),
            Some(other) => bail!("config key '{key}' must be a string, got {other}"),
        }
    }

    /// A path from the file, resolved against the file's directory.
    pub fn path(&self, key: &str) -> Result<Option<PathBuf>> {
        Ok(self.string(key)?.map(|s| self.base_dir.join(s)))
    }

    pub fn has(&self, key: &str) -> bool {
        self.root.contains_key(key)
    }

    /// `defaults` with the keys of section `key` laid over them.
    pub fn section<T: Serialize + DeserializeOwned>(&self, key: &str, defaults: T) -> Result<T> {
        let Some(over) = self.root.get(key) else {
            return Ok(defaults);
        };
        let mut base = serde_json::to_value(defaults)?;
        merge(&mut base, over);
        serde_json::from_value(base).with_context(|| format!("invalid '{key}' section in config"))
    }

    /// Section `key` on its own, when there are no defaults to fill in.
    pub fn section_only<T: DeserializeOwned>(&self, key: &str) -> Result<Option<T>> {
        self.root
            .get(key)
            .map(|v| serde_json::from_value(v.clone()))
            .transpose()
            .with_context(|| format!("invalid '{key}' section in config"))
    }
}

/// Recursive object merge; anything that is not an object on both sides is
/// replaced.
pub fn merge(base: &mut Value, over: &Value) {
    match (base, over) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k.clone(), v.clone());
                    }
                }
            }
        }
        (slot, v) => *slot = v.clone(),
    }
}
