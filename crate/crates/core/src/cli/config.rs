use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::data::FieldMap;
use crate::encoder::EncoderConfig;
use crate::error::{Error, Result};
use crate::model::{RgnConfig, TrainConfig};

/// Relative data paths resolve against this directory when it is set.
pub const DATA_ROOT_ENV: &str = "RGN_DATA_ROOT";

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataPaths {
    pub train: Option<PathBuf>,
    pub dev: Option<PathBuf>,
    pub test: Option<PathBuf>,
    /// Directory holding a saved token embedding table.
    pub embeddings: Option<PathBuf>,
}

/// Everything a `train` run needs, as one JSON document.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub model: RgnConfig,
    pub train: TrainConfig,
    pub data: DataPaths,
    pub field_map: FieldMap,
    /// Tokens seen fewer times in the training split map to `[UNK]`.
    pub vocab_min_count: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            model: RgnConfig::default(),
            train: TrainConfig::default(),
            data: DataPaths::default(),
            field_map: FieldMap::default(),
            vocab_min_count: 1,
        }
    }
}

impl RunConfig {
    /// Small model used by `gradcheck` when no config file is given.
    pub fn gradcheck_preset() -> Self {
        let mut cfg = Self::default();
        cfg.model = RgnConfig {
            encoder: EncoderConfig {
                d: 8,
                m: 8,
                n: 12,
                heads: 2,
                mixing_layers: 1,
                ..EncoderConfig::default()
            },
            vocab_size: 24,
            k: 2,
            entity_hidden: vec![6, 6],
            relation_hidden: vec![6, 6],
            classifier_hidden: 6,
            ..RgnConfig::default()
        };
        cfg
    }

    /// Reads `path` (or starts from `base`), then applies `key=value`
    /// overrides on dotted paths. Values parse as JSON, falling back to a
    /// plain string.
    pub fn resolve(path: Option<&Path>, base: Self, overrides: &[String]) -> Result<Self> {
        let mut value = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| Error::Config(format!("cannot read {}: {e}", p.display())))?;
                let cfg: RunConfig = serde_json::from_str(&text)
                    .map_err(|e| Error::Config(format!("{}: {e}", p.display())))?;
                serde_json::to_value(cfg)?
            }
            None => serde_json::to_value(base)?,
        };
        for o in overrides {
            apply_override(&mut value, o)?;
        }
        let cfg: RunConfig = serde_json::from_value(value)
            .map_err(|e| Error::Config(format!("after overrides: {e}")))?;
        cfg.model.validate()?;
        cfg.train.validate()?;
        Ok(cfg)
    }
}

pub fn apply_override(root: &mut Value, spec: &str) -> Result<()> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override {spec:?} is not key=value")))?;
    let parsed = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut node = root;
    let mut parts = key.split('.').peekable();
    while let Some(part) = parts.next() {
        if part.is_empty() {
            return Err(Error::Config(format!("empty key segment in {key:?}")));
        }
        let obj = node
            .as_object_mut()
            .ok_or_else(|| Error::Config(format!("{key:?}: {part:?} is not inside an object")))?;
        if parts.peek().is_none() {
            obj.insert(part.to_string(), parsed);
            return Ok(());
        }
        node = obj
            .entry(part)
            .or_insert_with(|| Value::Object(Default::default()));
    }
    unreachable!("split always yields one segment")
}

/// Joins relative paths onto `$RGN_DATA_ROOT` when it is set.
pub fn data_path(path: &Path) -> PathBuf {
    match std::env::var_os(DATA_ROOT_ENV) {
        Some(root) if path.is_relative() => Path::new(&root).join(path),
        _ => path.to_path_buf(),
    }
}
