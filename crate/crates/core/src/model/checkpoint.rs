//! Directory checkpoints: `manifest.json`, `params.bin` (little-endian f32
//! in manifest order) and `vocab.txt`.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Rgn, RgnConfig, RgnModel};
use crate::encoder::Vocabulary;
use crate::error::{Error, LoadError, Result};
use crate::numerics::Matrix;

pub const FORMAT_VERSION: u32 = 1;

const MANIFEST: &str = "manifest.json";
const PAYLOAD: &str = "params.bin";
const VOCAB: &str = "vocab.txt";
const EMBEDDING_NAME: &str = "encoder.token_embedding";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TensorEntry {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    /// Absent for bare tensor files such as embedding tables.
    pub config: Option<RgnConfig>,
    pub fingerprint: Option<String>,
    pub tensors: Vec<TensorEntry>,
}

/// Writes `tensors` as manifest + payload into `dir`.
pub fn write_tensors(
    dir: &Path,
    config: Option<&RgnConfig>,
    tensors: &[(&str, &Matrix<f32>)],
) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let manifest = Manifest {
        format_version: FORMAT_VERSION,
        config: config.cloned(),
        fingerprint: config.map(RgnConfig::fingerprint),
        tensors: tensors
            .iter()
            .map(|(name, m)| TensorEntry {
                name: name.to_string(),
                rows: m.rows(),
                cols: m.cols(),
            })
            .collect(),
    };
    let mut payload = Vec::with_capacity(tensors.iter().map(|(_, m)| m.len() * 4).sum());
    for (_, m) in tensors {
        for v in m.as_slice() {
            payload.extend_from_slice(&v.to_le_bytes());
        }
    }
    let manifest_path = dir.join(MANIFEST);
    let json = serde_json::to_string_pretty(&manifest)?;
    fs::write(&manifest_path, json).map_err(|e| Error::io(&manifest_path, e))?;
    let payload_path = dir.join(PAYLOAD);
    fs::write(&payload_path, payload).map_err(|e| Error::io(&payload_path, e))
}

/// Reads a manifest + payload pair, checking version and payload length.
pub fn read_tensors(dir: &Path) -> Result<(Manifest, Vec<(String, Matrix<f32>)>)> {
    let manifest_path = dir.join(MANIFEST);
    let text = fs::read_to_string(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
    let manifest: Manifest = serde_json::from_str(&text)
        .map_err(|e| Error::Corruption(format!("{}: {e}", manifest_path.display())))?;
    if manifest.format_version != FORMAT_VERSION {
        return Err(LoadError::Version {
            found: manifest.format_version,
            expected: FORMAT_VERSION,
        }
        .into());
    }
    let payload_path = dir.join(PAYLOAD);
    let bytes = fs::read(&payload_path).map_err(|e| Error::io(&payload_path, e))?;
    let expected: usize = manifest.tensors.iter().map(|t| t.rows * t.cols * 4).sum();
    if bytes.len() != expected {
        return Err(LoadError::Truncated {
            expected: expected as u64,
            found: bytes.len() as u64,
        }
        .into());
    }
    let mut offset = 0;
    let mut out = Vec::with_capacity(manifest.tensors.len());
    for t in &manifest.tensors {
        let n = t.rows * t.cols;
        let data = bytes[offset..offset + 4 * n]
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        offset += 4 * n;
        out.push((t.name.clone(), Matrix::from_vec(t.rows, t.cols, data)?));
    }
    Ok((manifest, out))
}

impl RgnModel {
    pub fn save(&self, dir: &Path) -> Result<()> {
        let tensors: Vec<(&str, &Matrix<f32>)> = self
            .store
            .iter()
            .map(|(_, p)| (p.name.as_str(), &p.value))
            .collect();
        write_tensors(dir, Some(&self.rgn.config), &tensors)?;
        self.vocab.save(&dir.join(VOCAB))
    }

    /// Loads a checkpoint; with `expected`, the stored config must match it.
    pub fn load(dir: &Path, expected: Option<&RgnConfig>) -> Result<Self> {
        let (manifest, tensors) = read_tensors(dir)?;
        let config = manifest.config.ok_or_else(|| {
            LoadError::ConfigMismatch("checkpoint manifest carries no model config".into())
        })?;
        if let Some(want) = expected {
            if want != &config {
                return Err(LoadError::ConfigMismatch(format!(
                    "stored fingerprint {} differs from runtime {}",
                    config.fingerprint(),
                    want.fingerprint()
                ))
                .into());
            }
        }
        let vocab = Vocabulary::load(&dir.join(VOCAB))?;
        if vocab.len() != config.vocab_size {
            return Err(LoadError::ConfigMismatch(format!(
                "vocabulary holds {} tokens, config expects {}",
                vocab.len(),
                config.vocab_size
            ))
            .into());
        }
        let (rgn, mut store) = Rgn::initialize::<f32>(&config)?;
        if tensors.len() != store.len() {
            return Err(LoadError::ConfigMismatch(format!(
                "checkpoint has {} tensors, model has {}",
                tensors.len(),
                store.len()
            ))
            .into());
        }
        for (name, value) in tensors {
            let id = store
                .id(&name)
                .ok_or_else(|| LoadError::MissingParameter(name.clone()))?;
            let param = store.get_mut(id);
            if param.value.shape() != value.shape() {
                return Err(LoadError::Shape {
                    name,
                    stored: value.shape(),
                    expected: param.value.shape(),
                }
                .into());
            }
            param.value = value;
        }
        Ok(Self { rgn, store, vocab })
    }

    /// Replaces the token embedding table with one written by
    /// [`save_embedding_table`].
    pub fn load_embeddings(&mut self, dir: &Path) -> Result<()> {
        let table = load_embedding_table(dir)?;
        let expected = self.store.value(self.rgn.encoder.token_embedding).shape();
        if table.shape() != expected {
            return Err(LoadError::Shape {
                name: EMBEDDING_NAME.into(),
                stored: table.shape(),
                expected,
            }
            .into());
        }
        self.rgn.encoder.set_token_embedding(&mut self.store, table)
    }
}

pub fn save_embedding_table(dir: &Path, table: &Matrix<f32>) -> Result<()> {
    write_tensors(dir, None, &[(EMBEDDING_NAME, table)])
}

pub fn load_embedding_table(dir: &Path) -> Result<Matrix<f32>> {
    let (_, mut tensors) = read_tensors(dir)?;
    match tensors.pop() {
        Some((name, m)) if tensors.is_empty() && name == EMBEDDING_NAME => Ok(m),
        _ => Err(LoadError::MissingParameter(EMBEDDING_NAME.into()).into()),
    }
}
