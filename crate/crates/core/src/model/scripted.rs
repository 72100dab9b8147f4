//! Table-driven scripted backend.
//!
//! A scripted model replays a fixed map from token-id prefixes to logits and
//! hidden states, which makes it a byte-exact oracle for decoder tests. Files
//! store raw logits (not log-probs) so evaluation exercises the same
//! normalization path real backends use.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::logits::log_softmax;
use crate::model::{check_prefix, Backend, BackendInfo, StepOutput};
use crate::types::{LayerStates, TokenId};

/// One stored forward pass: `states[position][layer][dim]` covers every
/// prefix position at layer levels 0..=L.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScriptedEntry {
    pub prefix: Vec<TokenId>,
    pub logits: Vec<f64>,
    pub states: Vec<Vec<Vec<f64>>>,
}

/// On-disk scripted model. Serializes to the JSON schema
/// `{"vocab_size":..,"num_layers":..,"hidden_dim":..,"entries":[..]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScriptedModelFile {
    pub vocab_size: usize,
    pub num_layers: usize,
    pub hidden_dim: usize,
    pub entries: Vec<ScriptedEntry>,
}

impl ScriptedModelFile {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scripted model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, Error> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn save(&self, path: &Path) -> Result<(), Error> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, Error> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }
}

/// In-memory scripted backend.
pub struct ScriptedModel {
    info: BackendInfo,
    entries: HashMap<Vec<TokenId>, ScriptedEntry>,
}

impl ScriptedModel {
    /// Validates the file against its own header and builds the lookup table.
    pub fn from_file(file: ScriptedModelFile) -> Result<Self, Error> {
        let info = BackendInfo {
            vocab_size: file.vocab_size,
            num_layers: file.num_layers,
            hidden_dim: file.hidden_dim,
            name: "scripted".into(),
        };
        info.validate()?;
        let mut entries = HashMap::with_capacity(file.entries.len());
        for (idx, entry) in file.entries.into_iter().enumerate() {
            validate_entry(&entry, &info, idx)?;
            entries.insert(entry.prefix.clone(), entry);
        }
        Ok(ScriptedModel { info, entries })
    }

    pub fn load(path: &Path) -> Result<Self, Error> {
        Self::from_file(ScriptedModelFile::load(path)?)
    }

    /// Exports the table back to its file form, entries sorted by prefix for
    /// stable output.
    pub fn to_file(&self) -> ScriptedModelFile {
        let mut entries: Vec<ScriptedEntry> = self.entries.values().cloned().collect();
        entries.sort_by(|a, b| a.prefix.cmp(&b.prefix));
        ScriptedModelFile {
            vocab_size: self.info.vocab_size,
            num_layers: self.info.num_layers,
            hidden_dim: self.info.hidden_dim,
            entries,
        }
    }
}

fn validate_entry(entry: &ScriptedEntry, info: &BackendInfo, idx: usize) -> Result<(), Error> {
    let at = |what: String| Error::Schema(format!("entry {idx}: {what}"));
    if entry.logits.len() != info.vocab_size {
        return Err(at(format!(
            "logits length {} != vocab_size {}",
            entry.logits.len(),
            info.vocab_size
        )));
    }
    if entry.logits.iter().any(|v| !v.is_finite()) {
        return Err(at("non-finite logit".into()));
    }
    for t in &entry.prefix {
        if t.index() >= info.vocab_size {
            return Err(at(format!("prefix token {t} out of vocabulary")));
        }
    }
    if entry.states.len() != entry.prefix.len() {
        return Err(at(format!(
            "states cover {} positions but prefix has {}",
            entry.states.len(),
            entry.prefix.len()
        )));
    }
    for (pos, layers) in entry.states.iter().enumerate() {
        if layers.len() != info.num_layers + 1 {
            return Err(at(format!(
                "position {pos} has {} layer levels, expected {}",
                layers.len(),
                info.num_layers + 1
            )));
        }
        for (layer, vector) in layers.iter().enumerate() {
            if vector.len() != info.hidden_dim {
                return Err(at(format!(
                    "position {pos} layer {layer} vector length {} != hidden_dim {}",
                    vector.len(),
                    info.hidden_dim
                )));
            }
            if vector.iter().any(|v| !v.is_finite()) {
                return Err(at(format!(
                    "position {pos} layer {layer} has non-finite value"
                )));
            }
        }
    }
    Ok(())
}

impl Backend for ScriptedModel {
    fn info(&self) -> &BackendInfo {
        &self.info
    }

    fn evaluate(&self, prefix: &[TokenId]) -> Result<StepOutput, Error> {
        check_prefix(prefix, self.info.vocab_size)?;
        let entry = self
            .entries
            .get(prefix)
            .ok_or_else(|| Error::MissingEntry {
                prefix: prefix.to_vec(),
            })?;
        let next_log_probs = log_softmax(&entry.logits)?;
        let mut flat =
            Vec::with_capacity(prefix.len() * (self.info.num_layers + 1) * self.info.hidden_dim);
        for layers in &entry.states {
            for vector in layers {
                flat.extend_from_slice(vector);
            }
        }
        let layer_states = LayerStates::from_flat(
            flat,
            prefix.len(),
            self.info.num_layers,
            self.info.hidden_dim,
        )?;
        Ok(StepOutput {
            next_log_probs,
            layer_states,
        })
    }
}
