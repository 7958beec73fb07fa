//! Binary checkpoint format (all integers little-endian):
//!
//! ```text
//! magic "CSI2DIGCKPT" | u32 version | u32 tensor count
//! per tensor: u16 name length | name | u8 rank | u32 dims[rank] | f32 payload
//! u32 block length | UTF-8 JSON {"kind": .., "hyperparams": {..}}
//! ```

use std::collections::BTreeMap;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::CsiError;

pub const CHECKPOINT_MAGIC: &[u8; 11] = b"CSI2DIGCKPT";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CheckpointKind {
    Autoencoder,
    TsNet,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NamedTensor {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f32>,
}

impl NamedTensor {
    pub fn new(name: impl Into<String>, shape: Vec<usize>, data: Vec<f32>) -> Self {
        Self { name: name.into(), shape, data }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelCheckpoint {
    pub kind: CheckpointKind,
    pub format_version: u32,
    pub hyperparams: BTreeMap<String, String>,
    pub tensors: Vec<NamedTensor>,
}

#[derive(Serialize, Deserialize)]
struct Trailer {
    kind: CheckpointKind,
    hyperparams: BTreeMap<String, String>,
}

impl ModelCheckpoint {
    pub fn new(kind: CheckpointKind) -> Self {
        Self { kind, format_version: CHECKPOINT_VERSION, hyperparams: BTreeMap::new(), tensors: Vec::new() }
    }

    pub fn tensor(&self, name: &str) -> Option<&NamedTensor> {
        self.tensors.iter().find(|t| t.name == name)
    }

    pub fn hyperparam(&self, key: &str) -> Option<&str> {
        self.hyperparams.get(key).map(String::as_str)
    }

    /// Stores every top-level field of `cfg` as `{prefix}.{field}` with a JSON
    /// encoded value.
    pub fn set_config<S: Serialize>(&mut self, prefix: &str, cfg: &S) {
        let value = serde_json::to_value(cfg).expect("config serializes");
        let serde_json::Value::Object(map) = value else { panic!("config must serialize to an object") };
        for (k, v) in map {
            self.hyperparams.insert(format!("{prefix}.{k}"), v.to_string());
        }
    }

    /// Inverse of [`ModelCheckpoint::set_config`].
    pub fn config<D: DeserializeOwned>(&self, prefix: &str) -> Result<D, CsiError> {
        let lead = format!("{prefix}.");
        let mut map = serde_json::Map::new();
        for (k, v) in &self.hyperparams {
            if let Some(field) = k.strip_prefix(&lead) {
                let parsed = serde_json::from_str(v).map_err(|e| CsiError::CorruptPayload(format!("hyperparameter {k}: {e}")))?;
                map.insert(field.to_string(), parsed);
            }
        }
        serde_json::from_value(serde_json::Value::Object(map)).map_err(|e| CsiError::CorruptPayload(format!("{prefix} configuration: {e}")))
    }

    /// Checks the invariants `save_checkpoint` relies on.
    pub fn validate(&self) -> Result<(), CsiError> {
        let mut seen = std::collections::BTreeSet::new();
        for t in &self.tensors {
            if !seen.insert(t.name.as_str()) {
                return Err(CsiError::CorruptPayload(format!("duplicate tensor name {:?}", t.name)));
            }
            if t.name.len() > u16::MAX as usize || t.shape.len() > u8::MAX as usize {
                return Err(CsiError::CorruptPayload(format!("tensor {:?} name or rank too long", t.name)));
            }
            if t.shape.iter().any(|&d| d > u32::MAX as usize) {
                return Err(CsiError::CorruptPayload(format!("tensor {:?} dimension overflows u32", t.name)));
            }
            if t.shape.iter().product::<usize>() != t.data.len() {
                return Err(CsiError::CorruptPayload(format!("tensor {:?} payload does not match shape {:?}", t.name, t.shape)));
            }
        }
        Ok(())
    }
}

/// Panics if the checkpoint violates its invariants (see [`ModelCheckpoint::validate`]).
pub fn save_checkpoint(model: &ModelCheckpoint) -> Vec<u8> {
    model.validate().expect("invalid checkpoint");
    let mut out = Vec::new();
    out.extend_from_slice(CHECKPOINT_MAGIC);
    out.extend_from_slice(&model.format_version.to_le_bytes());
    out.extend_from_slice(&(model.tensors.len() as u32).to_le_bytes());
    for t in &model.tensors {
        out.extend_from_slice(&(t.name.len() as u16).to_le_bytes());
        out.extend_from_slice(t.name.as_bytes());
        out.push(t.shape.len() as u8);
        for &d in &t.shape {
            out.extend_from_slice(&(d as u32).to_le_bytes());
        }
        for v in &t.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    let trailer = Trailer { kind: model.kind, hyperparams: model.hyperparams.clone() };
    let block = serde_json::to_vec(&trailer).expect("string map serializes");
    out.extend_from_slice(&(block.len() as u32).to_le_bytes());
    out.extend_from_slice(&block);
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8], CsiError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        match end {
            Some(end) => {
                let s = &self.bytes[self.pos..end];
                self.pos = end;
                Ok(s)
            }
            None => Err(CsiError::CorruptPayload(format!("truncated while reading {what} at byte {}", self.pos))),
        }
    }

    fn u32(&mut self, what: &str) -> Result<u32, CsiError> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }
}

pub fn load_checkpoint(bytes: &[u8]) -> Result<ModelCheckpoint, CsiError> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(CHECKPOINT_MAGIC.len(), "magic")? != CHECKPOINT_MAGIC {
        return Err(CsiError::CorruptPayload("bad magic".into()));
    }
    let version = r.u32("version")?;
    if version != CHECKPOINT_VERSION {
        return Err(CsiError::VersionMismatch { expected: CHECKPOINT_VERSION, found: version });
    }
    let count = r.u32("tensor count")? as usize;
    let mut tensors = Vec::with_capacity(count.min(1024));
    for _ in 0..count {
        let name_len = u16::from_le_bytes(r.take(2, "name length")?.try_into().unwrap()) as usize;
        let name = std::str::from_utf8(r.take(name_len, "name")?)
            .map_err(|_| CsiError::CorruptPayload("tensor name is not UTF-8".into()))?
            .to_string();
        let rank = r.take(1, "rank")?[0] as usize;
        let shape = (0..rank).map(|_| r.u32("dims").map(|d| d as usize)).collect::<Result<Vec<_>, _>>()?;
        let numel = shape.iter().try_fold(1usize, |acc, &d| acc.checked_mul(d)).ok_or_else(|| CsiError::CorruptPayload("shape overflows".into()))?;
        let nbytes = numel.checked_mul(4).ok_or_else(|| CsiError::CorruptPayload("shape overflows".into()))?;
        let payload = r.take(nbytes, &format!("payload of {name:?}"))?;
        let data = payload.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect();
        tensors.push(NamedTensor { name, shape, data });
    }
    let block_len = r.u32("hyperparameter block length")? as usize;
    let block = r.take(block_len, "hyperparameter block")?;
    if r.pos != bytes.len() {
        return Err(CsiError::CorruptPayload(format!("{} trailing bytes", bytes.len() - r.pos)));
    }
    let trailer: Trailer = serde_json::from_slice(block).map_err(|e| CsiError::CorruptPayload(format!("hyperparameter block: {e}")))?;
    let ckpt = ModelCheckpoint { kind: trailer.kind, format_version: version, hyperparams: trailer.hyperparams, tensors };
    ckpt.validate()?;
    Ok(ckpt)
}
