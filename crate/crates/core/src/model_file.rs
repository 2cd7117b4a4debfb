//! Versioned flat binary format shared by trained policies and baselines.
//!
//! Layout: magic `ACDRL`, format version byte, kind byte (`P` or `B`),
//! little-endian `u32` header length, JSON header, little-endian `u64` value
//! count, then the values as little-endian `f64`.

use serde::{Deserialize, Serialize};

use crate::corpus::LabelSet;
use crate::error::{Error, Result};
use crate::features::{FeatureConfig, Featurizer, HaConfig};

const MAGIC: &[u8; 5] = b"ACDRL";
const VERSION: u8 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Policy,
    Baseline,
}

impl ModelKind {
    fn tag(self) -> u8 {
        match self {
            ModelKind::Policy => b'P',
            ModelKind::Baseline => b'B',
        }
    }

    fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            b'P' => Some(ModelKind::Policy),
            b'B' => Some(ModelKind::Baseline),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelHeader {
    pub labels: LabelSet,
    pub features: FeatureConfig,
    pub ha: HaConfig,
    pub state_dim: usize,
    pub num_actions: usize,
}

impl ModelHeader {
    /// Rejects headers whose stored dimensions disagree with the configs.
    fn check(&self) -> Result<()> {
        let featurizer = Featurizer::new(self.features.clone(), self.ha, self.labels.len())
            .map_err(|e| Error::Model(format!("invalid stored config: {e}")))?;
        if featurizer.state_dim() != self.state_dim || self.labels.len() != self.num_actions {
            return Err(Error::Model(format!(
                "stored dimensions N={}, |A|={} do not match configs (N={}, |A|={})",
                self.state_dim,
                self.num_actions,
                featurizer.state_dim(),
                self.labels.len()
            )));
        }
        Ok(())
    }
}

pub fn encode(kind: ModelKind, header: &ModelHeader, values: &[f64]) -> Vec<u8> {
    let json = serde_json::to_vec(header).expect("model header serializes");
    let mut out = Vec::with_capacity(MAGIC.len() + 2 + 4 + json.len() + 8 + values.len() * 8);
    out.extend_from_slice(MAGIC);
    out.push(VERSION);
    out.push(kind.tag());
    out.extend_from_slice(&(json.len() as u32).to_le_bytes());
    out.extend_from_slice(&json);
    out.extend_from_slice(&(values.len() as u64).to_le_bytes());
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.bytes.len() < n {
            return Err(Error::Model("file is truncated".into()));
        }
        let (head, rest) = self.bytes.split_at(n);
        self.bytes = rest;
        Ok(head)
    }
}

/// Kind tag of an encoded model, without decoding the rest.
pub fn peek_kind(bytes: &[u8]) -> Result<ModelKind> {
    if bytes.len() < MAGIC.len() + 2 || &bytes[..MAGIC.len()] != MAGIC {
        return Err(Error::Model("not a model file".into()));
    }
    ModelKind::from_tag(bytes[MAGIC.len() + 1]).ok_or_else(|| Error::Model("unknown model kind".into()))
}

/// Decodes a model file, requiring the given kind.
pub fn decode(bytes: &[u8], expected: ModelKind) -> Result<(ModelHeader, Vec<f64>)> {
    let mut r = Reader { bytes };
    if r.take(MAGIC.len())? != MAGIC {
        return Err(Error::Model("not a model file".into()));
    }
    let version = r.take(1)?[0];
    if version != VERSION {
        return Err(Error::Model(format!("unsupported format version {version}")));
    }
    let kind = ModelKind::from_tag(r.take(1)?[0]).ok_or_else(|| Error::Model("unknown model kind".into()))?;
    if kind != expected {
        return Err(Error::Model(format!("expected a {expected:?} model, found {kind:?}")));
    }
    let header_len = u32::from_le_bytes(r.take(4)?.try_into().unwrap()) as usize;
    let header: ModelHeader = serde_json::from_slice(r.take(header_len)?)
        .map_err(|e| Error::Model(format!("bad header: {e}")))?;
    header.check()?;
    let count = u64::from_le_bytes(r.take(8)?.try_into().unwrap()) as usize;
    if r.bytes.len() != count.saturating_mul(8) {
        return Err(Error::Model(format!(
            "expected {count} values, found {} bytes",
            r.bytes.len()
        )));
    }
    let values = r
        .bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok((header, values))
}
