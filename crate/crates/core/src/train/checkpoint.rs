//! `MINF` checkpoint files: magic, u16 LE format version, u32 LE header
//! length, JSON header, then raw little-endian arrays in manifest order.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::TrainConfig;
use crate::data::Vocabulary;
use crate::model::{ModelConfig, PointerGenerator};
use crate::nn::{Float, Matrix};

pub const MAGIC: &[u8; 4] = b"MINF";
pub const FORMAT_VERSION: u16 = 1;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("not a checkpoint (bad magic bytes)")]
    BadMagic,
    #[error("unsupported checkpoint format version {found} (this build reads {FORMAT_VERSION})")]
    Version { found: u16 },
    #[error("checkpoint truncated: {0}")]
    Truncated(String),
    #[error("checkpoint header: {0}")]
    Header(String),
    #[error("checkpoint stores {found} arrays, expected {expected}")]
    Dtype { found: String, expected: String },
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Pretrain,
    Finetune,
}

/// How a checkpoint was produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub language: String,
    pub stage: Stage,
    pub epochs: usize,
    pub dropout: f64,
    pub seed: u64,
    pub batch_size: usize,
}

impl Provenance {
    pub fn new(language: &str, stage: Stage, config: &TrainConfig, epochs: usize) -> Self {
        Self {
            language: language.to_owned(),
            stage,
            epochs,
            dropout: config.dropout_rate,
            seed: config.seed,
            batch_size: config.batch_size,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Checkpoint<F> {
    pub model: PointerGenerator<F>,
    pub provenance: Provenance,
}

#[derive(Serialize, Deserialize)]
struct ArrayEntry {
    name: String,
    rows: usize,
    cols: usize,
}

#[derive(Serialize, Deserialize)]
struct Header {
    dtype: String,
    config: ModelConfig,
    vocabulary: Vocabulary,
    provenance: Provenance,
    arrays: Vec<ArrayEntry>,
}

pub fn save_checkpoint<F: Float>(checkpoint: &Checkpoint<F>) -> Vec<u8> {
    let model = &checkpoint.model;
    let header = Header {
        dtype: F::MODE.dtype().to_owned(),
        config: *model.config(),
        vocabulary: model.vocab.clone(),
        provenance: checkpoint.provenance.clone(),
        arrays: model
            .params
            .iter()
            .map(|(_, p)| ArrayEntry {
                name: p.name.clone(),
                rows: p.value.rows(),
                cols: p.value.cols(),
            })
            .collect(),
    };
    let json = serde_json::to_vec(&header).expect("header serializes");
    let mut out = Vec::with_capacity(10 + json.len() + model.params.num_scalars() * F::BYTES);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&u32::try_from(json.len()).expect("header under 4 GiB").to_le_bytes());
    out.extend_from_slice(&json);
    for (_, p) in model.params.iter() {
        for &x in p.value.data() {
            x.write_le(&mut out);
        }
    }
    out
}

fn take<'a>(bytes: &mut &'a [u8], n: usize, what: &str) -> Result<&'a [u8], CheckpointError> {
    if bytes.len() < n {
        return Err(CheckpointError::Truncated(format!(
            "{what} needs {n} bytes, {} left",
            bytes.len()
        )));
    }
    let (head, rest) = bytes.split_at(n);
    *bytes = rest;
    Ok(head)
}

pub fn load_checkpoint<F: Float>(mut bytes: &[u8]) -> Result<Checkpoint<F>, CheckpointError> {
    let magic = take(&mut bytes, 4, "magic")?;
    if magic != MAGIC {
        return Err(CheckpointError::BadMagic);
    }
    let version = u16::from_le_bytes(take(&mut bytes, 2, "version")?.try_into().expect("2 bytes"));
    if version != FORMAT_VERSION {
        return Err(CheckpointError::Version { found: version });
    }
    let len = u32::from_le_bytes(take(&mut bytes, 4, "header length")?.try_into().expect("4 bytes"));
    let header: Header = serde_json::from_slice(take(&mut bytes, len as usize, "header")?)
        .map_err(|e| CheckpointError::Header(e.to_string()))?;
    if header.dtype != F::MODE.dtype() {
        return Err(CheckpointError::Dtype {
            found: header.dtype,
            expected: F::MODE.dtype().to_owned(),
        });
    }
    let mut values = Vec::with_capacity(header.arrays.len());
    for a in &header.arrays {
        let n = a.rows.checked_mul(a.cols).ok_or_else(|| CheckpointError::Header(format!("{} is too large", a.name)))?;
        let size = n.checked_mul(F::BYTES).ok_or_else(|| CheckpointError::Header(format!("{} is too large", a.name)))?;
        let raw = take(&mut bytes, size, &a.name)?;
        let data = raw.chunks_exact(F::BYTES).map(F::read_le).collect();
        values.push((a.name.clone(), Matrix::from_vec(a.rows, a.cols, data)));
    }
    if !bytes.is_empty() {
        return Err(CheckpointError::Header(format!("{} trailing bytes", bytes.len())));
    }
    let model = PointerGenerator::from_parts(header.config, header.vocabulary, values)
        .map_err(|e| CheckpointError::Header(e.to_string()))?;
    Ok(Checkpoint {
        model,
        provenance: header.provenance,
    })
}

impl<F: Float> Checkpoint<F> {
    pub fn save(&self, path: &Path) -> Result<(), CheckpointError> {
        fs::write(path, save_checkpoint(self)).map_err(|source| CheckpointError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<Self, CheckpointError> {
        let bytes = fs::read(path).map_err(|source| CheckpointError::Io {
            path: path.display().to_string(),
            source,
        })?;
        load_checkpoint(&bytes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{build_vocabulary, InflectionExample};

    fn sample() -> Checkpoint<f32> {
        let exs = vec![InflectionExample::new("sing", ["V", "PST"], "sang").unwrap()];
        let model = PointerGenerator::new(ModelConfig::tiny(0, 0, 4), build_vocabulary(&[&exs]), 2).unwrap();
        Checkpoint {
            model,
            provenance: Provenance::new("eng", Stage::Pretrain, &TrainConfig::pretrain(2), 50),
        }
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let c = sample();
        let back: Checkpoint<f32> = load_checkpoint(&save_checkpoint(&c)).unwrap();
        assert!(back.model.params.bit_identical(&c.model.params));
        assert_eq!(back.model.vocab, c.model.vocab);
        assert_eq!(back.provenance, c.provenance);
        assert_eq!(back.provenance.epochs, 50);
        assert_eq!(back.provenance.dropout, 0.3);
    }

    #[test]
    fn every_truncation_is_an_error() {
        let bytes = save_checkpoint(&sample());
        for cut in 0..bytes.len() {
            assert!(load_checkpoint::<f32>(&bytes[..cut]).is_err(), "cut at {cut}");
        }
    }

    #[test]
    fn rejects_magic_version_and_dtype() {
        let mut bytes = save_checkpoint(&sample());
        assert!(matches!(load_checkpoint::<f64>(&bytes), Err(CheckpointError::Dtype { .. })));
        bytes[4] = 9;
        assert!(matches!(load_checkpoint::<f32>(&bytes), Err(CheckpointError::Version { found: 9 })));
        bytes[0] = b'X';
        assert!(matches!(load_checkpoint::<f32>(&bytes), Err(CheckpointError::BadMagic)));
    }

    #[test]
    fn arrays_are_little_endian() {
        let c = sample();
        let bytes = save_checkpoint(&c);
        let len = u32::from_le_bytes(bytes[6..10].try_into().unwrap()) as usize;
        let first = c.model.params.iter().next().unwrap().1.value.data()[0];
        // byte-order oracle: decode the first array element by hand
        let raw = &bytes[10 + len..14 + len];
        let bits = u32::from(raw[0]) | u32::from(raw[1]) << 8 | u32::from(raw[2]) << 16 | u32::from(raw[3]) << 24;
        assert_eq!(f32::from_bits(bits), first);
    }
}
