//! Binary model checkpoints.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic    8 bytes  "RFDSANN\0"
//! version  u32      currently 1
//! input    u32 len, u32 channels
//! selu     f64 a, f64 scale
//! layers   u32 count, then per layer a u8 tag and its fields
//! labels   u32 count, then per label u32 byte length + UTF-8
//! params   u64 count, then f64 values
//! ```

use std::path::Path;

use rfdsa_core::nnet::{Activation, LayerSpec, NeuralModel, SeluConfig, Shape};
use sha2::{Digest, Sha256};

use crate::error::{io_err, Error, Result};

pub const MAGIC: &[u8; 8] = b"RFDSANN\0";
pub const VERSION: u32 = 1;

const TAG_PAD: u8 = 0;
const TAG_CONV: u8 = 1;
const TAG_POOL: u8 = 2;
const TAG_DENSE: u8 = 3;
const TAG_DROPOUT: u8 = 4;

fn act_code(a: Activation) -> u8 {
    match a {
        Activation::Linear => 0,
        Activation::Selu => 1,
    }
}

pub fn encode(model: &NeuralModel) -> Vec<u8> {
    let mut b = Vec::with_capacity(64 + 8 * model.param_count());
    let u32_ = |b: &mut Vec<u8>, v: usize| b.extend_from_slice(&(v as u32).to_le_bytes());
    b.extend_from_slice(MAGIC);
    b.extend_from_slice(&VERSION.to_le_bytes());
    let input = model.input_shape();
    u32_(&mut b, input.len);
    u32_(&mut b, input.channels);
    b.extend_from_slice(&model.selu().a.to_le_bytes());
    b.extend_from_slice(&model.selu().scale.to_le_bytes());
    u32_(&mut b, model.layers().len());
    for layer in model.layers() {
        match *layer {
            LayerSpec::ZeroPad { pad } => {
                b.push(TAG_PAD);
                u32_(&mut b, pad);
            }
            LayerSpec::Conv1d {
                filters,
                kernel,
                stride,
                activation,
            } => {
                b.push(TAG_CONV);
                u32_(&mut b, filters);
                u32_(&mut b, kernel);
                u32_(&mut b, stride);
                b.push(act_code(activation));
            }
            LayerSpec::MaxPool { size, stride } => {
                b.push(TAG_POOL);
                u32_(&mut b, size);
                u32_(&mut b, stride);
            }
            LayerSpec::Dense { units, activation } => {
                b.push(TAG_DENSE);
                u32_(&mut b, units);
                b.push(act_code(activation));
            }
            LayerSpec::Dropout { p } => {
                b.push(TAG_DROPOUT);
                b.extend_from_slice(&p.to_le_bytes());
            }
        }
    }
    u32_(&mut b, model.labels().len());
    for label in model.labels() {
        u32_(&mut b, label.len());
        b.extend_from_slice(label.as_bytes());
    }
    b.extend_from_slice(&(model.param_count() as u64).to_le_bytes());
    for p in model.params() {
        b.extend_from_slice(&p.to_le_bytes());
    }
    b
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| Error::Checkpoint("truncated file".into()))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<usize> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()) as usize)
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn activation(&mut self) -> Result<Activation> {
        match self.u8()? {
            0 => Ok(Activation::Linear),
            1 => Ok(Activation::Selu),
            c => Err(Error::Checkpoint(format!("unknown activation code {c}"))),
        }
    }
}

pub fn decode(bytes: &[u8]) -> Result<NeuralModel> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(8)? != MAGIC {
        return Err(Error::Checkpoint("not a model checkpoint".into()));
    }
    let version = r.u32()? as u32;
    if version != VERSION {
        return Err(Error::Checkpoint(format!("unsupported version {version}")));
    }
    let input = Shape::new(r.u32()?, r.u32()?);
    let selu = SeluConfig {
        a: r.f64()?,
        scale: r.f64()?,
    };
    let n_layers = r.u32()?;
    let mut layers = Vec::with_capacity(n_layers.min(1024));
    for _ in 0..n_layers {
        layers.push(match r.u8()? {
            TAG_PAD => LayerSpec::ZeroPad { pad: r.u32()? },
            TAG_CONV => LayerSpec::Conv1d {
                filters: r.u32()?,
                kernel: r.u32()?,
                stride: r.u32()?,
                activation: r.activation()?,
            },
            TAG_POOL => LayerSpec::MaxPool {
                size: r.u32()?,
                stride: r.u32()?,
            },
            TAG_DENSE => LayerSpec::Dense {
                units: r.u32()?,
                activation: r.activation()?,
            },
            TAG_DROPOUT => LayerSpec::Dropout { p: r.f64()? },
            t => return Err(Error::Checkpoint(format!("unknown layer tag {t}"))),
        });
    }
    let n_labels = r.u32()?;
    let mut labels = Vec::with_capacity(n_labels.min(1024));
    for _ in 0..n_labels {
        let len = r.u32()?;
        let s = std::str::from_utf8(r.take(len)?).map_err(|_| Error::Checkpoint("label is not UTF-8".into()))?;
        labels.push(s.to_string());
    }
    let mut model = NeuralModel::new(input, layers, labels, selu)?;
    let n = r.u64()?;
    if n != model.param_count() as u64 {
        return Err(Error::Checkpoint(format!(
            "parameter count {n} does not match the architecture ({})",
            model.param_count()
        )));
    }
    let params: Vec<f64> = (0..n).map(|_| r.f64()).collect::<Result<_>>()?;
    if r.pos != bytes.len() {
        return Err(Error::Checkpoint("trailing bytes".into()));
    }
    model.set_params(&params)?;
    Ok(model)
}

pub fn save(path: &Path, model: &NeuralModel) -> Result<()> {
    std::fs::write(path, encode(model)).map_err(io_err(path))
}

pub fn load(path: &Path) -> Result<NeuralModel> {
    decode(&std::fs::read(path).map_err(io_err(path))?)
}

/// Lowercase hex SHA-256.
pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}
