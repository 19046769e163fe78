//! Self-describing little-endian binary model format.
//!
//! ```text
//! magic "PGNM" | version u32 | n_columns u32 | dropout_on_laterals u8
//! per column:
//!   frozen u8 | output_lateral u8 | lateral_sources u32
//!   task_name (u32 length + UTF-8) | hidden activation u8 | output activation u8
//!   n_layers u32
//!   per layer: out_dim u32 | in_dim u32 | weights f64 × out·in (row-major) | bias f64 × out
//! ```
//!
//! Values are stored as raw IEEE-754 bits, so a round trip is bit-exact.

use std::path::Path;

use ndarray::{Array1, Array2};

use super::{Column, ProgNetModel};
use crate::nn::{Activation, LayerParams};
use crate::{Error, Result};

pub const MODEL_MAGIC: &[u8; 4] = b"PGNM";
pub const MODEL_VERSION: u32 = 1;

fn activation_tag(a: Activation) -> u8 {
    match a {
        Activation::Sigmoid => 0,
        Activation::Softmax => 1,
    }
}

fn put_u32(out: &mut Vec<u8>, v: usize) {
    out.extend_from_slice(&u32::try_from(v).expect("dimension fits in u32").to_le_bytes());
}

/// Encodes one column (without the file header).
pub fn encode_column(col: &Column) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + col.param_count() * 8);
    out.push(u8::from(col.frozen));
    out.push(u8::from(col.output_lateral));
    put_u32(&mut out, col.lateral_sources);
    put_u32(&mut out, col.task_name.len());
    out.extend_from_slice(col.task_name.as_bytes());
    out.push(activation_tag(Activation::Sigmoid));
    out.push(activation_tag(Activation::Softmax));
    put_u32(&mut out, col.layers.len());
    for layer in &col.layers {
        put_u32(&mut out, layer.out_dim());
        put_u32(&mut out, layer.in_dim());
        for v in layer.weights.iter().chain(layer.bias.iter()) {
            out.extend_from_slice(&v.to_bits().to_le_bytes());
        }
    }
    out
}

pub fn encode_model(model: &ProgNetModel) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MODEL_MAGIC);
    out.extend_from_slice(&MODEL_VERSION.to_le_bytes());
    put_u32(&mut out, model.columns.len());
    out.push(u8::from(model.dropout_on_laterals));
    for col in &model.columns {
        out.extend_from_slice(&encode_column(col));
    }
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len()).ok_or_else(|| {
            Error::ModelFormat(format!("truncated at byte {} (wanted {n} more)", self.pos))
        })?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn flag(&mut self) -> Result<bool> {
        match self.u8()? {
            0 => Ok(false),
            1 => Ok(true),
            v => Err(Error::ModelFormat(format!("invalid flag byte {v}"))),
        }
    }

    fn u32(&mut self) -> Result<usize> {
        let b = self.take(4)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]) as usize)
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let bytes = self.take(n.checked_mul(8).ok_or_else(|| Error::ModelFormat("size overflow".into()))?)?;
        Ok(bytes
            .chunks_exact(8)
            .map(|c| f64::from_bits(u64::from_le_bytes(c.try_into().expect("8-byte chunk"))))
            .collect())
    }
}

fn decode_column(r: &mut Reader<'_>) -> Result<Column> {
    let frozen = r.flag()?;
    let output_lateral = r.flag()?;
    let lateral_sources = r.u32()?;
    let name_len = r.u32()?;
    let task_name = String::from_utf8(r.take(name_len)?.to_vec())
        .map_err(|_| Error::ModelFormat("task name is not UTF-8".into()))?;
    let (hidden, output) = (r.u8()?, r.u8()?);
    if hidden != activation_tag(Activation::Sigmoid) || output != activation_tag(Activation::Softmax) {
        return Err(Error::ModelFormat(format!("unsupported activations {hidden}/{output}")));
    }
    let n_layers = r.u32()?;
    if n_layers == 0 {
        return Err(Error::ModelFormat("column without layers".into()));
    }
    let mut layers = Vec::with_capacity(n_layers.min(64));
    for _ in 0..n_layers {
        let out_dim = r.u32()?;
        let in_dim = r.u32()?;
        let weights = r.f64s(out_dim * in_dim)?;
        let bias = r.f64s(out_dim)?;
        let weights = Array2::from_shape_vec((out_dim, in_dim), weights)
            .map_err(|e| Error::ModelFormat(e.to_string()))?;
        layers.push(LayerParams::new(weights, Array1::from(bias))?);
    }
    Column::from_parts(layers, frozen, task_name, lateral_sources, output_lateral)
}

pub fn decode_model(bytes: &[u8]) -> Result<ProgNetModel> {
    let mut r = Reader { buf: bytes, pos: 0 };
    if r.take(4)? != MODEL_MAGIC {
        return Err(Error::ModelFormat("bad magic".into()));
    }
    let version = r.u32()? as u32;
    if version != MODEL_VERSION {
        return Err(Error::ModelFormat(format!("unsupported version {version}")));
    }
    let n_columns = r.u32()?;
    let dropout_on_laterals = r.flag()?;
    let columns = (0..n_columns)
        .map(|_| decode_column(&mut r))
        .collect::<Result<Vec<_>>>()?;
    if r.pos != bytes.len() {
        return Err(Error::ModelFormat(format!("{} trailing bytes", bytes.len() - r.pos)));
    }
    let frozen: Vec<bool> = columns.iter().map(|c| c.frozen).collect();
    let model = ProgNetModel::from_columns(columns, dropout_on_laterals)?;
    if model.columns.iter().zip(frozen).any(|(c, f)| c.frozen != f) {
        return Err(Error::ModelFormat("frozen flags disagree with column order".into()));
    }
    Ok(model)
}

pub fn save_model(model: &ProgNetModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, encode_model(model)).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_model(path: impl AsRef<Path>) -> Result<ProgNetModel> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    decode_model(&bytes)
}
