//! Model file format, all integers u32 little-endian:
//!
//! ```text
//! "NBDS" version d hops t_max a_max v_in v_out
//! input vocab:  count, then (byte length, utf-8 bytes) per token
//! output vocab: same
//! tensor count, then (rows, cols, rows*cols f32) per tensor
//! ```

use std::path::Path;

use thiserror::Error;

use super::model::{ModelDims, Params, SummarizerModel};
use super::tensor::Tensor;
use crate::corpus::Vocab;

pub const MAGIC: &[u8; 4] = b"NBDS";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ModelIoError {
    #[error("corrupt model file: {0}")]
    CorruptModel(String),
    #[error("model format version {found} is not supported (expected {FORMAT_VERSION})")]
    VersionMismatch { found: u32 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn put_u32(buf: &mut Vec<u8>, v: usize) {
    buf.extend_from_slice(&(v as u32).to_le_bytes());
}

fn put_vocab(buf: &mut Vec<u8>, v: &Vocab) {
    put_u32(buf, v.len());
    for t in v.tokens() {
        put_u32(buf, t.len());
        buf.extend_from_slice(t.as_bytes());
    }
}

pub fn model_to_bytes(m: &SummarizerModel) -> Vec<u8> {
    let dims = m.dims();
    let mut buf = Vec::new();
    buf.extend_from_slice(MAGIC);
    put_u32(&mut buf, FORMAT_VERSION as usize);
    for v in [dims.d, dims.hops, m.t_max, m.a_max, dims.v_in, dims.v_out] {
        put_u32(&mut buf, v);
    }
    put_vocab(&mut buf, &m.input_vocab);
    put_vocab(&mut buf, &m.output_vocab);
    let tensors = m.params.tensors();
    put_u32(&mut buf, tensors.len());
    for t in tensors {
        put_u32(&mut buf, t.rows);
        put_u32(&mut buf, t.cols);
        for &x in &t.data {
            buf.extend_from_slice(&(x as f32).to_le_bytes());
        }
    }
    buf
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], ModelIoError> {
        if self.bytes.len() - self.pos < n {
            return Err(ModelIoError::CorruptModel(format!("truncated at byte {}", self.pos)));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<usize, ModelIoError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()) as usize)
    }

    fn vocab(&mut self) -> Result<Vocab, ModelIoError> {
        let n = self.u32()?;
        let mut tokens = Vec::with_capacity(n.min(1 << 20));
        for _ in 0..n {
            let len = self.u32()?;
            let s = std::str::from_utf8(self.take(len)?).map_err(|_| ModelIoError::CorruptModel("vocabulary token is not utf-8".into()))?;
            tokens.push(s.to_string());
        }
        Ok(tokens.into())
    }
}

pub fn model_from_bytes(bytes: &[u8]) -> Result<SummarizerModel, ModelIoError> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4)? != MAGIC {
        return Err(ModelIoError::CorruptModel("bad magic".into()));
    }
    let version = r.u32()? as u32;
    if version != FORMAT_VERSION {
        return Err(ModelIoError::VersionMismatch { found: version });
    }
    let [d, hops, t_max, a_max, v_in, v_out] = [r.u32()?, r.u32()?, r.u32()?, r.u32()?, r.u32()?, r.u32()?];
    let input_vocab = r.vocab()?;
    let output_vocab = r.vocab()?;
    if input_vocab.len() != v_in || output_vocab.len() != v_out {
        return Err(ModelIoError::CorruptModel("vocabulary size disagrees with header".into()));
    }
    let dims = ModelDims { d, hops, v_in, v_out };
    let shapes = Params::expected_shapes(dims);
    if r.u32()? != shapes.len() {
        return Err(ModelIoError::CorruptModel("unexpected tensor count".into()));
    }
    let mut params = Params::zeros(dims);
    for (t, (rows, cols)) in params.tensors_mut().into_iter().zip(shapes) {
        if r.u32()? != rows || r.u32()? != cols {
            return Err(ModelIoError::CorruptModel("tensor shape disagrees with header".into()));
        }
        let raw = r.take(rows * cols * 4)?;
        *t = Tensor {
            rows,
            cols,
            data: raw.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64).collect(),
        };
    }
    if r.pos != bytes.len() {
        return Err(ModelIoError::CorruptModel("trailing bytes".into()));
    }
    if !params.is_finite() {
        return Err(ModelIoError::CorruptModel("non-finite weights".into()));
    }
    Ok(SummarizerModel {
        hops,
        t_max,
        a_max,
        params,
        input_vocab,
        output_vocab,
    })
}

pub fn save_model(m: &SummarizerModel, path: &Path) -> Result<(), ModelIoError> {
    std::fs::write(path, model_to_bytes(m))?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<SummarizerModel, ModelIoError> {
    model_from_bytes(&std::fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::code::build_code_graph;
    use crate::corpus::{Vocab, BOS};

    fn model() -> SummarizerModel {
        let vin: Vocab = ["<pad>", "<s>", "</s>", "<unk>", "<str>", "<num>", "x", "café"].map(String::from).to_vec().into();
        SummarizerModel::new(4, 1, vin, Vocab::reserved_only(), 9)
    }

    #[test]
    fn round_trip_is_bit_identical() {
        let m = model();
        let back = model_from_bytes(&model_to_bytes(&m)).unwrap();
        assert_eq!(back, m);
        let g = build_code_graph("x = x", 100, 200);
        assert_eq!(back.forward(&g, &[BOS, 3]).unwrap(), m.forward(&g, &[BOS, 3]).unwrap());
    }

    #[test]
    fn corrupt_and_version() {
        let bytes = model_to_bytes(&model());
        for cut in [0, 3, 10, bytes.len() - 1] {
            assert!(matches!(model_from_bytes(&bytes[..cut]), Err(ModelIoError::CorruptModel(_))));
        }
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(matches!(model_from_bytes(&extra), Err(ModelIoError::CorruptModel(_))));
        let mut future = bytes;
        future[4..8].copy_from_slice(&2u32.to_le_bytes());
        assert!(matches!(model_from_bytes(&future), Err(ModelIoError::VersionMismatch { found: 2 })));
    }
}
