//! Binary model container.
//!
//! ```text
//! "WRML"  u16 version  u32 tensor_count
//! per tensor: u32 dim_count, u32 dims[dim_count], u32 element_count, f32 payload
//! ```
//!
//! Little-endian throughout. Tensor 0 holds `[dropout_rate, input_size,
//! input_channels]`; the rest are weight/bias pairs in plan order, from which
//! the plan is rebuilt.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{LayerParams, ModelPlan, ParamBundle};
use crate::tensor::Tensor;

pub const MAGIC: &[u8; 4] = b"WRML";
pub const VERSION: u16 = 1;
pub const HEADER_BYTES: usize = 10;

fn push_tensor(out: &mut Vec<u8>, t: &Tensor<f32>) {
    out.extend_from_slice(&(t.rank() as u32).to_le_bytes());
    for &d in t.shape() {
        out.extend_from_slice(&(d as u32).to_le_bytes());
    }
    out.extend_from_slice(&(t.len() as u32).to_le_bytes());
    for v in t.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

pub fn model_to_bytes(plan: &ModelPlan, params: &ParamBundle) -> Result<Vec<u8>> {
    params.check_against(plan)?;
    let meta = Tensor::from_vec(vec![
        plan.dropout_rate(),
        plan.input_size() as f32,
        plan.input_shape()[2] as f32,
    ]);
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(1 + 2 * params.layers.len() as u32).to_le_bytes());
    push_tensor(&mut out, &meta);
    for t in params.tensors() {
        push_tensor(&mut out, t);
    }
    Ok(out)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn take(&mut self, n: usize, what: &str) -> Result<&[u8]> {
        if self.bytes.len() - self.pos < n {
            return Err(Error::Format {
                offset: self.pos as u64,
                reason: format!("truncated: {what} needs {n} bytes"),
            });
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        let b = self.take(4, what)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn tensor(&mut self) -> Result<Tensor<f32>> {
        let start = self.pos as u64;
        let rank = self.u32("dim count")? as usize;
        if rank == 0 || rank > 8 {
            return Err(Error::Format {
                offset: start,
                reason: format!("unsupported dim count {rank}"),
            });
        }
        let dims = (0..rank)
            .map(|_| self.u32("dimension").map(|d| d as usize))
            .collect::<Result<Vec<_>>>()?;
        let count_at = self.pos as u64;
        let count = self.u32("element count")? as usize;
        if dims.iter().product::<usize>() != count || count == 0 {
            return Err(Error::Format {
                offset: count_at,
                reason: format!("element count {count} does not match dims {dims:?}"),
            });
        }
        let payload = self.take(count * 4, "tensor payload")?;
        let data = payload
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        Tensor::new(dims, data).map_err(|e| Error::Format {
            offset: start,
            reason: e.to_string(),
        })
    }
}

pub fn model_from_bytes(bytes: &[u8]) -> Result<(ModelPlan, ParamBundle)> {
    let mut c = Cursor { bytes, pos: 0 };
    if c.take(4, "magic")? != MAGIC {
        return Err(Error::Format {
            offset: 0,
            reason: "magic mismatch".into(),
        });
    }
    let v = c.take(2, "version")?;
    let version = u16::from_le_bytes([v[0], v[1]]);
    if version != VERSION {
        return Err(Error::Format {
            offset: 4,
            reason: format!("unsupported version {version}"),
        });
    }
    let count = c.u32("tensor count")? as usize;
    if count < 3 || count.is_multiple_of(2) {
        return Err(Error::Format {
            offset: 6,
            reason: format!("tensor count {count} is not 1 + 2 per layer"),
        });
    }
    let meta_at = c.pos as u64;
    let meta = c.tensor()?;
    if meta.shape() != [3] {
        return Err(Error::Format {
            offset: meta_at,
            reason: "metadata tensor must have shape [3]".into(),
        });
    }
    let (dropout, input_size, input_channels) =
        (meta.data()[0], meta.data()[1] as usize, meta.data()[2] as usize);

    let mut layers = Vec::new();
    let mut channels = Vec::new();
    let mut fc = Vec::new();
    let mut prev_out = input_channels;
    for _ in 0..(count - 1) / 2 {
        let at = c.pos as u64;
        let weights = c.tensor()?;
        let bias = c.tensor()?;
        let bad = |reason: String| Error::Format { offset: at, reason };
        match *weights.shape() {
            [3, 3, cin, cout] if fc.is_empty() && cin == prev_out => {
                channels.push(cout);
                prev_out = cout;
            }
            [_, n_out] if !channels.is_empty() => {
                fc.push(n_out);
            }
            ref s => return Err(bad(format!("unexpected weight shape {s:?}"))),
        }
        if bias.shape() != [*weights.shape().last().expect("rank >= 1")] {
            return Err(bad(format!("bias shape {:?} does not match weights", bias.shape())));
        }
        layers.push(LayerParams { weights, bias });
    }
    if c.pos != bytes.len() {
        return Err(Error::Format {
            offset: c.pos as u64,
            reason: format!("{} trailing bytes", bytes.len() - c.pos),
        });
    }
    let plan = ModelPlan::from_schedule(input_size, input_channels, &channels, &fc, dropout)
        .map_err(|e| Error::Format {
            offset: meta_at,
            reason: e.to_string(),
        })?;
    let params = ParamBundle { layers };
    params.check_against(&plan).map_err(|e| Error::Format {
        offset: HEADER_BYTES as u64,
        reason: e.to_string(),
    })?;
    Ok((plan, params))
}

pub fn save_model(plan: &ModelPlan, params: &ParamBundle, path: &Path) -> Result<()> {
    let bytes = model_to_bytes(plan, params)?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: &Path) -> Result<(ModelPlan, ParamBundle)> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    model_from_bytes(&bytes)
}

/// Expected file size for `params` (header plus per-tensor records).
pub fn model_file_size(params: &ParamBundle) -> usize {
    let record = |rank: usize, len: usize| 8 + 4 * rank + 4 * len;
    HEADER_BYTES + record(1, 3) + params.tensors().map(|t| record(t.rank(), t.len())).sum::<usize>()
}
