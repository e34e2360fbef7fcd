//! Binary model checkpoints.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! "PVNT" | version: u32 | config_len: u32 | config JSON (UTF-8)
//! tensor_count: u32
//! per tensor: name_len: u32 | name (UTF-8) | rank: u32 | extents: u64 * rank | payload: f64 * numel
//! crc32 (IEEE) of every preceding byte: u32
//! ```

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use crate::autodiff::Tensor;
use crate::error::{CheckpointError, Error, Result};
use crate::scalar::Scalar;
use crate::vit::{ModelParams, ViTConfig};

pub const MAGIC: [u8; 4] = *b"PVNT";
pub const FORMAT_VERSION: u32 = 1;

fn put_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn len_u32(n: usize, what: &str) -> Result<u32> {
    u32::try_from(n).map_err(|_| Error::contract(format!("{what} too large for checkpoint ({n})")))
}

pub fn encode_checkpoint<T: Scalar>(params: &ModelParams<T>, config: &ViTConfig) -> Result<Vec<u8>> {
    config.validate()?;
    params.validate(config)?;
    let mut out = Vec::with_capacity(64 + 8 * params.num_scalars());
    out.extend_from_slice(&MAGIC);
    put_u32(&mut out, FORMAT_VERSION);
    let json = serde_json::to_vec(config)?;
    put_u32(&mut out, len_u32(json.len(), "config")?);
    out.extend_from_slice(&json);
    let layout = ModelParams::<T>::layout(config);
    put_u32(&mut out, len_u32(layout.len(), "tensor count")?);
    for (name, _, _) in &layout {
        let t = params.get(name)?;
        put_u32(&mut out, len_u32(name.len(), "tensor name")?);
        out.extend_from_slice(name.as_bytes());
        put_u32(&mut out, len_u32(t.rank(), "rank")?);
        for &e in t.shape() {
            out.extend_from_slice(&(e as u64).to_le_bytes());
        }
        for v in t.data() {
            out.extend_from_slice(&v.as_f64().to_le_bytes());
        }
    }
    let crc = crc32fast::hash(&out);
    put_u32(&mut out, crc);
    Ok(out)
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> std::result::Result<&'a [u8], CheckpointError> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| CheckpointError::Malformed(format!("truncated {what} at byte {}", self.pos)))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self, what: &str) -> std::result::Result<u32, CheckpointError> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self, what: &str) -> std::result::Result<u64, CheckpointError> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().expect("8 bytes")))
    }
}

pub fn decode_checkpoint<T: Scalar>(bytes: &[u8]) -> Result<(ModelParams<T>, ViTConfig)> {
    if bytes.len() < 4 || bytes[..4] != MAGIC {
        return Err(CheckpointError::BadMagic.into());
    }
    if bytes.len() < 12 {
        return Err(CheckpointError::Malformed("file shorter than its header".into()).into());
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes"));
    if version != FORMAT_VERSION {
        return Err(CheckpointError::UnsupportedVersion(version).into());
    }
    let (body, trailer) = bytes.split_at(bytes.len() - 4);
    let stored = u32::from_le_bytes(trailer.try_into().expect("4 bytes"));
    let computed = crc32fast::hash(body);
    if stored != computed {
        return Err(CheckpointError::CrcMismatch { stored, computed }.into());
    }

    let malformed = |m: String| Error::from(CheckpointError::Malformed(m));
    let mut r = Reader { bytes: body, pos: 8 };
    let config_len = r.u32("config length")? as usize;
    let config: ViTConfig = serde_json::from_slice(r.take(config_len, "config")?)
        .map_err(|e| malformed(format!("config: {e}")))?;
    config.validate().map_err(|e| malformed(format!("config: {e}")))?;

    let expected: HashMap<String, Vec<usize>> = ModelParams::<T>::layout(&config)
        .into_iter()
        .map(|(name, shape, _)| (name, shape))
        .collect();
    let count = r.u32("tensor count")? as usize;
    let mut found: HashMap<String, Tensor<T>> = HashMap::with_capacity(count);
    for _ in 0..count {
        let name_len = r.u32("name length")? as usize;
        let name = std::str::from_utf8(r.take(name_len, "name")?)
            .map_err(|_| malformed("tensor name is not UTF-8".into()))?
            .to_string();
        let rank = r.u32("rank")? as usize;
        let shape = (0..rank)
            .map(|_| r.u64("extent").map(|e| e as usize))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        let Some(want) = expected.get(&name) else {
            return Err(malformed(format!("unexpected tensor {name}")));
        };
        if *want != shape {
            return Err(CheckpointError::ShapeMismatch {
                name,
                expected: want.clone(),
                found: shape,
            }
            .into());
        }
        let numel: usize = shape.iter().product();
        let payload = r.take(numel * 8, "payload")?;
        let data = payload
            .chunks_exact(8)
            .map(|c| T::lit(f64::from_le_bytes(c.try_into().expect("8 bytes"))))
            .collect();
        let tensor = Tensor::new(&shape, data).map_err(|e| malformed(format!("{name}: {e}")))?;
        if found.insert(name.clone(), tensor).is_some() {
            return Err(malformed(format!("duplicate tensor {name}")));
        }
    }
    if r.pos != body.len() {
        return Err(malformed(format!("{} trailing bytes", body.len() - r.pos)));
    }
    let mut params = ModelParams::default();
    for (name, _, _) in ModelParams::<T>::layout(&config) {
        let t = found
            .remove(&name)
            .ok_or_else(|| malformed(format!("missing tensor {name}")))?;
        params.insert(name, t)?;
    }
    Ok((params, config))
}

pub fn save_checkpoint<T: Scalar>(params: &ModelParams<T>, config: &ViTConfig, path: &Path) -> Result<()> {
    let bytes = encode_checkpoint(params, config)?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint<T: Scalar>(path: &Path) -> Result<(ModelParams<T>, ViTConfig)> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_checkpoint(&bytes)
}
