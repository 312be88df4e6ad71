//! Binary checkpoint format (all integers and floats little-endian):
//!
//! ```text
//! "TSGC"  u32 version
//! u32 input_len, in_channels, factor, kernel1, kernel2, pool1, pool2
//! f64 × n  parameters in declaration order
//! ```
//!
//! The parameter count is implied by the spec; trailing bytes are an error.

use std::io::{Read, Write};

use super::{ModelSpec, ParamLayout, TrainedModel};
use crate::error::{Error, Result};

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"TSGC";
pub const CHECKPOINT_VERSION: u32 = 1;

pub fn save_checkpoint<W: Write>(model: &TrainedModel, mut w: W) -> Result<()> {
    let s = &model.spec;
    w.write_all(CHECKPOINT_MAGIC)?;
    w.write_all(&CHECKPOINT_VERSION.to_le_bytes())?;
    for v in [s.input_len, s.in_channels, s.factor, s.kernel1, s.kernel2, s.pool1, s.pool2] {
        let v = u32::try_from(v).map_err(|_| Error::Checkpoint(format!("spec field {v} exceeds u32")))?;
        w.write_all(&v.to_le_bytes())?;
    }
    for p in &model.params {
        w.write_all(&p.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)
        .map_err(|e| Error::Checkpoint(format!("truncated header: {e}")))?;
    Ok(u32::from_le_bytes(b))
}

pub fn load_checkpoint<R: Read>(mut r: R) -> Result<TrainedModel> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)
        .map_err(|e| Error::Checkpoint(format!("truncated header: {e}")))?;
    if &magic != CHECKPOINT_MAGIC {
        return Err(Error::Checkpoint(format!("bad magic {magic:?}")));
    }
    let version = read_u32(&mut r)?;
    if version != CHECKPOINT_VERSION {
        return Err(Error::Checkpoint(format!("unsupported version {version}")));
    }
    let mut f = [0usize; 7];
    for v in &mut f {
        *v = read_u32(&mut r)? as usize;
    }
    let spec = ModelSpec {
        input_len: f[0],
        in_channels: f[1],
        factor: f[2],
        kernel1: f[3],
        kernel2: f[4],
        pool1: f[5],
        pool2: f[6],
    };
    let lengths = spec.lengths()?;
    let layout = ParamLayout::of(&spec)?;
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() != layout.total * 8 {
        return Err(Error::Checkpoint(format!(
            "expected {} parameter bytes, found {}",
            layout.total * 8,
            bytes.len()
        )));
    }
    let params = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    Ok(TrainedModel {
        spec,
        lengths,
        layout,
        params,
    })
}
