//! Portable checkpoint format:
//!
//! ```text
//! "NNEQ" | u32 version = 1 | u32 F | u32 k | u32 H | u32 N
//! conv kernels | conv bias | fw Wx | fw Wh | fw b | bw Wx | bw Wh | bw b | dense W | dense b
//! u32 CRC32 of everything before it
//! ```
//!
//! Integers and f64 values are little-endian.

use std::path::Path;

use super::config::EqualizerConfig;
use super::model::{EqualizerModel, ParamBlock, Params};
use crate::error::{CheckpointError, Error, Result};

pub const MAGIC: &[u8; 4] = b"NNEQ";
pub const VERSION: u32 = 1;

pub fn encode(model: &EqualizerModel) -> Vec<u8> {
    let c = &model.cfg;
    let mut out = Vec::with_capacity(28 + 8 * model.parameter_count());
    out.extend_from_slice(MAGIC);
    for v in [
        VERSION,
        c.n_filters as u32,
        c.kernel_size as u32,
        c.lstm_hidden as u32,
        c.n_taps as u32,
    ] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for s in model.params.slices() {
        for v in s {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    let crc = crc32fast::hash(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> std::result::Result<&[u8], CheckpointError> {
        let end = self.pos.checked_add(n).ok_or(CheckpointError::Truncated)?;
        let s = self.buf.get(self.pos..end).ok_or(CheckpointError::Truncated)?;
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> std::result::Result<u32, CheckpointError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f64s(&mut self, dst: &mut [f64]) -> std::result::Result<(), CheckpointError> {
        let bytes = self.take(8 * dst.len())?;
        for (d, b) in dst.iter_mut().zip(bytes.chunks_exact(8)) {
            *d = f64::from_le_bytes(b.try_into().unwrap());
        }
        Ok(())
    }
}

pub fn decode(bytes: &[u8]) -> std::result::Result<EqualizerModel, CheckpointError> {
    let mut r = Reader { buf: bytes, pos: 0 };
    let magic: [u8; 4] = r.take(4)?.try_into().unwrap();
    if &magic != MAGIC {
        return Err(CheckpointError::BadMagic(magic));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(CheckpointError::BadVersion(version));
    }
    let dims = [r.u32()?, r.u32()?, r.u32()?, r.u32()?];
    let cfg = EqualizerConfig::new(dims[0] as usize, dims[1] as usize, dims[2] as usize, dims[3] as usize);
    // refuse to allocate more than the file can hold
    let [f, k, h, n] = dims.map(u128::from);
    let m = 2 * n + 1;
    let expected = 8 * (f * (4 * k + 1) + 8 * (h * (f + h) + h) + m * 4 * h + 2);
    if ((bytes.len() - r.pos) as u128) < expected {
        return Err(CheckpointError::Truncated);
    }
    let mut params = Params::zeros(&cfg);
    for block in [
        params.conv.slices_mut(),
        params.bilstm.slices_mut(),
        params.dense.slices_mut(),
    ] {
        for s in block {
            r.f64s(s)?;
        }
    }
    let body_end = r.pos;
    let stored = r.u32()?;
    let computed = crc32fast::hash(&bytes[..body_end]);
    if stored != computed {
        return Err(CheckpointError::Checksum { stored, computed });
    }
    if r.pos != bytes.len() {
        return Err(CheckpointError::TrailingBytes(bytes.len() - r.pos));
    }
    Ok(EqualizerModel::from_params(cfg, params))
}

pub fn save_checkpoint(model: &EqualizerModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, encode(model)).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<EqualizerModel> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(decode(&bytes)?)
}
