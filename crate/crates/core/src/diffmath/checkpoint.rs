//! Named-tensor checkpoint archive.
//!
//! Little-endian layout:
//!
//! ```text
//! magic    8 bytes  "IGADCKPT"
//! version  u8       1
//! count    u32      number of tensors
//! repeated count times:
//!   name_len u32, name (UTF-8), rows u32, cols u32, rows*cols f64 (row-major)
//! meta_len u32, meta (UTF-8 `key = value` lines)
//! ```

use std::io::{Read, Write};
use std::path::Path;

use ndarray::Array2;

use super::Tensor2;
use crate::{Error, Result};

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"IGADCKPT";
pub const CHECKPOINT_VERSION: u8 = 1;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct NamedTensors {
    pub tensors: Vec<(String, Tensor2)>,
    pub meta: String,
}

impl NamedTensors {
    pub fn get(&self, name: &str) -> Option<&Tensor2> {
        self.tensors.iter().find(|(n, _)| n == name).map(|(_, t)| t)
    }
}

fn u32_len(n: usize, what: &str) -> Result<u32> {
    u32::try_from(n).map_err(|_| Error::InvalidArgument(format!("{what} too large for checkpoint: {n}")))
}

pub fn encode(archive: &NamedTensors) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    buf.extend_from_slice(CHECKPOINT_MAGIC);
    buf.push(CHECKPOINT_VERSION);
    buf.extend_from_slice(&u32_len(archive.tensors.len(), "tensor count")?.to_le_bytes());
    for (name, t) in &archive.tensors {
        buf.extend_from_slice(&u32_len(name.len(), "name")?.to_le_bytes());
        buf.extend_from_slice(name.as_bytes());
        buf.extend_from_slice(&u32_len(t.nrows(), "rows")?.to_le_bytes());
        buf.extend_from_slice(&u32_len(t.ncols(), "cols")?.to_le_bytes());
        for v in t.iter() {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    buf.extend_from_slice(&u32_len(archive.meta.len(), "meta")?.to_le_bytes());
    buf.extend_from_slice(archive.meta.as_bytes());
    Ok(buf)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
    path: &'a Path,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.bytes.len() - self.pos < n {
            return Err(Error::corrupt(
                self.path,
                format!(
                    "truncated while reading {what} at byte offset {} (need {n} bytes, {} left)",
                    self.pos,
                    self.bytes.len() - self.pos
                ),
            ));
        }
        let out = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn u32(&mut self, what: &str) -> Result<usize> {
        let b = self.take(4, what)?;
        Ok(u32::from_le_bytes(b.try_into().unwrap()) as usize)
    }
}

pub fn decode(bytes: &[u8], path: &Path) -> Result<NamedTensors> {
    let mut cur = Cursor { bytes, pos: 0, path };
    if cur.take(8, "magic")? != CHECKPOINT_MAGIC {
        return Err(Error::corrupt(path, "bad magic header at byte offset 0"));
    }
    let version = cur.take(1, "version")?[0];
    if version != CHECKPOINT_VERSION {
        return Err(Error::corrupt(path, format!("unsupported version {version} at byte offset 8")));
    }
    let count = cur.u32("tensor count")?;
    let mut tensors = Vec::with_capacity(count.min(1024));
    for i in 0..count {
        let name_len = cur.u32("name length")?;
        let at = cur.pos;
        let name = std::str::from_utf8(cur.take(name_len, "name")?)
            .map_err(|_| Error::corrupt(path, format!("tensor {i} name is not UTF-8 at byte offset {at}")))?
            .to_string();
        let rows = cur.u32("rows")?;
        let cols = cur.u32("cols")?;
        let n = rows
            .checked_mul(cols)
            .and_then(|n| n.checked_mul(8))
            .ok_or_else(|| Error::corrupt(path, format!("tensor {name} shape {rows}x{cols} overflows")))?;
        let raw = cur.take(n, &format!("values of tensor {name}"))?;
        let values = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let t = Array2::from_shape_vec((rows, cols), values).map_err(|e| Error::corrupt(path, e.to_string()))?;
        tensors.push((name, t));
    }
    let meta_len = cur.u32("meta length")?;
    let at = cur.pos;
    let meta = std::str::from_utf8(cur.take(meta_len, "meta")?)
        .map_err(|_| Error::corrupt(path, format!("meta block is not UTF-8 at byte offset {at}")))?
        .to_string();
    if cur.pos != bytes.len() {
        return Err(Error::corrupt(
            path,
            format!("{} trailing bytes after byte offset {}", bytes.len() - cur.pos, cur.pos),
        ));
    }
    Ok(NamedTensors { tensors, meta })
}

pub fn write_checkpoint(path: &Path, archive: &NamedTensors) -> Result<()> {
    let bytes = encode(archive)?;
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&bytes).map_err(|e| Error::io(path, e))
}

pub fn read_checkpoint(path: &Path) -> Result<NamedTensors> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;
    decode(&bytes, path)
}
