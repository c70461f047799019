//! Binary parameter container shared by the acoustic model and the
//! extractor nets.
//!
//! Little-endian layout: magic `CTCM`, `u32` version, `u32` header length and
//! a JSON header describing the model, `u64` optimizer step, `u32` tensor
//! count, then per tensor: `u32` name length, name, `u8` trainable flag,
//! `u32` rank, `u32` dims, `f64` data in row-major order.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::params::{NamedTensor, ParamStore};

pub const MAGIC: &[u8; 4] = b"CTCM";
pub const VERSION: u32 = 1;

pub fn to_bytes(header: &str, params: &ParamStore) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(header.len() as u32).to_le_bytes());
    out.extend_from_slice(header.as_bytes());
    out.extend_from_slice(&params.step.to_le_bytes());
    out.extend_from_slice(&(params.tensors().len() as u32).to_le_bytes());
    for t in params.tensors() {
        out.extend_from_slice(&(t.name.len() as u32).to_le_bytes());
        out.extend_from_slice(t.name.as_bytes());
        out.push(u8::from(t.trainable));
        out.extend_from_slice(&(t.shape.len() as u32).to_le_bytes());
        for &d in &t.shape {
            out.extend_from_slice(&(d as u32).to_le_bytes());
        }
        for x in &t.data {
            out.extend_from_slice(&x.to_le_bytes());
        }
    }
    out
}

pub fn write(path: &Path, header: &str, params: &ParamStore) -> Result<()> {
    fs::write(path, to_bytes(header, params))?;
    Ok(())
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
    path: &'a Path,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| Error::format(self.path, "truncated checkpoint"))?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn string(&mut self) -> Result<String> {
        let n = self.u32()? as usize;
        String::from_utf8(self.take(n)?.to_vec()).map_err(|_| Error::format(self.path, "invalid UTF-8"))
    }
}

pub fn from_bytes(bytes: &[u8], path: &Path) -> Result<(String, ParamStore)> {
    let mut r = Reader { bytes, pos: 0, path };
    if r.take(4)? != MAGIC {
        return Err(Error::format(path, "bad magic"));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(Error::format(path, format!("unsupported version {version}")));
    }
    let header = r.string()?;
    let step = r.u64()?;
    let count = r.u32()?;
    let mut params = ParamStore::new();
    for _ in 0..count {
        let name = r.string()?;
        let trainable = r.take(1)?[0] != 0;
        let rank = r.u32()? as usize;
        let shape = (0..rank).map(|_| r.u32().map(|d| d as usize)).collect::<Result<Vec<_>>>()?;
        let n: usize = shape.iter().product();
        let raw = r.take(n.checked_mul(8).ok_or_else(|| Error::format(path, "tensor too large"))?)?;
        let data = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        params.add(name, &shape, data, trainable);
    }
    if r.pos != bytes.len() {
        return Err(Error::format(path, "trailing bytes after last tensor"));
    }
    params.step = step;
    Ok((header, params))
}

pub fn read(path: &Path) -> Result<(String, ParamStore)> {
    from_bytes(&fs::read(path)?, path)
}

/// Copy loaded tensors into a freshly built store, checking names and shapes.
pub fn restore_into(target: &mut ParamStore, loaded: ParamStore) -> Result<()> {
    if target.tensors().len() != loaded.tensors().len() {
        return Err(Error::ShapeMismatch {
            name: "tensor count".into(),
            expected: vec![target.tensors().len()],
            found: vec![loaded.tensors().len()],
        });
    }
    for (t, l) in target.tensors().iter().zip(loaded.tensors()) {
        if t.name != l.name || t.shape != l.shape {
            return Err(Error::ShapeMismatch {
                name: format!("{} (file: {})", t.name, l.name),
                expected: t.shape.clone(),
                found: l.shape.clone(),
            });
        }
    }
    let step = loaded.step;
    for (t, l) in target.tensors_mut().iter_mut().zip(loaded.tensors()) {
        let NamedTensor { data, trainable, .. } = l;
        t.data.clone_from(data);
        t.trainable = *trainable;
    }
    target.step = step;
    Ok(())
}
