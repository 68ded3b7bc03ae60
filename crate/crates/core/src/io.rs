//! Binary `.dt` tensor files.
//!
//! Layout: the magic bytes `DTEN`, a little-endian `u32` version (1), a
//! little-endian `u32` order `D`, `D` little-endian `u64` dims, then the
//! entries as little-endian `f64` in linear storage order.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::tensor::Tensor;

pub const MAGIC: &[u8; 4] = b"DTEN";
pub const VERSION: u32 = 1;

pub fn write_dt<W: Write>(t: &Tensor<f64>, mut w: W) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    let order = u32::try_from(t.order()).map_err(|_| Error::Format("tensor order exceeds u32".into()))?;
    w.write_all(&order.to_le_bytes())?;
    for &n in t.dims() {
        w.write_all(&(n as u64).to_le_bytes())?;
    }
    let mut buf = Vec::with_capacity(t.len() * 8);
    for x in t.data() {
        buf.extend_from_slice(&x.to_le_bytes());
    }
    w.write_all(&buf)?;
    w.flush()?;
    Ok(())
}

fn read_exact<R: Read>(r: &mut R, buf: &mut [u8], what: &str) -> Result<()> {
    r.read_exact(buf).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => Error::Format(format!("file truncated while reading {what}")),
        _ => Error::Io(e),
    })
}

/// Reads a `.dt` stream; trailing bytes and non-finite entries are errors.
pub fn read_dt<R: Read>(mut r: R) -> Result<Tensor<f64>> {
    let mut word = [0u8; 4];
    read_exact(&mut r, &mut word, "magic")?;
    if &word != MAGIC {
        return Err(Error::Format(format!("bad magic {word:?}")));
    }
    read_exact(&mut r, &mut word, "version")?;
    let version = u32::from_le_bytes(word);
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    read_exact(&mut r, &mut word, "order")?;
    let order = u32::from_le_bytes(word) as usize;
    if order == 0 {
        return Err(Error::Format("order must be at least 1".into()));
    }
    let mut dims = Vec::with_capacity(order.min(64));
    let mut long = [0u8; 8];
    for d in 0..order {
        read_exact(&mut r, &mut long, &format!("dim {d}"))?;
        let n = usize::try_from(u64::from_le_bytes(long))
            .map_err(|_| Error::Format(format!("dim {d} does not fit in memory")))?;
        dims.push(n);
    }
    let len = dims
        .iter()
        .try_fold(1usize, |acc, &n| acc.checked_mul(n))
        .ok_or_else(|| Error::Format(format!("element count of {dims:?} overflows")))?;
    let bytes = len
        .checked_mul(8)
        .ok_or_else(|| Error::Format(format!("element count of {dims:?} overflows")))?;
    let mut raw = Vec::new();
    r.by_ref().take(bytes as u64).read_to_end(&mut raw)?;
    if raw.len() != bytes {
        return Err(Error::Format(format!(
            "file truncated: expected {bytes} data bytes, found {}",
            raw.len()
        )));
    }
    let mut extra = [0u8; 1];
    if r.read(&mut extra)? != 0 {
        return Err(Error::Format("trailing bytes after tensor data".into()));
    }
    let data: Vec<f64> = raw
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    if data.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite);
    }
    Tensor::new(dims, data).map_err(|e| Error::Format(e.to_string()))
}
