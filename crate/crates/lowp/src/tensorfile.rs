//! `LPT1` tensor files: magic, `u32` rank, `u64` extents, then the
//! row-major `f32` payload, all little-endian.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use lowp_core::Tensor;
use thiserror::Error;

pub const MAGIC: &[u8; 4] = b"LPT1";
pub const MAX_RANK: usize = 8;

#[derive(Debug, Error)]
pub enum TensorFileError {
    #[error("{0}")]
    Io(#[from] io::Error),
    #[error("bad magic {0:?}, expected \"LPT1\"")]
    BadMagic([u8; 4]),
    #[error("rank {0} exceeds the maximum of {MAX_RANK}")]
    RankTooLarge(u32),
    #[error("extents {0:?} overflow the element count")]
    Overflow(Vec<u64>),
    #[error("payload holds {actual} bytes, expected {expected}")]
    Truncated { expected: u64, actual: u64 },
    #[error("{0} trailing bytes after the payload")]
    Trailing(u64),
    #[error("element {index} is not finite ({value})")]
    NonFinite { index: usize, value: f32 },
}

pub fn write(mut w: impl Write, t: &Tensor) -> io::Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&(t.rank() as u32).to_le_bytes())?;
    for &e in t.shape() {
        w.write_all(&(e as u64).to_le_bytes())?;
    }
    for &v in t.data() {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()
}

/// Reads one tensor and requires the stream to end right after it.
pub fn read(mut r: impl Read) -> Result<Tensor, TensorFileError> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(TensorFileError::BadMagic(magic));
    }
    let mut word = [0u8; 4];
    r.read_exact(&mut word)?;
    let rank = u32::from_le_bytes(word);
    if rank as usize > MAX_RANK {
        return Err(TensorFileError::RankTooLarge(rank));
    }
    let mut extents = Vec::with_capacity(rank as usize);
    for _ in 0..rank {
        let mut e = [0u8; 8];
        r.read_exact(&mut e)?;
        extents.push(u64::from_le_bytes(e));
    }
    let count = extents
        .iter()
        .try_fold(1u64, |n, &e| n.checked_mul(e))
        .filter(|n| n.checked_mul(4).is_some() && usize::try_from(*n).is_ok())
        .ok_or_else(|| TensorFileError::Overflow(extents.clone()))?;
    let expected = count * 4;
    let mut payload = Vec::new();
    let actual = r.by_ref().take(expected).read_to_end(&mut payload)? as u64;
    if actual != expected {
        return Err(TensorFileError::Truncated { expected, actual });
    }
    let trailing = io::copy(&mut r, &mut io::sink())?;
    if trailing != 0 {
        return Err(TensorFileError::Trailing(trailing));
    }
    let data: Vec<f32> = payload.chunks_exact(4).map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]])).collect();
    if let Some((index, &value)) = data.iter().enumerate().find(|(_, v)| !v.is_finite()) {
        return Err(TensorFileError::NonFinite { index, value });
    }
    let shape = extents.iter().map(|&e| e as usize).collect();
    Ok(Tensor::new(shape, data).expect("length and finiteness checked above"))
}

pub fn read_path(path: impl AsRef<Path>) -> Result<Tensor, TensorFileError> {
    read(BufReader::new(File::open(path)?))
}

pub fn write_path(path: impl AsRef<Path>, t: &Tensor) -> io::Result<()> {
    write(BufWriter::new(File::create(path)?), t)
}
