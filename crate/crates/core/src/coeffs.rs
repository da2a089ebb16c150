//! Fixed-width coefficient arrays of truncated power series.
//!
//! A table either lives in memory or as an ordered run of chunk files.
//! Chunk files are raw little-endian fixed-width coefficients without a
//! header, named `<stem>.<width>b.<i>.chunk`; chunk `i` holds coefficients
//! `[i * chunk_size, (i + 1) * chunk_size)`.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

/// Bytes per stored coefficient.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Width {
    W1 = 1,
    W2 = 2,
    W4 = 4,
    W8 = 8,
}

impl Width {
    pub fn bytes(self) -> usize {
        self as usize
    }

    pub fn max_value(self) -> u64 {
        match self {
            Width::W8 => u64::MAX,
            w => (1u64 << (8 * w.bytes())) - 1,
        }
    }

    /// Narrowest width that holds `value`.
    pub fn for_value(value: u64) -> Width {
        [Width::W1, Width::W2, Width::W4]
            .into_iter()
            .find(|w| value <= w.max_value())
            .unwrap_or(Width::W8)
    }

    pub fn from_bytes(bytes: usize) -> Option<Width> {
        match bytes {
            1 => Some(Width::W1),
            2 => Some(Width::W2),
            4 => Some(Width::W4),
            8 => Some(Width::W8),
            _ => None,
        }
    }
}

#[derive(Clone, Debug)]
enum Storage {
    Memory(Vec<u64>),
    Chunked {
        dir: PathBuf,
        stem: String,
        chunk_size: usize,
    },
}

/// Truncated power series coefficients `0..len`.
///
/// In memory the values are held widened to `u64`; the width governs
/// validation and the on-disk encoding.
#[derive(Clone, Debug)]
pub struct CoeffTable {
    len: usize,
    width: Width,
    storage: Storage,
}

impl PartialEq for CoeffTable {
    fn eq(&self, other: &Self) -> bool {
        self.len == other.len
            && match (self.to_vec(), other.to_vec()) {
                (Ok(a), Ok(b)) => a == b,
                _ => false,
            }
    }
}

impl CoeffTable {
    /// Wrap `values`, failing if any value exceeds `width`.
    pub fn from_vec(values: Vec<u64>, width: Width) -> Result<Self> {
        let max = width.max_value();
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, &v)| v > max) {
            return Err(Error::CoefficientOverflow {
                index,
                value: value as u128,
                bits: 8 * width.bytes() as u32,
            });
        }
        Ok(Self {
            len: values.len(),
            width,
            storage: Storage::Memory(values),
        })
    }

    /// Wrap `values` at the narrowest width holding all of them.
    pub fn from_values(values: Vec<u64>) -> Self {
        let width = Width::for_value(values.iter().copied().max().unwrap_or(0));
        Self {
            len: values.len(),
            width,
            storage: Storage::Memory(values),
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn width(&self) -> Width {
        self.width
    }

    pub fn is_chunked(&self) -> bool {
        matches!(self.storage, Storage::Chunked { .. })
    }

    /// Borrow the in-memory coefficients; `None` for chunk-backed tables.
    pub fn as_slice(&self) -> Option<&[u64]> {
        match &self.storage {
            Storage::Memory(v) => Some(v),
            Storage::Chunked { .. } => None,
        }
    }

    /// All coefficients, reading chunk files if necessary.
    pub fn to_vec(&self) -> Result<Vec<u64>> {
        self.read_range(0, self.len)
    }

    /// Coefficient `k` (reads from disk for chunked tables).
    pub fn get(&self, k: usize) -> Result<u64> {
        Ok(self.read_range(k, 1)?[0])
    }

    /// Coefficients `[start, start + count)`, clipped to the table length.
    pub fn read_range(&self, start: usize, count: usize) -> Result<Vec<u64>> {
        let end = (start + count).min(self.len);
        if start >= end {
            return Ok(Vec::new());
        }
        match &self.storage {
            Storage::Memory(v) => Ok(v[start..end].to_vec()),
            Storage::Chunked {
                dir,
                stem,
                chunk_size,
            } => {
                let mut out = Vec::with_capacity(end - start);
                let w = self.width.bytes();
                let mut pos = start;
                while pos < end {
                    let chunk = pos / chunk_size;
                    let offset = pos % chunk_size;
                    let take = (chunk_size - offset).min(end - pos);
                    let path = chunk_path(dir, stem, self.width, chunk);
                    let mut file = File::open(&path)?;
                    file.seek(SeekFrom::Start((offset * w) as u64))?;
                    let mut buf = vec![0u8; take * w];
                    file.read_exact(&mut buf)?;
                    decode_into(&buf, self.width, &mut out);
                    pos += take;
                }
                Ok(out)
            }
        }
    }

    /// Truncate or zero-extend to `len` coefficients (in memory).
    pub fn resized(&self, len: usize) -> Result<Self> {
        let mut v = self.read_range(0, len)?;
        v.resize(len, 0);
        Ok(Self {
            len,
            width: self.width,
            storage: Storage::Memory(v),
        })
    }

    /// Largest coefficient.
    pub fn max_value(&self) -> Result<u64> {
        match &self.storage {
            Storage::Memory(v) => Ok(v.iter().copied().max().unwrap_or(0)),
            Storage::Chunked { chunk_size, .. } => {
                let mut m = 0;
                let mut pos = 0;
                while pos < self.len {
                    m = m.max(
                        self.read_range(pos, *chunk_size)?
                            .into_iter()
                            .max()
                            .unwrap_or(0),
                    );
                    pos += chunk_size;
                }
                Ok(m)
            }
        }
    }

    /// Write the table as chunk files under `dir` and return the chunk-backed view.
    pub fn spill(&self, dir: &Path, stem: &str, chunk_size: usize) -> Result<Self> {
        if chunk_size == 0 {
            return Err(Error::InvalidParameter("chunk size must be positive".into()));
        }
        fs::create_dir_all(dir)?;
        let mut pos = 0;
        let mut index = 0;
        while pos < self.len {
            let values = self.read_range(pos, chunk_size)?;
            write_chunk(&chunk_path(dir, stem, self.width, index), &values, self.width)?;
            pos += chunk_size;
            index += 1;
        }
        Ok(Self {
            len: self.len,
            width: self.width,
            storage: Storage::Chunked {
                dir: dir.to_path_buf(),
                stem: stem.to_string(),
                chunk_size,
            },
        })
    }

    /// Open an existing run of chunk files, validating their sizes.
    pub fn open_chunked(
        dir: &Path,
        stem: &str,
        width: Width,
        len: usize,
        chunk_size: usize,
    ) -> Result<Self> {
        if chunk_size == 0 {
            return Err(Error::InvalidParameter("chunk size must be positive".into()));
        }
        let chunks = len.div_ceil(chunk_size);
        for i in 0..chunks {
            let expected = (chunk_size.min(len - i * chunk_size) * width.bytes()) as u64;
            check_size(&chunk_path(dir, stem, width, i), expected)?;
        }
        Ok(Self {
            len,
            width,
            storage: Storage::Chunked {
                dir: dir.to_path_buf(),
                stem: stem.to_string(),
                chunk_size,
            },
        })
    }

    /// Load a chunk-backed table into memory.
    pub fn into_memory(self) -> Result<Self> {
        match self.storage {
            Storage::Memory(_) => Ok(self),
            Storage::Chunked { .. } => {
                let v = self.to_vec()?;
                Ok(Self {
                    len: self.len,
                    width: self.width,
                    storage: Storage::Memory(v),
                })
            }
        }
    }
}

/// Path of chunk `index` of a table named `stem`.
pub fn chunk_path(dir: &Path, stem: &str, width: Width, index: usize) -> PathBuf {
    dir.join(format!("{stem}.{}b.{index}.chunk", width.bytes()))
}

fn decode_into(buf: &[u8], width: Width, out: &mut Vec<u64>) {
    let w = width.bytes();
    out.extend(buf.chunks_exact(w).map(|c| {
        let mut b = [0u8; 8];
        b[..w].copy_from_slice(c);
        u64::from_le_bytes(b)
    }));
}

/// Write raw little-endian values, then confirm the file size on disk.
pub fn write_chunk(path: &Path, values: &[u64], width: Width) -> Result<()> {
    let w = width.bytes();
    {
        let mut out = BufWriter::new(File::create(path)?);
        for &v in values {
            if v > width.max_value() {
                return Err(Error::CoefficientOverflow {
                    index: 0,
                    value: v as u128,
                    bits: 8 * w as u32,
                });
            }
            out.write_all(&v.to_le_bytes()[..w])?;
        }
        out.flush()?;
    }
    check_size(path, (values.len() * w) as u64)
}

/// Read a whole chunk file of known width.
pub fn read_chunk(path: &Path, width: Width) -> Result<Vec<u64>> {
    let mut buf = Vec::new();
    BufReader::new(File::open(path)?).read_to_end(&mut buf)?;
    if buf.len() % width.bytes() != 0 {
        return Err(Error::TruncatedChunk {
            path: path.to_path_buf(),
            expected: (buf.len() / width.bytes() * width.bytes()) as u64,
            found: buf.len() as u64,
        });
    }
    let mut out = Vec::with_capacity(buf.len() / width.bytes());
    decode_into(&buf, width, &mut out);
    Ok(out)
}

pub(crate) fn check_size(path: &Path, expected: u64) -> Result<()> {
    let found = fs::metadata(path)?.len();
    if found != expected {
        return Err(Error::TruncatedChunk {
            path: path.to_path_buf(),
            expected,
            found,
        });
    }
    Ok(())
}
