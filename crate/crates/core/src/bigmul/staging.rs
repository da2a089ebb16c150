//! Staging configuration and the `run.json` manifest used for resumable runs.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufReader, Read};
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::coeffs::CoeffTable;
use crate::error::{Error, Result};

/// Where and how intermediate residue data is kept.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StagingConfig {
    /// Directory for chunk files; `None` keeps everything in memory.
    pub dir: Option<PathBuf>,
    /// Number of chunks `m` the bundle range is split into on disk.
    pub chunks: usize,
    /// Working sets at or below this many bytes stay in memory.
    pub memory_budget: u64,
}

impl Default for StagingConfig {
    fn default() -> Self {
        Self {
            dir: None,
            chunks: 4 * rayon::current_num_threads(),
            memory_budget: 1 << 30,
        }
    }
}

impl StagingConfig {
    pub fn in_memory() -> Self {
        Self::default()
    }

    /// Always stage through `dir`, whatever the working-set size.
    pub fn on_disk(dir: impl Into<PathBuf>, chunks: usize) -> Self {
        Self {
            dir: Some(dir.into()),
            chunks,
            memory_budget: 0,
        }
    }
}

pub const MANIFEST_NAME: &str = "run.json";

/// Flat string key/value record persisted as JSON.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Manifest {
    pub entries: BTreeMap<String, String>,
}

impl Manifest {
    /// Load `dir/run.json`, or an empty manifest when absent or unreadable.
    pub fn load(dir: &Path) -> Self {
        let path = dir.join(MANIFEST_NAME);
        let entries = fs::read(&path)
            .ok()
            .and_then(|bytes| serde_json::from_slice(&bytes).ok())
            .unwrap_or_default();
        Self { entries }
    }

    /// Write via a temporary file and rename.
    pub fn save(&self, dir: &Path) -> Result<()> {
        let tmp = dir.join(format!("{MANIFEST_NAME}.tmp"));
        let body = serde_json::to_vec_pretty(&self.entries)
            .map_err(|e| Error::Format(e.to_string()))?;
        fs::write(&tmp, &body)?;
        fs::rename(&tmp, dir.join(MANIFEST_NAME))?;
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn set(&mut self, key: impl Into<String>, value: impl ToString) {
        self.entries.insert(key.into(), value.to_string());
    }

    /// Whether every `(key, value)` pair matches the stored one.
    pub fn matches(&self, params: &[(String, String)]) -> bool {
        params.iter().all(|(k, v)| self.get(k) == Some(v.as_str()))
    }

    /// Whether `path` exists and hashes to the checksum recorded for it.
    pub fn file_is_current(&self, path: &Path) -> bool {
        let Some(expected) = self.get(&file_key(path)) else {
            return false;
        };
        sha256_file(path).is_ok_and(|h| h == expected)
    }

    pub fn record_file(&mut self, path: &Path) -> Result<()> {
        let h = sha256_file(path)?;
        self.set(file_key(path), h);
        Ok(())
    }
}

fn file_key(path: &Path) -> String {
    format!(
        "sha256:{}",
        path.file_name().map_or_else(String::new, |n| n.to_string_lossy().into_owned())
    )
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let mut hasher = Sha256::new();
    let mut reader = BufReader::new(File::open(path)?);
    let mut buf = vec![0u8; 1 << 16];
    loop {
        let n = reader.read(&mut buf)?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hex(&hasher.finalize()))
}

/// Hash of a table's values (as little-endian `u64`), independent of width and storage.
pub fn sha256_table(t: &CoeffTable) -> Result<String> {
    let mut hasher = Sha256::new();
    hasher.update((t.len() as u64).to_le_bytes());
    let step = 1 << 18;
    let mut pos = 0;
    while pos < t.len() {
        for v in t.read_range(pos, step)? {
            hasher.update(v.to_le_bytes());
        }
        pos += step;
    }
    Ok(hex(&hasher.finalize()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let mut m = Manifest::load(dir.path());
        assert!(m.entries.is_empty());
        m.set("N", 1024);
        let f = dir.path().join("x.bin");
        fs::write(&f, b"abc").unwrap();
        m.record_file(&f).unwrap();
        m.save(dir.path()).unwrap();
        let back = Manifest::load(dir.path());
        assert_eq!(back, m);
        assert_eq!(
            back.get("sha256:x.bin"),
            Some("ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad")
        );
        assert!(back.file_is_current(&f));
        fs::write(&f, b"abd").unwrap();
        assert!(!back.file_is_current(&f));
    }

    #[test]
    fn table_hash_ignores_width() {
        let a = CoeffTable::from_values(vec![1, 2, 3]);
        let b = CoeffTable::from_vec(vec![1, 2, 3], crate::coeffs::Width::W8).unwrap();
        assert_eq!(sha256_table(&a).unwrap(), sha256_table(&b).unwrap());
        let c = CoeffTable::from_values(vec![1, 2, 3, 0]);
        assert_ne!(sha256_table(&a).unwrap(), sha256_table(&c).unwrap());
    }
}
