//! Design persistence: one canonical TOML file per design plus `index.json`.
//!
//! Designs are keyed by the SHA-256 of their canonical text, so storing the
//! same design twice yields the same id.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::RwLock;
use std::time::{SystemTime, UNIX_EPOCH};

use blimp_core::{parse_design, DesignError, DesignSpec};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

const INDEX_FILE: &str = "index.json";

/// Hex digits of the content hash used as the public id.
const ID_LEN: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StoredDesign {
    pub id: String,
    pub name: String,
    /// Full SHA-256 of the canonical design text.
    pub hash: String,
    pub file: String,
    pub created_unix: u64,
}

#[derive(Debug, Default, Serialize, Deserialize)]
struct Index {
    designs: BTreeMap<String, StoredDesign>,
}

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("i/o error on {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("index {path} is unreadable: {source}")]
    Index { path: PathBuf, source: serde_json::Error },
    #[error("stored design {id} no longer parses: {source}")]
    Corrupt { id: String, source: DesignError },
    #[error("stored design {id} does not match its hash")]
    HashMismatch { id: String },
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> StoreError + '_ {
    move |source| StoreError::Io { path: path.to_owned(), source }
}

pub fn content_hash(text: &str) -> String {
    format!("{:x}", Sha256::digest(text.as_bytes()))
}

pub struct DesignStore {
    dir: PathBuf,
    index: RwLock<Index>,
}

impl DesignStore {
    /// Opens `dir`, creating it and an empty index if needed.
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        let path = dir.join(INDEX_FILE);
        let index = match fs::read(&path) {
            Ok(bytes) => serde_json::from_slice(&bytes).map_err(|source| StoreError::Index { path, source })?,
            Err(e) if e.kind() == io::ErrorKind::NotFound => Index::default(),
            Err(e) => return Err(io_err(&path)(e)),
        };
        Ok(Self { dir, index: RwLock::new(index) })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Stores `design`; returns its entry and whether it was new.
    pub fn put(&self, design: &DesignSpec) -> Result<(StoredDesign, bool), StoreError> {
        let text = design.to_toml();
        let hash = content_hash(&text);
        let id = hash[..ID_LEN].to_string();
        let mut index = self.index.write().unwrap_or_else(|e| e.into_inner());
        if let Some(existing) = index.designs.get(&id) {
            return Ok((existing.clone(), false));
        }
        let file = format!("{id}.toml");
        write_atomic(&self.dir.join(&file), text.as_bytes())?;
        let created_unix = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
        let entry = StoredDesign { id: id.clone(), name: design.name.clone(), hash, file, created_unix };
        index.designs.insert(id, entry.clone());
        let json = serde_json::to_vec_pretty(&*index).expect("index serializes");
        if let Err(e) = write_atomic(&self.dir.join(INDEX_FILE), &json) {
            index.designs.remove(&entry.id);
            return Err(e);
        }
        Ok((entry, true))
    }

    pub fn list(&self) -> Vec<StoredDesign> {
        self.index.read().unwrap_or_else(|e| e.into_inner()).designs.values().cloned().collect()
    }

    pub fn entry(&self, id: &str) -> Option<StoredDesign> {
        self.index.read().unwrap_or_else(|e| e.into_inner()).designs.get(id).cloned()
    }

    /// Reads a design back, checking it still matches its hash.
    pub fn get(&self, id: &str) -> Result<Option<(StoredDesign, DesignSpec)>, StoreError> {
        let Some(entry) = self.entry(id) else { return Ok(None) };
        let path = self.dir.join(&entry.file);
        let text = fs::read_to_string(&path).map_err(io_err(&path))?;
        if content_hash(&text) != entry.hash {
            return Err(StoreError::HashMismatch { id: id.into() });
        }
        let design = parse_design(&text).map_err(|source| StoreError::Corrupt { id: id.into(), source })?;
        Ok(Some((entry, design)))
    }

    pub fn text(&self, id: &str) -> Result<Option<String>, StoreError> {
        let Some(entry) = self.entry(id) else { return Ok(None) };
        let path = self.dir.join(&entry.file);
        fs::read_to_string(&path).map(Some).map_err(io_err(&path))
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), StoreError> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes).map_err(io_err(&tmp))?;
    fs::rename(&tmp, path).map_err(io_err(path))
}
