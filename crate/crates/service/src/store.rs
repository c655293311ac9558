//! Append-only per-submission event streams with optimistic versioning.

use std::collections::BTreeMap;
use std::fs::{self, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use thiserror::Error;

use crate::events::StoredEvent;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("stream `{stream}` is at version {actual}, expected {expected}")]
    Conflict { stream: String, expected: u64, actual: u64 },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}: {source}")]
    Decode {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

pub trait EventStore: Send + Sync {
    /// Appends `events` if the stream is currently at `expected` (0 for a new
    /// stream). Returns the new version.
    fn append(&self, stream: &str, expected: u64, events: &[StoredEvent]) -> Result<u64, StoreError>;

    /// Every event of `stream`, oldest first; empty when it does not exist.
    fn load(&self, stream: &str) -> Result<Vec<StoredEvent>, StoreError>;

    fn streams(&self) -> Result<Vec<String>, StoreError>;
}

#[derive(Default)]
pub struct MemoryStore {
    streams: Mutex<BTreeMap<String, Vec<StoredEvent>>>,
}

impl MemoryStore {
    pub fn new() -> Self {
        Self::default()
    }
}

impl EventStore for MemoryStore {
    fn append(&self, stream: &str, expected: u64, events: &[StoredEvent]) -> Result<u64, StoreError> {
        let mut streams = self.streams.lock().expect("store lock");
        let log = streams.entry(stream.to_string()).or_default();
        let actual = log.len() as u64;
        if actual != expected {
            return Err(StoreError::Conflict {
                stream: stream.to_string(),
                expected,
                actual,
            });
        }
        log.extend_from_slice(events);
        Ok(log.len() as u64)
    }

    fn load(&self, stream: &str) -> Result<Vec<StoredEvent>, StoreError> {
        Ok(self
            .streams
            .lock()
            .expect("store lock")
            .get(stream)
            .cloned()
            .unwrap_or_default())
    }

    fn streams(&self) -> Result<Vec<String>, StoreError> {
        Ok(self
            .streams
            .lock()
            .expect("store lock")
            .iter()
            .filter(|(_, v)| !v.is_empty())
            .map(|(k, _)| k.clone())
            .collect())
    }
}

/// One directory per stream holding `<version>.json` files. Each file is
/// created exclusively, so two writers racing for the same version cannot
/// both succeed.
pub struct FileStore {
    root: PathBuf,
}

impl FileStore {
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let root = root.into();
        fs::create_dir_all(&root).map_err(|source| StoreError::Io {
            path: root.clone(),
            source,
        })?;
        Ok(Self { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn event_path(&self, stream: &str, version: u64) -> PathBuf {
        self.root.join(stream).join(format!("{version:08}.json"))
    }

    fn versions(&self, stream: &str) -> Result<Vec<u64>, StoreError> {
        let dir = self.root.join(stream);
        let entries = match fs::read_dir(&dir) {
            Ok(e) => e,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(Vec::new()),
            Err(source) => return Err(StoreError::Io { path: dir, source }),
        };
        let mut versions: Vec<u64> = entries
            .filter_map(|e| e.ok())
            .filter_map(|e| e.file_name().to_str()?.strip_suffix(".json")?.parse().ok())
            .collect();
        versions.sort_unstable();
        Ok(versions)
    }
}

impl EventStore for FileStore {
    fn append(&self, stream: &str, expected: u64, events: &[StoredEvent]) -> Result<u64, StoreError> {
        let dir = self.root.join(stream);
        fs::create_dir_all(&dir).map_err(|source| StoreError::Io { path: dir, source })?;
        let actual = self.versions(stream)?.last().copied().unwrap_or(0);
        if actual != expected {
            return Err(StoreError::Conflict {
                stream: stream.to_string(),
                expected,
                actual,
            });
        }
        let mut version = expected;
        for e in events {
            version += 1;
            let path = self.event_path(stream, version);
            let mut file = match OpenOptions::new().write(true).create_new(true).open(&path) {
                Ok(f) => f,
                Err(e) if e.kind() == io::ErrorKind::AlreadyExists => {
                    return Err(StoreError::Conflict {
                        stream: stream.to_string(),
                        expected: version - 1,
                        actual: version,
                    })
                }
                Err(source) => return Err(StoreError::Io { path, source }),
            };
            let body = serde_json::to_vec_pretty(e).expect("event serializes");
            file.write_all(&body)
                .and_then(|_| file.sync_all())
                .map_err(|source| StoreError::Io { path, source })?;
        }
        Ok(version)
    }

    fn load(&self, stream: &str) -> Result<Vec<StoredEvent>, StoreError> {
        self.versions(stream)?
            .into_iter()
            .map(|v| {
                let path = self.event_path(stream, v);
                let text = fs::read(&path).map_err(|source| StoreError::Io {
                    path: path.clone(),
                    source,
                })?;
                serde_json::from_slice(&text).map_err(|source| StoreError::Decode { path, source })
            })
            .collect()
    }

    fn streams(&self) -> Result<Vec<String>, StoreError> {
        let entries = fs::read_dir(&self.root).map_err(|source| StoreError::Io {
            path: self.root.clone(),
            source,
        })?;
        let mut out: Vec<String> = entries
            .filter_map(|e| e.ok())
            .filter(|e| e.path().is_dir())
            .filter_map(|e| e.file_name().into_string().ok())
            .collect();
        out.sort();
        Ok(out)
    }
}
