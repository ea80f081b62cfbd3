use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SnapshotKey {
    pub phase_index: usize,
    pub conf_index: usize,
    pub seed: u64,
}

impl SnapshotKey {
    pub fn new(phase_index: usize, conf_index: usize, seed: u64) -> Self {
        Self {
            phase_index,
            conf_index,
            seed,
        }
    }

    pub fn file_name(&self) -> String {
        format!("{self}.snap")
    }

    /// Parses `p<phase>_c<conf>_s<seed>.snap`.
    pub fn parse_file_name(name: &str) -> Option<Self> {
        let stem = name.strip_suffix(".snap")?;
        let mut parts = stem.split('_');
        let phase = parts.next()?.strip_prefix('p')?.parse().ok()?;
        let conf = parts.next()?.strip_prefix('c')?.parse().ok()?;
        let seed = parts.next()?.strip_prefix('s')?.parse().ok()?;
        parts.next().is_none().then(|| Self::new(phase, conf, seed))
    }
}

impl fmt::Display for SnapshotKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "p{}_c{}_s{}", self.phase_index, self.conf_index, self.seed)
    }
}

/// Snapshots keyed by (phase, configuration, seed).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SnapshotStore {
    blobs: BTreeMap<SnapshotKey, Vec<u8>>,
}

impl SnapshotStore {
    pub fn insert(&mut self, key: SnapshotKey, state: Vec<u8>) {
        self.blobs.insert(key, state);
    }

    pub fn get(&self, key: &SnapshotKey) -> Option<&[u8]> {
        self.blobs.get(key).map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.blobs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blobs.is_empty()
    }

    pub fn keys(&self) -> impl Iterator<Item = &SnapshotKey> {
        self.blobs.keys()
    }

    /// Writes one `<key>.snap` file per snapshot into `dir`.
    pub fn save_dir(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for (key, blob) in &self.blobs {
            let path = dir.join(key.file_name());
            std::fs::write(&path, blob).map_err(|e| Error::io(&path, e))?;
        }
        Ok(())
    }

    /// Loads every `*.snap` file of `dir`; other files are ignored.
    pub fn load_dir(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let mut store = Self::default();
        for entry in std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
            let entry = entry.map_err(|e| Error::io(dir, e))?;
            let name = entry.file_name();
            let Some(key) = name.to_str().and_then(SnapshotKey::parse_file_name) else {
                continue;
            };
            let path = entry.path();
            let blob = std::fs::read(&path).map_err(|e| Error::io(&path, e))?;
            store.insert(key, blob);
        }
        Ok(store)
    }
}
