//! Pulse cache stored as one JSON file per block hash.

use std::fs;
use std::path::{Path, PathBuf};

use vqpulse_core::pipeline::{CacheEntry, PulseCache};
use vqpulse_core::Error;

use crate::files::{read_json, write_json};

#[derive(Debug, Clone)]
pub struct DirCache {
    dir: PathBuf,
}

fn to_core(e: crate::error::CliError) -> Error {
    Error::InvalidConfig(format!("pulse cache: {e}"))
}

impl DirCache {
    pub fn open(dir: impl Into<PathBuf>) -> std::io::Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(Self { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path_of(&self, hash: &str) -> Option<PathBuf> {
        // Hashes are hex digests; anything else cannot name a cache file.
        hash.chars()
            .all(|c| c.is_ascii_hexdigit())
            .then(|| self.dir.join(format!("{hash}.json")))
    }

    /// Hashes of all stored entries, sorted.
    pub fn hashes(&self) -> std::io::Result<Vec<String>> {
        let mut out = Vec::new();
        for e in fs::read_dir(&self.dir)? {
            let name = e?.file_name();
            if let Some(h) = name.to_str().and_then(|n| n.strip_suffix(".json")) {
                if !h.starts_with('.') {
                    out.push(h.to_string());
                }
            }
        }
        out.sort();
        Ok(out)
    }
}

impl PulseCache for DirCache {
    fn get(&self, hash: &str) -> vqpulse_core::Result<Option<CacheEntry>> {
        match self.path_of(hash) {
            Some(p) if p.exists() => read_json(&p).map(Some).map_err(to_core),
            _ => Ok(None),
        }
    }

    fn insert(&mut self, entry: CacheEntry) -> vqpulse_core::Result<()> {
        let path = self
            .path_of(&entry.hash)
            .ok_or_else(|| Error::InvalidConfig(format!("bad block hash {}", entry.hash)))?;
        if path.exists() {
            return Ok(());
        }
        write_json(&path, &entry).map_err(to_core)
    }

    fn contains(&self, hash: &str) -> vqpulse_core::Result<bool> {
        Ok(self.path_of(hash).is_some_and(|p| p.exists()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entry(hash: &str) -> CacheEntry {
        CacheEntry {
            hash: hash.into(),
            body: "qubits 1; params 0;\nh q[0];".into(),
            segments: Vec::new(),
            duration: 1.5,
            grape: true,
        }
    }

    #[test]
    fn stores_one_file_per_hash() {
        let tmp = tempfile::tempdir().unwrap();
        let mut cache = DirCache::open(tmp.path().join("c")).unwrap();
        assert!(!cache.contains("ab12").unwrap());
        cache.insert(entry("ab12")).unwrap();
        cache.insert(entry("ab12")).unwrap();
        assert_eq!(cache.get("ab12").unwrap(), Some(entry("ab12")));
        assert_eq!(cache.hashes().unwrap(), vec!["ab12".to_string()]);
        assert_eq!(cache.get("../x").unwrap(), None);
        assert!(cache.insert(entry("../x")).is_err());
        let reopened = DirCache::open(cache.dir()).unwrap();
        assert!(reopened.contains("ab12").unwrap());
    }
}
