//! Content-addressed result cache. Entries are keyed by a SHA-256 of the
//! tool version, subcommand and canonical config, and written through a
//! temporary file plus rename so readers never see partial entries.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::Artifacts;

#[derive(Debug, Serialize, Deserialize)]
struct CacheEntry {
    key: String,
    version: String,
    artifacts: Artifacts,
}

pub fn key(cfg: &RunConfig) -> String {
    let mut h = Sha256::new();
    h.update(env!("CARGO_PKG_VERSION").as_bytes());
    h.update([0]);
    h.update(cfg.subcommand.as_bytes());
    h.update([0]);
    h.update(cfg.echo().to_string().as_bytes());
    hex::encode(h.finalize())
}

fn path(dir: &Path, key: &str) -> PathBuf {
    dir.join(format!("{key}.json"))
}

/// Cached artifacts, if an entry with a matching key and version exists.
/// Unreadable entries are treated as misses.
pub fn load(dir: &Path, key: &str) -> Option<Artifacts> {
    let text = std::fs::read_to_string(path(dir, key)).ok()?;
    let entry: CacheEntry = serde_json::from_str(&text).ok()?;
    (entry.key == key && entry.version == env!("CARGO_PKG_VERSION")).then_some(entry.artifacts)
}

pub fn store(dir: &Path, key: &str, artifacts: &Artifacts) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    let entry = CacheEntry {
        key: key.to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        artifacts: artifacts.clone(),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(serde_json::to_string(&entry)?.as_bytes())?;
    tmp.persist(path(dir, key)).map_err(|e| e.error)?;
    Ok(())
}
