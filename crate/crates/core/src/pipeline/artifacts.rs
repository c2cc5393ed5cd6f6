//! Stage bookkeeping: input hashing, cache checks, and the run lock.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{de::DeserializeOwned, Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Chained stage fingerprint: hash of the stage's config slice plus every
/// upstream fingerprint. Identical fingerprints mean the cached artifacts
/// are valid.
pub fn stage_hash(parts: &[&str]) -> String {
    let mut hasher = Sha256::new();
    for p in parts {
        hasher.update((p.len() as u64).to_le_bytes());
        hasher.update(p.as_bytes());
    }
    format!("{:x}", hasher.finalize())
}

#[derive(Serialize, Deserialize)]
struct StageManifest {
    input_hash: String,
    info: serde_json::Value,
}

/// True when the stage directory holds artifacts built from the same
/// inputs.
pub fn stage_cached(dir: &Path, hash: &str) -> bool {
    let path = dir.join("stage.json");
    match fs::read_to_string(&path) {
        Ok(text) => serde_json::from_str::<StageManifest>(&text)
            .map(|m| m.input_hash == hash)
            .unwrap_or(false),
        Err(_) => false,
    }
}

/// Marks a stage complete, recording its fingerprint and summary info.
pub fn write_stage(dir: &Path, hash: &str, info: serde_json::Value) -> Result<()> {
    let manifest = StageManifest {
        input_hash: hash.to_string(),
        info,
    };
    fs::write(
        dir.join("stage.json"),
        serde_json::to_string_pretty(&manifest)?,
    )?;
    Ok(())
}

/// Reads back the summary info a completed stage recorded.
pub fn read_stage_info(dir: &Path) -> Result<serde_json::Value> {
    let text = fs::read_to_string(dir.join("stage.json"))?;
    let manifest: StageManifest = serde_json::from_str(&text)?;
    Ok(manifest.info)
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(value)?)?;
    Ok(())
}

pub fn read_json<T: DeserializeOwned>(path: &Path, producer: &str) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|_| Error::MissingArtifact {
        path: path.display().to_string(),
        producer: producer.to_string(),
    })?;
    Ok(serde_json::from_str(&text)?)
}

/// Requires `path` to exist, pointing at the producing subcommand if not.
pub fn require_artifact(path: &Path, producer: &str) -> Result<PathBuf> {
    if !path.exists() {
        return Err(Error::MissingArtifact {
            path: path.display().to_string(),
            producer: producer.to_string(),
        });
    }
    Ok(path.to_path_buf())
}

/// Exclusive run lock; at most one writer per output directory. Dropping
/// the guard releases the lock.
pub struct RunLock {
    path: PathBuf,
}

impl RunLock {
    pub fn acquire(out_dir: &Path) -> Result<Self> {
        ensure_dir(out_dir)?;
        let path = out_dir.join(".lock");
        match fs::OpenOptions::new()
            .write(true)
            .create_new(true)
            .open(&path)
        {
            Ok(_) => Ok(Self { path }),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => Err(Error::Config(format!(
                "output directory is locked by another run (remove {} if stale)",
                path.display()
            ))),
            Err(e) => Err(e.into()),
        }
    }
}

impl Drop for RunLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}
