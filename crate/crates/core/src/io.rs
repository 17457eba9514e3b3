//! Output formatting, run manifests with content digests, and the run-directory lock.

/// Fixed 12-significant-digit scientific notation used in every CSV.
pub fn num(x: f64) -> String {
    let x = if x == 0.0 { 0.0 } else { x };
    format!("{x:.11e}")
}

use std::collections::BTreeMap;
use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const MANIFEST: &str = "manifest.json";
pub const LOCKFILE: &str = ".freebound.lock";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Run manifest: the configuration, one JSON block per pipeline stage and a
/// sha256 digest for every file written into the run directory.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub config: serde_json::Value,
    pub sections: BTreeMap<String, serde_json::Value>,
    pub files: BTreeMap<String, String>,
}

impl Manifest {
    pub fn load(dir: &Path) -> Result<Option<Self>> {
        let path = dir.join(MANIFEST);
        if !path.exists() {
            return Ok(None);
        }
        let text = fs::read_to_string(&path)?;
        serde_json::from_str(&text).map(Some).map_err(|e| Error::MalformedInput {
            path: path.display().to_string(),
            reason: e.to_string(),
        })
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }

    /// Files whose current content no longer matches the recorded digest,
    /// with the reason.
    pub fn check_digests(&self, dir: &Path) -> Vec<(String, String)> {
        let mut bad = Vec::new();
        for (rel, digest) in &self.files {
            match fs::read(dir.join(rel)) {
                Ok(bytes) if sha256_hex(&bytes) == *digest => {}
                Ok(_) => bad.push((rel.clone(), "digest mismatch".to_string())),
                Err(e) => bad.push((rel.clone(), e.to_string())),
            }
        }
        bad
    }
}

/// Exclusive lock on a run directory, released on drop.
#[derive(Debug)]
pub struct RunLock {
    path: PathBuf,
}

impl RunLock {
    pub fn acquire(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir)?;
        let path = dir.join(LOCKFILE);
        match OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(mut f) => {
                writeln!(f, "{}", std::process::id())?;
                Ok(Self { path })
            }
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => Err(Error::Locked(dir.to_path_buf())),
            Err(e) => Err(e.into()),
        }
    }
}

impl Drop for RunLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}

/// A locked run directory that records every write in its manifest.
#[derive(Debug)]
pub struct RunDir {
    pub root: PathBuf,
    pub manifest: Manifest,
    _lock: RunLock,
}

impl RunDir {
    /// Locks `root`, creating it if needed, and loads any existing manifest.
    pub fn open(root: &Path, config: serde_json::Value) -> Result<Self> {
        let lock = RunLock::acquire(root)?;
        let mut manifest = Manifest::load(root)?.unwrap_or_default();
        manifest.tool = "freebound".into();
        manifest.version = env!("CARGO_PKG_VERSION").into();
        manifest.config = config;
        Ok(Self {
            root: root.to_path_buf(),
            manifest,
            _lock: lock,
        })
    }

    pub fn write(&mut self, rel: &str, bytes: &[u8]) -> Result<()> {
        let path = self.root.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(&path, bytes)?;
        self.manifest.files.insert(rel.to_string(), sha256_hex(bytes));
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, rel: &str, value: &T) -> Result<()> {
        let mut s = serde_json::to_string_pretty(value)?;
        s.push('\n');
        self.write(rel, s.as_bytes())
    }

    pub fn read(&self, rel: &str) -> Result<String> {
        let path = self.root.join(rel);
        if !path.exists() {
            return Err(Error::MissingInput(path));
        }
        Ok(fs::read_to_string(path)?)
    }

    /// Forgets files under `prefix` so a rerun does not leave stale entries.
    pub fn clear_prefix(&mut self, prefix: &str) {
        self.manifest.files.retain(|k, _| !k.starts_with(prefix));
    }

    pub fn section<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        self.manifest.sections.insert(name.to_string(), serde_json::to_value(value)?);
        Ok(())
    }

    pub fn save(&self) -> Result<()> {
        fs::write(self.root.join(MANIFEST), self.manifest.to_json())?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_format() {
        assert_eq!(num(1.0), "1.00000000000e0");
        assert_eq!(num(-0.0), "0.00000000000e0");
        assert_eq!(num(-1.234567890123456e-7), "-1.23456789012e-7");
    }

    #[test]
    fn lock_is_exclusive() {
        let dir = tempfile::tempdir().unwrap();
        let a = RunLock::acquire(dir.path()).unwrap();
        assert!(matches!(RunLock::acquire(dir.path()), Err(Error::Locked(_))));
        drop(a);
        RunLock::acquire(dir.path()).unwrap();
    }

    #[test]
    fn manifest_tracks_digests() {
        let dir = tempfile::tempdir().unwrap();
        {
            let mut r = RunDir::open(dir.path(), serde_json::json!({"k": 1})).unwrap();
            r.write("a/b.csv", b"x,y\n1,2\n").unwrap();
            r.section("s", &3).unwrap();
            r.save().unwrap();
        }
        let m = Manifest::load(dir.path()).unwrap().unwrap();
        assert_eq!(m.files["a/b.csv"], sha256_hex(b"x,y\n1,2\n"));
        assert!(m.check_digests(dir.path()).is_empty());
        fs::write(dir.path().join("a/b.csv"), "x,y\n1,3\n").unwrap();
        assert_eq!(m.check_digests(dir.path()).len(), 1);
        assert!(!dir.path().join(LOCKFILE).exists());
    }
}
