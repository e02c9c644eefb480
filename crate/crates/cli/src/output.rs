//! Output directories and run manifests.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::Failure;

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct FileEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: usize,
}

/// An output directory that remembers every file written to it.
pub struct OutDir {
    root: PathBuf,
    files: Vec<FileEntry>,
    started: Instant,
}

impl OutDir {
    pub fn create(root: &Path) -> Result<Self, Failure> {
        fs::create_dir_all(root).map_err(|e| Failure::Io(anyhow::anyhow!("cannot create {}: {e}", root.display())))?;
        Ok(OutDir { root: root.to_path_buf(), files: Vec::new(), started: Instant::now() })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn write(&mut self, name: &str, contents: impl AsRef<[u8]>) -> Result<PathBuf, Failure> {
        let bytes = contents.as_ref();
        let path = self.root.join(name);
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).map_err(|e| Failure::Io(anyhow::anyhow!("{}: {e}", dir.display())))?;
        }
        fs::write(&path, bytes).map_err(|e| Failure::Io(anyhow::anyhow!("{}: {e}", path.display())))?;
        self.files.retain(|f| f.path != name);
        self.files.push(FileEntry { path: name.to_string(), sha256: sha256_hex(bytes), bytes: bytes.len() });
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<PathBuf, Failure> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| Failure::Io(e.into()))?;
        text.push('\n');
        self.write(name, text)
    }

    /// Adds files written by a nested run under `prefix/`.
    pub fn adopt(&mut self, prefix: &str, files: Vec<FileEntry>) {
        for f in files {
            self.files.push(FileEntry { path: format!("{prefix}/{}", f.path), ..f });
        }
    }

    /// Writes manifest.json and returns the list of files it references.
    pub fn finish(
        mut self,
        command: &str,
        canonical_config: &str,
        seed: u64,
        threads: usize,
    ) -> Result<Vec<FileEntry>, Failure> {
        self.write("config.toml", canonical_config)?;
        let created = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        let manifest = Manifest {
            command: command.to_string(),
            config_sha256: sha256_hex(canonical_config.as_bytes()),
            seed,
            threads,
            version: env!("CARGO_PKG_VERSION").to_string(),
            created_unix: created,
            elapsed_secs: self.started.elapsed().as_secs_f64(),
            files: self.files.clone(),
        };
        let mut text = serde_json::to_string_pretty(&manifest).map_err(|e| Failure::Io(e.into()))?;
        text.push('\n');
        let path = self.root.join(MANIFEST);
        fs::write(&path, text).map_err(|e| Failure::Io(anyhow::anyhow!("{}: {e}", path.display())))?;
        Ok(self.files)
    }
}

pub const MANIFEST: &str = "manifest.json";

#[derive(Clone, Debug, Serialize)]
pub struct Manifest {
    pub command: String,
    pub config_sha256: String,
    pub seed: u64,
    /// Worker threads; affects wall time only.
    pub threads: usize,
    pub version: String,
    pub created_unix: u64,
    pub elapsed_secs: f64,
    pub files: Vec<FileEntry>,
}

/// Float formatting shared by the CSV writers.
pub fn num(v: f64) -> String {
    pluri::grid::fmt_f64(v)
}
