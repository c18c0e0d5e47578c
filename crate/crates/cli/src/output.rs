//! Experiment directories: one per configuration hash, files written through
//! a temporary file and renamed into place, manifest last.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::{SecondsFormat, Utc};
use serde::Serialize;
use sha2::{Digest, Sha256};
use tempfile::NamedTempFile;

use crate::CliError;

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Serialize)]
struct FileEntry {
    name: String,
    sha256: String,
    bytes: usize,
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    command: &'a str,
    code_version: &'a str,
    config: &'a str,
    started: &'a str,
    finished: String,
    files: &'a [FileEntry],
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub struct Experiment {
    dir: PathBuf,
    command: String,
    config: String,
    started: String,
    files: Vec<FileEntry>,
}

impl Experiment {
    /// Open `<root>/<command>-<hash>`, where the hash covers the command,
    /// its arguments and the resolved configuration. A stale manifest is
    /// removed first so an interrupted rerun is never mistaken for a
    /// finished one.
    pub fn create(root: &Path, command: &str, key: &str, config: String) -> Result<Self, CliError> {
        let hash = sha256_hex(format!("{command}\n{key}\n{config}").as_bytes());
        let dir = root.join(format!("{command}-{}", &hash[..16]));
        fs::create_dir_all(&dir)?;
        match fs::remove_file(dir.join(MANIFEST)) {
            Err(e) if e.kind() != std::io::ErrorKind::NotFound => return Err(e.into()),
            _ => {}
        }
        Ok(Self {
            dir,
            command: command.to_string(),
            config,
            started: Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true),
            files: Vec::new(),
        })
    }

    fn put(&self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let mut tmp = NamedTempFile::new_in(&self.dir)?;
        tmp.write_all(bytes)?;
        tmp.as_file().sync_all()?;
        tmp.persist(self.dir.join(name)).map_err(|e| CliError::Io(e.error))?;
        Ok(())
    }

    /// Write an output file atomically and record it for the manifest.
    pub fn write(&mut self, name: &str, bytes: Vec<u8>) -> Result<(), CliError> {
        self.put(name, &bytes)?;
        self.files.push(FileEntry { name: name.to_string(), sha256: sha256_hex(&bytes), bytes: bytes.len() });
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        self.write(name, bytes)
    }

    /// Write the manifest; call after every other output.
    pub fn finish(self) -> Result<PathBuf, CliError> {
        let manifest = Manifest {
            command: &self.command,
            code_version: env!("CARGO_PKG_VERSION"),
            config: &self.config,
            started: &self.started,
            finished: Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true),
            files: &self.files,
        };
        let mut bytes = serde_json::to_vec_pretty(&manifest)?;
        bytes.push(b'\n');
        self.put(MANIFEST, &bytes)?;
        Ok(self.dir)
    }
}
