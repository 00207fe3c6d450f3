//! Atomic output files and run manifests.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha2::{Digest, Sha256};
use tempfile::NamedTempFile;

use crate::error::CliError;

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn file_digest(path: &Path) -> Result<String, CliError> {
    let mut hasher = Sha256::new();
    let mut file = fs::File::open(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    std::io::copy(&mut file, &mut hasher)?;
    Ok(hex::encode(hasher.finalize()))
}

/// Collects the inputs and outputs of one command and writes them
/// atomically into the output directory.
pub struct Run {
    dir: PathBuf,
    command: String,
    seed: u64,
    config_sha256: String,
    inputs: BTreeMap<String, String>,
    outputs: Vec<String>,
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    version: &'a str,
    seed: u64,
    config_sha256: &'a str,
    inputs: &'a BTreeMap<String, String>,
    outputs: &'a [String],
    timestamp_unix: u64,
}

impl Run {
    pub fn new(dir: &Path, command: &str, seed: u64, config_bytes: &[u8]) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::Data(format!("{}: {e}", dir.display())))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            command: command.to_string(),
            seed,
            config_sha256: sha256_hex(config_bytes),
            inputs: BTreeMap::new(),
            outputs: Vec::new(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    /// Records the digest of an input file.
    pub fn input(&mut self, path: &Path) -> Result<(), CliError> {
        let digest = file_digest(path)?;
        self.inputs.insert(path.display().to_string(), digest);
        Ok(())
    }

    /// Writes `name` in the output directory through a temporary file that
    /// is renamed into place only after `body` succeeds.
    pub fn write<F>(&mut self, name: &str, body: F) -> Result<PathBuf, CliError>
    where
        F: FnOnce(&mut dyn Write) -> Result<(), CliError>,
    {
        let target = self.path(name);
        write_atomic(&target, body)?;
        self.outputs.push(name.to_string());
        Ok(target)
    }

    /// Lists a file that was written into the output directory by other means.
    pub fn record_output(&mut self, name: &str) {
        self.outputs.push(name.to_string());
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<PathBuf, CliError> {
        self.write(name, |w| {
            serde_json::to_writer_pretty(&mut *w, value).map_err(|e| CliError::Data(e.to_string()))?;
            writeln!(w)?;
            Ok(())
        })
    }

    /// Writes `manifest_<command>.json` and returns its path.
    pub fn finish(self) -> Result<PathBuf, CliError> {
        let timestamp_unix = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
        let manifest = Manifest {
            command: &self.command,
            version: env!("CARGO_PKG_VERSION"),
            seed: self.seed,
            config_sha256: &self.config_sha256,
            inputs: &self.inputs,
            outputs: &self.outputs,
            timestamp_unix,
        };
        let target = self.dir.join(format!("manifest_{}.json", self.command));
        write_atomic(&target, |w| {
            serde_json::to_writer_pretty(&mut *w, &manifest).map_err(|e| CliError::Data(e.to_string()))?;
            writeln!(w)?;
            Ok(())
        })?;
        Ok(target)
    }
}

pub fn write_atomic<F>(target: &Path, body: F) -> Result<(), CliError>
where
    F: FnOnce(&mut dyn Write) -> Result<(), CliError>,
{
    let dir = target
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let tmp = NamedTempFile::new_in(dir)?;
    {
        let mut w = BufWriter::new(tmp.as_file());
        body(&mut w)?;
        w.flush()?;
    }
    tmp.as_file().sync_all()?;
    tmp.persist(target)
        .map_err(|e| CliError::Data(format!("{}: {e}", target.display())))?;
    Ok(())
}
