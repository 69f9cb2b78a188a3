use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};

use super::Failure;

/// Audit record written next to every command's outputs.
#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config: serde_json::Value,
    /// Input path → SHA-256 of its bytes, hex.
    pub inputs: BTreeMap<String, String>,
    pub seed: u64,
    pub version: String,
    pub duration_secs: f64,
    /// `ok`, or the failure message.
    pub status: String,
    pub outputs: Vec<String>,
}

pub const MANIFEST_FILE: &str = "manifest.json";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// The only directory a command writes into. Files appear atomically: they
/// are written to a temporary sibling and renamed into place.
pub struct OutDir {
    dir: PathBuf,
    started: Instant,
    inputs: BTreeMap<String, String>,
    written: Vec<String>,
}

impl OutDir {
    pub fn new(dir: &Path) -> Self {
        Self {
            dir: dir.to_path_buf(),
            started: Instant::now(),
            inputs: BTreeMap::new(),
            written: Vec::new(),
        }
    }

    pub fn path(&self) -> &Path {
        &self.dir
    }

    /// Reads an input file and records its digest.
    pub fn read_input(&mut self, path: &Path) -> Result<Vec<u8>, Failure> {
        let bytes = fs::read(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
        self.inputs.insert(path.display().to_string(), sha256_hex(&bytes));
        Ok(bytes)
    }

    pub fn read_input_text(&mut self, path: &Path) -> Result<String, Failure> {
        String::from_utf8(self.read_input(path)?)
            .map_err(|_| Failure::Domain(format!("{}: not valid UTF-8", path.display())))
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), Failure> {
        let io = |e: std::io::Error| Failure::Io(format!("writing {name}: {e}"));
        fs::create_dir_all(&self.dir).map_err(io)?;
        let mut tmp = tempfile::NamedTempFile::new_in(&self.dir).map_err(io)?;
        tmp.write_all(bytes).map_err(io)?;
        tmp.persist(self.dir.join(name)).map_err(|e| io(e.error))?;
        self.written.push(name.to_string());
        Ok(())
    }

    pub fn finish(
        mut self,
        command: &str,
        config: serde_json::Value,
        seed: u64,
        outcome: &Result<(), Failure>,
    ) -> Result<(), Failure> {
        let manifest = RunManifest {
            command: command.to_string(),
            config,
            inputs: std::mem::take(&mut self.inputs),
            seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            duration_secs: self.started.elapsed().as_secs_f64(),
            status: match outcome {
                Ok(()) => "ok".to_string(),
                Err(e) => e.to_string(),
            },
            outputs: self.written.clone(),
        };
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        self.write(MANIFEST_FILE, text.as_bytes())
    }
}
