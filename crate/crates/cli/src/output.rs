//! Atomic file output and the run manifest.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

/// Writes `bytes` to `path` through a sibling temporary file and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let name = path
        .file_name()
        .with_context(|| format!("{} has no file name", path.display()))?;
    let tmp = dir.join(format!(".{}.tmp", name.to_string_lossy()));
    {
        let mut f = fs::File::create(&tmp).with_context(|| format!("creating {}", tmp.display()))?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path).with_context(|| format!("renaming {} to {}", tmp.display(), path.display()))?;
    Ok(())
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Serialize)]
pub struct OutputFile {
    pub path: String,
    pub sha256: String,
    pub bytes: usize,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command_line: Vec<String>,
    /// Digest of the inputs: arguments other than the output location, plus
    /// the contents of every file they reference.
    pub config_digest: String,
    pub artifact_version: String,
    pub outputs: Vec<OutputFile>,
    pub wall_clock_s: f64,
}

/// Collects output files for one run and writes them with a manifest.
pub struct Run {
    out_dir: PathBuf,
    started: Instant,
    command_line: Vec<String>,
    digest: Sha256,
    outputs: Vec<OutputFile>,
}

impl Run {
    pub fn new(out_dir: &Path, command_line: Vec<String>) -> Result<Self> {
        fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
        let mut digest = Sha256::new();
        let mut skip_next = false;
        for arg in command_line.iter().skip(1) {
            if skip_next {
                skip_next = false;
                continue;
            }
            if arg == "--out" {
                skip_next = true;
                continue;
            }
            if arg.starts_with("--out=") {
                continue;
            }
            digest.update(arg.as_bytes());
            digest.update([0u8]);
        }
        Ok(Self {
            out_dir: out_dir.to_path_buf(),
            started: Instant::now(),
            command_line,
            digest,
            outputs: Vec::new(),
        })
    }

    /// Folds an input file's contents into the config digest.
    pub fn add_input(&mut self, bytes: &[u8]) {
        self.digest.update((bytes.len() as u64).to_le_bytes());
        self.digest.update(bytes);
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        write_atomic(&self.out_dir.join(name), bytes)?;
        self.outputs.push(OutputFile {
            path: name.to_string(),
            sha256: sha256_hex(bytes),
            bytes: bytes.len(),
        });
        Ok(())
    }

    pub fn finish(self) -> Result<RunManifest> {
        let manifest = RunManifest {
            command_line: self.command_line,
            config_digest: hex::encode(self.digest.finalize()),
            artifact_version: env!("CARGO_PKG_VERSION").to_string(),
            outputs: self.outputs,
            wall_clock_s: self.started.elapsed().as_secs_f64(),
        };
        let mut json = serde_json::to_vec_pretty(&manifest)?;
        json.push(b'\n');
        write_atomic(&self.out_dir.join("manifest.json"), &json)?;
        Ok(manifest)
    }
}
