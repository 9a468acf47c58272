//! Run manifests: what ran, with which configuration, and a digest of every
//! file it wrote.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::PipelineConfig;
use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputDigest {
    /// Path relative to the output directory.
    pub file: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub seed: u64,
    pub config_sha256: String,
    pub config: String,
    pub outputs: Vec<OutputDigest>,
}

fn collect_files(path: &Path, out: &mut Vec<PathBuf>) -> Result<(), CliError> {
    if path.is_dir() {
        let mut entries: Vec<PathBuf> = fs::read_dir(path)
            .map_err(|e| CliError::Runtime(format!("cannot list {}: {e}", path.display())))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .collect();
        entries.sort();
        for e in entries {
            collect_files(&e, out)?;
        }
    } else if path.is_file() {
        out.push(path.to_path_buf());
    }
    Ok(())
}

impl Manifest {
    pub fn build(command: &str, cfg: &PipelineConfig, outputs: &[PathBuf]) -> Result<Manifest, CliError> {
        let mut files = Vec::new();
        for p in outputs {
            collect_files(p, &mut files)?;
        }
        let digests = files
            .iter()
            .map(|f| {
                let bytes = fs::read(f).map_err(|e| CliError::Runtime(format!("cannot read {}: {e}", f.display())))?;
                let rel = f.strip_prefix(&cfg.out).unwrap_or(f);
                Ok(OutputDigest {
                    file: rel.to_string_lossy().replace('\\', "/"),
                    sha256: hex::encode(Sha256::digest(&bytes)),
                })
            })
            .collect::<Result<_, CliError>>()?;
        Ok(Manifest {
            tool: "volscreen".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            seed: cfg.seed,
            config_sha256: cfg.hash(),
            config: cfg.canonical(),
            outputs: digests,
        })
    }

    pub fn file_name(command: &str) -> String {
        format!("{command}.manifest.json")
    }

    /// Writes `<command>.manifest.json` into the output directory.
    pub fn write(&self, out_dir: &Path) -> Result<PathBuf, CliError> {
        let path = out_dir.join(Manifest::file_name(&self.command));
        let text = serde_json::to_string_pretty(self).map_err(|e| CliError::Runtime(e.to_string()))? + "\n";
        crate::io::write_bytes(&path, text.as_bytes())?;
        Ok(path)
    }
}
