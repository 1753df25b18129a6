//! Run manifests: everything needed to reproduce a `track` run byte for byte.

use std::fs;
use std::path::{Path, PathBuf};

use mottrack_core::sort::SortConfig;
use mottrack_core::tracktor::TracktorConfig;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const TOOLKIT_VERSION: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));

/// How Tracktor regresses a track into the next frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum RegressorSpec {
    /// Snap to the best-overlapping detection of the frame.
    Snap { min_iou: f64 },
    /// Snap to a separate proposals stream (det format).
    Proposals { min_iou: f64 },
}

impl RegressorSpec {
    pub fn name(&self) -> &'static str {
        match self {
            RegressorSpec::Snap { .. } => "snap",
            RegressorSpec::Proposals { .. } => "proposals",
        }
    }
}

/// Tracker name with its fully resolved configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "lowercase")]
pub enum TrackerSpec {
    Sort {
        config: SortConfig,
    },
    Tracktor {
        config: TracktorConfig,
        regressor: RegressorSpec,
    },
}

impl TrackerSpec {
    pub fn name(&self) -> &'static str {
        match self {
            TrackerSpec::Sort { .. } => "sort",
            TrackerSpec::Tracktor { .. } => "tracktor",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputDigest {
    /// `det`, `warps`, `embeddings`, or `proposals`.
    pub role: String,
    pub path: PathBuf,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceRecord {
    pub name: String,
    /// Generator seed when the sequence came from `mottrack synth`.
    pub seed: Option<u64>,
    pub inputs: Vec<InputDigest>,
    pub output: PathBuf,
    pub result_sha256: String,
    pub rejected_rows: usize,
    /// Measured; excluded from reproducibility checks.
    pub wall_time_s: f64,
}

impl SequenceRecord {
    pub fn input(&self, role: &str) -> Option<&InputDigest> {
        self.inputs.iter().find(|i| i.role == role)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub toolkit_version: String,
    pub tracker: TrackerSpec,
    /// Embedding dimension enforced while parsing; `None` infers it.
    pub embedding_dim: Option<usize>,
    pub jobs: usize,
    pub sequences: Vec<SequenceRecord>,
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: e.line(),
            message: e.to_string(),
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self).expect("manifest serializes");
        text.push('\n');
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    /// Wall time recorded for a result file, matched by file name.
    pub fn wall_time_for(&self, result: &Path) -> Option<f64> {
        let name = result.file_name()?;
        self.sequences
            .iter()
            .find(|s| s.output.file_name() == Some(name))
            .map(|s| s.wall_time_s)
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(sha256_hex(&bytes))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_of_empty_input() {
        assert_eq!(
            sha256_hex(b""),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
    }

    #[test]
    fn manifest_json_roundtrip() {
        let m = RunManifest {
            toolkit_version: TOOLKIT_VERSION.into(),
            tracker: TrackerSpec::Tracktor {
                config: TracktorConfig::default(),
                regressor: RegressorSpec::Snap { min_iou: 0.4 },
            },
            embedding_dim: Some(16),
            jobs: 2,
            sequences: vec![SequenceRecord {
                name: "a".into(),
                seed: Some(3),
                inputs: vec![InputDigest {
                    role: "det".into(),
                    path: "a/det.txt".into(),
                    sha256: sha256_hex(b"x"),
                }],
                output: "out/a.txt".into(),
                result_sha256: sha256_hex(b"y"),
                rejected_rows: 0,
                wall_time_s: 0.25,
            }],
        };
        let text = serde_json::to_string(&m).unwrap();
        assert!(text.contains("\"name\":\"tracktor\""));
        assert!(text.contains("\"motion_mode\":\"none\""));
        let back: RunManifest = serde_json::from_str(&text).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.wall_time_for(Path::new("elsewhere/a.txt")), Some(0.25));
    }
}
