//! Loading sequence inputs from disk and running a tracker over them.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};
use std::time::Instant;

use mottrack_core::sort::sort_run;
use mottrack_core::tracktor::{
    tracktor_run, EmbeddingTable, ProposalRegressor, SnapRegressor, WarpTable,
};
use mottrack_core::{Sequence, Trajectory};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::manifest::{
    sha256_file, sha256_hex, InputDigest, RegressorSpec, SequenceRecord, TrackerSpec,
};
use crate::mot_io::{self, GtFilter, ParseError};

/// Paths making up one sequence.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SequenceFiles {
    pub name: String,
    pub det: PathBuf,
    pub warps: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    pub proposals: Option<PathBuf>,
    pub seed: Option<u64>,
}

impl SequenceFiles {
    pub fn inputs(&self) -> impl Iterator<Item = (&'static str, &Path)> {
        [
            ("det", Some(self.det.as_path())),
            ("warps", self.warps.as_deref()),
            ("embeddings", self.embeddings.as_deref()),
            ("proposals", self.proposals.as_deref()),
        ]
        .into_iter()
        .filter_map(|(role, p)| p.map(|p| (role, p)))
    }
}

pub(crate) fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::io(path, e))
}

pub(crate) fn parse_error(path: &Path) -> impl FnOnce(ParseError) -> Error + '_ {
    move |e| Error::Parse {
        path: path.to_path_buf(),
        line: e.line,
        message: e.message,
    }
}

pub fn read_detections(path: &Path) -> Result<(Sequence, usize)> {
    let parsed = mot_io::parse_detections(open(path)?).map_err(parse_error(path))?;
    Ok((parsed.sequence, parsed.rejected.len()))
}

pub fn read_gt(path: &Path) -> Result<Vec<Trajectory>> {
    mot_io::parse_gt(open(path)?, &GtFilter::default()).map_err(parse_error(path))
}

pub fn read_results(path: &Path) -> Result<Vec<Trajectory>> {
    mot_io::parse_results(open(path)?).map_err(parse_error(path))
}

pub fn read_warps(path: &Path) -> Result<WarpTable> {
    mot_io::parse_warps(open(path)?).map_err(parse_error(path))
}

pub fn read_embeddings(path: &Path, dim: Option<usize>) -> Result<EmbeddingTable> {
    mot_io::parse_embeddings(open(path)?, dim).map_err(parse_error(path))
}

pub fn results_bytes(trajectories: &[Trajectory]) -> Vec<u8> {
    let mut buf = Vec::new();
    mot_io::write_results(trajectories, &mut buf).expect("writing to memory");
    buf
}

pub fn write_file(
    path: &Path,
    write: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    write(&mut out).map_err(|e| Error::io(path, e))
}

/// Checks that the sidecars required by `spec` are present.
pub fn check_sidecars(spec: &TrackerSpec, files: &SequenceFiles) -> Result<()> {
    let TrackerSpec::Tracktor { config, regressor } = spec else {
        return Ok(());
    };
    let missing = |what: &str, flag: &str| {
        Err(Error::Usage(format!(
            "sequence {:?}: {what} requires {flag}",
            files.name
        )))
    };
    if config.reid_enabled && files.embeddings.is_none() {
        return missing("--reid on", "an embeddings file (--embeddings)");
    }
    if config.motion_mode.uses_cmc() && files.warps.is_none() {
        return missing(
            &format!("--motion {}", config.motion_mode.name()),
            "a warps file (--warps)",
        );
    }
    if matches!(regressor, RegressorSpec::Proposals { .. }) && files.proposals.is_none() {
        return missing("--regressor proposals", "a proposals file (--proposals)");
    }
    Ok(())
}

/// Runs `spec` over one sequence's detections and sidecars.
pub fn track_sequence(
    spec: &TrackerSpec,
    files: &SequenceFiles,
    embedding_dim: Option<usize>,
) -> Result<(Vec<Trajectory>, usize)> {
    let (sequence, rejected) = read_detections(&files.det)?;
    let trajectories = match spec {
        TrackerSpec::Sort { config } => sort_run(config, &sequence)?,
        TrackerSpec::Tracktor { config, regressor } => {
            let warps = match (&files.warps, config.motion_mode.uses_cmc()) {
                (Some(p), true) => Some(read_warps(p)?),
                _ => None,
            };
            let embeddings = match (&files.embeddings, config.reid_enabled) {
                (Some(p), true) => Some(read_embeddings(p, embedding_dim)?),
                _ => None,
            };
            match *regressor {
                RegressorSpec::Snap { min_iou } => tracktor_run(
                    config,
                    SnapRegressor { min_iou },
                    &sequence,
                    warps.as_ref(),
                    embeddings.as_ref(),
                )?,
                RegressorSpec::Proposals { min_iou } => {
                    let path = files.proposals.as_deref().ok_or_else(|| {
                        Error::Usage("--regressor proposals requires a proposals file".into())
                    })?;
                    let (proposals, _) = read_detections(path)?;
                    let regressor = ProposalRegressor { proposals, min_iou };
                    tracktor_run(
                        config,
                        regressor,
                        &sequence,
                        warps.as_ref(),
                        embeddings.as_ref(),
                    )?
                }
            }
        }
    };
    Ok((trajectories, rejected))
}

/// Tracks, writes the result file, and records digests and timing.
pub fn track_to_file(
    spec: &TrackerSpec,
    files: &SequenceFiles,
    embedding_dim: Option<usize>,
    output: &Path,
) -> Result<SequenceRecord> {
    let inputs = files
        .inputs()
        .map(|(role, path)| {
            Ok(InputDigest {
                role: role.into(),
                path: path.to_path_buf(),
                sha256: sha256_file(path)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let start = Instant::now();
    let (trajectories, rejected_rows) = track_sequence(spec, files, embedding_dim)?;
    let wall_time_s = start.elapsed().as_secs_f64();
    let bytes = results_bytes(&trajectories);
    write_file(output, |w| std::io::Write::write_all(w, &bytes))?;
    log::info!(
        "{}: {} trajectories in {:.3}s -> {}",
        files.name,
        trajectories.len(),
        wall_time_s,
        output.display()
    );
    Ok(SequenceRecord {
        name: files.name.clone(),
        seed: files.seed,
        inputs,
        output: output.to_path_buf(),
        result_sha256: sha256_hex(&bytes),
        rejected_rows,
        wall_time_s,
    })
}

/// Maps `f` over `items` on at most `jobs` threads, preserving order.
pub fn par_map<T, U, F>(jobs: usize, items: &[T], f: F) -> Result<Vec<U>>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> Result<U> + Sync + Send,
{
    if jobs <= 1 {
        return items.iter().map(f).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Data(format!("thread pool: {e}")))?;
    pool.install(|| items.par_iter().map(f).collect())
}

fn first_existing(dir: &Path, candidates: &[&str]) -> Option<PathBuf> {
    candidates.iter().map(|c| dir.join(c)).find(|p| p.is_file())
}

/// Ground truth inside a sequence directory (`gt.txt` or `gt/gt.txt`).
pub fn gt_path(dir: &Path) -> Option<PathBuf> {
    first_existing(dir, &["gt.txt", "gt/gt.txt"])
}

pub(crate) fn synth_seed(dir: &Path) -> Option<u64> {
    let text = fs::read_to_string(dir.join("config.json")).ok()?;
    let v: serde_json::Value = serde_json::from_str(&text).ok()?;
    v.get("seed")?.as_u64()
}

/// Directory holding a sequence's files, given its detection file.
pub fn sequence_dir(det: &Path) -> Option<&Path> {
    let dir = det.parent()?;
    if dir.file_name().is_some_and(|n| n == "det") {
        dir.parent()
    } else {
        Some(dir)
    }
}

/// A sequence name for a lone detection file: its stem, or the sequence
/// directory's name when the file is the conventional `det.txt`.
pub fn sequence_name(det: &Path) -> String {
    let stem = det.file_stem().map(|s| s.to_string_lossy().into_owned());
    match stem.as_deref() {
        Some("det") | None => sequence_dir(det).and_then(Path::file_name).map_or_else(
            || "sequence".to_string(),
            |n| n.to_string_lossy().into_owned(),
        ),
        Some(s) => s.to_string(),
    }
}

/// Sequence subdirectories of `root`, sorted by name. Each holds `det.txt`
/// or `det/det.txt`, plus optional `warps.csv`, `embeddings.csv`,
/// `proposals.txt` and `config.json`.
pub fn discover_sequences(root: &Path) -> Result<Vec<SequenceFiles>> {
    let entries = fs::read_dir(root).map_err(|e| Error::io(root, e))?;
    let mut dirs = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(root, e))?;
        if entry.path().is_dir() {
            dirs.push(entry.path());
        }
    }
    dirs.sort();
    let seqs: Vec<SequenceFiles> = dirs
        .into_iter()
        .filter_map(|dir| {
            let det = first_existing(&dir, &["det.txt", "det/det.txt"])?;
            Some(SequenceFiles {
                name: dir.file_name()?.to_string_lossy().into_owned(),
                det,
                warps: first_existing(&dir, &["warps.csv"]),
                embeddings: first_existing(&dir, &["embeddings.csv"]),
                proposals: first_existing(&dir, &["proposals.txt"]),
                seed: synth_seed(&dir),
            })
        })
        .collect();
    if seqs.is_empty() {
        return Err(Error::Data(format!(
            "{}: no sequence directories with a det.txt",
            root.display()
        )));
    }
    Ok(seqs)
}

/// Drops sidecars the tracker does not read, so digests cover only real inputs.
pub fn prune_sidecars(spec: &TrackerSpec, files: &mut SequenceFiles) {
    match spec {
        TrackerSpec::Sort { .. } => {
            files.warps = None;
            files.embeddings = None;
            files.proposals = None;
        }
        TrackerSpec::Tracktor { config, regressor } => {
            if !config.motion_mode.uses_cmc() {
                files.warps = None;
            }
            if !config.reid_enabled {
                files.embeddings = None;
            }
            if !matches!(regressor, RegressorSpec::Proposals { .. }) {
                files.proposals = None;
            }
        }
    }
}
