//! The `mottrack` command line.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use mottrack_core::metrics::{evaluate, DEFAULT_IOU_THRESHOLD};
use mottrack_core::sort::SortConfig;
use mottrack_core::synth::{self, SynthConfig, EXTRA_SCENARIOS, SCENARIO_NAMES, SUITE_SEEDS};
use mottrack_core::tracktor::{MotionMode, TracktorConfig};

use crate::error::{Error, Result};
use crate::manifest::{sha256_file, RegressorSpec, RunManifest, TrackerSpec, TOOLKIT_VERSION};
use crate::mot_io;
use crate::report::{Row, Table};
use crate::run::{
    check_sidecars, discover_sequences, gt_path, par_map, prune_sidecars, read_gt, read_results,
    results_bytes, sequence_dir, sequence_name, synth_seed, track_sequence, track_to_file,
    write_file, SequenceFiles,
};

#[derive(Debug, Parser)]
#[command(
    name = "mottrack",
    version,
    about = "SORT and Tracktor-lite tracking with MOT metrics"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a tracker over a detection file or a directory of sequences.
    Track(TrackArgs),
    /// Score one result file against ground truth.
    Eval(EvalArgs),
    /// Score several sequences, or run the Tracktor ablation.
    Compare(CompareArgs),
    /// Generate a synthetic sequence or the benchmark suite.
    Synth(SynthArgs),
    /// Re-run a manifest and check that the results reproduce.
    Replay(ReplayArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TrackerKind {
    Sort,
    Tracktor,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OnOff {
    On,
    Off,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RegressorKind {
    Snap,
    Proposals,
}

fn parse_motion(s: &str) -> std::result::Result<MotionMode, String> {
    MotionMode::parse(s)
        .ok_or_else(|| format!("unknown motion mode {s:?} (none, cva, cmc, cmc+cva)"))
}

/// Tracker parameters shared by `track` and `compare --ablation`.
#[derive(Debug, Clone, Args)]
pub struct TrackerArgs {
    #[arg(long, value_enum, default_value = "sort")]
    pub tracker: TrackerKind,
    /// SORT association and birth IOU gate.
    #[arg(long)]
    pub iou_min: Option<f64>,
    /// SORT: frames a track may go unmatched before deletion.
    #[arg(long)]
    pub t_lost: Option<u32>,
    /// SORT: updates before a track is reported.
    #[arg(long)]
    pub min_hits: Option<u32>,
    #[arg(long)]
    pub lambda_new: Option<f64>,
    #[arg(long)]
    pub sigma_active: Option<f64>,
    #[arg(long)]
    pub lambda_tracks: Option<f64>,
    #[arg(long, value_enum, default_value = "off")]
    pub reid: OnOff,
    #[arg(long)]
    pub tau_reid: Option<f64>,
    #[arg(long)]
    pub reid_patience: Option<u32>,
    #[arg(long)]
    pub reid_iou_gate: Option<f64>,
    #[arg(long, value_parser = parse_motion, default_value = "none")]
    pub motion: MotionMode,
    #[arg(long, value_enum, default_value = "snap")]
    pub regressor: RegressorKind,
    /// Minimum IOU for the snap and proposal regressors.
    #[arg(long, default_value_t = 0.4)]
    pub snap_iou: f64,
    /// Expected embedding dimension; inferred from the file when omitted.
    #[arg(long)]
    pub embedding_dim: Option<usize>,
}

impl TrackerArgs {
    pub fn spec(&self) -> Result<TrackerSpec> {
        let spec = match self.tracker {
            TrackerKind::Sort => {
                let d = SortConfig::default();
                let config = SortConfig {
                    iou_min: self.iou_min.unwrap_or(d.iou_min),
                    t_lost: self.t_lost.unwrap_or(d.t_lost),
                    min_hits: self.min_hits.unwrap_or(d.min_hits),
                    ..d
                };
                config.validate()?;
                TrackerSpec::Sort { config }
            }
            TrackerKind::Tracktor => {
                let d = TracktorConfig::default();
                let config = TracktorConfig {
                    lambda_new: self.lambda_new.unwrap_or(d.lambda_new),
                    sigma_active: self.sigma_active.unwrap_or(d.sigma_active),
                    lambda_tracks: self.lambda_tracks.unwrap_or(d.lambda_tracks),
                    reid_enabled: self.reid == OnOff::On,
                    tau_reid: self.tau_reid.unwrap_or(d.tau_reid),
                    reid_patience: self.reid_patience.unwrap_or(d.reid_patience),
                    reid_iou_gate: self.reid_iou_gate.unwrap_or(d.reid_iou_gate),
                    motion_mode: self.motion,
                    ..d
                };
                config.validate()?;
                if !(self.snap_iou > 0.0 && self.snap_iou <= 1.0) {
                    return Err(Error::Usage("--snap-iou must lie in (0, 1]".into()));
                }
                let regressor = match self.regressor {
                    RegressorKind::Snap => RegressorSpec::Snap {
                        min_iou: self.snap_iou,
                    },
                    RegressorKind::Proposals => RegressorSpec::Proposals {
                        min_iou: self.snap_iou,
                    },
                };
                TrackerSpec::Tracktor { config, regressor }
            }
        };
        self.warn_unused(&spec);
        Ok(spec)
    }

    fn warn_unused(&self, spec: &TrackerSpec) {
        let sort_flags = self.iou_min.is_some() || self.t_lost.is_some() || self.min_hits.is_some();
        let tracktor_flags = self.lambda_new.is_some()
            || self.sigma_active.is_some()
            || self.lambda_tracks.is_some()
            || self.tau_reid.is_some()
            || self.reid_patience.is_some()
            || self.reid_iou_gate.is_some()
            || self.reid == OnOff::On
            || self.motion != MotionMode::None;
        match spec {
            TrackerSpec::Sort { .. } if tracktor_flags => {
                log::warn!("Tracktor flags are ignored by --tracker sort")
            }
            TrackerSpec::Tracktor { .. } if sort_flags => {
                log::warn!("SORT flags are ignored by --tracker tracktor")
            }
            _ => {}
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct TrackArgs {
    #[command(flatten)]
    pub tracker: TrackerArgs,
    /// Detection file (MOTChallenge det format).
    #[arg(long, conflicts_with = "seqs", required_unless_present = "seqs")]
    pub det: Option<PathBuf>,
    /// Directory of sequence subdirectories.
    #[arg(long)]
    pub seqs: Option<PathBuf>,
    /// Result file with --det, or output directory with --seqs.
    #[arg(long)]
    pub out: PathBuf,
    /// Manifest path; defaults to `<out>.manifest.json` or `<out>/manifest.json`.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[arg(long, requires = "det")]
    pub warps: Option<PathBuf>,
    #[arg(long, requires = "det")]
    pub embeddings: Option<PathBuf>,
    #[arg(long, requires = "det")]
    pub proposals: Option<PathBuf>,
    /// Sequences tracked in parallel.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
}

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub gt: PathBuf,
    #[arg(long)]
    pub res: PathBuf,
    #[arg(long, default_value_t = DEFAULT_IOU_THRESHOLD)]
    pub iou_thresh: f64,
    /// Also write the table as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Also write the table as JSON.
    #[arg(long)]
    pub json: Option<PathBuf>,
    /// Manifest supplying the Time column.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct CompareArgs {
    /// Ground-truth files, paired in order with --res.
    #[arg(long)]
    pub gt: Vec<PathBuf>,
    #[arg(long)]
    pub res: Vec<PathBuf>,
    /// Directory of sequences holding `gt.txt` or `gt/gt.txt`.
    #[arg(long, conflicts_with_all = ["gt", "res"])]
    pub gt_dir: Option<PathBuf>,
    /// Directory holding `<sequence>.txt` result files.
    #[arg(long, requires = "gt_dir")]
    pub res_dir: Option<PathBuf>,
    /// Run Tracktor bare, +Re-ID and +Re-ID+motion over --seqs.
    #[arg(long, requires = "seqs")]
    pub ablation: bool,
    #[arg(long)]
    pub seqs: Option<PathBuf>,
    /// Motion mode of the third ablation arm.
    #[arg(long, value_parser = parse_motion, default_value = "cva")]
    pub ablation_motion: MotionMode,
    #[arg(long, default_value_t = DEFAULT_IOU_THRESHOLD)]
    pub iou_thresh: f64,
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[arg(long)]
    pub json: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    #[command(flatten)]
    pub tracker: TrackerArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    #[arg(long, conflicts_with_all = ["config", "suite"])]
    pub scenario: Option<String>,
    /// SynthConfig as JSON; omitted fields take their defaults.
    #[arg(long, conflicts_with = "suite")]
    pub config: Option<PathBuf>,
    /// Write every benchmark scenario for seeds 1 to 10.
    #[arg(long)]
    pub suite: bool,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct ReplayArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Write results here as `<sequence>.txt` instead of the recorded paths.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Overrides the recorded job count.
    #[arg(long)]
    pub jobs: Option<usize>,
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Track(a) => cmd_track(&a).map(|_| ()),
        Command::Eval(a) => cmd_eval(&a),
        Command::Compare(a) => cmd_compare(&a),
        Command::Synth(a) => cmd_synth(&a),
        Command::Replay(a) => cmd_replay(&a),
    }
}

fn check_jobs(jobs: usize) -> Result<usize> {
    if jobs == 0 {
        return Err(Error::Usage("--jobs must be at least 1".into()));
    }
    Ok(jobs)
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map_or_else(|| "sequence".into(), |s| s.to_string_lossy().into_owned())
}

/// Runs `track` and returns the written manifest.
pub fn cmd_track(a: &TrackArgs) -> Result<RunManifest> {
    let jobs = check_jobs(a.jobs)?;
    let spec = a.tracker.spec()?;
    let (seqs, outputs, manifest_path) = match (&a.det, &a.seqs) {
        (Some(det), _) => {
            let files = SequenceFiles {
                name: sequence_name(det),
                det: det.clone(),
                warps: a.warps.clone(),
                embeddings: a.embeddings.clone(),
                proposals: a.proposals.clone(),
                seed: sequence_dir(det).and_then(synth_seed),
            };
            let mut m = a.out.clone().into_os_string();
            m.push(".manifest.json");
            (
                vec![files],
                vec![a.out.clone()],
                a.manifest.clone().unwrap_or_else(|| m.into()),
            )
        }
        (None, Some(dir)) => {
            let seqs = discover_sequences(dir)?;
            let outputs = seqs
                .iter()
                .map(|s| a.out.join(format!("{}.txt", s.name)))
                .collect();
            (
                seqs,
                outputs,
                a.manifest
                    .clone()
                    .unwrap_or_else(|| a.out.join("manifest.json")),
            )
        }
        (None, None) => return Err(Error::Usage("one of --det or --seqs is required".into())),
    };
    let mut seqs = seqs;
    for s in &mut seqs {
        check_sidecars(&spec, s)?;
        prune_sidecars(&spec, s);
    }
    let jobs_items: Vec<(SequenceFiles, PathBuf)> = seqs.into_iter().zip(outputs).collect();
    let records = par_map(jobs, &jobs_items, |(files, out)| {
        track_to_file(&spec, files, a.tracker.embedding_dim, out)
    })?;
    let manifest = RunManifest {
        toolkit_version: TOOLKIT_VERSION.into(),
        tracker: spec,
        embedding_dim: a.tracker.embedding_dim,
        jobs,
        sequences: records,
    };
    manifest.save(&manifest_path)?;
    log::info!("manifest written to {}", manifest_path.display());
    Ok(manifest)
}

fn score(gt: &Path, res: &Path, iou_thresh: f64, name: String, time_s: Option<f64>) -> Result<Row> {
    let gt = read_gt(gt)?;
    let pred = read_results(res)?;
    let counts = evaluate(&gt, &pred, iou_thresh, time_s.unwrap_or(0.0))?;
    Ok(Row {
        sequence: name,
        counts,
        time_s,
    })
}

fn check_thresh(t: f64) -> Result<f64> {
    if !(t > 0.0 && t <= 1.0) {
        return Err(Error::Usage("--iou-thresh must lie in (0, 1]".into()));
    }
    Ok(t)
}

fn emit(tables: &[Table], csv: Option<&Path>, json: Option<&Path>) -> Result<()> {
    let mut stdout = std::io::stdout().lock();
    for (i, t) in tables.iter().enumerate() {
        if i > 0 {
            writeln!(stdout).map_err(|e| Error::io("<stdout>", e))?;
        }
        write!(stdout, "{}", t.render_human()).map_err(|e| Error::io("<stdout>", e))?;
    }
    if let Some(path) = csv {
        let text: Vec<String> = tables.iter().map(Table::to_csv).collect();
        fs::write(path, text.join("\n")).map_err(|e| Error::io(path, e))?;
    }
    if let Some(path) = json {
        let value = if tables.len() == 1 {
            tables[0].to_json()
        } else {
            serde_json::Value::Array(tables.iter().map(Table::to_json).collect())
        };
        let mut text = serde_json::to_string_pretty(&value).expect("json serializes");
        text.push('\n');
        fs::write(path, text).map_err(|e| Error::io(path, e))?;
    }
    Ok(())
}

pub fn cmd_eval(a: &EvalArgs) -> Result<()> {
    let thresh = check_thresh(a.iou_thresh)?;
    let time_s = match &a.manifest {
        Some(m) => RunManifest::load(m)?.wall_time_for(&a.res),
        None => None,
    };
    let mut table = Table::new(None);
    table
        .rows
        .push(score(&a.gt, &a.res, thresh, stem(&a.res), time_s)?);
    emit(&[table], a.csv.as_deref(), a.json.as_deref())
}

fn sequence_dirs(root: &Path) -> Result<BTreeMap<String, PathBuf>> {
    let mut out = BTreeMap::new();
    for entry in fs::read_dir(root).map_err(|e| Error::io(root, e))? {
        let p = entry.map_err(|e| Error::io(root, e))?.path();
        if let Some(gt) = gt_path(&p) {
            out.insert(
                p.file_name()
                    .unwrap_or_default()
                    .to_string_lossy()
                    .into_owned(),
                gt,
            );
        }
    }
    Ok(out)
}

fn result_files(root: &Path) -> Result<BTreeMap<String, PathBuf>> {
    let mut out = BTreeMap::new();
    for entry in fs::read_dir(root).map_err(|e| Error::io(root, e))? {
        let p = entry.map_err(|e| Error::io(root, e))?.path();
        if p.is_file() && p.extension().is_some_and(|e| e == "txt") {
            out.insert(stem(&p), p);
        }
    }
    Ok(out)
}

fn ablation_arms(base: &TrackerArgs, motion: MotionMode) -> Vec<(&'static str, TrackerArgs)> {
    let arm = |reid: OnOff, motion: MotionMode| TrackerArgs {
        tracker: TrackerKind::Tracktor,
        reid,
        motion,
        ..base.clone()
    };
    vec![
        (
            "Tracktor bare (no Re-ID, no motion)",
            arm(OnOff::Off, MotionMode::None),
        ),
        ("Tracktor +Re-ID", arm(OnOff::On, MotionMode::None)),
        ("Tracktor +Re-ID +motion", arm(OnOff::On, motion)),
    ]
}

/// Per-arm tables of the Tracktor ablation over a sequence directory.
pub fn ablation_tables(
    seqs_dir: &Path,
    base: &TrackerArgs,
    motion: MotionMode,
    iou_thresh: f64,
    jobs: usize,
) -> Result<Vec<Table>> {
    let seqs = discover_sequences(seqs_dir)?;
    let gts = seqs
        .iter()
        .map(|s| {
            sequence_dir(&s.det)
                .and_then(gt_path)
                .ok_or_else(|| Error::Data(format!("sequence {:?} has no ground truth", s.name)))
                .and_then(|p| read_gt(&p))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut tables = Vec::new();
    for (title, args) in ablation_arms(base, motion) {
        let spec = args.spec()?;
        let mut arm_seqs = seqs.clone();
        for s in &mut arm_seqs {
            check_sidecars(&spec, s)?;
            prune_sidecars(&spec, s);
        }
        let items: Vec<(&SequenceFiles, &Vec<_>)> = arm_seqs.iter().zip(&gts).collect();
        let rows = par_map(jobs, &items, |(files, gt)| {
            let start = std::time::Instant::now();
            let (pred, _) = track_sequence(&spec, files, args.embedding_dim)?;
            let t = start.elapsed().as_secs_f64();
            Ok(Row {
                sequence: files.name.clone(),
                counts: evaluate(gt, &pred, iou_thresh, t)?,
                time_s: Some(t),
            })
        })?;
        let mut table = Table::new(Some(title.to_string()));
        table.rows = rows;
        table.push_overall()?;
        tables.push(table);
    }
    Ok(tables)
}

pub fn cmd_compare(a: &CompareArgs) -> Result<()> {
    let thresh = check_thresh(a.iou_thresh)?;
    let jobs = check_jobs(a.jobs)?;
    if a.ablation {
        let dir = a
            .seqs
            .as_deref()
            .ok_or_else(|| Error::Usage("--ablation requires --seqs".into()))?;
        let tables = ablation_tables(dir, &a.tracker, a.ablation_motion, thresh, jobs)?;
        return emit(&tables, a.csv.as_deref(), a.json.as_deref());
    }
    let pairs: Vec<(String, PathBuf, PathBuf)> = match (&a.gt_dir, &a.res_dir) {
        (Some(gd), Some(rd)) => {
            let gts = sequence_dirs(gd)?;
            let res = result_files(rd)?;
            if gts.keys().ne(res.keys()) {
                let g: Vec<&String> = gts.keys().collect();
                let r: Vec<&String> = res.keys().collect();
                return Err(Error::Data(format!(
                    "sequence sets differ: ground truth {g:?}, results {r:?}"
                )));
            }
            gts.into_iter()
                .zip(res)
                .map(|((name, g), (_, r))| (name, g, r))
                .collect()
        }
        (Some(_), None) => return Err(Error::Usage("--gt-dir requires --res-dir".into())),
        _ => {
            if a.gt.is_empty() || a.gt.len() != a.res.len() {
                return Err(Error::Usage(format!(
                    "need matching --gt/--res pairs, got {} and {}",
                    a.gt.len(),
                    a.res.len()
                )));
            }
            a.gt.iter()
                .zip(&a.res)
                .map(|(g, r)| (stem(r), g.clone(), r.clone()))
                .collect()
        }
    };
    let rows = par_map(jobs, &pairs, |(name, g, r)| {
        score(g, r, thresh, name.clone(), None)
    })?;
    let mut table = Table::new(None);
    table.rows = rows;
    table.push_overall()?;
    emit(&[table], a.csv.as_deref(), a.json.as_deref())
}

/// File names written by [`write_synth`], in digest order.
pub const SYNTH_FILES: [&str; 6] = [
    "gt.txt",
    "det.txt",
    "warps.csv",
    "embeddings.csv",
    "proposals.txt",
    "config.json",
];

/// Generates `cfg` and writes its dataset into `dir`.
pub fn write_synth(cfg: &SynthConfig, dir: &Path) -> Result<()> {
    let out = synth::generate(cfg)?;
    write_file(&dir.join("gt.txt"), |w| mot_io::write_gt(&out.gt, w))?;
    write_file(&dir.join("det.txt"), |w| {
        mot_io::write_detections(&out.detections, w)
    })?;
    write_file(&dir.join("warps.csv"), |w| {
        mot_io::write_warps(&out.warps, w)
    })?;
    write_file(&dir.join("embeddings.csv"), |w| {
        mot_io::write_embeddings(&out.embeddings, w)
    })?;
    write_file(&dir.join("proposals.txt"), |w| {
        mot_io::write_detections(&out.proposals, w)
    })?;
    let mut json = serde_json::to_string_pretty(cfg).expect("config serializes");
    json.push('\n');
    write_file(&dir.join("config.json"), |w| w.write_all(json.as_bytes()))
}

fn known_scenario(name: &str) -> Result<()> {
    if SCENARIO_NAMES.contains(&name) || EXTRA_SCENARIOS.contains(&name) {
        return Ok(());
    }
    let all: Vec<&str> = SCENARIO_NAMES
        .iter()
        .chain(&EXTRA_SCENARIOS)
        .copied()
        .collect();
    Err(Error::Usage(format!(
        "unknown scenario {name:?}; known: {}",
        all.join(", ")
    )))
}

pub fn cmd_synth(a: &SynthArgs) -> Result<()> {
    if a.suite {
        for name in SCENARIO_NAMES {
            for seed in SUITE_SEEDS {
                let cfg = synth::scenario_config(name, seed).expect("known scenario");
                write_synth(&cfg, &a.out.join(name).join(format!("{name}-s{seed:02}")))?;
            }
        }
        return Ok(());
    }
    let mut cfg = match (&a.scenario, &a.config) {
        (Some(name), None) => {
            known_scenario(name)?;
            synth::scenario_config(name, a.seed.unwrap_or(SynthConfig::default().seed))
                .expect("known scenario")
        }
        (None, Some(path)) => {
            let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            serde_json::from_str(&text).map_err(|e| Error::Parse {
                path: path.clone(),
                line: e.line(),
                message: e.to_string(),
            })?
        }
        _ => {
            return Err(Error::Usage(
                "one of --scenario, --config or --suite is required".into(),
            ))
        }
    };
    if let Some(seed) = a.seed {
        cfg.seed = seed;
    }
    write_synth(&cfg, &a.out)
}

pub fn cmd_replay(a: &ReplayArgs) -> Result<()> {
    let manifest = RunManifest::load(&a.manifest)?;
    let jobs = check_jobs(a.jobs.unwrap_or(manifest.jobs))?;
    let mut items = Vec::new();
    for rec in &manifest.sequences {
        for input in &rec.inputs {
            let digest = sha256_file(&input.path)?;
            if digest != input.sha256 {
                return Err(Error::Data(format!(
                    "{}: content changed since the run (sha256 {digest}, manifest {})",
                    input.path.display(),
                    input.sha256
                )));
            }
        }
        let path_of = |role: &str| rec.input(role).map(|i| i.path.clone());
        let files = SequenceFiles {
            name: rec.name.clone(),
            det: path_of("det").ok_or_else(|| {
                Error::Data(format!("sequence {:?} lists no det input", rec.name))
            })?,
            warps: path_of("warps"),
            embeddings: path_of("embeddings"),
            proposals: path_of("proposals"),
            seed: rec.seed,
        };
        let out = match &a.out {
            Some(dir) => dir.join(format!("{}.txt", rec.name)),
            None => rec.output.clone(),
        };
        items.push((files, out, rec.result_sha256.clone()));
    }
    let spec = manifest.tracker;
    let mismatches = par_map(jobs, &items, |(files, out, expected)| {
        let (trajectories, _) = track_sequence(&spec, files, manifest.embedding_dim)?;
        let bytes = results_bytes(&trajectories);
        write_file(out, |w| w.write_all(&bytes))?;
        let got = crate::manifest::sha256_hex(&bytes);
        Ok((got != *expected).then(|| files.name.clone()))
    })?;
    let bad: Vec<String> = mismatches.into_iter().flatten().collect();
    if !bad.is_empty() {
        return Err(Error::Data(format!(
            "replay diverged for {}",
            bad.join(", ")
        )));
    }
    println!(
        "replayed {} sequence(s); all result digests match",
        items.len()
    );
    Ok(())
}
