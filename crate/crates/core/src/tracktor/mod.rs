//! Tracktor-lite: tracks are carried forward by a box regressor, with optional
//! motion models (constant velocity, camera motion compensation) and
//! short-term appearance re-identification of deactivated tracks.
//!
//! Each frame runs, in order: motion shift, regression and score-based
//! deactivation, inter-track suppression, re-identification of deactivated
//! tracks against uncovered detections, spawning of new tracks, and aging of
//! deactivated tracks.

mod appearance;
mod regressor;

pub use appearance::{appearance_distance, distance, AppearanceMetric, Embedding};
pub use regressor::{OracleRegressor, ProposalRegressor, Regression, Regressor, SnapRegressor};

use alloc::collections::{BTreeMap, VecDeque};
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::geometry::{apply_warp, iou_unchecked, AffineWarp, BBox};
use crate::types::{collect_trajectories, Detection, FrameResult, Sequence, Trajectory};

/// Per-frame warps mapping frame `t - 1` image coordinates into frame `t`.
pub type WarpTable = BTreeMap<u32, AffineWarp>;
/// Embeddings keyed by `(frame, index within frame)`.
pub type EmbeddingTable = BTreeMap<(u32, u32), Embedding>;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum MotionMode {
    #[default]
    #[cfg_attr(feature = "serde", serde(rename = "none"))]
    None,
    #[cfg_attr(feature = "serde", serde(rename = "cva"))]
    Cva,
    #[cfg_attr(feature = "serde", serde(rename = "cmc"))]
    Cmc,
    #[cfg_attr(feature = "serde", serde(rename = "cmc+cva"))]
    CmcCva,
}

impl MotionMode {
    pub fn uses_cmc(self) -> bool {
        matches!(self, MotionMode::Cmc | MotionMode::CmcCva)
    }

    pub fn uses_cva(self) -> bool {
        matches!(self, MotionMode::Cva | MotionMode::CmcCva)
    }

    pub fn name(self) -> &'static str {
        match self {
            MotionMode::None => "none",
            MotionMode::Cva => "cva",
            MotionMode::Cmc => "cmc",
            MotionMode::CmcCva => "cmc+cva",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "none" => MotionMode::None,
            "cva" => MotionMode::Cva,
            "cmc" => MotionMode::Cmc,
            "cmc+cva" => MotionMode::CmcCva,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TracktorConfig {
    /// A detection starts a track only if its IOU with every active track is below this.
    pub lambda_new: f64,
    /// Regression scores below this deactivate the track.
    pub sigma_active: f64,
    /// Suppression IOU between regressed tracks.
    pub lambda_tracks: f64,
    pub reid_enabled: bool,
    /// Frames a deactivated track is kept for re-identification.
    pub reid_patience: u32,
    /// Appearance distance must be strictly below this to re-identify.
    pub tau_reid: f64,
    /// Minimum IOU between a deactivated track's box and the detection.
    pub reid_iou_gate: f64,
    pub motion_mode: MotionMode,
    /// Stored embeddings per track.
    pub embedding_fifo: usize,
    pub appearance_metric: AppearanceMetric,
}

impl Default for TracktorConfig {
    fn default() -> Self {
        Self {
            lambda_new: 0.3,
            sigma_active: 0.5,
            lambda_tracks: 0.6,
            reid_enabled: true,
            reid_patience: 10,
            tau_reid: 0.2,
            reid_iou_gate: 0.2,
            motion_mode: MotionMode::None,
            embedding_fifo: 10,
            appearance_metric: AppearanceMetric::Cosine,
        }
    }
}

impl TracktorConfig {
    pub fn validate(&self) -> Result<()> {
        let ratios = [
            self.lambda_new,
            self.sigma_active,
            self.lambda_tracks,
            self.reid_iou_gate,
        ];
        if !ratios.iter().all(|r| (0.0..=1.0).contains(r)) {
            return Err(Error::Config("tracktor ratios must lie in [0, 1]"));
        }
        if !(self.tau_reid >= 0.0) {
            return Err(Error::Config("tau_reid must be nonnegative"));
        }
        if self.embedding_fifo == 0 {
            return Err(Error::Config("embedding_fifo must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TracktorStatus {
    Active,
    Deactivated,
    Dead,
}

#[derive(Debug, Clone)]
pub struct TracktorTrack {
    pub id: u32,
    /// Current box; for deactivated tracks, the coasted estimate.
    pub bbox: BBox,
    /// Last observed `(dx, dy)` of the box origin, camera motion removed.
    pub displacement: (f64, f64),
    pub status: TracktorStatus,
    pub deactivated_age: u32,
    pub score: f64,
    /// Frame and box of the last frame the track was active.
    pub last_active: (u32, BBox),
    pub embeddings: VecDeque<Embedding>,
    pub history: BTreeMap<u32, BBox>,
}

impl TracktorTrack {
    fn push_embedding(&mut self, e: Embedding, cap: usize) {
        if self.embeddings.len() == cap {
            self.embeddings.pop_front();
        }
        self.embeddings.push_back(e);
    }

    fn deactivate(&mut self) {
        self.status = TracktorStatus::Deactivated;
        self.deactivated_age = 0;
    }
}

/// Box predicted for an active track under `mode`. A cmc mode without a warp
/// falls back to constant velocity.
pub fn motion_shift(
    track: &TracktorTrack,
    warp: Option<&AffineWarp>,
    mode: MotionMode,
) -> Result<BBox> {
    let mut b = track.bbox;
    let mut cva = mode.uses_cva();
    if mode.uses_cmc() {
        match warp {
            Some(w) => b = apply_warp(w, &b)?,
            None => {
                log::warn!(
                    "track {}: no warp for {} motion, using cva",
                    track.id,
                    mode.name()
                );
                cva = true;
            }
        }
    }
    if cva {
        b = b.translated(track.displacement.0, track.displacement.1);
    }
    Ok(b)
}

/// Inputs for one frame.
#[derive(Debug, Clone, Copy, Default)]
pub struct FrameInput<'a> {
    pub detections: &'a [Detection],
    pub warp: Option<&'a AffineWarp>,
    /// One optional embedding per detection, parallel to `detections`.
    pub embeddings: Option<&'a [Option<Embedding>]>,
}

/// Stateful Tracktor-lite instance for one sequence.
#[derive(Debug, Clone)]
pub struct TracktorTracker<R> {
    config: TracktorConfig,
    regressor: R,
    tracks: Vec<TracktorTrack>,
    next_id: u32,
    last_frame: Option<u32>,
    embedding_dim: Option<usize>,
}

impl<R: Regressor> TracktorTracker<R> {
    pub fn new(config: TracktorConfig, regressor: R) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config,
            regressor,
            tracks: Vec::new(),
            next_id: 1,
            last_frame: None,
            embedding_dim: None,
        })
    }

    pub fn config(&self) -> &TracktorConfig {
        &self.config
    }

    /// Active and deactivated tracks.
    pub fn tracks(&self) -> &[TracktorTrack] {
        &self.tracks
    }

    fn check_inputs(&mut self, frame: u32, input: &FrameInput<'_>) -> Result<()> {
        if let Some(last) = self.last_frame {
            if frame <= last {
                return Err(Error::Sequencing { frame, last });
            }
        }
        if frame == 0 {
            return Err(Error::InvalidInput("frames are 1-based"));
        }
        for d in input.detections {
            d.bbox.validate()?;
        }
        if let Some(embs) = input.embeddings {
            if embs.len() != input.detections.len() {
                return Err(Error::InvalidInput(
                    "one embedding slot per detection required",
                ));
            }
            for e in embs.iter().flatten() {
                match self.embedding_dim {
                    None => self.embedding_dim = Some(e.dim()),
                    Some(dim) if dim != e.dim() => {
                        return Err(Error::DimensionMismatch {
                            expected: dim,
                            got: e.dim(),
                        })
                    }
                    Some(_) => {}
                }
            }
        }
        if let Some(w) = input.warp {
            w.validate()?;
        }
        Ok(())
    }

    pub fn step(&mut self, frame: u32, input: FrameInput<'_>) -> Result<FrameResult> {
        self.check_inputs(frame, &input)?;
        self.last_frame = Some(frame);
        let cfg = self.config;
        let dets = input.detections;
        let emb_of = |i: usize| input.embeddings.and_then(|e| e[i].as_ref());
        let fifo = cfg.embedding_fifo;

        // 1-2. motion shift, regression, score gate
        for t in &mut self.tracks {
            let aligned = match (cfg.motion_mode.uses_cmc(), input.warp) {
                (true, Some(w)) => apply_warp(w, &t.bbox)?,
                _ => t.bbox,
            };
            let shifted = motion_shift(t, input.warp, cfg.motion_mode)?;
            if t.status == TracktorStatus::Deactivated {
                t.bbox = shifted;
                continue;
            }
            match self.regressor.regress(&shifted, frame, dets) {
                Some(r) if r.score >= cfg.sigma_active && r.bbox.is_valid() => {
                    t.displacement = (r.bbox.left - aligned.left, r.bbox.top - aligned.top);
                    t.bbox = r.bbox;
                    t.score = r.score;
                    let support = r.detection.or_else(|| best_detection(&r.bbox, dets, 0.5));
                    if let Some(e) = support.and_then(emb_of) {
                        t.push_embedding(e.clone(), fifo);
                    }
                }
                _ => {
                    t.bbox = shifted;
                    t.deactivate();
                }
            }
        }

        // 3. inter-track suppression, highest score first
        let mut order: Vec<usize> = (0..self.tracks.len())
            .filter(|&i| self.tracks[i].status == TracktorStatus::Active)
            .collect();
        order.sort_by(|&a, &b| {
            let (ta, tb) = (&self.tracks[a], &self.tracks[b]);
            tb.score.total_cmp(&ta.score).then(ta.id.cmp(&tb.id))
        });
        let mut kept: Vec<usize> = Vec::with_capacity(order.len());
        for i in order {
            let b = self.tracks[i].bbox;
            if kept
                .iter()
                .any(|&k| iou_unchecked(&self.tracks[k].bbox, &b) > cfg.lambda_tracks)
            {
                self.tracks[i].deactivate();
            } else {
                kept.push(i);
            }
        }

        let active_boxes = |tracks: &[TracktorTrack]| -> Vec<BBox> {
            tracks
                .iter()
                .filter(|t| t.status == TracktorStatus::Active)
                .map(|t| t.bbox)
                .collect()
        };
        let covered = |boxes: &[BBox], d: &Detection| {
            boxes
                .iter()
                .any(|b| iou_unchecked(b, &d.bbox) >= cfg.lambda_new)
        };
        let mut used = alloc::vec![false; dets.len()];

        // 4. re-identification
        if cfg.reid_enabled {
            let boxes = active_boxes(&self.tracks);
            let mut candidates: Vec<(f64, u32, usize, usize)> = Vec::new();
            for (j, d) in dets.iter().enumerate() {
                let Some(e) = emb_of(j) else { continue };
                if covered(&boxes, d) {
                    continue;
                }
                for (ti, t) in self.tracks.iter().enumerate() {
                    if t.status != TracktorStatus::Deactivated || t.embeddings.is_empty() {
                        continue;
                    }
                    let mut dist = f64::INFINITY;
                    for stored in &t.embeddings {
                        dist = dist.min(distance(cfg.appearance_metric, stored, e)?);
                    }
                    if dist < cfg.tau_reid && iou_unchecked(&t.bbox, &d.bbox) >= cfg.reid_iou_gate {
                        candidates.push((dist, t.id, ti, j));
                    }
                }
            }
            candidates.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.3.cmp(&b.3)));
            let mut track_used = alloc::vec![false; self.tracks.len()];
            for (_, _, ti, j) in candidates {
                if track_used[ti] || used[j] {
                    continue;
                }
                track_used[ti] = true;
                used[j] = true;
                let t = &mut self.tracks[ti];
                t.status = TracktorStatus::Active;
                t.deactivated_age = 0;
                let (seen, last) = t.last_active;
                let gap = frame.saturating_sub(seen).max(1) as f64;
                let b = dets[j].bbox;
                t.displacement = ((b.left - last.left) / gap, (b.top - last.top) / gap);
                t.bbox = b;
                t.score = dets[j].confidence.clamp(0.0, 1.0);
                if let Some(e) = emb_of(j) {
                    t.push_embedding(e.clone(), fifo);
                }
            }
        }

        // 5. spawn
        let mut boxes = active_boxes(&self.tracks);
        for (j, d) in dets.iter().enumerate() {
            if used[j] || covered(&boxes, d) {
                continue;
            }
            let mut t = TracktorTrack {
                id: self.next_id,
                bbox: d.bbox,
                displacement: (0.0, 0.0),
                status: TracktorStatus::Active,
                deactivated_age: 0,
                score: d.confidence.clamp(0.0, 1.0),
                last_active: (frame, d.bbox),
                embeddings: VecDeque::new(),
                history: BTreeMap::new(),
            };
            if let Some(e) = emb_of(j) {
                t.push_embedding(e.clone(), fifo);
            }
            self.next_id += 1;
            boxes.push(d.bbox);
            self.tracks.push(t);
        }

        // 6. age deactivated tracks
        for t in &mut self.tracks {
            if t.status == TracktorStatus::Deactivated {
                t.deactivated_age += 1;
                if t.deactivated_age > cfg.reid_patience {
                    t.status = TracktorStatus::Dead;
                }
            }
        }
        self.tracks.retain(|t| t.status != TracktorStatus::Dead);

        let mut outputs = Vec::new();
        for t in &mut self.tracks {
            if t.status == TracktorStatus::Active {
                t.history.insert(frame, t.bbox);
                t.last_active = (frame, t.bbox);
                outputs.push((t.id, t.bbox));
            }
        }
        outputs.sort_by_key(|o| o.0);
        Ok(FrameResult { frame, outputs })
    }
}

fn best_detection(b: &BBox, dets: &[Detection], min_iou: f64) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, d) in dets.iter().enumerate() {
        let o = iou_unchecked(b, &d.bbox);
        if o >= min_iou && best.is_none_or(|(_, bo)| o > bo) {
            best = Some((i, o));
        }
    }
    best.map(|(i, _)| i)
}

/// Embedding slots for the detections of one frame.
fn frame_embeddings(dets: &[Detection], table: &EmbeddingTable) -> Vec<Option<Embedding>> {
    dets.iter()
        .map(|d| d.embedding_key.and_then(|k| table.get(&k)).cloned())
        .collect()
}

/// Runs Tracktor-lite over every frame of `sequence`.
///
/// Frames missing from `warps` use the identity warp. Detections look up
/// their embedding through [`Detection::embedding_key`].
pub fn tracktor_run<R: Regressor>(
    config: &TracktorConfig,
    regressor: R,
    sequence: &Sequence,
    warps: Option<&WarpTable>,
    embeddings: Option<&EmbeddingTable>,
) -> Result<Vec<Trajectory>> {
    let mut tracker = TracktorTracker::new(*config, regressor)?;
    let mut frames = Vec::with_capacity(sequence.num_frames() as usize);
    for (frame, dets) in sequence.iter() {
        let warp = warps.map(|w| w.get(&frame).copied().unwrap_or(AffineWarp::IDENTITY));
        let embs = embeddings.map(|table| frame_embeddings(dets, table));
        let input = FrameInput {
            detections: dets,
            warp: warp.as_ref(),
            embeddings: embs.as_deref(),
        };
        frames.push(tracker.step(frame, input)?);
    }
    Ok(collect_trajectories(frames))
}
