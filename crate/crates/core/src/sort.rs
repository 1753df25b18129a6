//! SORT: Kalman prediction, IOU + Hungarian association, gated track birth,
//! and deletion after `t_lost` frames without a match.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::assignment::{gate_by_min_iou, solve_hungarian, CostMatrix};
use crate::error::{Error, Result};
use crate::geometry::{iou_unchecked, BBox};
use crate::kalman::{KalmanConfig, KalmanFilter, KalmanState};
use crate::types::{collect_trajectories, Detection, FrameResult, Sequence, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SortConfig {
    /// Association gate; also the birth gate for unmatched detections.
    pub iou_min: f64,
    /// A track dies once it has gone more than this many frames unmatched.
    pub t_lost: u32,
    /// Successful updates required before a track is reported.
    pub min_hits: u32,
    /// Report tentative tracks while the sequence is within its first `min_hits` frames.
    pub warmup_reporting: bool,
    pub kalman: KalmanConfig,
}

impl Default for SortConfig {
    fn default() -> Self {
        Self {
            iou_min: 0.3,
            t_lost: 1,
            min_hits: 3,
            warmup_reporting: true,
            kalman: KalmanConfig::default(),
        }
    }
}

impl SortConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.iou_min) {
            return Err(Error::Config("iou_min must lie in [0, 1]"));
        }
        if self.t_lost < 1 {
            return Err(Error::Config("t_lost must be at least 1"));
        }
        if self.min_hits < 1 {
            return Err(Error::Config("min_hits must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrackStatus {
    Tentative,
    Active,
    Dead,
}

#[derive(Debug, Clone)]
pub struct Track {
    pub id: u32,
    pub motion: KalmanState,
    pub hits: u32,
    pub age_since_update: u32,
    pub history: BTreeMap<u32, BBox>,
    pub status: TrackStatus,
}

/// Stateful SORT instance for one sequence.
#[derive(Debug, Clone)]
pub struct SortTracker {
    config: SortConfig,
    filter: KalmanFilter,
    tracks: Vec<Track>,
    next_id: u32,
    last_frame: Option<u32>,
    steps: u32,
}

impl SortTracker {
    pub fn new(config: SortConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config,
            filter: KalmanFilter::new(config.kalman),
            tracks: Vec::new(),
            next_id: 1,
            last_frame: None,
            steps: 0,
        })
    }

    pub fn config(&self) -> &SortConfig {
        &self.config
    }

    /// Live (tentative or active) tracks.
    pub fn tracks(&self) -> &[Track] {
        &self.tracks
    }

    pub fn step(&mut self, frame: u32, detections: &[Detection]) -> Result<FrameResult> {
        if let Some(last) = self.last_frame {
            if frame <= last {
                return Err(Error::Sequencing { frame, last });
            }
        }
        if frame == 0 {
            return Err(Error::InvalidInput("frames are 1-based"));
        }
        for d in detections {
            d.bbox.validate()?;
        }
        self.last_frame = Some(frame);
        self.steps += 1;

        // 1. predict
        let mut predicted: Vec<Option<BBox>> = Vec::with_capacity(self.tracks.len());
        for t in &mut self.tracks {
            t.motion = self.filter.predict(&t.motion);
            t.age_since_update += 1;
            predicted.push(if t.motion.is_degenerate() {
                None
            } else {
                t.motion.to_bbox().ok()
            });
        }

        // 2. associate tracks with a usable prediction
        let rows: Vec<usize> = (0..self.tracks.len())
            .filter(|&i| predicted[i].is_some())
            .collect();
        let ious: Vec<f64> = rows
            .iter()
            .flat_map(|&i| {
                let p = predicted[i].unwrap();
                detections.iter().map(move |d| iou_unchecked(&p, &d.bbox))
            })
            .collect();
        let n_det = detections.len();
        let cost = CostMatrix::new(rows.len(), n_det, ious.iter().map(|x| 1.0 - x).collect())?;
        let matched = solve_hungarian(&cost)?;
        let pair_ious: Vec<f64> = matched
            .pairs
            .iter()
            .map(|&(r, c)| ious[r * n_det + c])
            .collect();
        let gated = gate_by_min_iou(&matched, &pair_ious, self.config.iou_min);

        // 3. update matched tracks
        for &(r, c) in &gated.pairs {
            let t = &mut self.tracks[rows[r]];
            let z = &detections[c].bbox;
            t.motion = self.filter.update(&t.motion, z)?;
            t.hits += 1;
            t.age_since_update = 0;
            if t.hits >= self.config.min_hits {
                t.status = TrackStatus::Active;
            }
            let b = t.motion.to_bbox().unwrap_or(*z);
            t.history.insert(frame, b);
        }

        // 4. birth: unmatched detections that no predicted box covers at iou_min
        for &c in &gated.unmatched_cols {
            let best = (0..rows.len())
                .map(|r| ious[r * n_det + c])
                .fold(0.0, f64::max);
            let uncovered = best < self.config.iou_min || best == 0.0;
            if !uncovered {
                continue;
            }
            let b = detections[c].bbox;
            let mut history = BTreeMap::new();
            history.insert(frame, b);
            self.tracks.push(Track {
                id: self.next_id,
                motion: self.filter.init_from_bbox(&b)?,
                hits: 1,
                age_since_update: 0,
                history,
                status: if self.config.min_hits <= 1 {
                    TrackStatus::Active
                } else {
                    TrackStatus::Tentative
                },
            });
            self.next_id += 1;
        }

        // 5. deletion
        let t_lost = self.config.t_lost;
        for t in &mut self.tracks {
            if t.age_since_update > t_lost {
                t.status = TrackStatus::Dead;
            }
        }
        self.tracks.retain(|t| t.status != TrackStatus::Dead);

        // 6. reporting
        let warmup = self.config.warmup_reporting && self.steps <= self.config.min_hits;
        let mut outputs: Vec<(u32, BBox)> = self
            .tracks
            .iter()
            .filter(|t| t.age_since_update == 0 && (t.hits >= self.config.min_hits || warmup))
            .filter_map(|t| t.history.get(&frame).map(|b| (t.id, *b)))
            .collect();
        outputs.sort_by_key(|o| o.0);
        Ok(FrameResult { frame, outputs })
    }
}

/// Runs SORT over every frame of `sequence` and groups the output by id.
pub fn sort_run(config: &SortConfig, sequence: &Sequence) -> Result<Vec<Trajectory>> {
    let mut tracker = SortTracker::new(*config)?;
    let mut frames = Vec::with_capacity(sequence.num_frames() as usize);
    for (frame, dets) in sequence.iter() {
        frames.push(tracker.step(frame, dets)?);
    }
    Ok(collect_trajectories(frames))
}
