//! Detections, per-frame sequences, and emitted trajectories.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::geometry::BBox;

/// A frame-stamped detector output. Frames are 1-based.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Detection {
    pub frame: u32,
    pub bbox: BBox,
    pub confidence: f64,
    /// `(frame, index within frame)` key into an embedding table.
    pub embedding_key: Option<(u32, u32)>,
}

impl Detection {
    pub fn new(frame: u32, bbox: BBox, confidence: f64) -> Self {
        Self {
            frame,
            bbox,
            confidence,
            embedding_key: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.frame == 0 {
            return Err(Error::InvalidInput("detection frame must be >= 1"));
        }
        self.bbox.validate()
    }
}

/// Detections for frames `1..=num_frames`; frames without detections are empty.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Sequence {
    num_frames: u32,
    frames: BTreeMap<u32, Vec<Detection>>,
}

impl Sequence {
    pub fn new(num_frames: u32) -> Self {
        Self {
            num_frames,
            frames: BTreeMap::new(),
        }
    }

    /// Groups detections by frame, preserving their relative order. The frame
    /// count grows to cover the largest frame seen.
    pub fn from_detections(
        num_frames: u32,
        detections: impl IntoIterator<Item = Detection>,
    ) -> Self {
        let mut seq = Self::new(num_frames);
        for d in detections {
            seq.push(d);
        }
        seq
    }

    pub fn push(&mut self, d: Detection) {
        self.num_frames = self.num_frames.max(d.frame);
        self.frames.entry(d.frame).or_default().push(d);
    }

    pub fn num_frames(&self) -> u32 {
        self.num_frames
    }

    pub fn set_num_frames(&mut self, n: u32) {
        self.num_frames = self.num_frames.max(n);
    }

    pub fn frame(&self, frame: u32) -> &[Detection] {
        self.frames.get(&frame).map_or(&[], |v| v.as_slice())
    }

    /// `(frame, detections)` for every frame in `1..=num_frames`.
    pub fn iter(&self) -> impl Iterator<Item = (u32, &[Detection])> + '_ {
        (1..=self.num_frames).map(move |f| (f, self.frame(f)))
    }

    pub fn len(&self) -> usize {
        self.frames.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// A finalized identity: one box per frame, frames ascending.
#[derive(Debug, Clone, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Trajectory {
    pub id: u32,
    pub boxes: BTreeMap<u32, BBox>,
}

impl Trajectory {
    pub fn new(id: u32) -> Self {
        Self {
            id,
            boxes: BTreeMap::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.boxes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.boxes.is_empty()
    }

    pub fn get(&self, frame: u32) -> Option<&BBox> {
        self.boxes.get(&frame)
    }
}

/// Per-frame tracker output.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FrameResult {
    pub frame: u32,
    pub outputs: Vec<(u32, BBox)>,
}

/// Groups per-frame outputs by id into trajectories sorted by id.
pub fn collect_trajectories<I>(frames: I) -> Vec<Trajectory>
where
    I: IntoIterator<Item = FrameResult>,
{
    let mut by_id: BTreeMap<u32, Trajectory> = BTreeMap::new();
    for fr in frames {
        for (id, b) in fr.outputs {
            by_id
                .entry(id)
                .or_insert_with(|| Trajectory::new(id))
                .boxes
                .insert(fr.frame, b);
        }
    }
    by_id.into_values().collect()
}

/// Maximum frame index covered by any trajectory.
pub fn last_frame(trajectories: &[Trajectory]) -> u32 {
    trajectories
        .iter()
        .filter_map(|t| t.boxes.keys().next_back().copied())
        .max()
        .unwrap_or(0)
}
