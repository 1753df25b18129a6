//! Box regressors: stand-ins for a detector's regression head.

use alloc::vec::Vec;

use crate::geometry::{iou_unchecked, BBox};
use crate::types::{Detection, Sequence, Trajectory};

/// Outcome of regressing a track box into the current frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Regression {
    pub bbox: BBox,
    /// Objectness score in `[0, 1]`.
    pub score: f64,
    /// Index of the current-frame detection backing this box, when known.
    pub detection: Option<usize>,
}

/// Moves a (motion-shifted) box from frame `t - 1` to frame `t`.
/// `None` means the target is lost.
pub trait Regressor {
    fn regress(&self, prev_box: &BBox, frame: u32, detections: &[Detection]) -> Option<Regression>;
}

impl<R: Regressor + ?Sized> Regressor for &R {
    fn regress(&self, prev_box: &BBox, frame: u32, detections: &[Detection]) -> Option<Regression> {
        (**self).regress(prev_box, frame, detections)
    }
}

impl<R: Regressor + ?Sized> Regressor for alloc::boxed::Box<R> {
    fn regress(&self, prev_box: &BBox, frame: u32, detections: &[Detection]) -> Option<Regression> {
        (**self).regress(prev_box, frame, detections)
    }
}

/// Index and IOU of the best-overlapping candidate; ties keep the lowest index.
fn best_overlap(prev_box: &BBox, candidates: &[Detection]) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (i, d) in candidates.iter().enumerate() {
        let o = iou_unchecked(prev_box, &d.bbox);
        if o > 0.0 && best.is_none_or(|(_, b)| o > b) {
            best = Some((i, o));
        }
    }
    best
}

/// Snaps to the current-frame detection that best overlaps the box.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SnapRegressor {
    pub min_iou: f64,
}

impl Default for SnapRegressor {
    fn default() -> Self {
        Self { min_iou: 0.4 }
    }
}

impl Regressor for SnapRegressor {
    fn regress(
        &self,
        prev_box: &BBox,
        _frame: u32,
        detections: &[Detection],
    ) -> Option<Regression> {
        let (i, o) = best_overlap(prev_box, detections)?;
        (o >= self.min_iou).then(|| Regression {
            bbox: detections[i].bbox,
            score: detections[i].confidence.clamp(0.0, 1.0),
            detection: Some(i),
        })
    }
}

/// Snaps to a separate per-frame stream of regression proposals (for
/// example, boxes precomputed by an external regression head).
#[derive(Debug, Clone, PartialEq)]
pub struct ProposalRegressor {
    pub proposals: Sequence,
    pub min_iou: f64,
}

impl Regressor for ProposalRegressor {
    fn regress(&self, prev_box: &BBox, frame: u32, detections: &[Detection]) -> Option<Regression> {
        let candidates = self.proposals.frame(frame);
        let (i, o) = best_overlap(prev_box, candidates)?;
        if o < self.min_iou {
            return None;
        }
        let bbox = candidates[i].bbox;
        let detection = best_overlap(&bbox, detections)
            .filter(|&(_, o)| o >= 0.5)
            .map(|(j, _)| j);
        Some(Regression {
            bbox,
            score: candidates[i].confidence.clamp(0.0, 1.0),
            detection,
        })
    }
}

/// Test double that regresses to ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleRegressor {
    pub gt: Vec<Trajectory>,
}

impl Regressor for OracleRegressor {
    fn regress(&self, prev_box: &BBox, frame: u32, detections: &[Detection]) -> Option<Regression> {
        let mut best: Option<(&Trajectory, f64)> = None;
        for g in &self.gt {
            let Some(prev) = frame.checked_sub(1).and_then(|f| g.get(f)) else {
                continue;
            };
            let o = iou_unchecked(prev_box, prev);
            let better = match best {
                None => o > 0.0,
                Some((b, bo)) => o > bo || (o == bo && g.id < b.id),
            };
            if better {
                best = Some((g, o));
            }
        }
        let (g, _) = best?;
        let bbox = *g.get(frame)?;
        let detection = best_overlap(&bbox, detections)
            .filter(|&(_, o)| o >= 0.5)
            .map(|(j, _)| j);
        Some(Regression {
            bbox,
            score: 1.0,
            detection,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn d(l: f64, conf: f64) -> Detection {
        Detection::new(1, BBox::new(l, 0.0, 10.0, 10.0), conf)
    }

    #[test]
    fn snap_examples() {
        let snap = SnapRegressor::default();
        let prev = BBox::new(0.0, 0.0, 10.0, 10.0);
        let r = snap.regress(&prev, 1, &[d(0.0, 0.7)]).unwrap();
        assert_eq!(r.bbox, prev);
        assert_eq!(r.score, 0.7);
        assert!(snap.regress(&prev, 1, &[d(50.0, 0.9)]).is_none());
        assert!(snap.regress(&prev, 1, &[]).is_none());
        // shifts of 10/9 and 10/3 px give IOU 0.8 and 0.5
        let a = d(10.0 / 9.0, 0.9);
        let b = d(10.0 / 3.0, 0.9);
        assert!((iou_unchecked(&prev, &a.bbox) - 0.8).abs() < 1e-12);
        assert!((iou_unchecked(&prev, &b.bbox) - 0.5).abs() < 1e-12);
        let r = snap.regress(&prev, 1, &[b, a]).unwrap();
        assert_eq!(r.detection, Some(1));
        let clamped = snap.regress(&prev, 1, &[d(0.0, 1.7)]).unwrap();
        assert_eq!(clamped.score, 1.0);
    }

    fn gt_track(id: u32, frames: &[(u32, f64)]) -> Trajectory {
        let mut t = Trajectory::new(id);
        for &(f, l) in frames {
            t.boxes.insert(f, BBox::new(l, 0.0, 10.0, 10.0));
        }
        t
    }

    #[test]
    fn oracle_examples() {
        let oracle = OracleRegressor {
            gt: vec![gt_track(1, &[(1, 0.0), (2, 2.0)]), gt_track(2, &[(1, 4.0)])],
        };
        let prev = BBox::new(0.0, 0.0, 10.0, 10.0);
        assert_eq!(
            oracle.regress(&prev, 2, &[]).unwrap().bbox,
            BBox::new(2.0, 0.0, 10.0, 10.0)
        );
        // identity 2 is the better overlap but is absent at frame 2
        let near_two = BBox::new(4.0, 0.0, 10.0, 10.0);
        assert!(oracle.regress(&near_two, 2, &[]).is_none());
        // equidistant from both identities: smaller id wins
        let mid = BBox::new(2.0, 0.0, 10.0, 10.0);
        assert_eq!(oracle.regress(&mid, 2, &[]).unwrap().bbox.left, 2.0);
        // a clearly better overlap with identity 2 beats identity 1
        let oracle = OracleRegressor {
            gt: vec![
                gt_track(1, &[(1, 0.0), (2, 0.0)]),
                gt_track(2, &[(1, 4.0), (2, 9.0)]),
            ],
        };
        assert_eq!(
            oracle
                .regress(&BBox::new(3.0, 0.0, 10.0, 10.0), 2, &[])
                .unwrap()
                .bbox
                .left,
            9.0
        );
    }

    #[test]
    fn proposal_regressor_uses_its_own_stream() {
        let mut proposals = Sequence::new(2);
        proposals.push(Detection::new(2, BBox::new(1.0, 0.0, 10.0, 10.0), 0.8));
        let reg = ProposalRegressor {
            proposals,
            min_iou: 0.4,
        };
        let prev = BBox::new(0.0, 0.0, 10.0, 10.0);
        let r = reg.regress(&prev, 2, &[]).unwrap();
        assert_eq!(r.bbox.left, 1.0);
        assert_eq!(r.detection, None);
        assert!(reg.regress(&prev, 1, &[]).is_none());
    }
}
