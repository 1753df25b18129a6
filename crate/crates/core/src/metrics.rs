//! CLEAR-MOT counts (FP, FN, ID switches), MT/ML coverage, and IDF1.
//!
//! Frame-level correspondence follows the CLEAR protocol: a ground-truth
//! identity keeps its last matched prediction while the pair still overlaps
//! at the threshold; remaining boxes are matched by min-cost assignment on
//! `1 - IOU`. IDF1 uses one global identity-level assignment.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

use crate::assignment::{solve_hungarian, CostMatrix};
use crate::error::{Error, Result};
use crate::geometry::iou_unchecked;
use crate::types::Trajectory;

pub const DEFAULT_IOU_THRESHOLD: f64 = 0.5;
pub const MOSTLY_TRACKED: f64 = 0.8;
pub const MOSTLY_LOST: f64 = 0.2;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ClearMotCounts {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
    pub idsw: u64,
    pub num_gt: u64,
}

/// Raw per-sequence counts from which every reported metric is derived.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MetricsCounts {
    pub clear: ClearMotCounts,
    pub mt: u64,
    pub ml: u64,
    pub num_gt_ids: u64,
    pub idtp: u64,
    pub idfp: u64,
    pub idfn: u64,
    pub time_s: f64,
}

/// One row of a results table. Ratios are percentages.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MetricsReport {
    pub mota: f64,
    pub idf1: f64,
    pub rcll: f64,
    pub prcn: f64,
    pub mt: u64,
    pub ml: u64,
    pub fp: u64,
    #[cfg_attr(feature = "serde", serde(rename = "fn"))]
    pub fn_: u64,
    pub idsw: u64,
    pub time_s: f64,
}

fn percent(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        100.0 * num / den
    } else {
        0.0
    }
}

impl MetricsCounts {
    /// Derived ratios. Empty denominators yield 0.
    pub fn report(&self) -> MetricsReport {
        let c = &self.clear;
        let errors = (c.fp + c.fn_ + c.idsw) as f64;
        MetricsReport {
            mota: if c.num_gt > 0 {
                100.0 * (1.0 - errors / c.num_gt as f64)
            } else {
                0.0
            },
            idf1: percent(
                2.0 * self.idtp as f64,
                (2 * self.idtp + self.idfp + self.idfn) as f64,
            ),
            rcll: percent(c.tp as f64, (c.tp + c.fn_) as f64),
            prcn: percent(c.tp as f64, (c.tp + c.fp) as f64),
            mt: self.mt,
            ml: self.ml,
            fp: c.fp,
            fn_: c.fn_,
            idsw: c.idsw,
            time_s: self.time_s,
        }
    }
}

/// Frame → (id, box) index of a set of trajectories.
fn by_frame(tracks: &[Trajectory]) -> BTreeMap<u32, Vec<(u32, crate::geometry::BBox)>> {
    let mut out: BTreeMap<u32, Vec<_>> = BTreeMap::new();
    for t in tracks {
        for (&f, b) in &t.boxes {
            out.entry(f).or_default().push((t.id, *b));
        }
    }
    for v in out.values_mut() {
        v.sort_by_key(|e| e.0);
    }
    out
}

/// CLEAR-MOT correspondence with per-identity coverage.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ClearMotDetail {
    pub counts: ClearMotCounts,
    /// GT id → (matched frames, total frames).
    pub coverage: BTreeMap<u32, (u64, u64)>,
    /// Per frame, matched `(gt id, pred id)` pairs.
    pub matches: BTreeMap<u32, Vec<(u32, u32)>>,
}

pub fn clear_mot_detail(gt: &[Trajectory], pred: &[Trajectory], iou_thresh: f64) -> ClearMotDetail {
    let gt_frames = by_frame(gt);
    let pred_frames = by_frame(pred);
    let frames: BTreeSet<u32> = gt_frames
        .keys()
        .chain(pred_frames.keys())
        .copied()
        .collect();
    let empty = Vec::new();

    let mut detail = ClearMotDetail::default();
    for t in gt {
        detail.coverage.insert(t.id, (0, t.len() as u64));
    }
    let mut last_match: BTreeMap<u32, u32> = BTreeMap::new();
    let c = &mut detail.counts;

    for f in frames {
        let g = gt_frames.get(&f).unwrap_or(&empty);
        let p = pred_frames.get(&f).unwrap_or(&empty);
        c.num_gt += g.len() as u64;
        let mut g_used = alloc::vec![false; g.len()];
        let mut p_used = alloc::vec![false; p.len()];
        let mut pairs: Vec<(usize, usize)> = Vec::new();

        // carry over still-valid correspondences
        for (gi, (gid, gb)) in g.iter().enumerate() {
            let Some(&pid) = last_match.get(gid) else {
                continue;
            };
            if let Some(pi) = p.iter().position(|(id, _)| *id == pid) {
                if !p_used[pi] && iou_unchecked(gb, &p[pi].1) >= iou_thresh {
                    g_used[gi] = true;
                    p_used[pi] = true;
                    pairs.push((gi, pi));
                }
            }
        }

        // match the rest
        let g_rest: Vec<usize> = (0..g.len()).filter(|&i| !g_used[i]).collect();
        let p_rest: Vec<usize> = (0..p.len()).filter(|&i| !p_used[i]).collect();
        if !g_rest.is_empty() && !p_rest.is_empty() {
            let forbidden = g_rest.len().min(p_rest.len()) as f64 + 1.0;
            let cost = CostMatrix::from_fn(g_rest.len(), p_rest.len(), |r, col| {
                let o = iou_unchecked(&g[g_rest[r]].1, &p[p_rest[col]].1);
                if o >= iou_thresh {
                    1.0 - o
                } else {
                    forbidden
                }
            })
            .and_then(|m| solve_hungarian(&m.with_forbidden(forbidden)))
            .expect("IOU costs are finite");
            for (r, col) in cost.pairs {
                pairs.push((g_rest[r], p_rest[col]));
            }
        }

        let mut frame_matches = Vec::with_capacity(pairs.len());
        for &(gi, pi) in &pairs {
            let (gid, pid) = (g[gi].0, p[pi].0);
            if let Some(prev) = last_match.insert(gid, pid) {
                if prev != pid {
                    c.idsw += 1;
                }
            }
            if let Some(cov) = detail.coverage.get_mut(&gid) {
                cov.0 += 1;
            }
            frame_matches.push((gid, pid));
        }
        frame_matches.sort_unstable();
        c.tp += pairs.len() as u64;
        c.fn_ += (g.len() - pairs.len()) as u64;
        c.fp += (p.len() - pairs.len()) as u64;
        if !frame_matches.is_empty() {
            detail.matches.insert(f, frame_matches);
        }
    }
    detail
}

pub fn clear_mot(gt: &[Trajectory], pred: &[Trajectory], iou_thresh: f64) -> ClearMotCounts {
    clear_mot_detail(gt, pred, iou_thresh).counts
}

/// Mostly-tracked and mostly-lost GT identity counts.
pub fn mt_ml(gt: &[Trajectory], pred: &[Trajectory], iou_thresh: f64) -> (u64, u64) {
    mt_ml_from_coverage(&clear_mot_detail(gt, pred, iou_thresh).coverage)
}

fn mt_ml_from_coverage(coverage: &BTreeMap<u32, (u64, u64)>) -> (u64, u64) {
    let (mut mt, mut ml) = (0, 0);
    for &(matched, total) in coverage.values() {
        if total == 0 {
            continue;
        }
        let ratio = matched as f64 / total as f64;
        if ratio >= MOSTLY_TRACKED {
            mt += 1;
        } else if ratio <= MOSTLY_LOST {
            ml += 1;
        }
    }
    (mt, ml)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct IdCounts {
    pub idtp: u64,
    pub idfp: u64,
    pub idfn: u64,
}

impl IdCounts {
    pub fn idf1(&self) -> f64 {
        percent(
            2.0 * self.idtp as f64,
            (2 * self.idtp + self.idfp + self.idfn) as f64,
        )
    }
}

/// Frames in which a GT identity and a predicted identity overlap at the threshold.
pub(crate) fn identity_overlaps(
    gt: &[Trajectory],
    pred: &[Trajectory],
    iou_thresh: f64,
) -> Vec<Vec<u64>> {
    gt.iter()
        .map(|g| {
            pred.iter()
                .map(|p| {
                    g.boxes
                        .iter()
                        .filter(|(f, gb)| {
                            p.get(**f)
                                .is_some_and(|pb| iou_unchecked(gb, pb) >= iou_thresh)
                        })
                        .count() as u64
                })
                .collect()
        })
        .collect()
}

/// Global identity matching for IDF1.
///
/// Rows are GT identities plus one dummy per prediction; columns are
/// predictions plus one dummy per GT identity. A real pair costs the frames
/// it fails to explain (IDFN + IDFP); pairing with a dummy costs the whole
/// trajectory length.
pub fn id_counts(gt: &[Trajectory], pred: &[Trajectory], iou_thresh: f64) -> IdCounts {
    let (ng, np) = (gt.len(), pred.len());
    let total_gt: u64 = gt.iter().map(|t| t.len() as u64).sum();
    let total_pred: u64 = pred.iter().map(|t| t.len() as u64).sum();
    if ng == 0 || np == 0 {
        return IdCounts {
            idtp: 0,
            idfp: total_pred,
            idfn: total_gt,
        };
    }
    let overlaps = identity_overlaps(gt, pred, iou_thresh);
    let n = ng + np;
    let forbidden = (total_gt + total_pred + 1) as f64;
    let costs = CostMatrix::from_fn(n, n, |r, c| match (r < ng, c < np) {
        (true, true) => (gt[r].len() as u64 + pred[c].len() as u64 - 2 * overlaps[r][c]) as f64,
        (true, false) => {
            if c - np == r {
                gt[r].len() as f64
            } else {
                forbidden
            }
        }
        (false, true) => {
            if r - ng == c {
                pred[c].len() as f64
            } else {
                forbidden
            }
        }
        (false, false) => 0.0,
    })
    .expect("finite costs")
    .with_forbidden(forbidden);
    let a = solve_hungarian(&costs).expect("finite costs");
    let idtp: u64 = a
        .pairs
        .iter()
        .filter(|&&(r, c)| r < ng && c < np)
        .map(|&(r, c)| overlaps[r][c])
        .sum();
    IdCounts {
        idtp,
        idfp: total_pred - idtp,
        idfn: total_gt - idtp,
    }
}

pub fn idf1(gt: &[Trajectory], pred: &[Trajectory], iou_thresh: f64) -> f64 {
    id_counts(gt, pred, iou_thresh).idf1()
}

/// Every count for one sequence. `time_s` is carried through unchanged.
pub fn evaluate(
    gt: &[Trajectory],
    pred: &[Trajectory],
    iou_thresh: f64,
    time_s: f64,
) -> Result<MetricsCounts> {
    if !(iou_thresh > 0.0 && iou_thresh <= 1.0) {
        return Err(Error::InvalidInput("iou threshold must lie in (0, 1]"));
    }
    for t in gt.iter().chain(pred) {
        for b in t.boxes.values() {
            b.validate()?;
        }
    }
    let detail = clear_mot_detail(gt, pred, iou_thresh);
    let (mt, ml) = mt_ml_from_coverage(&detail.coverage);
    let ids = id_counts(gt, pred, iou_thresh);
    Ok(MetricsCounts {
        clear: detail.counts,
        mt,
        ml,
        num_gt_ids: gt.len() as u64,
        idtp: ids.idtp,
        idfp: ids.idfp,
        idfn: ids.idfn,
        time_s,
    })
}

/// Pools raw counts across sequences and recomputes the ratios from the sums.
pub fn aggregate(counts: &[MetricsCounts]) -> Result<(MetricsCounts, MetricsReport)> {
    if counts.is_empty() {
        return Err(Error::InvalidInput("nothing to aggregate"));
    }
    let mut total = MetricsCounts::default();
    for c in counts {
        total.clear.tp += c.clear.tp;
        total.clear.fp += c.clear.fp;
        total.clear.fn_ += c.clear.fn_;
        total.clear.idsw += c.clear.idsw;
        total.clear.num_gt += c.clear.num_gt;
        total.mt += c.mt;
        total.ml += c.ml;
        total.num_gt_ids += c.num_gt_ids;
        total.idtp += c.idtp;
        total.idfp += c.idfp;
        total.idfn += c.idfn;
        total.time_s += c.time_s;
    }
    Ok((total, total.report()))
}
