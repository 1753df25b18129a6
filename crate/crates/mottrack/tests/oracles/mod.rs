//! Independent reference implementations used to check the library.
//!
//! Nothing here calls into the code under test beyond plain data types.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use mottrack_core::kalman::KalmanConfig;
use mottrack_core::{BBox, Trajectory};
use nalgebra::{SMatrix, SVector};

/// Minimum total cost of a full-cardinality matching by exhaustive search.
/// Costs are summed in ascending row order.
pub fn brute_force_assignment(costs: &[Vec<f64>]) -> f64 {
    let rows = costs.len();
    let cols = costs.first().map_or(0, Vec::len);
    if rows == 0 || cols == 0 {
        return 0.0;
    }
    let mut best = f64::INFINITY;
    let mut used = vec![false; cols];
    let mut pick = vec![usize::MAX; rows];
    let skips = rows.saturating_sub(cols);
    search(costs, 0, skips, &mut used, &mut pick, &mut best);
    best
}

fn search(
    c: &[Vec<f64>],
    row: usize,
    skips: usize,
    used: &mut [bool],
    pick: &mut [usize],
    best: &mut f64,
) {
    if row == c.len() {
        let total = pick
            .iter()
            .enumerate()
            .filter(|(_, &col)| col != usize::MAX)
            .map(|(r, &col)| c[r][col])
            .fold(0.0, |a, x| a + x);
        if total < *best {
            *best = total;
        }
        return;
    }
    for col in 0..used.len() {
        if !used[col] {
            used[col] = true;
            pick[row] = col;
            search(c, row + 1, skips, used, pick, best);
            used[col] = false;
        }
    }
    if skips > 0 {
        pick[row] = usize::MAX;
        search(c, row + 1, skips - 1, used, pick, best);
    }
}

/// Reference IOU by explicit interval arithmetic.
pub fn ref_iou(a: &BBox, b: &BBox) -> f64 {
    let ix = (a.left + a.width).min(b.left + b.width) - a.left.max(b.left);
    let iy = (a.top + a.height).min(b.top + b.height) - a.top.max(b.top);
    if ix <= 0.0 || iy <= 0.0 {
        return 0.0;
    }
    let inter = ix * iy;
    inter / (a.width * a.height + b.width * b.height - inter)
}

/// All matchings (including partial ones) between `0..n` and `0..m` that only
/// use pairs allowed by `ok`.
fn matchings(n: usize, m: usize, ok: &dyn Fn(usize, usize) -> bool) -> Vec<Vec<(usize, usize)>> {
    fn go(
        i: usize,
        n: usize,
        m: usize,
        ok: &dyn Fn(usize, usize) -> bool,
        used: &mut Vec<bool>,
        cur: &mut Vec<(usize, usize)>,
        out: &mut Vec<Vec<(usize, usize)>>,
    ) {
        if i == n {
            out.push(cur.clone());
            return;
        }
        go(i + 1, n, m, ok, used, cur, out);
        for j in 0..m {
            if !used[j] && ok(i, j) {
                used[j] = true;
                cur.push((i, j));
                go(i + 1, n, m, ok, used, cur, out);
                cur.pop();
                used[j] = false;
            }
        }
    }
    let mut out = Vec::new();
    go(0, n, m, ok, &mut vec![false; m], &mut Vec::new(), &mut out);
    out
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RefClear {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
    pub idsw: u64,
    pub num_gt: u64,
    pub mt: u64,
    pub ml: u64,
}

/// CLEAR-MOT by exhaustive per-frame search.
///
/// Each frame first keeps every GT identity's most recent partner if that
/// partner is present and still overlaps at the threshold. The remaining
/// boxes take the matching with the most pairs, then the smallest summed
/// `1 - IOU`, over every valid matching. A GT identity matched to a partner
/// other than its most recent one is an identity switch.
pub fn brute_force_clear(gt: &[Trajectory], pred: &[Trajectory], thresh: f64) -> RefClear {
    let frames: BTreeSet<u32> = gt
        .iter()
        .chain(pred)
        .flat_map(|t| t.boxes.keys().copied())
        .collect();
    let mut last: BTreeMap<u32, u32> = BTreeMap::new();
    let mut matched_frames: BTreeMap<u32, u64> = BTreeMap::new();
    let mut out = RefClear::default();
    for f in frames {
        let g: Vec<(u32, BBox)> = gt
            .iter()
            .filter_map(|t| t.get(f).map(|b| (t.id, *b)))
            .collect();
        let p: Vec<(u32, BBox)> = pred
            .iter()
            .filter_map(|t| t.get(f).map(|b| (t.id, *b)))
            .collect();
        out.num_gt += g.len() as u64;

        let mut pairs: Vec<(u32, u32)> = Vec::new();
        let mut g_left = Vec::new();
        let mut p_taken = BTreeSet::new();
        for (gid, gb) in &g {
            let kept = last.get(gid).and_then(|pid| {
                p.iter().find(|(id, pb)| {
                    id == pid && !p_taken.contains(id) && ref_iou(gb, pb) >= thresh
                })
            });
            match kept {
                Some((pid, _)) => {
                    p_taken.insert(*pid);
                    pairs.push((*gid, *pid));
                }
                None => g_left.push((*gid, *gb)),
            }
        }
        let p_left: Vec<(u32, BBox)> = p
            .iter()
            .filter(|(id, _)| !p_taken.contains(id))
            .copied()
            .collect();
        let ok = |i: usize, j: usize| ref_iou(&g_left[i].1, &p_left[j].1) >= thresh;
        let best = matchings(g_left.len(), p_left.len(), &ok)
            .into_iter()
            .map(|m| {
                let cost: f64 = m
                    .iter()
                    .map(|&(i, j)| 1.0 - ref_iou(&g_left[i].1, &p_left[j].1))
                    .sum();
                (m, cost)
            })
            .min_by(|a, b| b.0.len().cmp(&a.0.len()).then(a.1.total_cmp(&b.1)))
            .map(|(m, _)| m)
            .unwrap_or_default();
        pairs.extend(best.iter().map(|&(i, j)| (g_left[i].0, p_left[j].0)));

        for &(gid, pid) in &pairs {
            if let Some(prev) = last.insert(gid, pid) {
                if prev != pid {
                    out.idsw += 1;
                }
            }
            *matched_frames.entry(gid).or_default() += 1;
        }
        out.tp += pairs.len() as u64;
        out.fn_ += (g.len() - pairs.len()) as u64;
        out.fp += (p.len() - pairs.len()) as u64;
    }
    for t in gt.iter().filter(|t| !t.is_empty()) {
        let m = matched_frames.get(&t.id).copied().unwrap_or(0);
        // integer forms of coverage >= 0.8 and <= 0.2
        if 5 * m >= 4 * t.len() as u64 {
            out.mt += 1;
        } else if 5 * m <= t.len() as u64 {
            out.ml += 1;
        }
    }
    out
}

/// `(idtp, idfp, idfn)` by exhaustive search over global identity matchings.
pub fn brute_force_id_counts(
    gt: &[Trajectory],
    pred: &[Trajectory],
    thresh: f64,
) -> (u64, u64, u64) {
    let co = |g: &Trajectory, p: &Trajectory| {
        g.boxes
            .iter()
            .filter(|(f, gb)| p.get(**f).is_some_and(|pb| ref_iou(gb, pb) >= thresh))
            .count() as u64
    };
    let total_gt: u64 = gt.iter().map(|t| t.len() as u64).sum();
    let total_pred: u64 = pred.iter().map(|t| t.len() as u64).sum();
    let idtp = matchings(gt.len(), pred.len(), &|_, _| true)
        .into_iter()
        .map(|m| m.iter().map(|&(i, j)| co(&gt[i], &pred[j])).sum::<u64>())
        .max()
        .unwrap_or(0);
    (idtp, total_pred - idtp, total_gt - idtp)
}

pub type Mat7 = SMatrix<f64, 7, 7>;
pub type Vec7 = SVector<f64, 7>;

/// Reference noise diagonals, written out from the documented model.
fn ref_noise(mean: &Vec7, w_pos: f64, w_vel: f64) -> [f64; 7] {
    let s = mean[2].abs();
    let r = mean[3].abs();
    let root = s.sqrt();
    let stds = [
        w_pos * root,
        w_pos * root,
        2.0 * w_pos * s,
        w_pos * r,
        w_vel * root,
        w_vel * root,
        2.0 * w_vel * s,
    ];
    stds.map(|x| x * x)
}

fn ref_transition() -> Mat7 {
    let mut f = Mat7::identity();
    for i in 0..3 {
        f[(i, i + 4)] = 1.0;
    }
    f
}

/// Dense-matrix predict: `x' = F x`, `P' = F P Fᵀ + Q`.
pub fn ref_predict(cfg: &KalmanConfig, x: &Vec7, p: &Mat7) -> (Vec7, Mat7) {
    let f = ref_transition();
    let q = Mat7::from_diagonal(&Vec7::from(ref_noise(
        x,
        cfg.std_weight_position,
        cfg.std_weight_velocity,
    )));
    (f * x, f * p * f.transpose() + q)
}

/// Dense-matrix update with the textbook gain, `P' = (I - K H) P`.
pub fn ref_update(cfg: &KalmanConfig, x: &Vec7, p: &Mat7, z: &BBox) -> (Vec7, Mat7) {
    let mut h = SMatrix::<f64, 4, 7>::zeros();
    for i in 0..4 {
        h[(i, i)] = 1.0;
    }
    let w = cfg.std_weight_measurement;
    let n = ref_noise(x, w, 0.0);
    let r = SMatrix::<f64, 4, 4>::from_diagonal(&SVector::<f64, 4>::new(n[0], n[1], n[2], n[3]));
    let zv = SVector::<f64, 4>::new(
        z.left + z.width / 2.0,
        z.top + z.height / 2.0,
        z.width * z.height,
        z.width / z.height,
    );
    let s = h * p * h.transpose() + r;
    let k = p * h.transpose() * s.try_inverse().expect("innovation covariance invertible");
    let x1 = x + k * (zv - h * x);
    let p1 = (Mat7::identity() - k * h) * p;
    (x1, p1)
}

/// `|a - b| <= tol * max(1, |b|)` for every entry.
pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1.0)
}
