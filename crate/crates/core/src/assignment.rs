//! Min-cost linear assignment: the Hungarian method, a greedy matcher, and IOU gating.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Default cost marking a forbidden pairing.
pub const DEFAULT_FORBIDDEN: f64 = 1e9;

/// Dense row-major cost matrix (rows = tracks, cols = detections).
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    rows: usize,
    cols: usize,
    costs: Vec<f64>,
    forbidden: f64,
}

impl CostMatrix {
    pub fn new(rows: usize, cols: usize, costs: Vec<f64>) -> Result<Self> {
        if costs.len() != rows * cols {
            return Err(Error::InvalidInput(
                "cost buffer length does not match shape",
            ));
        }
        if !costs.iter().all(|c| c.is_finite()) {
            return Err(Error::InvalidInput("cost matrix has a non-finite entry"));
        }
        Ok(Self {
            rows,
            cols,
            costs,
            forbidden: DEFAULT_FORBIDDEN,
        })
    }

    pub fn from_fn(
        rows: usize,
        cols: usize,
        mut f: impl FnMut(usize, usize) -> f64,
    ) -> Result<Self> {
        let mut costs = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                costs.push(f(r, c));
            }
        }
        Self::new(rows, cols, costs)
    }

    /// Entries at or above `forbidden` are never reported as matches.
    pub fn with_forbidden(mut self, forbidden: f64) -> Self {
        self.forbidden = forbidden;
        self
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn forbidden(&self) -> f64 {
        self.forbidden
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.costs[row * self.cols + col]
    }

    pub fn is_forbidden(&self, row: usize, col: usize) -> bool {
        self.get(row, col) >= self.forbidden
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Assignment {
    /// Matched `(row, col)` pairs, sorted by row.
    pub pairs: Vec<(usize, usize)>,
    pub unmatched_rows: Vec<usize>,
    pub unmatched_cols: Vec<usize>,
}

impl Assignment {
    fn from_pairs(rows: usize, cols: usize, mut pairs: Vec<(usize, usize)>) -> Self {
        pairs.sort_unstable();
        let mut row_used = vec![false; rows];
        let mut col_used = vec![false; cols];
        for &(r, c) in &pairs {
            row_used[r] = true;
            col_used[c] = true;
        }
        Self {
            pairs,
            unmatched_rows: (0..rows).filter(|&r| !row_used[r]).collect(),
            unmatched_cols: (0..cols).filter(|&c| !col_used[c]).collect(),
        }
    }

    pub fn total_cost(&self, c: &CostMatrix) -> f64 {
        self.pairs.iter().map(|&(r, col)| c.get(r, col)).sum()
    }
}

/// Exact min-cost assignment (shortest augmenting paths with potentials).
///
/// Rectangular inputs behave as if padded to square with zero-cost dummy
/// rows or columns; dummy matches and matches at forbidden cost are reported
/// as unmatched. Column scans pick the lowest index among equal candidates,
/// so the output is a deterministic function of the input.
pub fn solve_hungarian(c: &CostMatrix) -> Result<Assignment> {
    if !c.costs.iter().all(|x| x.is_finite()) {
        return Err(Error::InvalidInput("cost matrix has a non-finite entry"));
    }
    if c.rows == 0 || c.cols == 0 {
        return Ok(Assignment::from_pairs(c.rows, c.cols, Vec::new()));
    }
    let transposed = c.rows > c.cols;
    let (n, m) = if transposed {
        (c.cols, c.rows)
    } else {
        (c.rows, c.cols)
    };
    let cost = |i: usize, j: usize| if transposed { c.get(j, i) } else { c.get(i, j) };

    // 1-based arrays; index 0 is the virtual root of each augmenting tree.
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; m + 1];
    let mut owner = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=n {
        owner[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let pairs = (1..=m)
        .filter(|&j| owner[j] != 0)
        .map(|j| {
            let (i, j) = (owner[j] - 1, j - 1);
            if transposed {
                (j, i)
            } else {
                (i, j)
            }
        })
        .filter(|&(r, col)| !c.is_forbidden(r, col))
        .collect();
    Ok(Assignment::from_pairs(c.rows, c.cols, pairs))
}

/// Repeatedly takes the cheapest remaining cell, ties by `(row, col)`.
pub fn solve_greedy(c: &CostMatrix) -> Result<Assignment> {
    if !c.costs.iter().all(|x| x.is_finite()) {
        return Err(Error::InvalidInput("cost matrix has a non-finite entry"));
    }
    let mut cells: Vec<(usize, usize)> = (0..c.rows)
        .flat_map(|r| (0..c.cols).map(move |col| (r, col)))
        .filter(|&(r, col)| !c.is_forbidden(r, col))
        .collect();
    cells.sort_by(|&(r1, c1), &(r2, c2)| {
        c.get(r1, c1)
            .total_cmp(&c.get(r2, c2))
            .then(r1.cmp(&r2))
            .then(c1.cmp(&c2))
    });
    let mut row_used = vec![false; c.rows];
    let mut col_used = vec![false; c.cols];
    let mut pairs = Vec::new();
    for (r, col) in cells {
        if row_used[r] || col_used[col] {
            continue;
        }
        row_used[r] = true;
        col_used[col] = true;
        pairs.push((r, col));
    }
    Ok(Assignment::from_pairs(c.rows, c.cols, pairs))
}

/// Demotes matched pairs whose IOU is below `iou_min`.
///
/// `iou_of_pair[k]` is the IOU of `a.pairs[k]`.
pub fn gate_by_min_iou(a: &Assignment, iou_of_pair: &[f64], iou_min: f64) -> Assignment {
    assert_eq!(a.pairs.len(), iou_of_pair.len(), "one IOU per matched pair");
    let mut out = Assignment {
        pairs: Vec::with_capacity(a.pairs.len()),
        unmatched_rows: a.unmatched_rows.clone(),
        unmatched_cols: a.unmatched_cols.clone(),
    };
    for (&(r, c), &iou) in a.pairs.iter().zip(iou_of_pair) {
        if iou >= iou_min {
            out.pairs.push((r, c));
        } else {
            out.unmatched_rows.push(r);
            out.unmatched_cols.push(c);
        }
    }
    out.unmatched_rows.sort_unstable();
    out.unmatched_cols.sort_unstable();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn matrix(rows: &[&[f64]]) -> CostMatrix {
        let cols = rows.first().map_or(0, |r| r.len());
        CostMatrix::new(
            rows.len(),
            cols,
            rows.iter().flat_map(|r| r.iter().copied()).collect(),
        )
        .unwrap()
    }

    /// Minimum total cost over all matchings of size min(rows, cols).
    fn brute_force_cost(c: &CostMatrix) -> f64 {
        fn rec(c: &CostMatrix, row: usize, used: &mut Vec<bool>, skips_left: usize) -> f64 {
            if row == c.rows() {
                return 0.0;
            }
            let mut best = f64::INFINITY;
            if skips_left > 0 {
                best = rec(c, row + 1, used, skips_left - 1);
            }
            for col in 0..c.cols() {
                if !used[col] {
                    used[col] = true;
                    best = best.min(c.get(row, col) + rec(c, row + 1, used, skips_left));
                    used[col] = false;
                }
            }
            best
        }
        let skips = c.rows().saturating_sub(c.cols());
        rec(c, 0, &mut vec![false; c.cols()], skips)
    }

    fn check_partition(a: &Assignment, rows: usize, cols: usize) {
        let mut r_seen = vec![0; rows];
        let mut c_seen = vec![0; cols];
        for &(r, c) in &a.pairs {
            r_seen[r] += 1;
            c_seen[c] += 1;
        }
        for &r in &a.unmatched_rows {
            r_seen[r] += 1;
        }
        for &c in &a.unmatched_cols {
            c_seen[c] += 1;
        }
        assert!(r_seen.iter().all(|&n| n == 1));
        assert!(c_seen.iter().all(|&n| n == 1));
    }

    #[test]
    fn diagonal_optimum() {
        let c = matrix(&[&[0.0, 1.0, 1.0], &[1.0, 0.0, 1.0], &[1.0, 1.0, 0.0]]);
        let h = solve_hungarian(&c).unwrap();
        assert_eq!(h.pairs, vec![(0, 0), (1, 1), (2, 2)]);
        assert_eq!(h.total_cost(&c), 0.0);
        assert_eq!(solve_greedy(&c).unwrap(), h);
    }

    #[test]
    fn three_by_three_example() {
        let c = matrix(&[&[4.0, 1.0, 3.0], &[2.0, 0.0, 5.0], &[3.0, 2.0, 2.0]]);
        assert_eq!(brute_force_cost(&c), 5.0);
        let h = solve_hungarian(&c).unwrap();
        assert_eq!(h.pairs, vec![(0, 1), (1, 0), (2, 2)]);
        assert_eq!(h.total_cost(&c), 5.0);
    }

    #[test]
    fn greedy_is_suboptimal_here() {
        let c = matrix(&[&[0.0, 1.0], &[1.0, 100.0]]);
        let g = solve_greedy(&c).unwrap();
        assert_eq!(g.pairs, vec![(0, 0), (1, 1)]);
        assert_eq!(g.total_cost(&c), 100.0);
        let h = solve_hungarian(&c).unwrap();
        assert_eq!(h.pairs, vec![(0, 1), (1, 0)]);
        assert_eq!(h.total_cost(&c), 2.0);
    }

    #[test]
    fn empty_matrices() {
        let c = CostMatrix::new(0, 3, Vec::new()).unwrap();
        for a in [solve_hungarian(&c).unwrap(), solve_greedy(&c).unwrap()] {
            assert!(a.pairs.is_empty());
            assert_eq!(a.unmatched_cols, vec![0, 1, 2]);
        }
        let c = CostMatrix::new(2, 0, Vec::new()).unwrap();
        assert_eq!(solve_hungarian(&c).unwrap().unmatched_rows, vec![0, 1]);
    }

    #[test]
    fn rejects_non_finite() {
        assert!(CostMatrix::new(1, 2, vec![0.0, f64::NAN]).is_err());
        assert!(CostMatrix::new(1, 1, vec![f64::INFINITY]).is_err());
    }

    #[test]
    fn forbidden_cells_become_unmatched() {
        let c = matrix(&[
            &[DEFAULT_FORBIDDEN, DEFAULT_FORBIDDEN],
            &[0.5, DEFAULT_FORBIDDEN],
        ]);
        let h = solve_hungarian(&c).unwrap();
        assert_eq!(h.pairs, vec![(1, 0)]);
        assert_eq!(h.unmatched_rows, vec![0]);
        assert_eq!(h.unmatched_cols, vec![1]);
        let g = solve_greedy(&c).unwrap();
        assert_eq!(g, h);
    }

    #[test]
    fn gate_examples() {
        let c = matrix(&[&[0.4, 0.9], &[0.9, 0.8]]);
        let a = solve_hungarian(&c).unwrap();
        assert_eq!(a.pairs, vec![(0, 0), (1, 1)]);
        assert_eq!(gate_by_min_iou(&a, &[0.6, 0.2], 0.0), a);
        let all = gate_by_min_iou(&a, &[1.0, 0.2], 1.0 + 1e-9);
        assert!(all.pairs.is_empty());
        assert_eq!(all.unmatched_rows, vec![0, 1]);
        let g = gate_by_min_iou(&a, &[0.6, 0.2], 0.3);
        assert_eq!(g.pairs, vec![(0, 0)]);
        assert_eq!(g.unmatched_rows, vec![1]);
        assert_eq!(g.unmatched_cols, vec![1]);
    }

    fn arb_matrix() -> impl Strategy<Value = CostMatrix> {
        (0usize..=6, 0usize..=6).prop_flat_map(|(r, c)| {
            proptest::collection::vec(0.0..10.0f64, r * c)
                .prop_map(move |v| CostMatrix::new(r, c, v).unwrap())
        })
    }

    proptest! {
        #[test]
        fn hungarian_matches_brute_force(c in arb_matrix()) {
            let h = solve_hungarian(&c).unwrap();
            check_partition(&h, c.rows(), c.cols());
            prop_assert_eq!(h.pairs.len(), c.rows().min(c.cols()));
            prop_assert!((h.total_cost(&c) - brute_force_cost(&c)).abs() < 1e-9);
        }

        #[test]
        fn hungarian_never_worse_than_greedy(c in arb_matrix()) {
            let h = solve_hungarian(&c).unwrap();
            let g = solve_greedy(&c).unwrap();
            check_partition(&g, c.rows(), c.cols());
            prop_assert!(h.total_cost(&c) <= g.total_cost(&c) + 1e-9);
            prop_assert_eq!(solve_hungarian(&c).unwrap(), h);
        }
    }
}
