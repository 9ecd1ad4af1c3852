//! Rearranging the Riemann-sum defect of an arbitrary partition into
//! dyadic-level residuals.
//!
//! The points of `[t_0, t_N]` are distributed over the dyadic cells of
//! that interval, half-open except for the last one which is closed. When
//! both children of a cell receive points, the cell contributes
//! `R = A_{s1,s2} + A_{s2,s3} + A_{s3,s4} - A_{s1,s4}` with `s1, s2` the
//! extreme points of the left child and `s3, s4` those of the right one.
//! Cells where a child is empty have `R = 0` and are not listed.

use super::Germ;
use crate::error::{Error, Result};
use crate::grid::Partition;
use crate::stats::pairwise_sum;

#[derive(Clone, Debug, PartialEq)]
pub struct Quadruple {
    pub level: u32,
    pub cell: u64,
    /// Positions in the input point list.
    pub members: [usize; 4],
    pub times: [f64; 4],
}

#[derive(Clone, Debug, Default)]
pub struct Allocation {
    /// `levels[n]` holds the nontrivial quadruples of level `n`.
    pub levels: Vec<Vec<Quadruple>>,
}

impl Allocation {
    pub fn quadruples(&self) -> impl Iterator<Item = &Quadruple> {
        self.levels.iter().flatten()
    }
}

const MAX_LEVEL: u32 = 1100;

pub fn dyadic_allocate(points: &[f64]) -> Result<Allocation> {
    if points.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::Ordering("allocation points must be strictly increasing".into()));
    }
    let mut out = Allocation::default();
    if points.len() < 3 {
        return Ok(out);
    }
    let (s, t) = (points[0], points[points.len() - 1]);
    // (level, cell index, member range)
    let mut stack = vec![(0u32, 0u64, 0usize, points.len())];
    while let Some((n, i, lo, hi)) = stack.pop() {
        if hi - lo < 2 {
            continue;
        }
        if n >= MAX_LEVEL {
            return Err(Error::Domain("allocation points cannot be separated in floating point".into()));
        }
        let mid = s + (t - s) * ((2 * i + 1) as f64 * 0.5f64.powi(n as i32 + 1));
        let split = lo + points[lo..hi].partition_point(|&x| x < mid);
        if split > lo && split < hi {
            let members = [lo, split - 1, split, hi - 1];
            if out.levels.len() <= n as usize {
                out.levels.resize(n as usize + 1, Vec::new());
            }
            out.levels[n as usize].push(Quadruple { level: n, cell: i, members, times: members.map(|k| points[k]) });
        }
        stack.push((n + 1, 2 * i + 1, split, hi));
        stack.push((n + 1, 2 * i, lo, split));
    }
    for l in &mut out.levels {
        l.sort_by_key(|q| q.cell);
    }
    Ok(out)
}

/// Both sides of the allocation identity for every path.
#[derive(Clone, Debug)]
pub struct AllocationCheck {
    /// `Σ A_{t_i,t_{i+1}} - A_{t_0,t_N}`, `[path][component]`.
    pub defect: Vec<f64>,
    /// `Σ_n Σ_i R^n_i`.
    pub allocated: Vec<f64>,
    /// `max |defect - allocated| / scale` with `scale` the sum of the
    /// absolute values of all germ evaluations involved.
    pub max_relative_error: f64,
}

pub fn allocation_check(germ: &dyn Germ, partition: &Partition) -> Result<AllocationCheck> {
    if partition.grid() != germ.grid() {
        return Err(Error::GridMismatch("partition and germ use different grids".into()));
    }
    let idx = partition.indices();
    let alloc = dyadic_allocate(&partition.times())?;
    let d = germ.out_dim();
    let np = germ.n_paths();
    let mut defect = vec![0.0; np * d];
    let mut allocated = vec![0.0; np * d];
    let mut scale = vec![0.0; np * d];
    let mut buf = vec![0.0; np * d];
    let n = idx.len() - 1;
    let mut cells: Vec<Vec<f64>> = Vec::with_capacity(n);
    for (s, t) in partition.cells() {
        germ.eval_all(s, t, &mut buf);
        cells.push(buf.clone());
    }
    germ.eval_all(idx[0], idx[n], &mut buf);
    for k in 0..np * d {
        let terms: Vec<f64> = cells.iter().map(|c| c[k]).collect();
        defect[k] = pairwise_sum(&terms) - buf[k];
        scale[k] = terms.iter().map(|x| x.abs()).sum::<f64>() + buf[k].abs();
    }
    let mut r = vec![0.0; np * d];
    for q in alloc.quadruples() {
        let [a, b, c, e] = q.members.map(|m| idx[m]);
        for (s, t, sign) in [(a, b, 1.0), (b, c, 1.0), (c, e, 1.0), (a, e, -1.0)] {
            germ.eval_all(s, t, &mut r);
            for k in 0..np * d {
                allocated[k] += sign * r[k];
                scale[k] += r[k].abs();
            }
        }
    }
    let max_relative_error = (0..np * d)
        .map(|k| (defect[k] - allocated[k]).abs() / scale[k].max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max);
    Ok(AllocationCheck { defect, allocated, max_relative_error })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::TimeGrid;
    use crate::sewing::testing::ToyGerm;
    use proptest::prelude::*;

    #[test]
    fn two_points_give_nothing() {
        assert!(dyadic_allocate(&[0.0, 1.0]).unwrap().quadruples().next().is_none());
    }

    #[test]
    fn dyadic_points_give_midpoint_splittings() {
        let pts: Vec<f64> = (0..=4).map(|k| k as f64 / 4.0).collect();
        let a = dyadic_allocate(&pts).unwrap();
        // Level 0 splits at 1/2 into {0, 1/4} and {1/2, 3/4, 1}.
        assert_eq!(a.levels[0][0].times, [0.0, 0.25, 0.5, 1.0]);
        // Level 1: left cell splits {0} | {1/4}, right cell [1/2, 1] into {1/2} | {3/4, 1}.
        assert_eq!(a.levels[1][0].times, [0.0, 0.0, 0.25, 0.25]);
        assert_eq!(a.levels[1][1].times, [0.5, 0.5, 0.75, 1.0]);
        assert_eq!(a.levels[2][0].times, [0.75, 0.75, 1.0, 1.0]);
    }

    proptest! {
        #[test]
        fn identity_holds_for_random_partitions(
            picks in proptest::collection::btree_set(1usize..63, 1..20),
            vals in proptest::collection::vec(-3f64..3.0, 65),
        ) {
            let grid = TimeGrid::new(0.0, 1.0, 64).unwrap();
            let mut idx: Vec<usize> = vec![0];
            idx.extend(picks);
            idx.push(64);
            let p = Partition::new(grid, idx).unwrap();
            let g = ToyGerm { grid, x: vec![vals], c: 0.7 };
            let c = allocation_check(&g, &p).unwrap();
            prop_assert!(c.max_relative_error < 1e-12, "{}", c.max_relative_error);
        }

        #[test]
        fn quadruples_are_ordered_and_levels_finite(
            pts in proptest::collection::btree_set(0u32..10_000, 2..40)
        ) {
            let pts: Vec<f64> = pts.into_iter().map(|k| k as f64 / 7.0).collect();
            let a = dyadic_allocate(&pts).unwrap();
            prop_assert!(a.levels.len() < 64);
            for q in a.quadruples() {
                prop_assert!(q.times[0] <= q.times[1] && q.times[1] < q.times[2] && q.times[2] <= q.times[3]);
            }
        }
    }
}
