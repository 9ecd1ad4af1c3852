//! Germs, Riemann sums and sewing limits.
//!
//! A germ is a two-parameter family `A_{s,t}` of random vectors evaluated
//! on the grid points of a shared [`TimeGrid`], for every path of a bundle.
//! Times are passed as grid indices throughout.

mod allocation;
mod limit;

use rayon::prelude::*;

pub use allocation::{allocation_check, dyadic_allocate, Allocation, AllocationCheck, Quadruple};
pub use limit::{estimate_lm, fit_conditions, sewing_limit, ConditionFit, ConditionFitConfig, RateReport, SewingConfig, SewingLimit};

use crate::error::{Error, Result};
use crate::grid::{Partition, TimeGrid};

pub trait Germ: Sync {
    fn grid(&self) -> &TimeGrid;
    fn n_paths(&self) -> usize;
    fn out_dim(&self) -> usize;

    /// `A_{t_s, t_t}` for one path.
    fn eval(&self, path: usize, s: usize, t: usize, out: &mut [f64]);

    /// `A_{t_s, t_t}` for every path, layout `[path][component]`.
    fn eval_all(&self, s: usize, t: usize, out: &mut [f64]) {
        let d = self.out_dim();
        out.par_chunks_mut(d).enumerate().for_each(|(p, o)| self.eval(p, s, t, o));
    }

    /// Whether [`Germ::cond_eval`] is available.
    fn has_conditional(&self) -> bool {
        false
    }

    /// `E[A_{t_s, t_t} | F_{t_c}]` for `c <= s`.
    fn cond_eval(&self, _path: usize, _c: usize, _s: usize, _t: usize, _out: &mut [f64]) -> Result<()> {
        Err(Error::MissingConditional)
    }

    fn cond_eval_all(&self, c: usize, s: usize, t: usize, out: &mut [f64]) -> Result<()> {
        let d = self.out_dim();
        out.par_chunks_mut(d)
            .enumerate()
            .try_for_each(|(p, o)| self.cond_eval(p, c, s, t, o))
    }
}

fn check_order(germ: &dyn Germ, pts: &[usize]) -> Result<()> {
    if pts.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::Ordering(format!("{pts:?}")));
    }
    if pts.iter().any(|&i| i > germ.grid().n_steps) {
        return Err(Error::OffGrid(germ.grid().time(*pts.iter().max().unwrap())));
    }
    Ok(())
}

/// `δA_{s,u,t} = A_{s,t} - A_{s,u} - A_{u,t}` for one path.
pub fn delta(germ: &dyn Germ, path: usize, s: usize, u: usize, t: usize) -> Result<Vec<f64>> {
    check_order(germ, &[s, u, t])?;
    let d = germ.out_dim();
    let mut a = vec![0.0; d];
    let mut b = vec![0.0; d];
    germ.eval(path, s, t, &mut a);
    germ.eval(path, s, u, &mut b);
    a.iter_mut().zip(&b).for_each(|(x, y)| *x -= y);
    germ.eval(path, u, t, &mut b);
    a.iter_mut().zip(&b).for_each(|(x, y)| *x -= y);
    Ok(a)
}

/// `δA_{s,u,t}` for every path.
pub fn delta_all(germ: &dyn Germ, s: usize, u: usize, t: usize) -> Result<Vec<f64>> {
    check_order(germ, &[s, u, t])?;
    let len = germ.out_dim() * germ.n_paths();
    let mut a = vec![0.0; len];
    let mut b = vec![0.0; len];
    germ.eval_all(s, t, &mut a);
    germ.eval_all(s, u, &mut b);
    a.iter_mut().zip(&b).for_each(|(x, y)| *x -= y);
    germ.eval_all(u, t, &mut b);
    a.iter_mut().zip(&b).for_each(|(x, y)| *x -= y);
    Ok(a)
}

/// `E[δA_{s,u,t} | F_{t_s}]` for every path.
pub fn cond_delta_all(germ: &dyn Germ, s: usize, u: usize, t: usize) -> Result<Vec<f64>> {
    check_order(germ, &[s, u, t])?;
    let len = germ.out_dim() * germ.n_paths();
    let mut a = vec![0.0; len];
    let mut b = vec![0.0; len];
    germ.cond_eval_all(s, s, t, &mut a)?;
    germ.cond_eval_all(s, s, u, &mut b)?;
    a.iter_mut().zip(&b).for_each(|(x, y)| *x -= y);
    germ.cond_eval_all(s, u, t, &mut b)?;
    a.iter_mut().zip(&b).for_each(|(x, y)| *x -= y);
    Ok(a)
}

fn check_partition(germ: &dyn Germ, p: &Partition) -> Result<()> {
    if p.grid() != germ.grid() {
        return Err(Error::GridMismatch("partition and germ use different grids".into()));
    }
    Ok(())
}

/// `Σ A_{t_i, t_{i+1}}` over the partition for one path.
pub fn riemann_sum(germ: &dyn Germ, partition: &Partition, path: usize) -> Result<Vec<f64>> {
    check_partition(germ, partition)?;
    let d = germ.out_dim();
    let mut acc = vec![0.0; d];
    let mut buf = vec![0.0; d];
    for (s, t) in partition.cells() {
        germ.eval(path, s, t, &mut buf);
        acc.iter_mut().zip(&buf).for_each(|(a, b)| *a += b);
    }
    Ok(acc)
}

/// Riemann sums for every path, `[path][component]`.
pub fn riemann_sums(germ: &dyn Germ, partition: &Partition) -> Result<Vec<f64>> {
    check_partition(germ, partition)?;
    let len = germ.out_dim() * germ.n_paths();
    let mut acc = vec![0.0; len];
    let mut buf = vec![0.0; len];
    for (s, t) in partition.cells() {
        germ.eval_all(s, t, &mut buf);
        acc.iter_mut().zip(&buf).for_each(|(a, b)| *a += b);
    }
    Ok(acc)
}

/// Riemann sum over the level-`level` dyadic partition of `[s, t]`.
pub fn dyadic_refine(germ: &dyn Germ, s: usize, t: usize, level: u32, path: usize) -> Result<Vec<f64>> {
    riemann_sum(germ, &Partition::dyadic(*germ.grid(), s, t, level)?, path)
}

/// Dyadic Riemann sums of `[s, t]` at levels `0..=max_level`, all paths.
pub fn dyadic_sums(germ: &dyn Germ, s: usize, t: usize, max_level: u32) -> Result<Vec<Vec<f64>>> {
    (0..=max_level)
        .map(|n| riemann_sums(germ, &Partition::dyadic(*germ.grid(), s, t, n)?))
        .collect()
}

/// Riemann sum split into its martingale part `M` and its compensator `J`:
/// `M = Σ (A - E^{F_{t_i}} A)`, `J = Σ E^{F_{t_i}} A`, with `M + J = Σ A`.
#[derive(Clone, Debug)]
pub struct DoobSplit {
    pub sum: Vec<f64>,
    pub martingale: Vec<f64>,
    pub compensator: Vec<f64>,
}

pub fn doob_split(germ: &dyn Germ, partition: &Partition) -> Result<DoobSplit> {
    check_partition(germ, partition)?;
    let len = germ.out_dim() * germ.n_paths();
    let mut sum = vec![0.0; len];
    let mut mart = vec![0.0; len];
    let mut comp = vec![0.0; len];
    let mut a = vec![0.0; len];
    let mut e = vec![0.0; len];
    for (s, t) in partition.cells() {
        germ.eval_all(s, t, &mut a);
        germ.cond_eval_all(s, s, t, &mut e)?;
        for k in 0..len {
            sum[k] += a[k];
            mart[k] += a[k] - e[k];
            comp[k] += e[k];
        }
    }
    Ok(DoobSplit { sum, martingale: mart, compensator: comp })
}

#[cfg(test)]
pub(crate) mod testing {
    use super::*;

    /// `A_{s,t} = x_s (x_t - x_s) + c (t - s)` on a stored scalar path.
    pub struct ToyGerm {
        pub grid: TimeGrid,
        pub x: Vec<Vec<f64>>,
        pub c: f64,
    }

    impl Germ for ToyGerm {
        fn grid(&self) -> &TimeGrid {
            &self.grid
        }
        fn n_paths(&self) -> usize {
            self.x.len()
        }
        fn out_dim(&self) -> usize {
            1
        }
        fn eval(&self, p: usize, s: usize, t: usize, out: &mut [f64]) {
            let x = &self.x[p];
            out[0] = x[s] * (x[t] - x[s]) + self.c * (self.grid.time(t) - self.grid.time(s));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::testing::ToyGerm;
    use super::*;
    use proptest::prelude::*;

    fn toy(n: usize, vals: Vec<f64>) -> ToyGerm {
        ToyGerm { grid: TimeGrid::new(0.0, 1.0, n).unwrap(), x: vec![vals], c: 0.3 }
    }

    #[test]
    fn delta_vanishes_on_degenerate_triples() {
        let g = toy(4, vec![0.0, 1.0, -2.0, 0.5, 3.0]);
        assert_eq!(delta(&g, 0, 2, 2, 2).unwrap(), vec![0.0]);
        assert!(delta(&g, 0, 3, 1, 4).is_err());
    }

    #[test]
    fn level_zero_is_the_germ() {
        let g = toy(8, (0..9).map(|i| (i as f64).sin()).collect());
        let mut a = [0.0];
        g.eval(0, 0, 8, &mut a);
        assert_eq!(dyadic_refine(&g, 0, 8, 0, 0).unwrap(), a.to_vec());
        assert!(matches!(dyadic_refine(&g, 0, 8, 4, 0), Err(Error::ResolutionExceeded { .. })));
    }

    proptest! {
        // Σ A over a partition minus A over the whole interval equals the sum
        // of δA over a chain of merges.
        #[test]
        fn riemann_defect_is_sum_of_deltas(vals in proptest::collection::vec(-5f64..5.0, 9)) {
            let g = toy(8, vals);
            let p = Partition::new(*g.grid(), vec![0, 3, 5, 8]).unwrap();
            let sum = riemann_sum(&g, &p, 0).unwrap()[0];
            let mut whole = [0.0];
            g.eval(0, 0, 8, &mut whole);
            let d1 = delta(&g, 0, 0, 3, 5).unwrap()[0];
            let d2 = delta(&g, 0, 0, 5, 8).unwrap()[0];
            prop_assert!((sum - whole[0] + d1 + d2).abs() < 1e-9);
        }
    }
}
