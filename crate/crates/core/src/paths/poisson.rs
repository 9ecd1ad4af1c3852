use rand_distr::{Distribution, Exp};
use rayon::prelude::*;

use super::PathBundle;
use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::rng::{path_rng, Stream};

#[derive(Clone, Debug, PartialEq)]
pub struct PoissonJumps {
    pub intensity: f64,
    /// Sorted jump times per path.
    pub times: Vec<Vec<f64>>,
}

impl PoissonJumps {
    /// `N_t` for path `p`.
    pub fn count_at(&self, p: usize, t: f64) -> u64 {
        self.times[p].partition_point(|&s| s <= t) as u64
    }

    /// `N_{t_i}` at every grid point, counting from `t_0`.
    pub fn counts_on_grid(&self, p: usize, grid: &TimeGrid) -> Vec<u64> {
        let mut out = Vec::with_capacity(grid.n_points());
        let jumps = &self.times[p];
        let mut k = 0;
        for i in 0..grid.n_points() {
            let t = grid.time(i);
            while k < jumps.len() && jumps[k] <= t {
                k += 1;
            }
            out.push(k as u64);
        }
        out
    }
}

/// Poisson process of intensity `intensity` on `[t0, t1]`.
pub fn sample_poisson(grid: TimeGrid, intensity: f64, n_paths: usize, seed: u64) -> Result<PathBundle> {
    if !(intensity > 0.0 && intensity.is_finite()) {
        return Err(Error::Domain(format!("intensity must be positive, got {intensity}")));
    }
    let exp = Exp::new(intensity).map_err(|e| Error::Domain(e.to_string()))?;
    let times: Vec<Vec<f64>> = (0..n_paths)
        .into_par_iter()
        .map(|p| {
            let mut rng = path_rng(seed, Stream::Poisson, p as u64);
            let mut t = grid.t0;
            let mut v = Vec::new();
            loop {
                t += exp.sample(&mut rng);
                if t > grid.t1 {
                    break v;
                }
                v.push(t);
            }
        })
        .collect();
    let mut b = PathBundle::empty(grid, 1, n_paths, 0);
    b.poisson = Some(PoissonJumps { intensity, times });
    Ok(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_count_matches_intensity() {
        let g = TimeGrid::new(0.0, 2.0, 16).unwrap();
        let b = sample_poisson(g, 3.0, 4000, 11).unwrap();
        let j = b.poisson.unwrap();
        let mean = (0..4000).map(|p| j.count_at(p, 2.0) as f64).sum::<f64>() / 4000.0;
        // sd of the mean is sqrt(6/4000) ~ 0.039
        assert!((mean - 6.0).abs() < 0.16, "{mean}");
        let c = j.counts_on_grid(5, &g);
        assert_eq!(c[0], 0);
        assert_eq!(*c.last().unwrap(), j.count_at(5, 2.0));
        assert!(c.windows(2).all(|w| w[0] <= w[1]));
    }
}
