use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use super::PathBundle;
use crate::error::Result;
use crate::grid::TimeGrid;
use crate::rng::{path_rng, Stream};

/// Standard `dim`-dimensional Brownian increments.
pub fn sample_brownian(grid: TimeGrid, dim: usize, n_paths: usize, seed: u64) -> Result<PathBundle> {
    sample_brownian_range(grid, dim, n_paths, 0, seed)
}

pub(crate) fn sample_brownian_range(
    grid: TimeGrid,
    dim: usize,
    n_paths: usize,
    path_offset: u64,
    seed: u64,
) -> Result<PathBundle> {
    if dim == 0 {
        return crate::error::domain("dimension must be positive");
    }
    let len = grid.n_steps * dim;
    let sd = grid.dt().sqrt();
    let mut w = vec![0.0; len * n_paths];
    w.par_chunks_mut(len.max(1)).enumerate().for_each(|(p, chunk)| {
        let mut rng = path_rng(seed, Stream::Gaussian, path_offset + p as u64);
        for v in chunk.iter_mut() {
            let z: f64 = StandardNormal.sample(&mut rng);
            *v = sd * z;
        }
    });
    let mut b = PathBundle::empty(grid, dim, n_paths, path_offset);
    b.hurst = Some(0.5);
    b.w_increments = Some(w);
    Ok(b)
}
