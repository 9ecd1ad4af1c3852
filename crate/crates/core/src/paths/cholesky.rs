use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use super::{fbm, PathBundle};
use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::rng::{path_rng, Stream};

/// Exact fBm sampling on a grid from the Cholesky factor of the covariance
/// of `(B_{t_1}, ..., B_{t_n})`; `B_{t_0} = 0`.
#[derive(Clone, Debug)]
pub struct FbmModel {
    pub hurst: f64,
    pub grid: TimeGrid,
    /// Lower-triangular factor, packed row by row.
    chol: Vec<f64>,
    /// Diagonal jitter that had to be added, zero if none.
    pub jitter: f64,
}

fn tri(i: usize) -> usize {
    i * (i + 1) / 2
}

impl FbmModel {
    pub fn new(hurst: f64, grid: TimeGrid) -> Result<Self> {
        fbm::check_hurst(hurst)?;
        if grid.t0 != 0.0 {
            return Err(Error::Domain("fBm grids must start at 0".into()));
        }
        let n = grid.n_steps;
        let times: Vec<f64> = (1..=n).map(|i| grid.time(i)).collect();
        let mut cov = vec![0.0; tri(n)];
        for i in 0..n {
            for j in 0..=i {
                cov[tri(i) + j] = fbm::covariance(hurst, times[j], times[i]);
            }
        }
        match cholesky_packed(&cov, n, 0.0) {
            Ok(chol) => Ok(Self { hurst, grid, chol, jitter: 0.0 }),
            Err(_) => {
                let max_diag = (0..n).map(|i| cov[tri(i) + i]).fold(0.0, f64::max);
                let jitter = 1e-12 * max_diag;
                let chol = cholesky_packed(&cov, n, jitter)?;
                Ok(Self { hurst, grid, chol, jitter })
            }
        }
    }

    /// Row `i` (for `B_{t_{i+1}}`) of the factor.
    pub fn factor_row(&self, i: usize) -> &[f64] {
        &self.chol[tri(i)..tri(i) + i + 1]
    }

    pub fn sample(&self, dim: usize, n_paths: usize, seed: u64) -> Result<PathBundle> {
        if dim == 0 {
            return crate::error::domain("dimension must be positive");
        }
        let n = self.grid.n_steps;
        let len = (n + 1) * dim;
        let mut vals = vec![0.0; len * n_paths];
        vals.par_chunks_mut(len).enumerate().for_each(|(p, out)| {
            let mut rng = path_rng(seed, Stream::Gaussian, p as u64);
            let z: Vec<f64> = (0..n * dim).map(|_| StandardNormal.sample(&mut rng)).collect();
            for i in 0..n {
                let row = self.factor_row(i);
                for k in 0..dim {
                    let mut acc = 0.0;
                    for (j, l) in row.iter().enumerate() {
                        acc += l * z[j * dim + k];
                    }
                    out[(i + 1) * dim + k] = acc;
                }
            }
        });
        let mut b = PathBundle::empty(self.grid, dim, n_paths, 0);
        b.hurst = Some(self.hurst);
        b.fbm_values = Some(vals);
        Ok(b)
    }
}

fn cholesky_packed(a: &[f64], n: usize, jitter: f64) -> Result<Vec<f64>> {
    let mut l = vec![0.0; tri(n)];
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[tri(i) + j];
            if i == j {
                s += jitter;
            }
            for k in 0..j {
                s -= l[tri(i) + k] * l[tri(j) + k];
            }
            if i == j {
                if !(s > 0.0) {
                    return Err(Error::Factorization(i));
                }
                l[tri(i) + i] = s.sqrt();
            } else {
                l[tri(i) + j] = s / l[tri(j) + j];
            }
        }
    }
    Ok(l)
}
