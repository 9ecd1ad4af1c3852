//! Gaussian and Poisson path generation.
//!
//! All samplers are deterministic functions of `(seed, path index)`; see
//! [`crate::rng`].

mod brownian;
mod cholesky;
pub mod fbm;
mod io;
mod poisson;
mod volterra;

use std::sync::Arc;

pub use brownian::sample_brownian;
pub use cholesky::FbmModel;
pub use poisson::{sample_poisson, PoissonJumps};
pub use volterra::{VolterraFbm, VolterraRow};

use crate::error::{Error, Result};
use crate::grid::TimeGrid;

/// Auxiliary per-cell Gaussians of the Volterra sampler.
#[derive(Clone, Debug)]
pub struct VolterraNoise {
    pub model: Arc<VolterraFbm>,
    /// `∫_cell (t_{j+1} - r)^{H-1/2} dW_r`, layout `[path][cell][dim]`.
    pub y: Vec<f64>,
    /// `∫_0^{t_1} r^{H-1/2} dW_r`, layout `[path][dim]`.
    pub z: Vec<f64>,
}

/// Sampled paths on a shared grid. Arrays are flat, path-major, with the
/// component index fastest.
#[derive(Clone, Debug)]
pub struct PathBundle {
    pub grid: TimeGrid,
    pub dim: usize,
    pub n_paths: usize,
    /// Global index of the first path; stream ids are `path_offset + p`.
    pub path_offset: u64,
    pub hurst: Option<f64>,
    /// Brownian increments, `[path][step][dim]`.
    pub w_increments: Option<Vec<f64>>,
    /// fBm values including `B_{t_0} = 0`, `[path][point][dim]`.
    pub fbm_values: Option<Vec<f64>>,
    pub volterra: Option<VolterraNoise>,
    pub poisson: Option<PoissonJumps>,
}

impl PathBundle {
    pub(crate) fn empty(grid: TimeGrid, dim: usize, n_paths: usize, path_offset: u64) -> Self {
        Self {
            grid,
            dim,
            n_paths,
            path_offset,
            hurst: None,
            w_increments: None,
            fbm_values: None,
            volterra: None,
            poisson: None,
        }
    }

    fn check_path(&self, p: usize) -> Result<()> {
        if p >= self.n_paths {
            return Err(Error::Domain(format!("path {p} out of range ({} paths)", self.n_paths)));
        }
        Ok(())
    }

    pub fn increments(&self, p: usize) -> Result<&[f64]> {
        self.check_path(p)?;
        let w = self.w_increments.as_ref().ok_or(Error::MissingData("Brownian increments"))?;
        let len = self.grid.n_steps * self.dim;
        Ok(&w[p * len..(p + 1) * len])
    }

    /// Brownian path `W_{t_i} - W_{t_0}` at all grid points, `[point][dim]`.
    pub fn brownian_path(&self, p: usize) -> Result<Vec<f64>> {
        let inc = self.increments(p)?;
        let d = self.dim;
        let mut out = vec![0.0; (self.grid.n_steps + 1) * d];
        for i in 0..self.grid.n_steps {
            for k in 0..d {
                out[(i + 1) * d + k] = out[i * d + k] + inc[i * d + k];
            }
        }
        Ok(out)
    }

    pub fn fbm_path(&self, p: usize) -> Result<&[f64]> {
        self.check_path(p)?;
        let v = self.fbm_values.as_ref().ok_or(Error::MissingData("fBm values"))?;
        let len = self.grid.n_points() * self.dim;
        Ok(&v[p * len..(p + 1) * len])
    }

    /// Component `k` of the fBm path at grid index `i`.
    pub fn fbm_at(&self, p: usize, i: usize, k: usize) -> Result<f64> {
        Ok(self.fbm_path(p)?[i * self.dim + k])
    }

    pub fn write_to(&self, w: impl std::io::Write) -> Result<()> {
        io::write_bundle(self, w)
    }

    /// Reads a bundle written by [`PathBundle::write_to`]. Volterra auxiliary
    /// noise is restored together with its kernel model.
    pub fn read_from(r: impl std::io::Read) -> Result<Self> {
        io::read_bundle(r)
    }
}
