//! Uniform time grids and partitions made of grid points.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub t0: f64,
    pub t1: f64,
    pub n_steps: usize,
}

impl TimeGrid {
    pub fn new(t0: f64, t1: f64, n_steps: usize) -> Result<Self> {
        if !(t0.is_finite() && t1.is_finite() && t1 > t0) {
            return Err(Error::Domain(format!("grid needs t0 < t1, got [{t0}, {t1}]")));
        }
        if n_steps == 0 {
            return Err(Error::Domain("grid needs at least one step".into()));
        }
        Ok(Self { t0, t1, n_steps })
    }

    /// Grid on `[0, t1]` with `2^level` steps.
    pub fn dyadic(t1: f64, level: u32) -> Result<Self> {
        Self::new(0.0, t1, 1usize << level)
    }

    pub fn dt(&self) -> f64 {
        (self.t1 - self.t0) / self.n_steps as f64
    }

    pub fn n_points(&self) -> usize {
        self.n_steps + 1
    }

    pub fn time(&self, i: usize) -> f64 {
        if i == self.n_steps {
            self.t1
        } else {
            self.t0 + i as f64 * self.dt()
        }
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.n_steps).map(|i| self.time(i)).collect()
    }

    /// Index of `t`, which must sit on the grid up to rounding.
    pub fn index_of(&self, t: f64) -> Result<usize> {
        let x = (t - self.t0) / self.dt();
        let k = x.round();
        if (x - k).abs() > 1e-8 || k < 0.0 || k > self.n_steps as f64 {
            return Err(Error::OffGrid(t));
        }
        Ok(k as usize)
    }

    /// Every `factor`-th point, as a grid of its own.
    pub fn coarsen(&self, factor: usize) -> Result<Self> {
        if factor == 0 || !self.n_steps.is_multiple_of(factor) {
            return Err(Error::GridMismatch(format!("{} steps are not divisible by {factor}", self.n_steps)));
        }
        Self::new(self.t0, self.t1, self.n_steps / factor)
    }
}

/// Strictly increasing grid indices `t_0 < ... < t_N` of a [`TimeGrid`].
#[derive(Clone, Debug, PartialEq)]
pub struct Partition {
    grid: TimeGrid,
    idx: Vec<usize>,
}

impl Partition {
    pub fn new(grid: TimeGrid, idx: Vec<usize>) -> Result<Self> {
        if idx.len() < 2 {
            return Err(Error::Domain("partition needs at least two points".into()));
        }
        if let Some(w) = idx.windows(2).find(|w| w[0] >= w[1]) {
            return Err(Error::Ordering(format!("indices {} and {} are not increasing", w[0], w[1])));
        }
        if *idx.last().unwrap() > grid.n_steps {
            return Err(Error::OffGrid(grid.t0 + *idx.last().unwrap() as f64 * grid.dt()));
        }
        Ok(Self { grid, idx })
    }

    pub fn from_times(grid: TimeGrid, times: &[f64]) -> Result<Self> {
        let idx = times.iter().map(|&t| grid.index_of(t)).collect::<Result<Vec<_>>>()?;
        Self::new(grid, idx)
    }

    /// `[s, t]` cut into `2^level` equal pieces.
    pub fn dyadic(grid: TimeGrid, s: usize, t: usize, level: u32) -> Result<Self> {
        if t <= s {
            return Err(Error::Ordering(format!("need s < t, got {s} >= {t}")));
        }
        let cells = t - s;
        let k = 1usize.checked_shl(level).unwrap_or(usize::MAX);
        if !cells.is_multiple_of(k) {
            return Err(Error::ResolutionExceeded { level, cells });
        }
        let h = cells / k;
        Self::new(grid, (0..=k).map(|j| s + j * h).collect())
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn indices(&self) -> &[usize] {
        &self.idx
    }

    pub fn times(&self) -> Vec<f64> {
        self.idx.iter().map(|&i| self.grid.time(i)).collect()
    }

    pub fn n_cells(&self) -> usize {
        self.idx.len() - 1
    }

    pub fn mesh(&self) -> f64 {
        let dt = self.grid.dt();
        self.idx.windows(2).map(|w| (w[1] - w[0]) as f64 * dt).fold(0.0, f64::max)
    }

    pub fn cells(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.idx.windows(2).map(|w| (w[0], w[1]))
    }
}
