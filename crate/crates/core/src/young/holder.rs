use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::stats::{fit_power_law, MIN_FIT_POINTS};

/// A path sampled on a grid together with its declared Hölder exponent.
#[derive(Clone, Debug, Serialize)]
pub struct HolderPath {
    #[serde(skip)]
    pub grid: TimeGrid,
    pub dim: usize,
    /// `[point][component]`
    pub values: Vec<f64>,
    pub declared: f64,
}

impl HolderPath {
    pub fn new(grid: TimeGrid, dim: usize, values: Vec<f64>, declared: f64) -> Result<Self> {
        if values.len() != grid.n_points() * dim {
            return Err(Error::GridMismatch(format!(
                "{} values for {} points of dimension {dim}",
                values.len(),
                grid.n_points()
            )));
        }
        if !(declared > 0.0 && declared <= 1.0) {
            return Err(Error::Domain(format!("Hölder exponent {declared} outside (0, 1]")));
        }
        Ok(Self { grid, dim, values, declared })
    }

    pub fn from_fn(grid: TimeGrid, declared: f64, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(grid, 1, grid.times().into_iter().map(f).collect(), declared)
    }

    pub fn at(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    fn dist(&self, i: usize, j: usize) -> f64 {
        self.at(i).iter().zip(self.at(j)).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
    }

    fn gaps(&self) -> Vec<usize> {
        let n = self.grid.n_steps;
        std::iter::successors(Some(1usize), |g| Some(g * 2)).take_while(|&g| g <= n).collect()
    }

    /// `max |x_{i+g} - x_i| / (g Δt)^τ` over dyadic gaps `g`.
    pub fn seminorm(&self) -> f64 {
        let dt = self.grid.dt();
        let n = self.grid.n_steps;
        self.gaps()
            .into_iter()
            .map(|g| {
                let m = (0..=n - g).map(|i| self.dist(i, i + g)).fold(0.0, f64::max);
                m / (g as f64 * dt).powf(self.declared)
            })
            .fold(0.0, f64::max)
    }

    /// Exponent of the root-mean-square increment against dyadic gaps up to
    /// `n / 8`.
    pub fn empirical_exponent(&self) -> Option<f64> {
        let dt = self.grid.dt();
        let n = self.grid.n_steps;
        let gaps: Vec<usize> = self.gaps().into_iter().filter(|&g| 8 * g <= n).collect();
        if gaps.len() < MIN_FIT_POINTS {
            return None;
        }
        let rms: Vec<f64> = gaps
            .iter()
            .map(|&g| ((0..=n - g).map(|i| self.dist(i, i + g).powi(2)).sum::<f64>() / (n - g + 1) as f64).sqrt())
            .collect();
        let scales: Vec<f64> = gaps.iter().map(|&g| g as f64 * dt).collect();
        fit_power_law(&scales, &rms).ok().map(|f| f.exponent)
    }

    /// `Some` when the empirical exponent is more than 0.1 away from the
    /// declared one.
    pub fn warning(&self) -> Option<String> {
        match self.empirical_exponent() {
            Some(e) if (e - self.declared).abs() > 0.1 => {
                Some(format!("empirical Hölder exponent {e:.3} against declared {}", self.declared))
            }
            _ => None,
        }
    }
}

/// Pooled root-mean-square increments of many paths against dyadic gaps.
pub fn pooled_exponent(paths: &[HolderPath]) -> Option<f64> {
    let first = paths.first()?;
    let dt = first.grid.dt();
    let n = first.grid.n_steps;
    let gaps: Vec<usize> = first.gaps().into_iter().filter(|&g| 8 * g <= n).collect();
    if gaps.len() < MIN_FIT_POINTS {
        return None;
    }
    let rms: Vec<f64> = gaps
        .iter()
        .map(|&g| {
            let mut acc = 0.0;
            let mut cnt = 0usize;
            for p in paths {
                let mut i = 0;
                while i + g <= n {
                    acc += p.dist(i, i + g).powi(2);
                    cnt += 1;
                    i += g;
                }
            }
            (acc / cnt as f64).sqrt()
        })
        .collect();
    let scales: Vec<f64> = gaps.iter().map(|&g| g as f64 * dt).collect();
    fit_power_law(&scales, &rms).ok().map(|f| f.exponent)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::paths::sample_brownian;

    #[test]
    fn linear_path() {
        let g = TimeGrid::dyadic(1.0, 8).unwrap();
        let p = HolderPath::from_fn(g, 1.0, |t| 3.0 * t).unwrap();
        assert!((p.seminorm() - 3.0).abs() < 1e-12);
        assert!((p.empirical_exponent().unwrap() - 1.0).abs() < 1e-9);
        assert!(p.warning().is_none());
    }

    #[test]
    fn brownian_path_is_half_holder() {
        let g = TimeGrid::dyadic(1.0, 12).unwrap();
        let b = sample_brownian(g, 1, 1, 3).unwrap();
        let p = HolderPath::new(g, 1, b.brownian_path(0).unwrap(), 0.5).unwrap();
        assert!((p.empirical_exponent().unwrap() - 0.5).abs() < 0.1);
        let q = HolderPath { declared: 0.9, ..p };
        assert!(q.warning().is_some());
    }

    #[test]
    fn rejects_bad_lengths() {
        let g = TimeGrid::dyadic(1.0, 2).unwrap();
        assert!(HolderPath::new(g, 1, vec![0.0; 3], 0.5).is_err());
        assert!(HolderPath::new(g, 1, vec![0.0; 5], 1.5).is_err());
    }
}
