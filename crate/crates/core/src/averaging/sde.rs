//! `X_t = x + ∫_0^t b(r, X_r) dr + B_t` by Euler steps with a heat-mollified drift.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use super::exponents::{exponents, Exponents};
use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::heat::{Smoothed, SpatialField};
use crate::paths::PathBundle;
use crate::sewing::{estimate_lm, RateReport};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum Mollification {
    /// `δ = Δt^{2H}`
    Auto,
    Fixed(f64),
    None,
}

#[derive(Clone)]
pub struct SdeConfig {
    /// One scalar field per component of `b`.
    pub drift: Vec<Arc<dyn SpatialField>>,
    /// Declared integrability `b ∈ L^q_T L^p`.
    pub p: f64,
    pub q: f64,
    pub x0: Vec<f64>,
    pub mollification: Mollification,
}

impl SdeConfig {
    pub fn dim(&self) -> usize {
        self.x0.len()
    }

    pub fn exponents(&self, hurst: f64) -> Exponents {
        exponents(hurst, self.dim(), self.p, self.q, None)
    }

    fn delta(&self, hurst: f64, dt: f64) -> f64 {
        match self.mollification {
            Mollification::Auto => dt.powf(2.0 * hurst),
            Mollification::Fixed(d) => d,
            Mollification::None => 0.0,
        }
    }

    fn check(&self, bundle: &PathBundle) -> Result<()> {
        if self.drift.len() != self.dim() || bundle.dim != self.dim() {
            return Err(Error::Domain(format!(
                "drift has {} components, x0 has {}, paths have {}",
                self.drift.len(),
                self.dim(),
                bundle.dim
            )));
        }
        if let Some(f) = self.drift.iter().find(|f| f.dim() != self.dim()) {
            return Err(Error::Domain(format!("drift component on ℝ^{} in dimension {}", f.dim(), self.dim())));
        }
        bundle.fbm_values.as_ref().ok_or(Error::MissingData("fBm values"))?;
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct SdeSolution {
    pub grid: TimeGrid,
    pub dim: usize,
    pub n_paths: usize,
    /// `[path][point][dim]`
    pub x: Vec<f64>,
    /// `X - B`, starting at `x0`.
    pub psi: Vec<f64>,
    pub delta: f64,
    pub exponents: Exponents,
    pub warning: Option<String>,
}

impl SdeSolution {
    pub fn path(&self, p: usize) -> &[f64] {
        let len = self.grid.n_points() * self.dim;
        &self.x[p * len..(p + 1) * len]
    }

    pub fn psi_path(&self, p: usize) -> &[f64] {
        let len = self.grid.n_points() * self.dim;
        &self.psi[p * len..(p + 1) * len]
    }

    /// `‖ψ_{t+g} - ψ_t‖_{L_m}` against `g`, pooled over disjoint windows.
    pub fn psi_holder(&self, gaps: &[usize], m: f64) -> Result<RateReport> {
        let d = self.dim;
        let np = self.grid.n_points();
        let mut gaps = gaps.to_vec();
        gaps.sort_unstable_by(|a, b| b.cmp(a));
        let samples: Vec<(f64, Vec<f64>)> = gaps
            .iter()
            .map(|&g| {
                let mut v = Vec::new();
                for p in 0..self.n_paths {
                    let y = self.psi_path(p);
                    let mut s = 0;
                    while s + g < np {
                        v.extend((0..d).map(|k| y[(s + g) * d + k] - y[s * d + k]));
                        s += g;
                    }
                }
                (g as f64 * self.grid.dt(), v)
            })
            .collect();
        estimate_lm("psi increments", &samples, d, m)
    }
}

fn prepare_all<'a>(drift: &'a [Arc<dyn SpatialField>], r: f64, delta: f64) -> Result<Vec<Box<dyn Smoothed + 'a>>> {
    drift.iter().map(|f| f.prepare(r, delta)).collect()
}

/// Euler scheme on every `stride`-th point of the bundle grid.
pub(crate) fn euler(cfg: &SdeConfig, bundle: &PathBundle, x0: &[f64], stride: usize) -> Result<SdeSolution> {
    cfg.check(bundle)?;
    if stride == 0 || !bundle.grid.n_steps.is_multiple_of(stride) {
        return Err(Error::Domain(format!("stride {stride} does not divide {}", bundle.grid.n_steps)));
    }
    let hurst = bundle.hurst.unwrap_or(0.5);
    let grid = bundle.grid.coarsen(stride)?;
    let d = cfg.dim();
    let dt = grid.dt();
    let delta = cfg.delta(hurst, dt);
    let n = grid.n_steps;
    let fine = bundle.fbm_values.as_ref().unwrap();
    let fine_np = bundle.grid.n_points();
    let autonomous = cfg.drift.iter().all(|f| !f.time_dependent());
    let fixed = if autonomous { Some(prepare_all(&cfg.drift, 0.0, delta)?) } else { None };
    let per_step: Vec<Vec<Box<dyn Smoothed + '_>>> = if autonomous {
        Vec::new()
    } else {
        (0..n).map(|i| prepare_all(&cfg.drift, grid.time(i), delta)).collect::<Result<_>>()?
    };
    let len = (n + 1) * d;
    let mut x = vec![0.0; bundle.n_paths * len];
    let mut psi = vec![0.0; bundle.n_paths * len];
    x.par_chunks_mut(len)
        .zip(psi.par_chunks_mut(len))
        .enumerate()
        .try_for_each(|(p, (xp, yp))| {
            let b = &fine[p * fine_np * d..(p + 1) * fine_np * d];
            let bv = |i: usize, k: usize| b[i * stride * d + k];
            xp[..d].copy_from_slice(x0);
            for i in 0..n {
                let fs = fixed.as_ref().unwrap_or_else(|| &per_step[i]);
                let (cur, next) = xp.split_at_mut((i + 1) * d);
                let xi = &cur[i * d..];
                for k in 0..d {
                    next[k] = xi[k] + fs[k].value(xi) * dt + bv(i + 1, k) - bv(i, k);
                }
                if next[..d].iter().any(|v| !v.is_finite() || v.abs() > 1e12) {
                    return Err(Error::Numerical(format!(
                        "path {} left the finite range at t = {}",
                        bundle.path_offset + p as u64,
                        grid.time(i + 1)
                    )));
                }
            }
            for i in 0..=n {
                for k in 0..d {
                    yp[i * d + k] = xp[i * d + k] - bv(i, k);
                }
            }
            Ok::<(), Error>(())
        })?;
    let exponents = cfg.exponents(hurst);
    let warning = (!exponents.weak).then(|| format!("H d / p + 1 / q = {} is not below 1/2", 1.0 - exponents.tau));
    Ok(SdeSolution { grid, dim: d, n_paths: bundle.n_paths, x, psi, delta, exponents, warning })
}

/// Solve along the fBm values stored in `bundle`; the same bundle gives
/// same-noise couplings.
pub fn solve_singular_sde(cfg: &SdeConfig, bundle: &PathBundle) -> Result<SdeSolution> {
    euler(cfg, bundle, &cfg.x0, 1)
}

#[derive(Clone, Debug, Serialize)]
pub struct UniquenessReport {
    pub note: &'static str,
    pub pathwise_condition: bool,
    pub deltas: Vec<f64>,
    pub strides: Vec<usize>,
    /// `E sup_t |X - X̄|`, layout `[stride][delta]`.
    pub mean_sup_distance: Vec<Vec<f64>>,
    pub max_sup_distance: Vec<Vec<f64>>,
    /// Mean sup distance non-increasing as `δ0` decreases, at every stride.
    pub monotone: bool,
}

/// Coupled solves from `x0` and `x0 + δ0 e_1` on the same noise, for each
/// `δ0` and each mesh `stride · Δt`.
pub fn pathwise_uniqueness_probe(
    cfg: &SdeConfig,
    bundle: &PathBundle,
    deltas: &[f64],
    strides: &[usize],
) -> Result<UniquenessReport> {
    let hurst = bundle.hurst.unwrap_or(0.5);
    let mut mean_sup = Vec::new();
    let mut max_sup = Vec::new();
    for &st in strides {
        let base = euler(cfg, bundle, &cfg.x0, st)?;
        let mut row_mean = Vec::new();
        let mut row_max = Vec::new();
        for &d0 in deltas {
            let mut x1 = cfg.x0.clone();
            x1[0] += d0;
            let other = euler(cfg, bundle, &x1, st)?;
            let len = base.grid.n_points() * base.dim;
            let sups: Vec<f64> = (0..bundle.n_paths)
                .map(|p| {
                    base.x[p * len..(p + 1) * len]
                        .iter()
                        .zip(&other.x[p * len..(p + 1) * len])
                        .fold(0.0f64, |a, (u, v)| a.max((u - v).abs()))
                })
                .collect();
            row_mean.push(crate::stats::mean(&sups)?);
            row_max.push(sups.iter().cloned().fold(0.0, f64::max));
        }
        mean_sup.push(row_mean);
        max_sup.push(row_max);
    }
    let mut order: Vec<usize> = (0..deltas.len()).collect();
    order.sort_by(|&a, &b| deltas[b].total_cmp(&deltas[a]));
    let monotone = mean_sup.iter().all(|row| order.windows(2).all(|w| row[w[1]] <= row[w[0]]));
    Ok(UniquenessReport {
        note: "empirical stability evidence, not a proof",
        pathwise_condition: cfg.exponents(hurst).pathwise,
        deltas: deltas.to_vec(),
        strides: strides.to_vec(),
        mean_sup_distance: mean_sup,
        max_sup_distance: max_sup,
        monotone,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::heat::{Affine, Constant, Sign};
    use crate::paths::VolterraFbm;

    fn bundle(h: f64, n: u32, paths: usize) -> PathBundle {
        VolterraFbm::new(h, TimeGrid::dyadic(1.0, n).unwrap()).unwrap().sample(1, paths, 0, 21, true).unwrap()
    }

    fn cfg(f: Arc<dyn SpatialField>, x0: f64) -> SdeConfig {
        SdeConfig { drift: vec![f], p: f64::INFINITY, q: f64::INFINITY, x0: vec![x0], mollification: Mollification::Auto }
    }

    #[test]
    fn zero_and_constant_drift_are_exact() {
        let b = bundle(0.3, 6, 5);
        let s = solve_singular_sde(&cfg(Arc::new(Constant { dim: 1, value: 0.0 }), 0.7), &b).unwrap();
        for p in 0..5 {
            for (i, (x, w)) in s.path(p).iter().zip(b.fbm_path(p).unwrap()).enumerate() {
                assert!((x - 0.7 - w).abs() < 1e-12, "{i}");
            }
        }
        let s = solve_singular_sde(&cfg(Arc::new(Constant { dim: 1, value: 1.5 }), 0.0), &b).unwrap();
        for p in 0..5 {
            for (i, y) in s.psi_path(p).iter().enumerate() {
                assert!((y - 1.5 * i as f64 / 64.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn bounded_drift_gives_lipschitz_psi() {
        let b = bundle(0.3, 8, 200);
        let s = solve_singular_sde(&cfg(Arc::new(Sign { dim: 1, axis: 0, scale: -1.0 }), 0.0), &b).unwrap();
        let r = s.psi_holder(&[2, 4, 8, 16, 32, 64], 2.0).unwrap();
        assert!((r.exponent().unwrap() - 1.0).abs() < 0.1);
    }

    #[test]
    fn coupling_is_grönwall_stable_and_exact_at_zero() {
        let b = bundle(0.3, 7, 50);
        let c = cfg(Arc::new(Affine { slope: vec![-0.5], offset: 0.0 }), 0.0);
        let r = pathwise_uniqueness_probe(&c, &b, &[0.5, 0.25, 0.0], &[1, 2]).unwrap();
        for row in &r.max_sup_distance {
            assert!(row[0] <= 0.5 + 1e-12 && row[1] <= 0.25 + 1e-12);
            assert_eq!(row[2], 0.0);
        }
        assert!(r.monotone);
    }

    #[test]
    fn reports_blow_up() {
        let b = bundle(0.5, 6, 2);
        let c = cfg(Arc::new(Affine { slope: vec![1e5], offset: 0.0 }), 1.0);
        assert!(matches!(solve_singular_sde(&c, &b), Err(Error::Numerical(_))));
    }
}
