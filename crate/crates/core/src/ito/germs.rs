use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{Partition, TimeGrid};
use crate::paths::PathBundle;
use crate::sewing::{doob_split, sewing_limit, DoobSplit, Germ, RateReport, SewingConfig, SewingLimit};
use crate::stats::lm_norm;

/// `x ↦ f(x)` with `f(x) ∈ ℝ^rows`.
pub type VecFn = Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;

/// `x ↦ min(|x|, r)^τ`, a τ-Hölder function with finite norm.
pub fn clipped_power(tau: f64, r: f64) -> impl Fn(f64) -> f64 + Send + Sync + Clone {
    move |x: f64| x.abs().min(r).powf(tau)
}

fn all_brownian_paths(bundle: &PathBundle) -> Result<Vec<f64>> {
    let len = bundle.grid.n_points() * bundle.dim;
    let mut out = vec![0.0; bundle.n_paths * len];
    out.par_chunks_mut(len).enumerate().try_for_each(|(p, o)| {
        o.copy_from_slice(&bundle.brownian_path(p)?);
        Ok::<(), Error>(())
    })?;
    Ok(out)
}

/// `A_{s,t} = f(B_s) ⊗ (B_t - B_s)`, component `(a, b)` at `a * dim + b`.
pub struct ItoGerm {
    grid: TimeGrid,
    dim: usize,
    rows: usize,
    n_paths: usize,
    b: Vec<f64>,
    f: VecFn,
}

impl ItoGerm {
    pub fn new(bundle: &PathBundle, rows: usize, f: VecFn) -> Result<Self> {
        if rows == 0 {
            return crate::error::domain("integrand needs at least one row");
        }
        Ok(Self { grid: bundle.grid, dim: bundle.dim, rows, n_paths: bundle.n_paths, b: all_brownian_paths(bundle)?, f })
    }

    /// Scalar integrand against one-dimensional Brownian motion.
    pub fn scalar(bundle: &PathBundle, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Result<Self> {
        if bundle.dim != 1 {
            return Err(Error::Domain(format!("scalar Itô germ needs d = 1, got {}", bundle.dim)));
        }
        Self::new(bundle, 1, Arc::new(move |x, out| out[0] = f(x[0])))
    }

    fn point(&self, p: usize, i: usize) -> &[f64] {
        let np = self.grid.n_points();
        &self.b[(p * np + i) * self.dim..(p * np + i + 1) * self.dim]
    }
}

impl Germ for ItoGerm {
    fn grid(&self) -> &TimeGrid {
        &self.grid
    }
    fn n_paths(&self) -> usize {
        self.n_paths
    }
    fn out_dim(&self) -> usize {
        self.rows * self.dim
    }
    fn eval(&self, p: usize, s: usize, t: usize, out: &mut [f64]) {
        let (bs, bt) = (self.point(p, s), self.point(p, t));
        let mut fv = vec![0.0; self.rows];
        (self.f)(bs, &mut fv);
        for a in 0..self.rows {
            for k in 0..self.dim {
                out[a * self.dim + k] = fv[a] * (bt[k] - bs[k]);
            }
        }
    }
    fn has_conditional(&self) -> bool {
        true
    }
    fn cond_eval(&self, _p: usize, c: usize, s: usize, _t: usize, out: &mut [f64]) -> Result<()> {
        if c > s {
            return Err(Error::Ordering(format!("conditioning index {c} after {s}")));
        }
        out.fill(0.0);
        Ok(())
    }
}

/// Sewing limit of the Itô germ on `[t_0, t_t]`.
pub fn ito_integral(germ: &ItoGerm, t: usize, cfg: &SewingConfig) -> Result<SewingLimit> {
    if cfg.m < 2.0 {
        return Err(Error::Domain(format!("moment order must be at least 2, got {}", cfg.m)));
    }
    sewing_limit(germ, 0, t, cfg)
}

#[derive(Clone, Copy, Debug)]
enum QvRule {
    Brownian,
    Poisson(f64),
    Zero,
}

/// `A_{s,t} = M_{s,t} ⊗ M_{s,t}`, component `(a, b)` at `a * dim + b`.
pub struct QvGerm {
    grid: TimeGrid,
    dim: usize,
    n_paths: usize,
    m: Vec<f64>,
    rule: QvRule,
}

impl QvGerm {
    pub fn brownian(bundle: &PathBundle) -> Result<Self> {
        Ok(Self { grid: bundle.grid, dim: bundle.dim, n_paths: bundle.n_paths, m: all_brownian_paths(bundle)?, rule: QvRule::Brownian })
    }

    /// `N̄_t = N_t - λ t` sampled at the grid points.
    pub fn compensated_poisson(bundle: &PathBundle) -> Result<Self> {
        let j = bundle.poisson.as_ref().ok_or(Error::MissingData("Poisson jumps"))?;
        let g = bundle.grid;
        let np = g.n_points();
        let mut m = vec![0.0; bundle.n_paths * np];
        m.par_chunks_mut(np).enumerate().for_each(|(p, o)| {
            for (i, c) in j.counts_on_grid(p, &g).into_iter().enumerate() {
                o[i] = c as f64 - j.intensity * (g.time(i) - g.t0);
            }
        });
        Ok(Self { grid: g, dim: 1, n_paths: bundle.n_paths, m, rule: QvRule::Poisson(j.intensity) })
    }

    pub fn zero(grid: TimeGrid, dim: usize, n_paths: usize) -> Self {
        Self { grid, dim, n_paths, m: vec![0.0; n_paths * grid.n_points() * dim], rule: QvRule::Zero }
    }

    fn point(&self, p: usize, i: usize) -> &[f64] {
        let np = self.grid.n_points();
        &self.m[(p * np + i) * self.dim..(p * np + i + 1) * self.dim]
    }
}

impl Germ for QvGerm {
    fn grid(&self) -> &TimeGrid {
        &self.grid
    }
    fn n_paths(&self) -> usize {
        self.n_paths
    }
    fn out_dim(&self) -> usize {
        self.dim * self.dim
    }
    fn eval(&self, p: usize, s: usize, t: usize, out: &mut [f64]) {
        let (ms, mt) = (self.point(p, s), self.point(p, t));
        for a in 0..self.dim {
            for b in 0..self.dim {
                out[a * self.dim + b] = (mt[a] - ms[a]) * (mt[b] - ms[b]);
            }
        }
    }
    fn has_conditional(&self) -> bool {
        true
    }
    fn cond_eval(&self, _p: usize, c: usize, s: usize, t: usize, out: &mut [f64]) -> Result<()> {
        if c > s {
            return Err(Error::Ordering(format!("conditioning index {c} after {s}")));
        }
        let h = self.grid.time(t) - self.grid.time(s);
        let v = match self.rule {
            QvRule::Brownian => h,
            QvRule::Poisson(l) => l * h,
            QvRule::Zero => 0.0,
        };
        out.fill(0.0);
        for a in 0..self.dim {
            out[a * self.dim + a] = v;
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct QvResult {
    pub limit: SewingLimit,
    /// Doob split along the finest dyadic partition.
    pub doob: DoobSplit,
}

pub fn quadratic_variation(germ: &QvGerm, t: usize, cfg: &SewingConfig) -> Result<QvResult> {
    let limit = sewing_limit(germ, 0, t, cfg)?;
    let doob = doob_split(germ, &Partition::dyadic(germ.grid, 0, t, cfg.max_level)?)?;
    Ok(QvResult { limit, doob })
}

/// `A_{s,t} = N_{s,t} - λ (t - s)`.
pub struct PoissonGerm {
    inner: QvGerm,
}

impl PoissonGerm {
    pub fn new(bundle: &PathBundle) -> Result<Self> {
        Ok(Self { inner: QvGerm::compensated_poisson(bundle)? })
    }
}

impl Germ for PoissonGerm {
    fn grid(&self) -> &TimeGrid {
        &self.inner.grid
    }
    fn n_paths(&self) -> usize {
        self.inner.n_paths
    }
    fn out_dim(&self) -> usize {
        1
    }
    fn eval(&self, p: usize, s: usize, t: usize, out: &mut [f64]) {
        out[0] = self.inner.point(p, t)[0] - self.inner.point(p, s)[0];
    }
    fn has_conditional(&self) -> bool {
        true
    }
    fn cond_eval(&self, _p: usize, c: usize, s: usize, _t: usize, out: &mut [f64]) -> Result<()> {
        if c > s {
            return Err(Error::Ordering(format!("conditioning index {c} after {s}")));
        }
        out[0] = 0.0;
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PoissonTable {
    /// One report per moment order, over pooled disjoint windows.
    pub reports: Vec<RateReport>,
    /// `max |E^{F_s} A_{s,t}|` over all evaluated windows.
    pub max_abs_conditional: f64,
}

/// `‖N_{s,t} - λ(t-s)‖_{L_m}` against the gap, for each `m`. Every path
/// contributes all disjoint windows of each gap (given in grid cells).
pub fn poisson_counterexample(germ: &PoissonGerm, m_list: &[f64], gaps: &[usize]) -> Result<PoissonTable> {
    let n = germ.grid().n_steps;
    let dt = germ.grid().dt();
    let mut by_gap = Vec::new();
    let mut max_abs_conditional: f64 = 0.0;
    let mut buf = vec![0.0; germ.n_paths()];
    let mut gaps = gaps.to_vec();
    gaps.sort_unstable_by(|a, b| b.cmp(a));
    for &g in &gaps {
        if g == 0 || g > n {
            return Err(Error::Domain(format!("gap {g} outside 1..={n}")));
        }
        let mut samples = Vec::new();
        let mut s = 0;
        while s + g <= n {
            germ.eval_all(s, s + g, &mut buf);
            samples.extend_from_slice(&buf);
            germ.cond_eval_all(s, s, s + g, &mut buf)?;
            max_abs_conditional = buf.iter().fold(max_abs_conditional, |a, x| a.max(x.abs()));
            s += g;
        }
        by_gap.push((g as f64 * dt, samples));
    }
    let reports = m_list
        .iter()
        .map(|&m| {
            let mut vals = Vec::new();
            let mut errs = Vec::new();
            for (_, xs) in &by_gap {
                let e = lm_norm(xs, 1, m)?;
                vals.push(e.value);
                errs.push(e.stderr);
            }
            Ok(RateReport::new(format!("poisson m={m}"), m, by_gap.iter().map(|x| x.0).collect(), vals, errs))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PoissonTable { reports, max_abs_conditional })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::paths::{sample_brownian, sample_poisson};
    use crate::sewing::{cond_delta_all, riemann_sums};
    use crate::stats::mean_estimate;

    #[test]
    fn constant_integrand_gives_brownian_motion_at_every_level() {
        let g = TimeGrid::dyadic(1.0, 6).unwrap();
        let b = sample_brownian(g, 1, 20, 3).unwrap();
        let germ = ItoGerm::scalar(&b, |_| 1.0).unwrap();
        for lev in 0..=6 {
            let s = riemann_sums(&germ, &Partition::dyadic(g, 0, 64, lev).unwrap()).unwrap();
            for p in 0..20 {
                assert!((s[p] - b.brownian_path(p).unwrap()[64]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn ito_conditional_defect_is_exactly_zero() {
        let g = TimeGrid::dyadic(1.0, 5).unwrap();
        let b = sample_brownian(g, 2, 10, 3).unwrap();
        let germ = ItoGerm::new(&b, 2, Arc::new(|x, o| o.copy_from_slice(x))).unwrap();
        assert!(cond_delta_all(&germ, 3, 9, 20).unwrap().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn brownian_qv_compensator_is_t_at_every_partition() {
        let g = TimeGrid::dyadic(1.0, 6).unwrap();
        let b = sample_brownian(g, 2, 5, 9).unwrap();
        let germ = QvGerm::brownian(&b).unwrap();
        let p = Partition::new(g, vec![0, 5, 17, 40, 64]).unwrap();
        let d = doob_split(&germ, &p).unwrap();
        for path in 0..5 {
            let j = &d.compensator[path * 4..path * 4 + 4];
            assert!((j[0] - 1.0).abs() < 1e-14 && j[1] == 0.0 && j[2] == 0.0 && (j[3] - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn poisson_compensator_is_lambda_t() {
        let g = TimeGrid::dyadic(2.0, 6).unwrap();
        let b = sample_poisson(g, 1.5, 5, 9).unwrap();
        let germ = QvGerm::compensated_poisson(&b).unwrap();
        let d = doob_split(&germ, &Partition::dyadic(g, 0, 64, 4).unwrap()).unwrap();
        assert!(d.compensator.iter().all(|j| (j - 3.0).abs() < 1e-12));
    }

    #[test]
    fn zero_martingale_has_zero_qv() {
        let g = TimeGrid::dyadic(1.0, 4).unwrap();
        let germ = QvGerm::zero(g, 1, 3);
        let r = quadratic_variation(&germ, 16, &SewingConfig { max_level: 4, m: 2.0, min_fit_level: 0 }).unwrap();
        assert!(r.limit.samples.iter().all(|&x| x == 0.0));
        assert!(r.limit.to_finest.fit.is_none());
    }

    #[test]
    fn m_times_m_minus_qv_has_constant_mean() {
        // E[(B_t² - t) - (B_s² - s)] = 0, also on the events {B_s > 0}, {B_s < 0}.
        let g = TimeGrid::dyadic(1.0, 6).unwrap();
        let b = sample_brownian(g, 1, 8000, 21).unwrap();
        let (s, t) = (16usize, 64usize);
        let mut all = Vec::new();
        let mut pos = Vec::new();
        let mut neg = Vec::new();
        for p in 0..8000 {
            let w = b.brownian_path(p).unwrap();
            let x = (w[t] * w[t] - g.time(t)) - (w[s] * w[s] - g.time(s));
            all.push(x);
            if w[s] > 0.0 { pos.push(x) } else { neg.push(x) }
        }
        for xs in [&all, &pos, &neg] {
            let e = mean_estimate(xs).unwrap();
            assert!(e.value.abs() < 4.0 * e.stderr, "{e:?}");
        }
    }
}
