//! `A^x_{s,t}[f] = ∫_s^t [P_{σ²(s,r)} f_r](E^{F_s} B_r + x) dr` along a Volterra fBm.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{Partition, TimeGrid};
use crate::heat::{Smoothed, SpatialField};
use crate::paths::{PathBundle, VolterraFbm};
use crate::sewing::{riemann_sums, Germ};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Readout {
    Value,
    Gradient,
}

pub struct AveragedGerm<'a> {
    field: &'a dyn SpatialField,
    bundle: &'a PathBundle,
    model: &'a VolterraFbm,
    offset: Vec<f64>,
    readout: Readout,
}

impl<'a> AveragedGerm<'a> {
    pub fn new(field: &'a dyn SpatialField, bundle: &'a PathBundle, offset: Vec<f64>, readout: Readout) -> Result<Self> {
        let v = bundle.volterra.as_ref().ok_or(Error::MissingData("Volterra noise"))?;
        if field.dim() != bundle.dim || offset.len() != bundle.dim {
            return Err(Error::Domain(format!(
                "field dimension {}, offset dimension {} and path dimension {} differ",
                field.dim(),
                offset.len(),
                bundle.dim
            )));
        }
        let n = bundle.grid.n_steps;
        for i in 1..=n {
            v.model.row(i)?;
        }
        field.prepare(0.0, 0.0)?;
        Ok(Self { field, bundle, model: &v.model, offset, readout })
    }

    pub fn with_offset(&self, offset: Vec<f64>) -> Self {
        Self { offset, ..*self }
    }

    fn prepared(&self, c: usize, r: usize) -> Box<dyn Smoothed + 'a> {
        let var = self.model.cond_var(c, r).expect("rows checked at construction");
        self.field.prepare(self.bundle.grid.time(r), var).expect("field checked at construction")
    }

    fn weight(&self, s: usize, t: usize, r: usize) -> f64 {
        let dt = self.bundle.grid.dt();
        if s == t {
            0.0
        } else if r == s || r == t {
            0.5 * dt
        } else {
            dt
        }
    }

    fn accumulate(&self, f: &dyn Smoothed, mean: &[f64], w: f64, point: &mut [f64], out: &mut [f64]) {
        for ((x, m), o) in point.iter_mut().zip(mean).zip(&self.offset) {
            *x = m + o;
        }
        match self.readout {
            Readout::Value => out[0] += w * f.value(point),
            Readout::Gradient => {
                let mut g = vec![0.0; out.len()];
                f.gradient(point, &mut g);
                out.iter_mut().zip(&g).for_each(|(o, g)| *o += w * g);
            }
        }
    }

    /// `E[A_{s,t} | F_c]` for all paths, `c <= s`; `c = s` is the germ itself.
    fn eval_from(&self, c: usize, s: usize, t: usize, out: &mut [f64]) {
        let dout = self.out_dim();
        out.fill(0.0);
        let d = self.bundle.dim;
        for r in s..=t {
            let w = self.weight(s, t, r);
            if w == 0.0 {
                continue;
            }
            let f = self.prepared(c, r);
            let means = self.model.conditional_means(self.bundle, c, r).expect("rows checked at construction");
            out.par_chunks_mut(dout).zip(means.par_chunks(d)).for_each(|(o, m)| {
                let mut point = vec![0.0; d];
                self.accumulate(f.as_ref(), m, w, &mut point, o);
            });
        }
    }
}

impl Germ for AveragedGerm<'_> {
    fn grid(&self) -> &TimeGrid {
        &self.bundle.grid
    }
    fn n_paths(&self) -> usize {
        self.bundle.n_paths
    }
    fn out_dim(&self) -> usize {
        match self.readout {
            Readout::Value => 1,
            Readout::Gradient => self.bundle.dim,
        }
    }
    fn eval(&self, p: usize, s: usize, t: usize, out: &mut [f64]) {
        out.fill(0.0);
        let d = self.bundle.dim;
        let mut mean = vec![0.0; d];
        let mut point = vec![0.0; d];
        for r in s..=t {
            let w = self.weight(s, t, r);
            if w == 0.0 {
                continue;
            }
            let f = self.prepared(s, r);
            self.model.conditional_mean(self.bundle, p, s, r, &mut mean).expect("rows checked at construction");
            self.accumulate(f.as_ref(), &mean, w, &mut point, out);
        }
    }
    fn eval_all(&self, s: usize, t: usize, out: &mut [f64]) {
        self.eval_from(s, s, t, out);
    }
    fn has_conditional(&self) -> bool {
        true
    }
    fn cond_eval(&self, p: usize, c: usize, s: usize, t: usize, out: &mut [f64]) -> Result<()> {
        if c > s {
            return Err(Error::Ordering(format!("conditioning index {c} after {s}")));
        }
        out.fill(0.0);
        let d = self.bundle.dim;
        let mut mean = vec![0.0; d];
        let mut point = vec![0.0; d];
        for r in s..=t {
            let w = self.weight(s, t, r);
            if w == 0.0 {
                continue;
            }
            let f = self.prepared(c, r);
            self.model.conditional_mean(self.bundle, p, c, r, &mut mean)?;
            self.accumulate(f.as_ref(), &mean, w, &mut point, out);
        }
        Ok(())
    }
    fn cond_eval_all(&self, c: usize, s: usize, t: usize, out: &mut [f64]) -> Result<()> {
        if c > s {
            return Err(Error::Ordering(format!("conditioning index {c} after {s}")));
        }
        self.eval_from(c, s, t, out);
        Ok(())
    }
}

/// Riemann sum of the germ over single grid cells of `[s, t]`, all paths.
pub fn finest_sum(germ: &dyn Germ, s: usize, t: usize) -> Result<Vec<f64>> {
    if s == t {
        return Ok(vec![0.0; germ.n_paths() * germ.out_dim()]);
    }
    riemann_sums(germ, &Partition::new(*germ.grid(), (s..=t).collect())?)
}

/// Germ values on every grid cell, cumulated: `[path][point][component]`
/// with `A_{t_0, t_i}` at point `i`.
pub fn cumulative_cells(germ: &dyn Germ) -> Vec<f64> {
    let n = germ.grid().n_steps;
    let (np, d) = (germ.n_paths(), germ.out_dim());
    let mut cells = vec![vec![0.0; np * d]; n];
    cells.par_iter_mut().enumerate().for_each(|(i, c)| germ.eval_all(i, i + 1, c));
    let mut out = vec![0.0; np * (n + 1) * d];
    out.par_chunks_mut((n + 1) * d).enumerate().for_each(|(p, o)| {
        for i in 0..n {
            for k in 0..d {
                o[(i + 1) * d + k] = o[i * d + k] + cells[i][p * d + k];
            }
        }
    });
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::heat::{Constant, GaussianBump, Sign};
    use crate::paths::VolterraFbm;
    use crate::sewing::{cond_delta_all, delta_all};
    use crate::stats::mean_estimate;

    fn bundle(h: f64, n: u32, paths: usize, seed: u64) -> PathBundle {
        let m = VolterraFbm::new(h, TimeGrid::dyadic(1.0, n).unwrap()).unwrap();
        m.sample(1, paths, 0, seed, true).unwrap()
    }

    #[test]
    fn constant_field_integrates_to_length() {
        let b = bundle(0.3, 5, 4, 1);
        let c = Constant { dim: 1, value: 2.5 };
        let g = AveragedGerm::new(&c, &b, vec![0.0], Readout::Value).unwrap();
        let mut out = vec![0.0; 4];
        g.eval_all(3, 19, &mut out);
        for v in out {
            assert!((v - 2.5 * 16.0 / 32.0).abs() < 1e-14);
        }
    }

    #[test]
    fn conditional_defect_vanishes() {
        let b = bundle(0.3, 5, 8, 2);
        let f = GaussianBump { center: vec![0.1], var: 0.05, amp: 1.0 };
        let g = AveragedGerm::new(&f, &b, vec![0.2], Readout::Value).unwrap();
        let e = cond_delta_all(&g, 4, 10, 20).unwrap();
        assert!(e.iter().all(|v| v.abs() < 1e-14), "{e:?}");
    }

    #[test]
    fn defect_is_uncorrelated_with_the_past() {
        let b = bundle(0.3, 6, 4000, 3);
        let f = Sign { dim: 1, axis: 0, scale: 1.0 };
        let g = AveragedGerm::new(&f, &b, vec![0.0], Readout::Value).unwrap();
        let (s, u, t) = (16, 40, 64);
        let d = delta_all(&g, s, u, t).unwrap();
        let prod: Vec<f64> = (0..b.n_paths).map(|p| d[p] * b.fbm_at(p, s, 0).unwrap().signum()).collect();
        let e = mean_estimate(&prod).unwrap();
        assert!(e.value.abs() < 4.0 * e.stderr, "{e:?}");
        assert!(d.iter().any(|v| v.abs() > 1e-6));
    }

    #[test]
    fn finest_sum_is_pathwise_trapezoid_for_smooth_fields() {
        let b = bundle(0.5, 8, 3, 4);
        let f = GaussianBump { center: vec![0.0], var: 0.5, amp: 1.0 };
        let g = AveragedGerm::new(&f, &b, vec![0.0], Readout::Value).unwrap();
        let a = finest_sum(&g, 0, 256).unwrap();
        let cum = cumulative_cells(&g);
        for p in 0..3 {
            let x = b.fbm_path(p).unwrap();
            let direct: f64 = (0..256)
                .map(|i| 0.5 / 256.0 * ((-x[i] * x[i]).exp() + (-x[i + 1] * x[i + 1]).exp()))
                .sum();
            assert!((a[p] - direct).abs() < 2e-2, "{} {direct}", a[p]);
            assert!((cum[p * 257 + 256] - a[p]).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_dimension_mismatch() {
        let b = bundle(0.3, 3, 1, 5);
        let c = Constant { dim: 2, value: 1.0 };
        assert!(AveragedGerm::new(&c, &b, vec![0.0, 0.0], Readout::Value).is_err());
    }
}
