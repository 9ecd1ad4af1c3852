//! Volterra representation `B_t = ∫_0^t K_H(t, r) dW_r` on a uniform grid.
//!
//! On each cell the smooth factors of the kernel are frozen at the cell
//! midpoint. The two singular factors are handled exactly: the last cell
//! before `t_i` carries `Y_j = ∫_cell (t_{j+1}-r)^{H-1/2} dW_r`, and the first
//! cell carries `Z = ∫_0^{t_1} r^{H-1/2} dW_r`; both are sampled jointly
//! with the cell increment. Every other cell uses the cell average of the
//! power factor times `ΔW_j`. The first cell of every row, and every cell of
//! the first few rows, instead take the L² projection of the exact kernel
//! onto the Gaussians available on that cell.

use std::sync::Arc;

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use statrs::function::beta::beta;

use super::{fbm, PathBundle, VolterraNoise};
use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::quad::gauss_legendre;
use crate::rng::{path_rng, Stream};

/// Weights producing `B_{t_i}` from the cell noise.
#[derive(Clone, Debug, PartialEq)]
pub struct VolterraRow {
    /// Weight on `ΔW_j`, `j < i`.
    pub dw: Vec<f64>,
    /// Weight on `Y_{i-1}`.
    pub y_last: f64,
    /// Weight on `Z`.
    pub z_first: f64,
    /// `Var(B_{t_i} | noise on [0, t_k])` for `k = 0..=i`.
    pub cond_var: Vec<f64>,
}

#[derive(Clone, Debug)]
struct CellCov {
    dt: f64,
    var_y: f64,
    cov_wy: f64,
    /// Covariance of `(ΔW_0, Y_0, Z)`.
    first: [[f64; 3]; 3],
    /// Its Cholesky factor.
    first_l: [[f64; 3]; 3],
}

impl CellCov {
    fn new(h: f64, dt: f64) -> Self {
        let var_y = dt.powf(2.0 * h) / (2.0 * h);
        let cov_wy = dt.powf(h + 0.5) / (h + 0.5);
        let cov_yz = dt.powf(2.0 * h) * beta(h + 0.5, h + 0.5);
        let first = [[dt, cov_wy, cov_wy], [cov_wy, var_y, cov_yz], [cov_wy, cov_yz, var_y]];
        let mut l = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..=i {
                let mut s = first[i][j];
                for k in 0..j {
                    s -= l[i][k] * l[j][k];
                }
                l[i][j] = if i == j { s.max(0.0).sqrt() } else if l[j][j] > 0.0 { s / l[j][j] } else { 0.0 };
            }
        }
        Self { dt, var_y, cov_wy, first, first_l: l }
    }
}

#[derive(Clone, Debug)]
pub struct VolterraFbm {
    pub hurst: f64,
    pub grid: TimeGrid,
    rows: Vec<Option<VolterraRow>>,
    cov: CellCov,
}

impl VolterraFbm {
    /// Model with every row `1..=n` tabulated.
    pub fn new(hurst: f64, grid: TimeGrid) -> Result<Arc<Self>> {
        let all: Vec<usize> = (1..=grid.n_steps).collect();
        Self::with_rows(hurst, grid, &all)
    }

    /// Model with only the listed rows; enough for values at those points.
    pub fn with_rows(hurst: f64, grid: TimeGrid, which: &[usize]) -> Result<Arc<Self>> {
        if !(hurst > 0.0 && hurst <= 0.5) {
            return Err(Error::Domain(format!("Volterra sampler needs H in (0, 1/2], got {hurst}")));
        }
        if grid.t0 != 0.0 {
            return Err(Error::Domain("fBm grids must start at 0".into()));
        }
        let n = grid.n_steps;
        if let Some(&i) = which.iter().find(|&&i| i == 0 || i > n) {
            return Err(Error::Domain(format!("row {i} outside 1..={n}")));
        }
        let cov = CellCov::new(hurst, grid.dt());
        let builder = RowBuilder::new(hurst, grid.dt(), n);
        let built: Vec<(usize, VolterraRow)> = which
            .par_iter()
            .map(|&i| builder.row(i, &cov).map(|r| (i, r)))
            .collect::<Result<_>>()?;
        let mut rows = vec![None; n + 1];
        rows[0] = Some(VolterraRow { dw: vec![], y_last: 0.0, z_first: 0.0, cond_var: vec![0.0] });
        for (i, r) in built {
            rows[i] = Some(r);
        }
        Ok(Arc::new(Self { hurst, grid, rows, cov }))
    }

    pub fn row(&self, i: usize) -> Result<&VolterraRow> {
        self.rows
            .get(i)
            .and_then(|r| r.as_ref())
            .ok_or(Error::MissingData("Volterra kernel row"))
    }

    fn is_brownian(&self) -> bool {
        self.hurst == 0.5
    }

    /// `Var(B_{t_i} | noise on [0, t_k])` of the discrete model.
    pub fn cond_var(&self, k: usize, i: usize) -> Result<f64> {
        if k > i {
            return Err(Error::Ordering(format!("conditioning index {k} after target {i}")));
        }
        Ok(self.row(i)?.cond_var[k])
    }

    pub fn variance(&self, i: usize) -> Result<f64> {
        self.cond_var(0, i)
    }

    /// `Cov(B_{t_i}, B_{t_k})` of the discrete model.
    pub fn covariance(&self, i: usize, k: usize) -> Result<f64> {
        if i == 0 || k == 0 {
            return Ok(0.0);
        }
        let (ri, rk) = (self.row(i)?, self.row(k)?);
        let c = &self.cov;
        let coef = |r: &VolterraRow, n: usize, j: usize| (r.dw[j], if j + 1 == n { r.y_last } else { 0.0 });
        let mut acc = 0.0;
        for j in 1..i.min(k) {
            let (a0, a1) = coef(ri, i, j);
            let (b0, b1) = coef(rk, k, j);
            acc += a0 * b0 * c.dt + (a0 * b1 + a1 * b0) * c.cov_wy + a1 * b1 * c.var_y;
        }
        let (a0, a1) = coef(ri, i, 0);
        let (b0, b1) = coef(rk, k, 0);
        let u = [a0, a1, ri.z_first];
        let v = [b0, b1, rk.z_first];
        for a in 0..3 {
            for b in 0..3 {
                acc += u[a] * c.first[a][b] * v[b];
            }
        }
        Ok(acc)
    }

    /// Cell noise for paths `path_offset..path_offset + n_paths`.
    /// With `fill_values` the fBm values at every grid point are added,
    /// which needs every row.
    pub fn sample(
        self: &Arc<Self>,
        dim: usize,
        n_paths: usize,
        path_offset: u64,
        seed: u64,
        fill_values: bool,
    ) -> Result<PathBundle> {
        let mut b = super::brownian::sample_brownian_range(self.grid, dim, n_paths, path_offset, seed)?;
        b.hurst = Some(self.hurst);
        let n = self.grid.n_steps;
        let (y, z) = if self.is_brownian() {
            (Vec::new(), Vec::new())
        } else {
            let w = b.w_increments.as_ref().unwrap();
            let sd = self.cov.dt.sqrt();
            let slope = self.cov.cov_wy / self.cov.dt;
            let resid = (self.cov.var_y - self.cov.cov_wy * slope).max(0.0).sqrt();
            let l = self.cov.first_l;
            let len = n * dim;
            let mut y = vec![0.0; len * n_paths];
            let mut z = vec![0.0; dim * n_paths];
            y.par_chunks_mut(len)
                .zip(z.par_chunks_mut(dim))
                .enumerate()
                .for_each(|(p, (yc, zc))| {
                    let mut rng = path_rng(seed, Stream::VolterraAux, path_offset + p as u64);
                    let wp = &w[p * len..(p + 1) * len];
                    for (j, yv) in yc.iter_mut().enumerate() {
                        let n2: f64 = StandardNormal.sample(&mut rng);
                        *yv = slope * wp[j] + resid * n2;
                    }
                    for (k, zv) in zc.iter_mut().enumerate() {
                        let n1 = wp[k] / sd;
                        let n2 = (yc[k] - l[1][0] * n1) / l[1][1];
                        let n3: f64 = StandardNormal.sample(&mut rng);
                        *zv = l[2][0] * n1 + l[2][1] * n2 + l[2][2] * n3;
                    }
                });
            (y, z)
        };
        b.volterra = Some(VolterraNoise { model: Arc::clone(self), y, z });
        if fill_values {
            self.fill_values(&mut b)?;
        }
        Ok(b)
    }

    fn noise<'a>(&self, b: &'a PathBundle) -> Result<(&'a [f64], &'a VolterraNoise)> {
        let w = b.w_increments.as_deref().ok_or(Error::MissingData("Brownian increments"))?;
        let v = b.volterra.as_ref().ok_or(Error::MissingData("Volterra noise"))?;
        if v.model.grid != self.grid || v.model.hurst != self.hurst {
            return Err(Error::GridMismatch("bundle was sampled from a different model".into()));
        }
        Ok((w, v))
    }

    /// Partial Volterra sum over cells `j < k` of row `i`, i.e.
    /// `E[B_{t_i} | noise on [0, t_k]]`. With `k = i` this is `B_{t_i}`.
    pub fn conditional_mean(&self, b: &PathBundle, p: usize, k: usize, i: usize, out: &mut [f64]) -> Result<()> {
        if k > i {
            return Err(Error::Ordering(format!("conditioning index {k} after target {i}")));
        }
        let (w, v) = self.noise(b)?;
        let row = self.row(i)?;
        let d = b.dim;
        let n = self.grid.n_steps;
        let wp = &w[p * n * d..(p + 1) * n * d];
        for (c, o) in out.iter_mut().enumerate().take(d) {
            let mut acc = 0.0;
            for j in 0..k.min(i) {
                acc += row.dw[j] * wp[j * d + c];
            }
            if !self.is_brownian() && k >= 1 {
                if k == i {
                    acc += row.y_last * v.y[p * n * d + (i - 1) * d + c];
                }
                acc += row.z_first * v.z[p * d + c];
            }
            *o = acc;
        }
        Ok(())
    }

    /// [`Self::conditional_mean`] for every path, `[path][dim]`.
    pub fn conditional_means(&self, b: &PathBundle, k: usize, i: usize) -> Result<Vec<f64>> {
        let d = b.dim;
        let mut out = vec![0.0; b.n_paths * d];
        out.par_chunks_mut(d)
            .enumerate()
            .try_for_each(|(p, o)| self.conditional_mean(b, p, k, i, o))?;
        Ok(out)
    }

    pub fn fill_values(&self, b: &mut PathBundle) -> Result<()> {
        for i in 1..=self.grid.n_steps {
            self.row(i)?;
        }
        let d = b.dim;
        let np = self.grid.n_points();
        let mut vals = vec![0.0; b.n_paths * np * d];
        {
            let bref: &PathBundle = b;
            vals.par_chunks_mut(np * d).enumerate().try_for_each(|(p, out)| {
                for i in 1..np {
                    self.conditional_mean(bref, p, i, i, &mut out[i * d..(i + 1) * d])?;
                }
                Ok::<(), Error>(())
            })?;
        }
        b.fbm_values = Some(vals);
        Ok(())
    }
}

/// Rows up to this index use projected weights on every cell.
const PROJECTED_ROWS: usize = 16;

struct RowBuilder {
    h: f64,
    dt: f64,
    c: f64,
    /// `k^{H+1/2}`
    pw: Vec<f64>,
    gl: (Vec<f64>, Vec<f64>),
    gl_fine: (Vec<f64>, Vec<f64>),
}

fn solve3(m: &[[f64; 3]; 3], b: &[f64; 3]) -> Result<[f64; 3]> {
    let det = |m: &[[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let d = det(m);
    if d.abs() < 1e-300 {
        return Err(Error::Numerical("singular first-cell covariance".into()));
    }
    let mut out = [0.0; 3];
    for (k, o) in out.iter_mut().enumerate() {
        let mut mk = *m;
        for r in 0..3 {
            mk[r][k] = b[r];
        }
        *o = det(&mk) / d;
    }
    Ok(out)
}

impl RowBuilder {
    fn new(h: f64, dt: f64, n: usize) -> Self {
        let pw = (0..=n).map(|k| (k as f64).powf(h + 0.5)).collect();
        Self { h, dt, c: fbm::kernel_constant(h), pw, gl: gauss_legendre(10), gl_fine: gauss_legendre(24) }
    }

    fn g_piece(&self, a: f64, b: f64) -> f64 {
        let (x, w) = &self.gl;
        let (m, r) = (0.5 * (a + b), 0.5 * (b - a));
        let e = -2.0 * self.h;
        let q = self.h - 0.5;
        x.iter()
            .zip(w)
            .map(|(x, w)| {
                let y = m + r * x;
                w * y.powf(e) * (1.0 - y).powf(q)
            })
            .sum::<f64>()
            * r
    }

    /// `∫_cell K_H(t_i, r) φ(r) dr` over cell `j` for `φ = 1,
    /// (t_{j+1} - r)^{H-1/2}, r^{H-1/2}`. Each half of the cell uses a power
    /// substitution towards its endpoint so the integrands stay bounded.
    fn cell_products(&self, i: usize, j: usize) -> Result<[f64; 3]> {
        let h = self.h;
        let a = h - 0.5;
        let p = 1.0 / (2.0 * h);
        let (lo, hi) = (j as f64 * self.dt, (j + 1) as f64 * self.dt);
        let half = 0.5 * self.dt;
        let ti = i as f64 * self.dt;
        let (x, w) = &self.gl_fine;
        let mut out = [0.0; 3];
        for (node, wt) in x.iter().zip(w) {
            let v = 0.5 * (node + 1.0);
            let jac = 0.5 * half * p * v.powf(p - 1.0);
            for r in [lo + half * v.powf(p), hi - half * v.powf(p)] {
                let k = r.powf(a) * fbm::kernel_profile(h, r / ti)?;
                let phi = [1.0, (hi - r).powf(a), r.powf(a)];
                for (o, f) in out.iter_mut().zip(phi) {
                    *o += wt * jac * k * f;
                }
            }
        }
        Ok(out)
    }

    fn row(&self, i: usize, cov: &CellCov) -> Result<VolterraRow> {
        let h = self.h;
        if h == 0.5 {
            let cond_var = (0..=i).map(|k| (i - k) as f64 * self.dt).collect();
            return Ok(VolterraRow { dw: vec![1.0; i], y_last: 0.0, z_first: 0.0, cond_var });
        }
        let a = h - 0.5;
        let ap = h + 0.5;
        let dtp = self.dt.powf(a);
        let fi = i as f64;
        let x = |j: usize| (j as f64 + 0.5) / fi;
        // G at the cell midpoints, accumulated from the right end.
        let mut g = vec![0.0; i];
        g[i - 1] = fbm::kernel_g(h, x(i - 1))?;
        for j in (0..i - 1).rev() {
            g[j] = g[j + 1] + self.g_piece(x(j), x(j + 1));
        }
        let mut dw = vec![0.0; i];
        for j in 0..i {
            let f = self.c * x(j).powf(-a);
            let gg = -self.c * a * g[j];
            let s = dtp * (self.pw[i - j] - self.pw[i - j - 1]) / ap;
            let r = dtp * (self.pw[j + 1] - self.pw[j]) / ap;
            dw[j] = if j == i - 1 { 0.0 } else { f * s } + if j == 0 { 0.0 } else { gg * r };
        }
        let mut y_last = self.c * x(i - 1).powf(-a);
        let mut z_first = -self.c * a * g[0];
        // Both kernel factors vary strongly on the first cell, and on every
        // cell of the first rows, so those weights come from projecting
        // K(t_i, .) onto the noise available on the cell.
        let cells: Vec<usize> = if i <= PROJECTED_ROWS { (0..i).collect() } else { vec![0] };
        for j in cells {
            let b = self.cell_products(i, j)?;
            if i == 1 {
                let c = solve3(&cov.first, &b)?;
                dw[0] = c[0];
                y_last = c[1];
                z_first = c[2];
            } else if j == 0 {
                let m = &cov.first;
                let det = m[0][0] * m[2][2] - m[0][2] * m[2][0];
                dw[0] = (m[2][2] * b[0] - m[0][2] * b[2]) / det;
                z_first = (m[0][0] * b[2] - m[2][0] * b[0]) / det;
            } else if j == i - 1 {
                let det = cov.dt * cov.var_y - cov.cov_wy * cov.cov_wy;
                dw[j] = (cov.var_y * b[0] - cov.cov_wy * b[1]) / det;
                y_last = (cov.dt * b[1] - cov.cov_wy * b[0]) / det;
            } else {
                dw[j] = b[0] / cov.dt;
            }
        }
        // Per-cell variance contributions; cells are independent.
        let mut contrib = vec![0.0; i];
        for j in 1..i {
            contrib[j] = dw[j] * dw[j] * self.dt;
        }
        if i > 1 {
            contrib[i - 1] += y_last * y_last * cov.var_y + 2.0 * dw[i - 1] * y_last * cov.cov_wy;
        }
        let v0 = [dw[0], if i == 1 { y_last } else { 0.0 }, z_first];
        contrib[0] = (0..3)
            .map(|a| (0..3).map(|b| v0[a] * cov.first[a][b] * v0[b]).sum::<f64>())
            .sum();
        let mut cond_var = vec![0.0; i + 1];
        for k in (0..i).rev() {
            cond_var[k] = cond_var[k + 1] + contrib[k];
        }
        Ok(VolterraRow { dw, y_last, z_first, cond_var })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::paths::sample_brownian;

    #[test]
    fn brownian_case_reproduces_partial_sums_bitwise() {
        let g = TimeGrid::new(0.0, 1.0, 64).unwrap();
        let m = VolterraFbm::new(0.5, g).unwrap();
        let b = m.sample(2, 8, 0, 99, true).unwrap();
        let w = sample_brownian(g, 2, 8, 99).unwrap();
        for p in 0..8 {
            assert_eq!(b.fbm_path(p).unwrap(), &w.brownian_path(p).unwrap()[..]);
        }
    }

    #[test]
    fn discrete_variance_close_to_t_2h() {
        for &h in &[0.1, 0.3, 0.45] {
            let g = TimeGrid::new(0.0, 1.0, 512).unwrap();
            let m = VolterraFbm::with_rows(h, g, &[128, 512]).unwrap();
            for &i in &[128usize, 512] {
                let v = m.variance(i).unwrap();
                let t = g.time(i);
                let rel = v / t.powf(2.0 * h) - 1.0;
                assert!(rel.abs() < 0.01, "H={h} i={i} rel={rel}");
            }
        }
    }

    #[test]
    fn first_points_are_accurate() {
        for &h in &[0.1, 0.3] {
            let g = TimeGrid::dyadic(1.0, 8).unwrap();
            let m = VolterraFbm::with_rows(h, g, &[1, 2, 3, 4, 8]).unwrap();
            for i in [1usize, 2, 3, 4, 8] {
                let rel = m.variance(i).unwrap() / g.time(i).powf(2.0 * h) - 1.0;
                assert!(rel.abs() < 0.01, "H={h} i={i} rel={rel}");
            }
        }
    }

    #[test]
    fn discrete_conditional_variance_tracks_sigma() {
        let h = 0.3;
        let g = TimeGrid::new(0.0, 1.0, 256).unwrap();
        let m = VolterraFbm::with_rows(h, g, &[256]).unwrap();
        for &k in &[64usize, 128, 224] {
            let v = m.cond_var(k, 256).unwrap();
            let s = fbm::sigma(h, g.time(k), 1.0).unwrap().powi(2);
            assert!((v / s - 1.0).abs() < 0.02, "k={k}: {v} vs {s}");
        }
    }

    #[test]
    fn covariance_is_consistent_with_variance_and_exact_law() {
        let g = TimeGrid::dyadic(1.0, 7).unwrap();
        let m = VolterraFbm::new(0.3, g).unwrap();
        for i in [1usize, 5, 64, 128] {
            assert!((m.covariance(i, i).unwrap() - m.variance(i).unwrap()).abs() < 1e-12);
        }
        let exact = fbm::covariance(0.3, 0.5, 1.0);
        assert!((m.covariance(64, 128).unwrap() - exact).abs() < 0.02 * exact);
        assert_eq!(m.covariance(3, 9).unwrap(), m.covariance(9, 3).unwrap());
    }

    #[test]
    fn missing_rows_are_reported() {
        let g = TimeGrid::new(0.0, 1.0, 16).unwrap();
        let m = VolterraFbm::with_rows(0.3, g, &[16]).unwrap();
        assert!(matches!(m.row(3), Err(Error::MissingData(_))));
        assert!(m.sample(1, 2, 0, 1, true).is_err());
    }
}
