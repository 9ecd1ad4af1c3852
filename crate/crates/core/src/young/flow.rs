//! The linear flow `dY = Y dV`, `Y_0 = I`, and the `V` process built from
//! drift gradients along a solution.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use super::{pooled_exponent, HolderPath};
use crate::averaging::{cumulative_cells, SdeSolution};
use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::heat::{Smoothed, SpatialField};
use crate::sewing::{sewing_limit, Germ, SewingConfig, SewingLimit};

const BLOW_UP: f64 = 1e12;

/// `Y_{i+1} = Y_i + Y_i ΔV_i` on the grid of `v`, whose `d²` components are
/// the entries `V^{kj}` at `k d + j`. Returns `[point][d × d]`.
pub fn solve_linear_young(v: &HolderPath, d: usize) -> Result<Vec<f64>> {
    if v.dim != d * d {
        return Err(Error::Domain(format!("V has {} components, expected {}", v.dim, d * d)));
    }
    if v.declared <= 0.5 {
        return Err(Error::Domain(format!("flow equation needs β > 1/2, got {}", v.declared)));
    }
    let n = v.grid.n_steps;
    let dd = d * d;
    let mut y = vec![0.0; (n + 1) * dd];
    for i in 0..d {
        y[i * d + i] = 1.0;
    }
    for s in 0..n {
        let (va, vb) = (v.at(s), v.at(s + 1));
        let (cur, next) = y.split_at_mut((s + 1) * dd);
        let ys = &cur[s * dd..];
        for i in 0..d {
            for j in 0..d {
                let mut acc = ys[i * d + j];
                for k in 0..d {
                    acc += ys[i * d + k] * (vb[k * d + j] - va[k * d + j]);
                }
                next[i * d + j] = acc;
            }
        }
        if next[..dd].iter().any(|x| !x.is_finite() || x.abs() > BLOW_UP) {
            return Err(Error::Numerical(format!("flow exceeded {BLOW_UP:e} at t = {}", v.grid.time(s + 1))));
        }
    }
    Ok(y)
}

/// `A^{kj}_{s,t} = ∫_s^t ∂_k P_{(r-s)^{2H}} b^j_r (X_s) dr`, trapezoid in `r`.
pub struct FlowGerm<'a> {
    drift: &'a [Arc<dyn SpatialField>],
    sol: &'a SdeSolution,
    hurst: f64,
}

impl<'a> FlowGerm<'a> {
    pub fn new(drift: &'a [Arc<dyn SpatialField>], sol: &'a SdeSolution, hurst: f64) -> Result<Self> {
        if drift.len() != sol.dim || drift.iter().any(|f| f.dim() != sol.dim) {
            return Err(Error::Domain("drift and solution dimensions differ".into()));
        }
        for f in drift {
            f.prepare(0.0, 0.0)?;
        }
        Ok(Self { drift, sol, hurst })
    }

    fn prepared(&self, s: usize, r: usize) -> Vec<Box<dyn Smoothed + 'a>> {
        let g = &self.sol.grid;
        let var = (g.time(r) - g.time(s)).powf(2.0 * self.hurst);
        self.drift.iter().map(|f| f.prepare(g.time(r), var).expect("checked at construction")).collect()
    }

    fn weight(&self, s: usize, t: usize, r: usize) -> f64 {
        let dt = self.sol.grid.dt();
        if s == t {
            0.0
        } else if r == s || r == t {
            0.5 * dt
        } else {
            dt
        }
    }

    fn add(&self, fs: &[Box<dyn Smoothed + 'a>], x: &[f64], w: f64, g: &mut [f64], out: &mut [f64]) {
        let d = self.sol.dim;
        for (j, f) in fs.iter().enumerate() {
            f.gradient(x, g);
            for k in 0..d {
                out[k * d + j] += w * g[k];
            }
        }
    }

    fn point(&self, p: usize, s: usize) -> &[f64] {
        let d = self.sol.dim;
        &self.sol.path(p)[s * d..(s + 1) * d]
    }
}

impl Germ for FlowGerm<'_> {
    fn grid(&self) -> &TimeGrid {
        &self.sol.grid
    }
    fn n_paths(&self) -> usize {
        self.sol.n_paths
    }
    fn out_dim(&self) -> usize {
        self.sol.dim * self.sol.dim
    }
    fn eval(&self, p: usize, s: usize, t: usize, out: &mut [f64]) {
        out.fill(0.0);
        let mut g = vec![0.0; self.sol.dim];
        for r in s..=t {
            let w = self.weight(s, t, r);
            if w != 0.0 {
                self.add(&self.prepared(s, r), self.point(p, s), w, &mut g, out);
            }
        }
    }
    fn eval_all(&self, s: usize, t: usize, out: &mut [f64]) {
        out.fill(0.0);
        let dd = self.out_dim();
        for r in s..=t {
            let w = self.weight(s, t, r);
            if w == 0.0 {
                continue;
            }
            let fs = self.prepared(s, r);
            out.par_chunks_mut(dd).enumerate().for_each(|(p, o)| {
                let mut g = vec![0.0; self.sol.dim];
                self.add(&fs, self.point(p, s), w, &mut g, o);
            });
        }
    }
}

#[derive(Clone, Debug)]
pub struct BuiltV {
    /// One `d²`-component path per sample path.
    pub paths: Vec<HolderPath>,
    pub pooled_exponent: Option<f64>,
    pub convergence: Option<SewingLimit>,
}

#[derive(Clone, Debug, Serialize)]
pub struct JacobianComparison {
    /// `‖Y_T - J_T‖_F / ‖J_T‖_F` per path.
    pub relative_errors: Vec<f64>,
    pub mean_relative_error: f64,
    pub max_relative_error: f64,
}

/// `V_{t_i}` as the finest-grid sewing limit of [`FlowGerm`] on every path.
pub fn build_v(
    drift: &[Arc<dyn SpatialField>],
    sol: &SdeSolution,
    hurst: f64,
    declared: f64,
    sewing: Option<&SewingConfig>,
) -> Result<BuiltV> {
    let germ = FlowGerm::new(drift, sol, hurst)?;
    let dd = germ.out_dim();
    let np = sol.grid.n_points();
    let cum = cumulative_cells(&germ);
    let paths = cum
        .chunks(np * dd)
        .map(|c| HolderPath::new(sol.grid, dd, c.to_vec(), declared))
        .collect::<Result<Vec<_>>>()?;
    let convergence = match sewing {
        Some(cfg) => Some(sewing_limit(&germ, 0, sol.grid.n_steps, cfg)?),
        None => None,
    };
    Ok(BuiltV { pooled_exponent: pooled_exponent(&paths), paths, convergence })
}

/// Terminal flow against a finite-difference Jacobian `[path][i][j]` of
/// `∂_{x_i} X^j_T`.
pub fn compare_jacobian(v: &BuiltV, d: usize, jac: &[f64]) -> Result<JacobianComparison> {
    let dd = d * d;
    if jac.len() != v.paths.len() * dd {
        return Err(Error::Domain("Jacobian layout does not match the V paths".into()));
    }
    let relative_errors = v
        .paths
        .par_iter()
        .zip(jac.par_chunks(dd))
        .map(|(vp, j)| {
            let y = solve_linear_young(vp, d)?;
            let yt = &y[y.len() - dd..];
            let num: f64 = yt.iter().zip(j).map(|(a, b)| (a - b) * (a - b)).sum();
            let den: f64 = j.iter().map(|b| b * b).sum();
            Ok((num / den).sqrt())
        })
        .collect::<Result<Vec<f64>>>()?;
    let mean_relative_error = crate::stats::mean(&relative_errors)?;
    let max_relative_error = relative_errors.iter().cloned().fold(0.0, f64::max);
    Ok(JacobianComparison { relative_errors, mean_relative_error, max_relative_error })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::averaging::{solve_singular_sde, Mollification, SdeConfig};
    use crate::heat::{Affine, FourierModes, GaussianBump};
    use crate::paths::{sample_brownian, VolterraFbm};

    #[test]
    fn zero_v_gives_identity() {
        let g = TimeGrid::dyadic(1.0, 4).unwrap();
        let v = HolderPath::new(g, 4, vec![0.0; 17 * 4], 1.0).unwrap();
        let y = solve_linear_young(&v, 2).unwrap();
        for c in y.chunks(4) {
            assert_eq!(c, &[1.0, 0.0, 0.0, 1.0]);
        }
    }

    #[test]
    fn scalar_flow_is_exponential() {
        let g = TimeGrid::dyadic(1.0, 12).unwrap();
        let v = HolderPath::from_fn(g, 1.0, |t| (2.0 * t).sin()).unwrap();
        let y = solve_linear_young(&v, 1).unwrap();
        let exact = (2f64).sin().exp();
        assert!((y[4096] - exact).abs() < 2.0 / 4096.0 * exact * 4.0);
    }

    #[test]
    fn flow_is_multiplicative() {
        let n = 64;
        let g = TimeGrid::dyadic(1.0, 6).unwrap();
        let vals: Vec<f64> = g
            .times()
            .iter()
            .flat_map(|&t| [t.sin(), 0.3 * t, -t * t, (2.0 * t).cos() - 1.0])
            .collect();
        let v = HolderPath::new(g, 4, vals.clone(), 1.0).unwrap();
        let y = solve_linear_young(&v, 2).unwrap();
        let u = 24;
        let tail = HolderPath::new(TimeGrid::new(g.time(u), 1.0, n - u).unwrap(), 4, vals[u * 4..].to_vec(), 1.0).unwrap();
        let z = solve_linear_young(&tail, 2).unwrap();
        let (a, b) = (&y[u * 4..u * 4 + 4], &z[z.len() - 4..]);
        let prod = [a[0] * b[0] + a[1] * b[2], a[0] * b[1] + a[1] * b[3], a[2] * b[0] + a[3] * b[2], a[2] * b[1] + a[3] * b[3]];
        for (p, q) in prod.iter().zip(&y[n * 4..]) {
            assert!((p - q).abs() < 1e-12);
        }
    }

    #[test]
    fn blow_up_is_reported() {
        let g = TimeGrid::dyadic(1.0, 8).unwrap();
        let v = HolderPath::from_fn(g, 1.0, |t| 1e4 * t).unwrap();
        assert!(matches!(solve_linear_young(&v, 1), Err(Error::Numerical(_))));
    }

    fn sol(drift: Vec<Arc<dyn SpatialField>>, x0: Vec<f64>, paths: usize) -> SdeSolution {
        let g = TimeGrid::dyadic(1.0, 8).unwrap();
        let m = VolterraFbm::new(0.5, g).unwrap();
        let b = m.sample(x0.len(), paths, 0, 3, true).unwrap();
        let cfg = SdeConfig { drift, p: f64::INFINITY, q: f64::INFINITY, x0, mollification: Mollification::None };
        solve_singular_sde(&cfg, &b).unwrap()
    }

    #[test]
    fn linear_drift_gives_linear_v() {
        let drift: Vec<Arc<dyn SpatialField>> = vec![
            Arc::new(Affine { slope: vec![1.0, 2.0], offset: 0.0 }),
            Arc::new(Affine { slope: vec![-0.5, 0.25], offset: 1.0 }),
        ];
        let s = sol(drift.clone(), vec![0.0, 0.0], 3);
        let v = build_v(&drift, &s, 0.5, 1.0, None).unwrap();
        let grad = [1.0, -0.5, 2.0, 0.25];
        for p in &v.paths {
            for (i, t) in s.grid.times().iter().enumerate() {
                for (a, b) in p.at(i).iter().zip(&grad) {
                    assert!((a - b * t).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn smooth_drift_v_matches_pathwise_integral() {
        let drift: Vec<Arc<dyn SpatialField>> = vec![Arc::new(FourierModes { dim: 1, modes: vec![(1.0, vec![2.0], 0.3)] })];
        let s = sol(drift.clone(), vec![0.2], 5);
        let v = build_v(&drift, &s, 0.5, 1.0, None).unwrap();
        for (p, vp) in v.paths.iter().enumerate() {
            let x = s.path(p);
            let direct: f64 = (0..256).map(|i| -2.0 * (2.0 * x[i] + 0.3).sin() / 256.0).sum();
            assert!((vp.at(256)[0] - direct).abs() < 0.02, "{} {direct}", vp.at(256)[0]);
        }
        assert!((v.pooled_exponent.unwrap() - 1.0).abs() < 0.1);
    }

    #[test]
    fn flow_matches_discrete_jacobian_for_brownian_sde() {
        let g = TimeGrid::dyadic(1.0, 8).unwrap();
        let drift: Vec<Arc<dyn SpatialField>> = vec![Arc::new(GaussianBump { center: vec![0.0], var: 0.5, amp: 1.0 })];
        let b = sample_brownian(g, 1, 4, 1).unwrap();
        let mut b = b;
        let vals: Vec<f64> = (0..4).flat_map(|p| b.brownian_path(p).unwrap()).collect();
        b.fbm_values = Some(vals);
        let run = |x0: f64| {
            let cfg = SdeConfig {
                drift: drift.clone(),
                p: f64::INFINITY,
                q: f64::INFINITY,
                x0: vec![x0],
                mollification: Mollification::None,
            };
            solve_singular_sde(&cfg, &b).unwrap()
        };
        let h = 1e-5;
        let (s0, up, dn) = (run(0.3), run(0.3 + h), run(0.3 - h));
        let jac: Vec<f64> = (0..4).map(|p| (up.path(p)[256] - dn.path(p)[256]) / (2.0 * h)).collect();
        let v = build_v(&drift, &s0, 0.5, 1.0, None).unwrap();
        let c = compare_jacobian(&v, 1, &jac).unwrap();
        assert!(c.max_relative_error < 0.01, "{c:?}");
    }
}
