use rayon::prelude::*;
use serde::Serialize;

use super::{young_integral, HolderPath};
use crate::error::{Error, Result};
use crate::heat::SpatialField;
use crate::paths::PathBundle;
use crate::quad::gauss_legendre;

#[derive(Clone, Debug, Serialize)]
pub struct DivisionReport {
    /// `∫ f(B + ψ) - f(B + ψ̄) dr` per path.
    pub lhs: Vec<f64>,
    /// `∫ (ψ - ψ̄) · dV` per path.
    pub rhs: Vec<f64>,
    pub residual_l2: f64,
    pub relative: f64,
}

/// `∫_0^T f_r(X_r) - f_r(X̄_r) dr = ∫_0^T (ψ_r - ψ̄_r) · dV_r` with
/// `X = B + ψ`, `X̄ = B + ψ̄` and
/// `V_t = ∫_0^t ∫_0^1 ∇f_r(B_r + θ ψ_r + (1-θ) ψ̄_r) dθ dr`.
/// `psi`, `psi_bar` are `[path][point][dim]` on the bundle grid.
pub fn division_identity_check(f: &dyn SpatialField, bundle: &PathBundle, psi: &[f64], psi_bar: &[f64]) -> Result<DivisionReport> {
    let vals = bundle.fbm_values.as_deref().ok_or(Error::MissingData("fBm values"))?;
    let grid = bundle.grid;
    let (d, np, dt) = (bundle.dim, grid.n_points(), grid.dt());
    if f.dim() != d || psi.len() != vals.len() || psi_bar.len() != vals.len() {
        return Err(Error::GridMismatch("field, paths and drift parts disagree".into()));
    }
    let fields: Vec<_> = (0..np).map(|i| f.prepare(grid.time(i), 0.0)).collect::<Result<_>>()?;
    let (nodes, weights) = gauss_legendre(8);
    let len = np * d;
    let rows: Vec<(f64, f64)> = (0..bundle.n_paths)
        .into_par_iter()
        .map(|p| {
            let (b, y, z) = (&vals[p * len..(p + 1) * len], &psi[p * len..(p + 1) * len], &psi_bar[p * len..(p + 1) * len]);
            let mut lhs = 0.0;
            let mut g = vec![0.0; len];
            let mut x = vec![0.0; d];
            let mut grad = vec![0.0; d];
            for i in 0..np {
                let w = if i == 0 || i == np - 1 { 0.5 * dt } else { dt };
                let r = i * d..(i + 1) * d;
                let xi: Vec<f64> = b[r.clone()].iter().zip(&y[r.clone()]).map(|(a, c)| a + c).collect();
                let xb: Vec<f64> = b[r.clone()].iter().zip(&z[r.clone()]).map(|(a, c)| a + c).collect();
                lhs += w * (fields[i].value(&xi) - fields[i].value(&xb));
                for (node, wt) in nodes.iter().zip(&weights) {
                    let th = 0.5 * (node + 1.0);
                    for k in 0..d {
                        x[k] = b[i * d + k] + th * y[i * d + k] + (1.0 - th) * z[i * d + k];
                    }
                    fields[i].gradient(&x, &mut grad);
                    for k in 0..d {
                        g[i * d + k] += 0.5 * wt * grad[k];
                    }
                }
            }
            let mut v = vec![0.0; len];
            for i in 1..np {
                for k in 0..d {
                    v[i * d + k] = v[(i - 1) * d + k] + 0.5 * dt * (g[(i - 1) * d + k] + g[i * d + k]);
                }
            }
            let diff: Vec<f64> = y.iter().zip(z).map(|(a, c)| a - c).collect();
            let yp = HolderPath::new(grid, d, diff, 1.0)?;
            let vp = HolderPath::new(grid, d, v, 1.0)?;
            let rhs = young_integral(&yp, &vp, 0, grid.n_steps)?.value;
            Ok((lhs, rhs))
        })
        .collect::<Result<_>>()?;
    let lhs: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let rhs: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let n = rows.len() as f64;
    let residual_l2 = (rows.iter().map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / n).sqrt();
    let scale = (lhs.iter().map(|a| a * a).sum::<f64>() / n).sqrt();
    let relative = if scale > 0.0 { residual_l2 / scale } else { residual_l2 };
    Ok(DivisionReport { lhs, rhs, residual_l2, relative })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::TimeGrid;
    use crate::heat::{Affine, GaussianBump};
    use crate::paths::VolterraFbm;

    fn setup() -> (PathBundle, Vec<f64>, Vec<f64>) {
        let g = TimeGrid::dyadic(1.0, 8).unwrap();
        let b = VolterraFbm::new(0.3, g).unwrap().sample(1, 10, 0, 2, true).unwrap();
        let psi: Vec<f64> = (0..10).flat_map(|_| g.times().into_iter().map(|t| 0.2 + t.sin())).collect();
        let bar: Vec<f64> = (0..10).flat_map(|_| g.times().into_iter().map(|t| -0.1 + 0.5 * t)).collect();
        (b, psi, bar)
    }

    #[test]
    fn equal_parts_give_zero() {
        let (b, psi, _) = setup();
        let f = GaussianBump { center: vec![0.0], var: 0.2, amp: 1.0 };
        let r = division_identity_check(&f, &b, &psi, &psi).unwrap();
        assert!(r.lhs.iter().chain(&r.rhs).all(|&v| v == 0.0));
    }

    #[test]
    fn linear_field_is_exact_up_to_time_quadrature() {
        let (b, psi, bar) = setup();
        let f = Affine { slope: vec![2.0], offset: 0.5 };
        let r = division_identity_check(&f, &b, &psi, &bar).unwrap();
        // ∫ 2 (ψ - ψ̄) dr against its left-point sum.
        assert!(r.relative < 1e-2, "{r:?}");
    }

    #[test]
    fn bump_residual_is_small() {
        let (b, psi, bar) = setup();
        let f = GaussianBump { center: vec![0.1], var: 0.1, amp: 1.0 };
        let r = division_identity_check(&f, &b, &psi, &bar).unwrap();
        assert!(r.relative < 0.02, "{r:?}");
    }
}
