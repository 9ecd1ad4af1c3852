//! Moments of occupation integrals `∫_0^T h(t, B_t) dt` against the
//! `n! C^n / Γ(nτ + 1)` growth of the exponential-moment bound.

use rayon::prelude::*;
use serde::Serialize;
use statrs::function::gamma::{gamma, ln_gamma};

use crate::error::{Error, Result};
use crate::heat::SpatialField;
use crate::paths::PathBundle;
use crate::stats::{mean_estimate, Estimate};

#[derive(Clone, Debug, Serialize)]
pub struct MomentRow {
    pub n: u32,
    pub moment: Estimate,
    /// `(E I^n Γ(nτ+1) / (n! ‖h‖^n T^{nτ}))^{1/n}`
    pub constant: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct MomentTable {
    pub tau: f64,
    pub norm: f64,
    pub rows: Vec<MomentRow>,
    /// `E I` from `∫ P_{Var B_t} h(t, ·)(0) dt` on the same grid.
    pub first_moment_quadrature: f64,
    /// Largest `C_n / C_1`.
    pub max_constant_ratio: f64,
    pub pass: bool,
    pub warnings: Vec<String>,
}

/// `h ≥ 0` with `‖h‖_{L^q L^p} = norm`; `n_list` entries must lie in `1..=6`.
pub fn moment_bound_check(
    h: &dyn SpatialField,
    bundle: &PathBundle,
    p: f64,
    q: f64,
    norm: f64,
    n_list: &[u32],
) -> Result<MomentTable> {
    let hurst = bundle.hurst.ok_or(Error::MissingData("Hurst index"))?;
    let ex = super::exponents(hurst, bundle.dim, p, q, None);
    if ex.tau <= 0.0 {
        return Err(Error::Condition(format!("H d / p + 1 / q = {} is not below 1", 1.0 - ex.tau)));
    }
    if let Some(n) = n_list.iter().find(|&&n| n == 0 || n > 6) {
        return Err(Error::Domain(format!("moment order {n} outside 1..=6")));
    }
    let vals = bundle.fbm_values.as_deref().ok_or(Error::MissingData("fBm values"))?;
    let grid = bundle.grid;
    let (d, np, dt) = (bundle.dim, grid.n_points(), grid.dt());
    let t_end = grid.t1 - grid.t0;
    let fields: Vec<_> = (0..np).map(|i| h.prepare(grid.time(i), 0.0)).collect::<Result<_>>()?;
    let integrals: Vec<f64> = (0..bundle.n_paths)
        .into_par_iter()
        .map(|path| {
            let x = &vals[path * np * d..(path + 1) * np * d];
            (0..np)
                .map(|i| {
                    let w = if i == 0 || i == np - 1 { 0.5 } else { 1.0 };
                    w * dt * fields[i].value(&x[i * d..(i + 1) * d])
                })
                .sum()
        })
        .collect();
    let mut rows = Vec::new();
    for &n in n_list {
        let pw: Vec<f64> = integrals.iter().map(|v| v.powi(n as i32)).collect();
        let moment = mean_estimate(&pw)?;
        let nt = n as f64 * ex.tau;
        let log_c = (moment.value.ln() + ln_gamma(nt + 1.0) - gamma(n as f64 + 1.0).ln()
            - n as f64 * (norm.ln() + ex.tau * t_end.ln()))
            / n as f64;
        rows.push(MomentRow { n, moment, constant: log_c.exp() });
    }
    let origin = vec![0.0; d];
    let model = bundle.volterra.as_ref().map(|v| &v.model);
    let mut quad = 0.0;
    for i in 0..np {
        let var = match model {
            Some(m) => m.variance(i)?,
            None => grid.time(i).powf(2.0 * hurst),
        };
        let w = if i == 0 || i == np - 1 { 0.5 } else { 1.0 };
        quad += w * dt * h.prepare(grid.time(i), var)?.value(&origin);
    }
    let c1 = rows.iter().find(|r| r.n == 1).map(|r| r.constant).or(rows.first().map(|r| r.constant));
    let max_constant_ratio = match c1 {
        Some(c1) if c1 > 0.0 => rows.iter().map(|r| r.constant / c1).fold(0.0, f64::max),
        _ => f64::NAN,
    };
    let mut warnings = Vec::new();
    if n_list.contains(&6) && bundle.n_paths < 10_000 {
        warnings.push(format!("sixth moment from {} paths is dominated by the tail", bundle.n_paths));
    }
    Ok(MomentTable {
        tau: ex.tau,
        norm,
        rows,
        first_moment_quadrature: quad,
        max_constant_ratio,
        pass: max_constant_ratio <= 1.2,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::TimeGrid;
    use crate::heat::{Constant, GaussianBump};
    use crate::paths::VolterraFbm;

    fn bundle(paths: usize) -> PathBundle {
        VolterraFbm::new(0.3, TimeGrid::dyadic(1.0, 7).unwrap()).unwrap().sample(1, paths, 0, 9, true).unwrap()
    }

    #[test]
    fn unit_field_moments_are_exact() {
        let b = bundle(20);
        let one = Constant { dim: 1, value: 1.0 };
        let t = moment_bound_check(&one, &b, f64::INFINITY, f64::INFINITY, 1.0, &[1, 2, 3]).unwrap();
        for r in &t.rows {
            assert!((r.moment.value - 1.0).abs() < 1e-12);
            assert!((r.constant - 1.0).abs() < 1e-9);
        }
        assert!(t.pass);
        assert!((t.first_moment_quadrature - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bump_first_moment_and_jensen() {
        let b = bundle(4000);
        let f = GaussianBump { center: vec![0.3], var: 0.2, amp: 1.0 };
        let t = moment_bound_check(&f, &b, f64::INFINITY, f64::INFINITY, 1.0, &[1, 2, 6]).unwrap();
        let m1 = &t.rows[0].moment;
        assert!((m1.value - t.first_moment_quadrature).abs() < 3.0 * m1.stderr, "{m1:?} {}", t.first_moment_quadrature);
        assert!(t.rows[1].moment.value >= m1.value * m1.value);
        assert_eq!(t.warnings.len(), 1);
    }
}
