//! The averaged field `(t, x) ↦ A^x_t[f]` and its joint Hölder regularity.

use serde::Serialize;

use super::exponents::{exponents, Exponents};
use super::germ::{cumulative_cells, finest_sum, AveragedGerm, Readout};
use crate::error::{Error, Result};
use crate::heat::SpatialField;
use crate::paths::PathBundle;
use crate::sewing::{estimate_lm, sewing_limit, RateReport, SewingConfig, SewingLimit};

#[derive(Clone, Debug)]
pub struct AveragedFieldConfig {
    /// Declared class of `f`: `L^q_T C^ν`.
    pub nu: f64,
    pub q: f64,
    /// Spatial Hölder exponent tested for the differences.
    pub alpha: f64,
    pub m: f64,
    pub base: Vec<f64>,
    /// Spatial gaps along the first axis.
    pub space_gaps: Vec<f64>,
    /// Time gaps in cells; windows `[k g, (k+1) g]` are pooled.
    pub time_gaps: Vec<usize>,
    /// Index into `space_gaps` used for the time regularity of differences.
    pub diff_gap: usize,
    /// Sewing convergence check on `[0, T]` at the base point.
    pub sewing: Option<SewingConfig>,
}

#[derive(Clone, Debug, Serialize)]
pub struct AveragedField {
    pub exponents: Exponents,
    pub offsets: Vec<Vec<f64>>,
    /// `A^{x_k}_{0, t_i}`, layout `[offset][path][point]`.
    #[serde(skip)]
    pub values: Vec<Vec<f64>>,
    pub time_report: RateReport,
    pub space_report: RateReport,
    pub diff_time_report: RateReport,
    pub predicted_time: f64,
    pub predicted_space: f64,
    pub predicted_diff_time: f64,
    #[serde(skip)]
    pub convergence: Option<SewingLimit>,
}

fn windows(values: &[f64], n_points: usize, g: usize) -> Vec<f64> {
    let n = n_points - 1;
    let mut out = Vec::new();
    for path in values.chunks(n_points) {
        let mut s = 0;
        while s + g <= n {
            out.push(path[s + g] - path[s]);
            s += g;
        }
    }
    out
}

/// Finest-grid sewing limits of the scalar averaged germ at the base point
/// and at `base + g e_1`, with three rate fits: `‖A_{s,t}‖` against `t - s`,
/// `‖A^{x+g}_{0,T} - A^x_{0,T}‖` against `g`, and the time fit of the
/// difference at one fixed `g`.
pub fn averaged_field(field: &dyn SpatialField, bundle: &PathBundle, cfg: &AveragedFieldConfig) -> Result<AveragedField> {
    let h = bundle.hurst.ok_or(Error::MissingData("Hurst index"))?;
    let ex = exponents(h, bundle.dim, f64::INFINITY, cfg.q, Some(cfg.nu));
    let gamma = ex.gamma.unwrap();
    if gamma <= 0.5 {
        return Err(Error::Condition(format!("γ = 1 + Hν - 1/q = {gamma} does not exceed 1/2")));
    }
    if cfg.diff_gap >= cfg.space_gaps.len() {
        return Err(Error::Domain("diff_gap indexes past space_gaps".into()));
    }
    let mut offsets = vec![cfg.base.clone()];
    for g in &cfg.space_gaps {
        let mut x = cfg.base.clone();
        x[0] += g;
        offsets.push(x);
    }
    let germ = AveragedGerm::new(field, bundle, cfg.base.clone(), Readout::Value)?;
    let values: Vec<Vec<f64>> = offsets.iter().map(|x| cumulative_cells(&germ.with_offset(x.clone()))).collect();
    let np = bundle.grid.n_points();
    let dt = bundle.grid.dt();
    let n = bundle.grid.n_steps;

    let by_time: Vec<(f64, Vec<f64>)> =
        cfg.time_gaps.iter().map(|&g| (g as f64 * dt, windows(&values[0], np, g))).collect();
    let time_report = estimate_lm("time gap", &sorted(by_time), 1, cfg.m)?;

    let end = |v: &[f64]| v.chunks(np).map(|c| c[n]).collect::<Vec<f64>>();
    let base_end = end(&values[0]);
    let by_space: Vec<(f64, Vec<f64>)> = cfg
        .space_gaps
        .iter()
        .enumerate()
        .map(|(k, &g)| (g.abs(), end(&values[k + 1]).iter().zip(&base_end).map(|(a, b)| a - b).collect()))
        .collect();
    let space_report = estimate_lm("space gap", &sorted(by_space), 1, cfg.m)?;

    let diff: Vec<f64> = values[cfg.diff_gap + 1].iter().zip(&values[0]).map(|(a, b)| a - b).collect();
    let by_diff: Vec<(f64, Vec<f64>)> = cfg.time_gaps.iter().map(|&g| (g as f64 * dt, windows(&diff, np, g))).collect();
    let diff_time_report = estimate_lm("time gap of differences", &sorted(by_diff), 1, cfg.m)?;

    let convergence = match &cfg.sewing {
        Some(s) => Some(sewing_limit(&germ, 0, n, s)?),
        None => None,
    };
    Ok(AveragedField {
        exponents: ex,
        offsets,
        values,
        time_report,
        space_report,
        diff_time_report,
        predicted_time: gamma,
        predicted_space: cfg.alpha,
        predicted_diff_time: gamma - h * cfg.alpha,
        convergence,
    })
}

fn sorted(mut v: Vec<(f64, Vec<f64>)>) -> Vec<(f64, Vec<f64>)> {
    v.sort_by(|a, b| b.0.total_cmp(&a.0));
    v
}

#[derive(Clone, Debug, Serialize)]
pub struct GradientExchange {
    pub step: f64,
    /// `L_2` norm over paths of the finite difference minus the averaged gradient.
    pub residual: f64,
    pub relative: f64,
}

/// Central difference in `x` of `A^x_{0,t}[f]` against `A^x_{0,t}[∇f]`, one
/// row per step size.
pub fn gradient_exchange_check(
    field: &dyn SpatialField,
    bundle: &PathBundle,
    t: usize,
    x: &[f64],
    steps: &[f64],
) -> Result<Vec<GradientExchange>> {
    let d = bundle.dim;
    let grad = AveragedGerm::new(field, bundle, x.to_vec(), Readout::Gradient)?;
    let direct = finest_sum(&grad, 0, t)?;
    let val = AveragedGerm::new(field, bundle, x.to_vec(), Readout::Value)?;
    let scale = (direct.iter().map(|v| v * v).sum::<f64>() / bundle.n_paths as f64).sqrt();
    steps
        .iter()
        .map(|&h| {
            let mut sq = 0.0;
            for k in 0..d {
                let mut up = x.to_vec();
                up[k] += h;
                let mut dn = x.to_vec();
                dn[k] -= h;
                let a = finest_sum(&val.with_offset(up), 0, t)?;
                let b = finest_sum(&val.with_offset(dn), 0, t)?;
                for p in 0..bundle.n_paths {
                    let fd = (a[p] - b[p]) / (2.0 * h);
                    sq += (fd - direct[p * d + k]).powi(2);
                }
            }
            let residual = (sq / bundle.n_paths as f64).sqrt();
            let relative = if scale > 0.0 { residual / scale } else { residual };
            Ok(GradientExchange { step: h, residual, relative })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::TimeGrid;
    use crate::heat::{Affine, Constant, GaussianBump};
    use crate::paths::VolterraFbm;

    fn bundle(h: f64, n: u32, paths: usize) -> PathBundle {
        let m = VolterraFbm::new(h, TimeGrid::dyadic(1.0, n).unwrap()).unwrap();
        m.sample(1, paths, 0, 11, true).unwrap()
    }

    #[test]
    fn smooth_field_has_unit_time_exponent() {
        let b = bundle(0.3, 8, 200);
        let f = GaussianBump { center: vec![0.0], var: 1.0, amp: 1.0 };
        let cfg = AveragedFieldConfig {
            nu: 1.0,
            q: f64::INFINITY,
            alpha: 1.0,
            m: 2.0,
            base: vec![0.0],
            space_gaps: vec![0.2, 0.1, 0.05, 0.025],
            time_gaps: vec![4, 8, 16, 32, 64],
            diff_gap: 3,
            sewing: None,
        };
        let r = averaged_field(&f, &b, &cfg).unwrap();
        assert!((r.time_report.exponent().unwrap() - 1.0).abs() < 0.05);
        assert!((r.space_report.exponent().unwrap() - 1.0).abs() < 0.1);
    }

    #[test]
    fn refuses_small_gamma() {
        let b = bundle(0.3, 3, 2);
        let f = Constant { dim: 1, value: 1.0 };
        let cfg = AveragedFieldConfig {
            nu: -2.0,
            q: f64::INFINITY,
            alpha: 0.0,
            m: 2.0,
            base: vec![0.0],
            space_gaps: vec![0.1],
            time_gaps: vec![1, 2, 4, 8],
            diff_gap: 0,
            sewing: None,
        };
        assert!(matches!(averaged_field(&f, &b, &cfg), Err(Error::Condition(_))));
    }

    #[test]
    fn gradient_exchange_is_exact_for_linear_and_constant() {
        let b = bundle(0.3, 6, 10);
        let lin = Affine { slope: vec![1.5], offset: 0.3 };
        for r in gradient_exchange_check(&lin, &b, 64, &[0.1], &[0.1, 0.01]).unwrap() {
            assert!(r.residual < 1e-9);
        }
        let c = Constant { dim: 1, value: 4.0 };
        for r in gradient_exchange_check(&c, &b, 64, &[0.1], &[0.1]).unwrap() {
            assert_eq!(r.residual, 0.0);
        }
    }

    #[test]
    fn gradient_exchange_residual_is_second_order() {
        let b = bundle(0.3, 6, 20);
        let f = GaussianBump { center: vec![0.0], var: 0.3, amp: 1.0 };
        let r = gradient_exchange_check(&f, &b, 64, &[0.1], &[0.2, 0.1, 0.05]).unwrap();
        let s1 = (r[0].residual / r[1].residual).log2();
        let s2 = (r[1].residual / r[2].residual).log2();
        assert!((s1 - 2.0).abs() < 0.3 && (s2 - 2.0).abs() < 0.3, "{r:?}");
    }
}
