use std::sync::Arc;

use serde::Deserialize;
use sewing::averaging::{
    averaged_field, finest_sum, girsanov_weights, moment_bound_check, solve_singular_sde, AveragedFieldConfig,
    AveragedGerm, Mollification, Readout, SdeConfig,
};
use sewing::grid::TimeGrid;
use sewing::heat::{heat_apply, Callable, Constant, FieldClass, GaussianBump, GridField, HeatOp, Sign, SpatialField};
use sewing::paths::{PathBundle, VolterraFbm};
use sewing::stats::mean_estimate;

use super::{exponent_or_nan, Experiment};
use crate::{Check, ExperimentConfig, HarnessError, Outcome};

fn volterra_bundle(hurst: f64, level: u32, n_paths: usize, seed: u64) -> Result<PathBundle, HarnessError> {
    let model = VolterraFbm::new(hurst, TimeGrid::dyadic(1.0, level)?)?;
    Ok(model.sample(1, n_paths, 0, seed, true)?)
}

fn minus_sign() -> Arc<dyn SpatialField> {
    Arc::new(Sign { dim: 1, axis: 0, scale: -1.0 })
}

pub const GIRSANOV: Experiment = Experiment {
    name: "girsanov",
    description: "Mean of the Girsanov density for an fBm-driven SDE with drift -sign(x)",
    statement: "with v = K_H^{-1}(∫b(X) dr) the density exp(-∫v dW - ½∫|v|² dr) has unit mean",
    run: girsanov_run,
    smoke: "n_paths = 64\n[params]\nlevel = 5\n",
};

#[derive(Deserialize)]
#[serde(default, deny_unknown_fields)]
struct GirsanovParams {
    hurst: f64,
    level: u32,
    x0: f64,
    stderr_factor: f64,
}

impl Default for GirsanovParams {
    fn default() -> Self {
        Self { hurst: 0.3, level: 8, x0: 0.0, stderr_factor: 4.0 }
    }
}

fn girsanov_run(cfg: &ExperimentConfig) -> Result<Outcome, HarnessError> {
    let p: GirsanovParams = cfg.params()?;
    let bundle = volterra_bundle(p.hurst, p.level, cfg.paths_or(10_000), cfg.seed)?;
    let sde = SdeConfig {
        drift: vec![minus_sign()],
        p: f64::INFINITY,
        q: f64::INFINITY,
        x0: vec![p.x0],
        mollification: Mollification::Auto,
    };
    let sol = solve_singular_sde(&sde, &bundle)?;
    let b = Sign { dim: 1, axis: 0, scale: -1.0 };
    let rep = girsanov_weights(&[&b], &sol.x, &bundle, p.hurst)?;
    let mut out = Outcome::default();
    out.note("mean_xi", rep.mean_xi);
    out.note("energy_ratio", rep.energy_ratio);
    let dev = (rep.mean_xi.value - 1.0).abs();
    let bound = p.stderr_factor * rep.mean_xi.stderr;
    out.check(Check::new("|E xi - 1|", dev, format!("<= {bound:e}"), dev <= bound));

    let zero = Constant { dim: 1, value: 0.0 };
    let z = girsanov_weights(&[&zero], &sol.x, &bundle, p.hurst)?;
    let worst = z.samples.iter().map(|s| (s.xi - 1.0).abs()).fold(0.0, f64::max);
    out.check(Check::new("max |xi - 1| for zero drift", worst, "= 0", worst == 0.0));
    Ok(out)
}

pub const PSI_REGULARITY: Experiment = Experiment {
    name: "psi-regularity",
    description: "Hölder exponent of ψ = X - B^H for a bounded and for an integrable singular drift",
    statement: "for b ∈ L^q_T L^p the drift part ψ = X - B^H is τ-Hölder in L_m with τ = 1 - Hd/p - 1/q, and Lipschitz for bounded b",
    run: psi_regularity,
    smoke: "n_paths = 16\n[params]\nlevel = 7\ngaps = [1, 2, 4, 8]\nmoment_orders = [1, 2]\n",
};

#[derive(Deserialize)]
#[serde(default, deny_unknown_fields)]
struct PsiParams {
    hurst: f64,
    level: u32,
    gaps: Vec<usize>,
    bounded_tol: f64,
    singular_power: f64,
    singular_p: f64,
    truncation: f64,
    slack: f64,
    moment_orders: Vec<u32>,
}

impl Default for PsiParams {
    fn default() -> Self {
        Self {
            hurst: 0.3,
            level: 10,
            gaps: vec![1, 2, 4, 8, 16, 32, 64],
            bounded_tol: 0.1,
            singular_power: 0.25,
            singular_p: 4.0,
            truncation: 1e4,
            slack: 0.1,
            moment_orders: vec![1, 2, 3, 4],
        }
    }
}

fn psi_regularity(cfg: &ExperimentConfig) -> Result<Outcome, HarnessError> {
    let p: PsiParams = cfg.params()?;
    let m = cfg.m_or(&[2.0])[0];
    let bundle = volterra_bundle(p.hurst, p.level, cfg.paths_or(1000), cfg.seed)?;
    let mut out = Outcome::default();

    let bounded = SdeConfig {
        drift: vec![minus_sign()],
        p: f64::INFINITY,
        q: f64::INFINITY,
        x0: vec![0.0],
        mollification: Mollification::Auto,
    };
    let sol = solve_singular_sde(&bounded, &bundle)?;
    let mut rep = sol.psi_holder(&p.gaps, m)?;
    rep.label = "psi increments, bounded drift".into();
    out.check(Check::near("psi exponent for -sign", exponent_or_nan(&rep), 1.0, p.bounded_tol));
    out.reports.push(rep);

    let a = p.singular_power;
    let f = move |x: &[f64]| x[0].abs().powf(-a);
    let singular = SdeConfig {
        drift: vec![Arc::new(Callable::autonomous(1, p.truncation, f))],
        p: p.singular_p,
        q: f64::INFINITY,
        x0: vec![0.0],
        mollification: Mollification::Auto,
    };
    let tau = singular.exponents(p.hurst).tau;
    out.note("tau", tau);
    let sol = solve_singular_sde(&singular, &bundle)?;
    if let Some(w) = &sol.warning {
        out.note("singular_warning", w);
    }
    let mut rep = sol.psi_holder(&p.gaps, m)?;
    rep.label = "psi increments, singular drift".into();
    out.check(Check::at_least("psi exponent for |x|^{-a}", exponent_or_nan(&rep), tau - p.slack));
    out.reports.push(rep);

    if !p.moment_orders.is_empty() {
        // Moments of ∫ h(B_r) dr for a Gaussian bump, whose L^p norm is explicit.
        let var = 0.05;
        let h = GaussianBump { center: vec![0.0], var, amp: 1.0 };
        let norm = (2.0 * std::f64::consts::PI * var / p.singular_p).powf(0.5 / p.singular_p);
        let table = moment_bound_check(&h, &bundle, p.singular_p, f64::INFINITY, norm, &p.moment_orders)?;
        out.note("moment_table", &table);
    }
    Ok(out)
}

pub const AVERAGING_EXPONENTS: Experiment = Experiment {
    name: "averaging-exponents",
    description: "Joint time/space regularity of the averaged field of a distributional drift",
    statement: "for f ∈ L^q_T C^ν and γ = 1 + Hν - 1/q > 1/2 the averaged field A^x_t[f] is γ-regular in t, α-regular in x, and its x-differences are (γ - Hα)-regular in t",
    run: averaging_exponents,
    smoke: "n_paths = 8\n[params]\nlevel = 6\nn_cells = 512\ntime_gaps = [1, 2, 4, 8]\n",
};

#[derive(Deserialize)]
#[serde(default, deny_unknown_fields)]
struct AveragingParams {
    hurst: f64,
    level: u32,
    half_width: f64,
    n_cells: usize,
    /// Standard deviation of the pre-smoothing of the noise.
    smoothing: f64,
    nu: f64,
    alpha: f64,
    space_gaps: Vec<f64>,
    time_gaps: Vec<usize>,
    diff_gap: usize,
    tol: f64,
}

impl Default for AveragingParams {
    fn default() -> Self {
        Self {
            hurst: 0.3,
            level: 10,
            half_width: 8.0,
            n_cells: 4096,
            smoothing: 0.02,
            nu: -0.5,
            alpha: 1.0,
            space_gaps: vec![0.02, 0.01, 0.005, 0.0025, 0.00125],
            time_gaps: vec![4, 8, 16, 32, 64, 128],
            diff_gap: 0,
            tol: 0.15,
        }
    }
}

fn averaging_exponents(cfg: &ExperimentConfig) -> Result<Outcome, HarnessError> {
    let p: AveragingParams = cfg.params()?;
    let m = cfg.m_or(&[2.0])[0];
    let bundle = volterra_bundle(p.hurst, p.level, cfg.paths_or(500), cfg.seed)?;
    let noise = GridField::white_noise(1, p.half_width, p.n_cells, cfg.seed, 0)?;
    let mut field = heat_apply(&HeatOp::new(p.smoothing * p.smoothing, &noise)?, &noise)?;
    field.class = FieldClass::Besov { nu: p.nu };
    let af = AveragedFieldConfig {
        nu: p.nu,
        q: f64::INFINITY,
        alpha: p.alpha,
        m,
        base: vec![0.0],
        space_gaps: p.space_gaps,
        time_gaps: p.time_gaps,
        diff_gap: p.diff_gap,
        sewing: None,
    };
    let r = averaged_field(&field, &bundle, &af)?;
    let mut out = Outcome::default();
    out.note("exponents", r.exponents);
    out.check(Check::near("time exponent", exponent_or_nan(&r.time_report), r.predicted_time, p.tol));
    out.check(Check::near("space exponent", exponent_or_nan(&r.space_report), r.predicted_space, p.tol));
    out.check(Check::near(
        "time exponent of space differences",
        exponent_or_nan(&r.diff_time_report),
        r.predicted_diff_time,
        p.tol,
    ));
    out.reports.extend([r.time_report, r.space_report, r.diff_time_report]);
    Ok(out)
}

pub const AVERAGED_VS_PATHWISE: Experiment = Experiment {
    name: "averaged-vs-pathwise",
    description: "Mean of the finest-cell averaged-germ sum against the pathwise integral ∫ f(B_r + x) dr",
    statement: "the sewing limit of the averaged germ is the occupation integral ∫_0^t f(B_r + x) dr",
    run: averaged_vs_pathwise,
    smoke: "n_paths = 32\n[params]\nlevel = 6\n",
};

#[derive(Deserialize)]
#[serde(default, deny_unknown_fields)]
struct PathwiseParams {
    hurst: f64,
    level: u32,
    offset: f64,
    stderr_factor: f64,
}

impl Default for PathwiseParams {
    fn default() -> Self {
        Self { hurst: 0.3, level: 10, offset: 0.1, stderr_factor: 3.0 }
    }
}

fn averaged_vs_pathwise(cfg: &ExperimentConfig) -> Result<Outcome, HarnessError> {
    let p: PathwiseParams = cfg.params()?;
    let bundle = volterra_bundle(p.hurst, p.level, cfg.paths_or(1000), cfg.seed)?;
    let f = Sign { dim: 1, axis: 0, scale: 1.0 };
    let germ = AveragedGerm::new(&f, &bundle, vec![p.offset], Readout::Value)?;
    let n = bundle.grid.n_steps;
    let sums = finest_sum(&germ, 0, n)?;
    let raw = f.prepare(0.0, 0.0)?;
    let dt = bundle.grid.dt();
    let mut diff = Vec::with_capacity(bundle.n_paths);
    for (q, s) in sums.iter().enumerate() {
        let path = bundle.fbm_path(q)?;
        let trap: f64 = (0..=n)
            .map(|i| {
                let w = if i == 0 || i == n { 0.5 } else { 1.0 };
                w * dt * raw.value(&[path[i] + p.offset])
            })
            .sum();
        diff.push(s - trap);
    }
    let e = mean_estimate(&diff)?;
    let mut out = Outcome::default();
    out.note("mean_difference", e);
    let bound = p.stderr_factor * e.stderr;
    out.check(Check::new("|mean difference|", e.value.abs(), format!("<= {bound:e}"), e.value.abs() <= bound));
    Ok(out)
}
