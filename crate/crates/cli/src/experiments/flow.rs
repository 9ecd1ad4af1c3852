use std::sync::Arc;

use serde::Deserialize;
use sewing::averaging::{solve_singular_sde, Mollification, SdeConfig};
use sewing::grid::TimeGrid;
use sewing::heat::{FourierModes, GaussianBump, Mollified, Sign, SpatialField};
use sewing::paths::VolterraFbm;
use sewing::young::{build_v, compare_jacobian, division_identity_check};

use super::Experiment;
use crate::{Check, ExperimentConfig, HarnessError, Outcome};

pub const YOUNG_FLOW_JACOBIAN: Experiment = Experiment {
    name: "young-flow-jacobian",
    description: "Linear Young flow dY = Y dV against finite-difference Jacobians of the SDE solution map",
    statement: "the derivative of the flow x ↦ X_t(x) solves dY = Y dV with V_t the sewing limit of ∫_s^t ∇P_{(r-s)^{2H}} b_r(X_s) dr",
    run: young_flow_jacobian,
    smoke: "n_paths = 4\n[params]\nlevel = 7\n",
};

#[derive(Deserialize)]
#[serde(default, deny_unknown_fields)]
struct JacobianParams {
    hurst: f64,
    level: u32,
    step: f64,
    mollify: f64,
    amplitude: f64,
    declared: f64,
    tol: f64,
}

impl Default for JacobianParams {
    fn default() -> Self {
        Self { hurst: 0.5, level: 10, step: 1e-4, mollify: 0.01, amplitude: 1.0, declared: 1.0, tol: 0.05 }
    }
}

fn drift_2d(amp: f64, delta: f64) -> Vec<Arc<dyn SpatialField>> {
    let b1 = FourierModes {
        dim: 2,
        modes: vec![(amp, vec![1.0, 0.5], 0.3), (0.5 * amp, vec![-2.0, 1.0], 1.1), (0.25 * amp, vec![3.0, 3.0], 0.0)],
    };
    let b2 = FourierModes {
        dim: 2,
        modes: vec![(amp, vec![0.5, -1.5], 0.7), (0.5 * amp, vec![2.0, 2.0], 2.0), (0.25 * amp, vec![-1.0, 4.0], 0.4)],
    };
    vec![Arc::new(Mollified { inner: Arc::new(b1), delta }), Arc::new(Mollified { inner: Arc::new(b2), delta })]
}

fn young_flow_jacobian(cfg: &ExperimentConfig) -> Result<Outcome, HarnessError> {
    let p: JacobianParams = cfg.params()?;
    let d = 2;
    let model = VolterraFbm::new(p.hurst, TimeGrid::dyadic(1.0, p.level)?)?;
    let bundle = model.sample(d, cfg.paths_or(200), 0, cfg.seed, true)?;
    let drift = drift_2d(p.amplitude, p.mollify);
    let base = SdeConfig {
        drift: drift.clone(),
        p: f64::INFINITY,
        q: f64::INFINITY,
        x0: vec![0.0; d],
        mollification: Mollification::None,
    };
    let sol = solve_singular_sde(&base, &bundle)?;
    let np = sol.grid.n_points();
    let end = np - 1;
    let mut jac = vec![0.0; bundle.n_paths * d * d];
    for i in 0..d {
        let mut shifted = base.clone();
        shifted.x0[i] += p.step;
        let s = solve_singular_sde(&shifted, &bundle)?;
        for q in 0..bundle.n_paths {
            let (a, b) = (s.path(q), sol.path(q));
            for j in 0..d {
                jac[q * d * d + i * d + j] = (a[end * d + j] - b[end * d + j]) / p.step;
            }
        }
    }
    let v = build_v(&drift, &sol, p.hurst, p.declared, None)?;
    let cmp = compare_jacobian(&v, d, &jac)?;
    let mut out = Outcome::default();
    out.note("pooled_v_exponent", v.pooled_exponent);
    out.note("max_relative_error", cmp.max_relative_error);
    out.check(Check::below("mean relative Jacobian error", cmp.mean_relative_error, p.tol));
    Ok(out)
}

pub const DIVISION_IDENTITY: Experiment = Experiment {
    name: "division-identity",
    description: "∫ f(X) - f(X̄) dr against the Young integral ∫ (ψ - ψ̄) dV for two solutions on the same noise",
    statement: "for X = B + ψ and X̄ = B + ψ̄, ∫_0^T f(X_r) - f(X̄_r) dr = ∫_0^T (ψ_r - ψ̄_r) dV_r with V the θ-averaged gradient integral",
    run: division_identity,
    smoke: "n_paths = 16\n[params]\nlevel = 7\n",
};

#[derive(Deserialize)]
#[serde(default, deny_unknown_fields)]
struct DivisionParams {
    hurst: f64,
    level: u32,
    x0: f64,
    shift: f64,
    bump_var: f64,
    tol: f64,
}

impl Default for DivisionParams {
    fn default() -> Self {
        Self { hurst: 0.3, level: 10, x0: 0.0, shift: 0.1, bump_var: 0.1, tol: 0.02 }
    }
}

fn division_identity(cfg: &ExperimentConfig) -> Result<Outcome, HarnessError> {
    let p: DivisionParams = cfg.params()?;
    let model = VolterraFbm::new(p.hurst, TimeGrid::dyadic(1.0, p.level)?)?;
    let bundle = model.sample(1, cfg.paths_or(1000), 0, cfg.seed, true)?;
    let sde = SdeConfig {
        drift: vec![Arc::new(Sign { dim: 1, axis: 0, scale: -1.0 })],
        p: f64::INFINITY,
        q: f64::INFINITY,
        x0: vec![p.x0],
        mollification: Mollification::Auto,
    };
    let a = solve_singular_sde(&sde, &bundle)?;
    let mut shifted = sde.clone();
    shifted.x0[0] += p.shift;
    let b = solve_singular_sde(&shifted, &bundle)?;
    let f = GaussianBump { center: vec![0.0], var: p.bump_var, amp: 1.0 };
    let r = division_identity_check(&f, &bundle, &a.psi, &b.psi)?;
    let mut out = Outcome::default();
    out.note("residual_l2", r.residual_l2);
    out.check(Check::below("relative residual", r.relative, p.tol));
    Ok(out)
}
