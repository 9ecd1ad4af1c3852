use serde::Deserialize;
use sewing::grid::TimeGrid;
use sewing::paths::{fbm, FbmModel, VolterraFbm};
use sewing::stats::{mean_estimate, variance};

use super::Experiment;
use crate::{Check, ExperimentConfig, HarnessError, Outcome};

pub const FBM_LAW: Experiment = Experiment {
    name: "fbm-law",
    description: "Variance of the Volterra sampler, its covariance against the Cholesky sampler, and the nondeterminism ratio",
    statement: "B_t = ∫_0^t K_H(t, s) dW_s has covariance ½(s^{2H} + t^{2H} - |t-s|^{2H}) and σ_H(s, t) ≍ |t-s|^H",
    run: fbm_law,
    smoke: "n_paths = 100\n[params]\nhursts = [0.3]\nbatches = 2\nlevel = 6\ncov_level = 5\nndp_points = 8\n",
};

#[derive(Deserialize)]
#[serde(default, deny_unknown_fields)]
struct LawParams {
    hursts: Vec<f64>,
    level: u32,
    batches: usize,
    var_tol: f64,
    cov_level: u32,
    cov_stride: usize,
    cov_tol: f64,
    ndp_points: usize,
}

impl Default for LawParams {
    fn default() -> Self {
        Self {
            hursts: vec![0.1, 0.3],
            level: 12,
            batches: 32,
            var_tol: 0.03,
            cov_level: 8,
            cov_stride: 8,
            cov_tol: 0.05,
            ndp_points: 50,
        }
    }
}

fn fbm_law(cfg: &ExperimentConfig) -> Result<Outcome, HarnessError> {
    let p: LawParams = cfg.params()?;
    if p.batches == 0 || p.ndp_points < 2 || p.cov_stride == 0 {
        return Err(HarnessError::Config("batches, cov_stride and ndp_points must be positive".into()));
    }
    let per_batch = cfg.paths_or(1000);
    let mut out = Outcome::default();
    let mut table = String::from("hurst,i,k,volterra,cholesky,exact,scaled_error\n");
    for &h in &p.hursts {
        let grid = TimeGrid::dyadic(1.0, p.level)?;
        let n = grid.n_steps;
        let model = VolterraFbm::with_rows(h, grid, &[n])?;
        let mut squares = Vec::with_capacity(per_batch * p.batches);
        let mut x = [0.0];
        for b in 0..p.batches {
            let bundle = model.sample(1, per_batch, (b * per_batch) as u64, cfg.seed, false)?;
            for q in 0..per_batch {
                model.conditional_mean(&bundle, q, n, n, &mut x)?;
                squares.push(x[0] * x[0]);
            }
        }
        let est = mean_estimate(&squares)?;
        out.note(&format!("h{h}_mc_variance"), est);
        out.note(&format!("h{h}_discrete_variance"), model.variance(n)?);
        out.check(Check::near(format!("E B_1^2 at H = {h}"), est.value, 1.0, p.var_tol));

        let cg = TimeGrid::dyadic(1.0, p.cov_level)?;
        let cm = VolterraFbm::new(h, cg)?;
        let chol = FbmModel::new(h, cg)?;
        let chol_cov = |i: usize, k: usize| {
            let (a, b) = (chol.factor_row(i - 1), chol.factor_row(k - 1));
            a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>()
        };
        let mut worst = 0.0f64;
        let idx: Vec<usize> = (1..=cg.n_steps).filter(|i| i % p.cov_stride == 0 || *i == 1).collect();
        for &i in &idx {
            for &k in idx.iter().filter(|&&k| k >= i) {
                let (s, t) = (cg.time(i), cg.time(k));
                let exact = fbm::covariance(h, s, t);
                let reference = chol_cov(i, k);
                let disc = cm.covariance(i, k)?;
                // Scaled by the standard deviations so small covariances do not dominate.
                let err = (disc - reference).abs() / (s * t).powf(h);
                worst = worst.max(err);
                table.push_str(&format!("{h},{i},{k},{disc},{reference},{exact},{err}\n"));
            }
        }
        out.check(Check::below(format!("scaled Volterra/Cholesky covariance gap at H = {h}"), worst, p.cov_tol));

        let times: Vec<f64> = (0..p.ndp_points).map(|k| k as f64 / (p.ndp_points - 1) as f64).collect();
        let ndp = fbm::nondeterminism_profile(h, &times)?;
        out.note(&format!("h{h}_ndp_max_ratio"), ndp.max_ratio);
        out.check(Check::new(
            format!("nondeterminism ratio bounded below at H = {h}"),
            ndp.min_ratio,
            "> 0",
            ndp.min_ratio > 0.0,
        ));
    }
    out.tables.insert("covariance".into(), table);
    Ok(out)
}

pub const FBM_CONDITIONAL: Experiment = Experiment {
    name: "fbm-conditional",
    description: "Monte Carlo variance of B_t - E[B_t | F_s] against σ_H(s, t)²",
    statement: "given the driving noise up to s, B_t is Gaussian with variance σ_H(s, t)² = ∫_s^t K_H(t, r)² dr",
    run: fbm_conditional,
    smoke: "n_paths = 200\n[params]\nlevel = 5\n",
};

#[derive(Deserialize)]
#[serde(default, deny_unknown_fields)]
struct CondParams {
    hurst: f64,
    level: u32,
    pairs: Vec<[f64; 2]>,
    tol: f64,
}

impl Default for CondParams {
    fn default() -> Self {
        Self { hurst: 0.3, level: 8, pairs: vec![[0.0, 1.0], [0.25, 0.5], [0.5, 1.0], [0.75, 1.0], [0.125, 0.875]], tol: 0.05 }
    }
}

fn fbm_conditional(cfg: &ExperimentConfig) -> Result<Outcome, HarnessError> {
    let p: CondParams = cfg.params()?;
    let grid = TimeGrid::dyadic(1.0, p.level)?;
    let mut idx = Vec::new();
    for [s, t] in &p.pairs {
        let (i, k) = (grid.index_of(*s)?, grid.index_of(*t)?);
        if i >= k {
            return Err(HarnessError::Config(format!("pair ({s}, {t}) must satisfy s < t")));
        }
        idx.push((i, k));
    }
    let mut rows: Vec<usize> = idx.iter().map(|x| x.1).collect();
    rows.sort_unstable();
    rows.dedup();
    let model = VolterraFbm::with_rows(p.hurst, grid, &rows)?;
    let bundle = model.sample(1, cfg.paths_or(20_000), 0, cfg.seed, false)?;
    let mut out = Outcome::default();
    let mut table = String::from("s,t,mc_variance,discrete,exact\n");
    for ((i, k), [s, t]) in idx.iter().zip(&p.pairs) {
        let full = model.conditional_means(&bundle, *k, *k)?;
        let cond = model.conditional_means(&bundle, *i, *k)?;
        let diff: Vec<f64> = full.iter().zip(&cond).map(|(a, b)| a - b).collect();
        let v = variance(&diff)?;
        let exact = fbm::sigma(p.hurst, *s, *t)?.powi(2);
        let disc = model.cond_var(*i, *k)?;
        table.push_str(&format!("{s},{t},{v},{disc},{exact}\n"));
        out.check(Check::near(format!("relative variance error at ({s}, {t})"), v / exact - 1.0, 0.0, p.tol));
    }
    out.tables.insert("conditional_variance".into(), table);
    Ok(out)
}
