use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;
use sewing::grid::{Partition, TimeGrid};
use sewing::ito::{
    clipped_power, ito_formula_check, poisson_counterexample, C3Fn, FormulaTerm, ItoFormulaGerm, ItoGerm, PoissonGerm,
    QvGerm,
};
use sewing::paths::{sample_brownian, sample_poisson};
use sewing::sewing::{allocation_check, dyadic_sums, estimate_lm, riemann_sums, sewing_limit, Germ, SewingConfig};
use sewing::stats::{lm_norm, mean_estimate};

use super::{column_means, exponent_or_nan, Experiment};
use crate::{Check, ExperimentConfig, HarnessError, Outcome};

pub const QV_BROWNIAN: Experiment = Experiment {
    name: "qv-brownian",
    description: "Dyadic Riemann sums of (ΔB)(ΔB)ᵀ converge to t·I at rate mesh^{1/2}",
    statement: "the sewing limit of the quadratic-variation germ of Brownian motion is t·I",
    run: qv_brownian,
    smoke: "n_paths = 64\n[params]\nlevel = 6\n",
};

#[derive(Deserialize)]
#[serde(default, deny_unknown_fields)]
struct QvBrownianParams {
    dim: usize,
    t: f64,
    level: u32,
    min_fit_level: u32,
    mean_tol: f64,
    slope: f64,
    slope_tol: f64,
}

impl Default for QvBrownianParams {
    fn default() -> Self {
        Self { dim: 2, t: 1.0, level: 10, min_fit_level: 2, mean_tol: 0.02, slope: 0.5, slope_tol: 0.15 }
    }
}

fn qv_brownian(cfg: &ExperimentConfig) -> Result<Outcome, HarnessError> {
    let p: QvBrownianParams = cfg.params()?;
    let m = cfg.m_or(&[2.0])[0];
    let grid = TimeGrid::dyadic(p.t, p.level)?;
    let b = sample_brownian(grid, p.dim, cfg.paths_or(4000), cfg.seed)?;
    let germ = QvGerm::brownian(&b)?;
    let levels = dyadic_sums(&germ, 0, grid.n_steps, p.level)?;
    let dd = p.dim * p.dim;
    let target: Vec<f64> = (0..dd).map(|k| if k % (p.dim + 1) == 0 { p.t } else { 0.0 }).collect();
    let means = column_means(levels.last().unwrap(), dd);
    let dev = means.iter().zip(&target).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let errors: Vec<(f64, Vec<f64>)> = (p.min_fit_level..=p.level)
        .map(|n| {
            let l = &levels[n as usize];
            (p.t * 0.5f64.powi(n as i32), l.iter().enumerate().map(|(k, v)| v - target[k % dd]).collect())
        })
        .collect();
    let report = estimate_lm("error against t I", &errors, dd, m)?;
    let mut out = Outcome::default();
    out.note("finest_mean", &means);
    out.check(Check::below("max entrywise deviation of the mean", dev, p.mean_tol));
    out.check(Check::near("L_m error slope against mesh", exponent_or_nan(&report), p.slope, p.slope_tol));
    out.reports.push(report);
    Ok(out)
}

pub const QV_POISSON: Experiment = Experiment {
    name: "qv-poisson",
    description: "Riemann sums of (ΔÑ)² for the compensated Poisson process recover the jump count",
    statement: "the quadratic variation of the compensated Poisson process is the counting process",
    run: qv_poisson,
    smoke: "n_paths = 64\n[params]\nlevel = 8\n",
};

#[derive(Deserialize)]
#[serde(default, deny_unknown_fields)]
struct QvPoissonParams {
    intensity: f64,
    t: f64,
    level: u32,
    /// Largest `|Σ (ΔÑ)² - N_T|` counted as agreement.
    tol: f64,
    min_fraction: f64,
}

impl Default for QvPoissonParams {
    fn default() -> Self {
        Self { intensity: 1.0, t: 1.0, level: 12, tol: 0.5, min_fraction: 0.99 }
    }
}

fn qv_poisson(cfg: &ExperimentConfig) -> Result<Outcome, HarnessError> {
    let p: QvPoissonParams = cfg.params()?;
    let grid = TimeGrid::dyadic(p.t, p.level)?;
    let n = cfg.paths_or(2000);
    let b = sample_poisson(grid, p.intensity, n, cfg.seed)?;
    let germ = QvGerm::compensated_poisson(&b)?;
    let sums = riemann_sums(&germ, &Partition::dyadic(grid, 0, grid.n_steps, p.level)?)?;
    let jumps = b.poisson.as_ref().unwrap();
    let counts: Vec<f64> = (0..n).map(|k| jumps.count_at(k, p.t) as f64).collect();
    let agree = sums.iter().zip(&counts).filter(|(s, c)| (*s - *c).abs() <= p.tol).count();
    let frac = agree as f64 / n as f64;
    let worst = sums.iter().zip(&counts).map(|(s, c)| (s - c).abs()).fold(0.0, f64::max);
    let mut out = Outcome::default();
    out.note("mean_jump_count", mean_estimate(&counts)?);
    out.note("worst_abs_difference", worst);
    out.check(Check::at_least("fraction of paths with sum equal to N_T", frac, p.min_fraction));
    Ok(out)
}

pub const POISSON_COUNTEREXAMPLE: Experiment = Experiment {
    name: "poisson-counterexample",
    description: "‖Ñ_{s,t}‖_{L_m} scales like |t-s|^{1/m}: exponent 1/2 at m = 2 but near 1 at m = 1",
    statement: "a germ with vanishing conditional expectation and L_2 size |t-s|^{1/2} need not have a sewing limit in L_m for m < 2",
    run: poisson_counterexample_run,
    smoke: "n_paths = 64\n[params]\nlevel = 8\nmax_gap_log2 = 8\n",
};

#[derive(Deserialize)]
#[serde(default, deny_unknown_fields)]
struct PoissonCounterParams {
    intensity: f64,
    level: u32,
    min_gap_log2: u32,
    max_gap_log2: u32,
    l2_exponent: f64,
    l2_tol: f64,
    l1_min: f64,
}

impl Default for PoissonCounterParams {
    fn default() -> Self {
        Self { intensity: 1.0, level: 12, min_gap_log2: 4, max_gap_log2: 12, l2_exponent: 0.5, l2_tol: 0.1, l1_min: 0.8 }
    }
}

fn poisson_counterexample_run(cfg: &ExperimentConfig) -> Result<Outcome, HarnessError> {
    let p: PoissonCounterParams = cfg.params()?;
    if p.max_gap_log2 > p.level || p.min_gap_log2 > p.max_gap_log2 {
        return Err(HarnessError::Config("gap range must satisfy min_gap_log2 <= max_gap_log2 <= level".into()));
    }
    let grid = TimeGrid::dyadic(1.0, p.level)?;
    let b = sample_poisson(grid, p.intensity, cfg.paths_or(2000), cfg.seed)?;
    let germ = PoissonGerm::new(&b)?;
    let gaps: Vec<usize> = (p.min_gap_log2..=p.max_gap_log2).map(|k| 1usize << (p.level - k)).collect();
    let ms = cfg.m_or(&[1.0, 2.0]);
    let table = poisson_counterexample(&germ, &ms, &gaps)?;
    let mut out = Outcome::default();
    out.note("max_abs_conditional", table.max_abs_conditional);
    for r in &table.reports {
        let e = exponent_or_nan(r);
        if r.m == 2.0 {
            out.check(Check::near("L_2 exponent", e, p.l2_exponent, p.l2_tol));
        } else if r.m == 1.0 {
            out.check(Check::at_least("L_1 exponent", e, p.l1_min));
        } else {
            out.note(&format!("exponent_m{}", r.m), e);
        }
    }
    out.reports = table.reports;
    Ok(out)
}

pub const ITO_INTEGRAL: Experiment = Experiment {
    name: "ito-integral",
    description: "Sewing of f(B_s)(B_t - B_s): exact limit for f(x) = x and refinement rate for a 1/2-Hölder f",
    statement: "the Itô integral is the sewing limit of the left-point germ, with successive dyadic differences of order mesh^{τ/2}",
    run: ito_integral_run,
    smoke: "n_paths = 64\n[params]\nlevel = 6\n",
};

#[derive(Deserialize)]
#[serde(default, deny_unknown_fields)]
struct ItoParams {
    level: u32,
    min_fit_level: u32,
    stderr_factor: f64,
    tau: f64,
    clip: f64,
    slope_tol: f64,
    weierstrass_terms: usize,
}

impl Default for ItoParams {
    fn default() -> Self {
        Self { level: 10, min_fit_level: 2, stderr_factor: 3.0, tau: 0.5, clip: 4.0, slope_tol: 0.15, weierstrass_terms: 12 }
    }
}

fn ito_integral_run(cfg: &ExperimentConfig) -> Result<Outcome, HarnessError> {
    let p: ItoParams = cfg.params()?;
    let m = cfg.m_or(&[2.0])[0];
    let grid = TimeGrid::dyadic(1.0, p.level)?;
    let n = cfg.paths_or(4000);
    let b = sample_brownian(grid, 1, n, cfg.seed)?;
    let sc = SewingConfig { max_level: p.level, m, min_fit_level: p.min_fit_level };
    let mut out = Outcome::default();

    let lin = ItoGerm::scalar(&b, |x| x)?;
    let lim = sewing_limit(&lin, 0, grid.n_steps, &sc)?;
    let exact: Vec<f64> = (0..n)
        .map(|k| {
            let x = b.brownian_path(k).map(|v| v[grid.n_steps])?;
            Ok(0.5 * (x * x - 1.0))
        })
        .collect::<Result<_, sewing::Error>>()?;
    let diff: Vec<f64> = lim.samples.iter().zip(&exact).map(|(a, e)| a - e).collect();
    let disc = lm_norm(&diff, 1, 2.0)?.value;
    let sd = sewing::stats::variance(&exact)?.sqrt();
    let bound = p.stderr_factor * sd / (n as f64).sqrt();
    out.check(Check::below("L_2 discrepancy against (B_1^2 - 1)/2", disc, bound));
    out.reports.push(lim.successive.clone());

    let rough = ItoGerm::scalar(&b, clipped_power(p.tau, p.clip))?;
    let lr = sewing_limit(&rough, 0, grid.n_steps, &sc)?;
    out.check(Check::near(
        "successive-difference slope for clipped |x|^τ",
        exponent_or_nan(&lr.successive),
        p.tau / 2.0,
        p.slope_tol,
    ));
    let mut rep = lr.successive;
    rep.label = "clipped power successive differences".into();
    out.reports.push(rep);

    // A function that is τ-Hölder at every point, for comparison.
    let w = sewing::heat::FourierModes::weierstrass(p.tau, p.weierstrass_terms);
    let modes = Arc::new(w.modes);
    let wf = move |x: f64| modes.iter().map(|(a, f, ph)| a * (f[0] * x + ph).cos()).sum::<f64>();
    let wg = ItoGerm::scalar(&b, wf)?;
    let lw = sewing_limit(&wg, 0, grid.n_steps, &sc)?;
    out.note("weierstrass_successive_slope", exponent_or_nan(&lw.successive));
    let mut rep = lw.successive;
    rep.label = "weierstrass successive differences".into();
    out.reports.push(rep);
    Ok(out)
}

pub const ITO_FORMULA: Experiment = Experiment {
    name: "ito-formula",
    description: "Residual of f(B_T) - f(B_0) - ∫∇f dB - ½∫∇²f d[B] for f = sin, and decay of the remainder germs",
    statement: "Itô's formula follows from sewing the second-order Taylor germ; the third-order and correction remainders vanish in the limit",
    run: ito_formula_run,
    smoke: "n_paths = 64\n[params]\nlevel = 6\n",
};

#[derive(Deserialize)]
#[serde(default, deny_unknown_fields)]
struct ItoFormulaParams {
    level: u32,
    residual_tol: f64,
}

impl Default for ItoFormulaParams {
    fn default() -> Self {
        Self { level: 10, residual_tol: 0.02 }
    }
}

fn ito_formula_run(cfg: &ExperimentConfig) -> Result<Outcome, HarnessError> {
    let p: ItoFormulaParams = cfg.params()?;
    let m = cfg.m_or(&[2.0])[0];
    let grid = TimeGrid::dyadic(1.0, p.level)?;
    let b = sample_brownian(grid, 1, cfg.paths_or(10_000), cfg.seed)?;
    let r = ito_formula_check(&C3Fn::sin_sum(1), &b, grid.n_steps, p.level, m)?;
    let mut out = Outcome::default();
    out.note("residual_mean", r.residual_mean);
    out.note("third_derivative_max", r.third_derivative_max);
    if let Some(w) = &r.warning {
        out.note("warning", w);
    }
    out.check(Check::below("L_m residual", r.residual_lm, p.residual_tol));
    out.check(Check::new("A3 decay exponent", exponent_or_nan(&r.a3), "> 0", r.a3.exponent().is_some_and(|e| e > 0.0)));
    out.check(Check::new("A5 decay exponent", exponent_or_nan(&r.a5), "> 0", r.a5.exponent().is_some_and(|e| e > 0.0)));
    out.reports.push(r.a3);
    out.reports.push(r.a5);
    Ok(out)
}

pub const DYADIC_ALLOCATION: Experiment = Experiment {
    name: "dyadic-allocation",
    description: "Riemann-sum defects of random partitions equal the sum of their dyadic δA allocations",
    statement: "any partition's Riemann-sum defect rearranges into dyadic-level residuals of δA",
    run: dyadic_allocation_run,
    smoke: "n_paths = 4\n[params]\npartitions = 3\nlevel = 6\n",
};

#[derive(Deserialize)]
#[serde(default, deny_unknown_fields)]
struct AllocationParams {
    partitions: usize,
    level: u32,
    max_points: usize,
    tol: f64,
}

impl Default for AllocationParams {
    fn default() -> Self {
        Self { partitions: 20, level: 10, max_points: 48, tol: 1e-10 }
    }
}

fn dyadic_allocation_run(cfg: &ExperimentConfig) -> Result<Outcome, HarnessError> {
    let p: AllocationParams = cfg.params()?;
    let grid = TimeGrid::dyadic(1.0, p.level)?;
    let n = grid.n_steps;
    if n < 2 {
        return Err(HarnessError::Config("level must be at least 1".into()));
    }
    let b = sample_brownian(grid, 1, cfg.paths_or(100), cfg.seed)?;
    let germs: Vec<(&str, Box<dyn Germ>)> = vec![
        ("ito-sin", Box::new(ItoGerm::scalar(&b, f64::sin)?)),
        ("quadratic-variation", Box::new(QvGerm::brownian(&b)?)),
        ("taylor-sin", Box::new(ItoFormulaGerm::new(&b, C3Fn::sin_sum(1), FormulaTerm::Full)?)),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut worst = 0.0f64;
    let mut table = String::from("partition,germ,points,max_relative_error\n");
    for k in 0..p.partitions {
        let s = rng.random_range(0..n - 1);
        let t = rng.random_range(s + 2..=n);
        let mut idx: Vec<usize> = (0..rng.random_range(0..=p.max_points)).map(|_| rng.random_range(s..=t)).collect();
        idx.push(s);
        idx.push(t);
        idx.sort_unstable();
        idx.dedup();
        let part = Partition::new(grid, idx)?;
        for (name, g) in &germs {
            let c = allocation_check(g.as_ref(), &part)?;
            worst = worst.max(c.max_relative_error);
            table.push_str(&format!("{k},{name},{},{:e}\n", part.indices().len(), c.max_relative_error));
        }
    }
    let mut out = Outcome::default();
    out.tables.insert("allocation".into(), table);
    out.check(Check::below("max relative allocation error", worst, p.tol));
    Ok(out)
}
