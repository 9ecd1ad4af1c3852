//! Monte Carlo sewing limits and convergence rates.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{cond_delta_all, delta_all, dyadic_sums, Germ};
use crate::error::{Error, Result};
use crate::stats::{fit_power_law, lm_norm, PowerLawFit, MIN_FIT_POINTS};

/// `‖·‖_{L_m}` estimates across scales with a log–log fit.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RateReport {
    pub label: String,
    pub m: f64,
    pub scales: Vec<f64>,
    pub values: Vec<f64>,
    pub stderrs: Vec<f64>,
    /// `None` when fewer than four values are strictly positive.
    pub fit: Option<PowerLawFit>,
    pub config: serde_json::Value,
}

impl RateReport {
    pub fn new(label: impl Into<String>, m: f64, scales: Vec<f64>, values: Vec<f64>, stderrs: Vec<f64>) -> Self {
        let fit = fit_power_law(&scales, &values).ok();
        Self { label: label.into(), m, scales, values, stderrs, fit, config: serde_json::Value::Null }
    }

    pub fn with_config(mut self, config: serde_json::Value) -> Self {
        self.config = config;
        self
    }

    pub fn exponent(&self) -> Option<f64> {
        self.fit.map(|f| f.exponent)
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().cloned().fold(0.0, f64::max)
    }

    pub fn write_csv(&self, w: impl Write) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let err = |e: csv::Error| Error::Format(e.to_string());
        wr.write_record(["scale", "lm_value", "stderr", "m"]).map_err(err)?;
        for k in 0..self.scales.len() {
            wr.write_record([
                self.scales[k].to_string(),
                self.values[k].to_string(),
                self.stderrs.get(k).copied().unwrap_or(f64::NAN).to_string(),
                self.m.to_string(),
            ])
            .map_err(err)?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "label": self.label,
            "m": self.m,
            "scales": self.scales,
            "values": self.values,
            "stderrs": self.stderrs,
            "fitted_exponent": self.exponent(),
            "stderr": self.fit.map(|f| f.stderr),
            "ci": self.fit.map(|f| [f.ci_low, f.ci_high]),
            "config": self.config,
        })
    }
}

/// Estimates `‖X_k‖_{L_m}` for each scale `h_k` and fits `‖X_k‖ ≈ C h_k^a`.
/// Scales must be strictly decreasing and at least four.
pub fn estimate_lm(label: &str, samples_by_scale: &[(f64, Vec<f64>)], dim: usize, m: f64) -> Result<RateReport> {
    if samples_by_scale.len() < MIN_FIT_POINTS {
        return Err(Error::InsufficientScales { needed: MIN_FIT_POINTS, got: samples_by_scale.len() });
    }
    if samples_by_scale.windows(2).any(|w| !(w[0].0 > w[1].0)) {
        return Err(Error::Ordering("scales must be strictly decreasing".into()));
    }
    let mut scales = Vec::new();
    let mut values = Vec::new();
    let mut stderrs = Vec::new();
    for (h, xs) in samples_by_scale {
        let e = lm_norm(xs, dim, m)?;
        scales.push(*h);
        values.push(e.value);
        stderrs.push(e.stderr);
    }
    Ok(RateReport::new(label, m, scales, values, stderrs))
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct SewingConfig {
    pub max_level: u32,
    pub m: f64,
    /// Coarsest level entering the rate fits.
    pub min_fit_level: u32,
}

impl Default for SewingConfig {
    fn default() -> Self {
        Self { max_level: 10, m: 2.0, min_fit_level: 2 }
    }
}

#[derive(Clone, Debug)]
pub struct SewingLimit {
    /// Finest-level dyadic Riemann sums, `[path][component]`.
    pub samples: Vec<f64>,
    /// `‖A^n - A^{max}‖_{L_m}` against the mesh of level `n`.
    pub to_finest: RateReport,
    /// `‖A^n - A^{n+1}‖_{L_m}` against the mesh of level `n`.
    pub successive: RateReport,
    /// False when the successive differences fail to shrink over the last
    /// three levels.
    pub converged: bool,
}

/// Dyadic Riemann sums of `[s, t]` up to `cfg.max_level`; the finest level
/// is taken as the limit.
pub fn sewing_limit(germ: &dyn Germ, s: usize, t: usize, cfg: &SewingConfig) -> Result<SewingLimit> {
    if cfg.min_fit_level >= cfg.max_level {
        return Err(Error::Domain("min_fit_level must be below max_level".into()));
    }
    let levels = dyadic_sums(germ, s, t, cfg.max_level)?;
    let d = germ.out_dim();
    let span = germ.grid().time(t) - germ.grid().time(s);
    let finest = levels.last().unwrap();
    let diff = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x - y).collect::<Vec<f64>>();
    let mut to_finest = Vec::new();
    let mut successive = Vec::new();
    for n in cfg.min_fit_level..cfg.max_level {
        let h = span * 0.5f64.powi(n as i32);
        let l = &levels[n as usize];
        to_finest.push((h, diff(l, finest)));
        successive.push((h, diff(l, &levels[n as usize + 1])));
    }
    let mk = |label: &str, xs: &[(f64, Vec<f64>)]| -> Result<RateReport> {
        let mut scales = Vec::new();
        let mut values = Vec::new();
        let mut errs = Vec::new();
        for (h, v) in xs {
            let e = lm_norm(v, d, cfg.m)?;
            scales.push(*h);
            values.push(e.value);
            errs.push(e.stderr);
        }
        Ok(RateReport::new(label, cfg.m, scales, values, errs))
    };
    let to_finest = mk("distance to finest level", &to_finest)?;
    let successive = mk("successive dyadic differences", &successive)?;
    let v = &successive.values;
    let converged = v.len() < 3 || {
        let k = v.len();
        v[k - 1] <= v[k - 3] || v[k - 3] == 0.0
    };
    Ok(SewingLimit { samples: finest.clone(), to_finest, successive, converged })
}

#[derive(Clone, Debug)]
pub struct ConditionFitConfig {
    pub m: f64,
    /// Interval lengths in grid cells; each must be even.
    pub gaps: Vec<usize>,
    pub start: usize,
    pub end: usize,
    /// Pool every disjoint window `[start + k g, start + (k+1) g]` instead of
    /// the single window at `start`.
    pub pooled: bool,
}

/// Empirical constants and exponents of
/// `‖E^{F_s} δA_{s,u,t}‖ ≤ Γ₁ |t-s|^{1+ε₁}` and
/// `‖δA_{s,u,t}‖ ≤ Γ₂ |t-s|^{1/2+ε₂}` with `u` the midpoint.
#[derive(Clone, Debug)]
pub struct ConditionFit {
    /// `None` when the conditional defect vanishes at every scale or the germ
    /// has no conditional rule.
    pub eps1: Option<f64>,
    pub gamma1: f64,
    pub eps2: Option<f64>,
    pub gamma2: f64,
    pub cond_report: Option<RateReport>,
    pub delta_report: RateReport,
}

pub fn fit_conditions(germ: &dyn Germ, cfg: &ConditionFitConfig) -> Result<ConditionFit> {
    let grid = *germ.grid();
    let d = germ.out_dim();
    let mut plain = Vec::new();
    let mut cond = Vec::new();
    let mut gaps = cfg.gaps.clone();
    gaps.sort_unstable_by(|a, b| b.cmp(a));
    gaps.dedup();
    for &g in &gaps {
        if g == 0 || g % 2 != 0 {
            return Err(Error::Domain(format!("gap {g} must be positive and even")));
        }
        let mut starts = vec![cfg.start];
        if cfg.pooled {
            let mut s = cfg.start + g;
            while s + g <= cfg.end {
                starts.push(s);
                s += g;
            }
        }
        if cfg.start + g > cfg.end {
            return Err(Error::Domain(format!("gap {g} does not fit in [{}, {}]", cfg.start, cfg.end)));
        }
        let mut a = Vec::new();
        let mut e = Vec::new();
        for &s in &starts {
            a.extend(delta_all(germ, s, s + g / 2, s + g)?);
            if germ.has_conditional() {
                e.extend(cond_delta_all(germ, s, s + g / 2, s + g)?);
            }
        }
        let h = g as f64 * grid.dt();
        plain.push((h, a));
        if germ.has_conditional() {
            cond.push((h, e));
        }
    }
    let delta_report = estimate_lm("delta", &plain, d, cfg.m)?;
    let (eps2, gamma2) = match delta_report.fit {
        Some(f) => (Some(f.exponent - 0.5), f.prefactor()),
        None => (None, delta_report.max_value()),
    };
    let (cond_report, eps1, gamma1) = if germ.has_conditional() {
        let r = estimate_lm("conditional delta", &cond, d, cfg.m)?;
        let (e, g) = match r.fit {
            Some(f) => (Some(f.exponent - 1.0), f.prefactor()),
            None => (None, r.max_value()),
        };
        (Some(r), e, g)
    } else {
        (None, None, f64::NAN)
    };
    Ok(ConditionFit { eps1, gamma1, eps2, gamma2, cond_report, delta_report })
}
