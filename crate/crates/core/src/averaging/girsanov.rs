//! `v_s = s^{H-1/2} / Γ(1/2-H) ∫_0^s (s-r)^{-1/2-H} r^{1/2-H} b(r, X_r) dr`
//! and `ξ_T = exp(-∫ v·dW - ½ ∫ |v|² ds)`.

use rayon::prelude::*;
use serde::Serialize;
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::heat::SpatialField;
use crate::paths::PathBundle;
use crate::stats::{mean_estimate, Estimate};

#[derive(Clone, Debug)]
pub struct GirsanovSample {
    /// `v_{t_i}`, `[point][dim]`, with `v_{t_0} = 0`.
    pub v: Vec<f64>,
    pub stochastic_integral: f64,
    pub energy: f64,
    pub log_xi: f64,
    pub xi: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct GirsanovReport {
    pub mean_xi: Estimate,
    /// Largest `∫|v|² ds / ∫|b|² ds` over paths with nonzero drift.
    pub energy_ratio: f64,
    #[serde(skip)]
    pub samples: Vec<GirsanovSample>,
}

/// `x` holds the paths at which `b` is read, `[path][point][dim]` on the
/// bundle grid; `drift` has one field per component, read without smoothing.
pub fn girsanov_weights(drift: &[&dyn SpatialField], x: &[f64], bundle: &PathBundle, hurst: f64) -> Result<GirsanovReport> {
    if !(hurst > 0.0 && hurst < 0.5) {
        return Err(Error::Domain(format!("Girsanov transform needs H in (0, 1/2), got {hurst}")));
    }
    let w = bundle.w_increments.as_deref().ok_or(Error::MissingData("Brownian increments"))?;
    let d = bundle.dim;
    if drift.len() != d {
        return Err(Error::Domain(format!("{} drift components for dimension {d}", drift.len())));
    }
    let grid = bundle.grid;
    let n = grid.n_steps;
    let dt = grid.dt();
    if x.len() != bundle.n_paths * (n + 1) * d {
        return Err(Error::GridMismatch("drift paths do not match the bundle".into()));
    }
    let a = 0.5 - hurst;
    let norm = 1.0 / gamma(a);
    let times = grid.times();
    let mid: Vec<f64> = (0..n).map(|j| (0.5 * (times[j] + times[j + 1])).powf(a)).collect();
    // Exact ∫_{t_j}^{t_{j+1}} (t_i - r)^{-1/2-H} dr = dt^a Q[i - j] / a.
    let pw: Vec<f64> = (0..=n).map(|k| (k as f64).powf(a)).collect();
    let q: Vec<f64> = (1..=n).map(|k| dt.powf(a) * (pw[k] - pw[k - 1]) / a).collect();
    let fields: Vec<_> = drift.iter().map(|f| f.prepare(0.0, 0.0)).collect::<Result<_>>()?;
    if drift.iter().any(|f| f.time_dependent()) {
        return Err(Error::Domain("Girsanov weights take autonomous drifts".into()));
    }
    let samples: Vec<(GirsanovSample, f64)> = (0..bundle.n_paths)
        .into_par_iter()
        .map(|p| {
            let xp = &x[p * (n + 1) * d..(p + 1) * (n + 1) * d];
            let wp = &w[p * n * d..(p + 1) * n * d];
            let mid = &mid;
            let h: Vec<f64> = (0..n)
                .flat_map(|j| fields.iter().map(move |f| f.value(&xp[j * d..(j + 1) * d]) * mid[j]))
                .collect();
            let mut v = vec![0.0; (n + 1) * d];
            for i in 1..=n {
                let pre = times[i].powf(-a) * norm;
                for k in 0..d {
                    let mut acc = 0.0;
                    for j in 0..i {
                        acc += q[i - j - 1] * h[j * d + k];
                    }
                    v[i * d + k] = pre * acc;
                }
            }
            let mut si = 0.0;
            let mut energy = 0.0;
            for i in 0..n {
                for k in 0..d {
                    si += v[i * d + k] * wp[i * d + k];
                    energy += v[i * d + k] * v[i * d + k] * dt;
                }
            }
            let log_xi = -si - 0.5 * energy;
            let b2: f64 = (0..n)
                .map(|j| fields.iter().map(|f| f.value(&xp[j * d..(j + 1) * d]).powi(2)).sum::<f64>() * dt)
                .sum();
            (GirsanovSample { v, stochastic_integral: si, energy, log_xi, xi: log_xi.exp() }, b2)
        })
        .collect();
    let mut energy_ratio = 0.0f64;
    let mut out = Vec::with_capacity(samples.len());
    for (s, b2) in samples {
        if !s.log_xi.is_finite() || s.xi <= 0.0 {
            return Err(Error::Numerical(format!("ξ_T = {} is not a positive finite weight", s.xi)));
        }
        if b2 > 0.0 {
            energy_ratio = energy_ratio.max(s.energy / b2);
        }
        out.push(s);
    }
    let xis: Vec<f64> = out.iter().map(|s| s.xi).collect();
    Ok(GirsanovReport { mean_xi: mean_estimate(&xis)?, energy_ratio, samples: out })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::TimeGrid;
    use crate::heat::Constant;
    use crate::paths::VolterraFbm;
    use statrs::function::beta::beta;

    #[test]
    fn zero_drift_gives_unit_weight() {
        let b = VolterraFbm::new(0.3, TimeGrid::dyadic(1.0, 5).unwrap()).unwrap().sample(1, 3, 0, 1, true).unwrap();
        let c = Constant { dim: 1, value: 0.0 };
        let r = girsanov_weights(&[&c], b.fbm_values.as_ref().unwrap(), &b, 0.3).unwrap();
        for s in &r.samples {
            assert_eq!(s.xi, 1.0);
            assert!(s.v.iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn constant_drift_matches_beta_integral() {
        // For b ≡ c, v_s = c s^{1/2-H} B(1/2-H, 3/2-H) / Γ(1/2-H).
        let h = 0.3;
        let b = VolterraFbm::new(h, TimeGrid::dyadic(1.0, 10).unwrap()).unwrap().sample(1, 1, 0, 1, true).unwrap();
        let c = Constant { dim: 1, value: 2.0 };
        let r = girsanov_weights(&[&c], b.fbm_values.as_ref().unwrap(), &b, h).unwrap();
        let v = &r.samples[0].v;
        for &i in &[256usize, 512, 1024] {
            let s = i as f64 / 1024.0;
            let exact = 2.0 * s.powf(0.5 - h) * beta(0.5 - h, 1.5 - h) / gamma(0.5 - h);
            assert!((v[i] - exact).abs() < 5e-3 * exact, "{} {exact}", v[i]);
        }
    }
}
