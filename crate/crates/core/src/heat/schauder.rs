//! Empirical smoothing exponents: `‖P_σ f‖_∞ ≍ σ^{a}` for shipped test fields.

use serde::{Deserialize, Serialize};

use super::field::{FieldClass, GridField};
use super::spectral::{spectral_gradient_values, HeatOp};
use crate::error::{Error, Result};
use crate::stats::{fit_power_law, PowerLawFit};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum SchauderFamily {
    /// Unit mass on one node (an `L^1` bump); predicted exponent `-d/2`.
    L1Bump,
    /// Gradient of the same bump; predicted `-d/2 - 1/2`.
    L1BumpGradient,
    /// Grid white noise (`ν = -d/2`), sup averaged over draws; predicted `ν/2`.
    WhiteNoise { draws: u64 },
    /// Square wave of unit height; predicted `0`.
    Bounded,
}

impl SchauderFamily {
    pub fn predicted(&self, dim: usize) -> f64 {
        let d = dim as f64;
        match self {
            SchauderFamily::L1Bump => -d / 2.0,
            SchauderFamily::L1BumpGradient => -d / 2.0 - 0.5,
            SchauderFamily::WhiteNoise { .. } => -d / 4.0,
            SchauderFamily::Bounded => 0.0,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SchauderReport {
    pub family: SchauderFamily,
    pub dim: usize,
    pub sigmas: Vec<f64>,
    pub sup_norms: Vec<f64>,
    pub fit: PowerLawFit,
    pub predicted: f64,
    pub tolerance: f64,
    /// `|fit - predicted| ≤ tolerance`.
    pub pass: bool,
}

pub fn schauder_check(
    family: SchauderFamily,
    dim: usize,
    half_width: f64,
    n_cells: usize,
    sigmas: &[f64],
    seed: u64,
    tolerance: f64,
) -> Result<SchauderReport> {
    let template = GridField::from_fn(dim, half_width, n_cells, FieldClass::BoundedContinuous, |_| 0.0)?;
    let h = template.spacing();
    if let Some(s) = sigmas.iter().find(|&&s| s < 4.0 * h * h) {
        return Err(Error::Domain(format!("σ = {s} is not resolved by spacing {h}")));
    }
    let centre = {
        let c = n_cells / 2;
        if dim == 1 { c } else { c * n_cells + c }
    };
    let fields: Vec<GridField> = match family {
        SchauderFamily::L1Bump | SchauderFamily::L1BumpGradient => {
            let mut v = vec![0.0; template.len()];
            v[centre] = h.powi(-(dim as i32));
            vec![template.with_values(v)]
        }
        SchauderFamily::WhiteNoise { draws } => {
            (0..draws).map(|k| GridField::white_noise(dim, half_width, n_cells, seed, k)).collect::<Result<_>>()?
        }
        SchauderFamily::Bounded => vec![GridField::from_fn(dim, half_width, n_cells, FieldClass::BoundedContinuous, |x| {
            if x[0].rem_euclid(2.0) < 1.0 { 1.0 } else { -1.0 }
        })?],
    };
    let mut sup_norms = Vec::with_capacity(sigmas.len());
    for &s in sigmas {
        let op = HeatOp::new(s, &template)?;
        let mut acc = 0.0;
        for f in &fields {
            acc += match family {
                SchauderFamily::L1BumpGradient => {
                    let g = spectral_gradient_values(f, &f.values, s)?;
                    (0..f.len())
                        .map(|k| g.iter().map(|a| a[k] * a[k]).sum::<f64>().sqrt())
                        .fold(0.0, f64::max)
                }
                _ => op.apply_values(f, &f.values)?.iter().fold(0.0f64, |a, v| a.max(v.abs())),
            };
        }
        sup_norms.push(acc / fields.len() as f64);
    }
    let fit = fit_power_law(sigmas, &sup_norms)?;
    let predicted = family.predicted(dim);
    let pass = (fit.exponent - predicted).abs() <= tolerance;
    Ok(SchauderReport { family, dim, sigmas: sigmas.to_vec(), sup_norms, fit, predicted, tolerance, pass })
}
