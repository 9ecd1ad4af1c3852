//! Monte Carlo summaries and log–log regressions.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

/// Pairwise summation. The reduction tree only depends on the length, so
/// the result is independent of how the input was produced.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 16 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

pub fn mean(xs: &[f64]) -> Result<f64> {
    if xs.is_empty() {
        return Err(Error::EmptySample);
    }
    Ok(pairwise_sum(xs) / xs.len() as f64)
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> Result<f64> {
    let m = mean(xs)?;
    if xs.len() < 2 {
        return Ok(0.0);
    }
    let sq: Vec<f64> = xs.iter().map(|x| (x - m) * (x - m)).collect();
    Ok(pairwise_sum(&sq) / (xs.len() - 1) as f64)
}

/// Mean with its Monte Carlo standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
}

pub fn mean_estimate(xs: &[f64]) -> Result<Estimate> {
    let value = mean(xs)?;
    let stderr = (variance(xs)? / xs.len() as f64).sqrt();
    Ok(Estimate { value, stderr })
}

/// `(E|X|^m)^{1/m}` from samples of a vector-valued variable stored as
/// consecutive blocks of `dim` entries; `|X|` is the Euclidean norm.
/// `m = ∞` gives the sample maximum.
pub fn lm_norm(samples: &[f64], dim: usize, m: f64) -> Result<Estimate> {
    if samples.is_empty() || dim == 0 {
        return Err(Error::EmptySample);
    }
    if !samples.len().is_multiple_of(dim) {
        return Err(Error::Domain(format!("{} samples do not split into blocks of {dim}", samples.len())));
    }
    if !(m >= 1.0) {
        return Err(Error::Domain(format!("moment order must be >= 1, got {m}")));
    }
    let norms: Vec<f64> = samples
        .chunks_exact(dim)
        .map(|c| c.iter().map(|v| v * v).sum::<f64>().sqrt())
        .collect();
    if m.is_infinite() {
        let value = norms.iter().cloned().fold(0.0, f64::max);
        return Ok(Estimate { value, stderr: f64::NAN });
    }
    let powered: Vec<f64> = norms.iter().map(|v| v.powf(m)).collect();
    let e = mean_estimate(&powered)?;
    if e.value == 0.0 {
        return Ok(Estimate { value: 0.0, stderr: 0.0 });
    }
    let value = e.value.powf(1.0 / m);
    // Delta method for x -> x^{1/m}.
    let stderr = value / (m * e.value) * e.stderr;
    Ok(Estimate { value, stderr })
}

/// Least-squares fit of `log y = c + a log x`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub exponent: f64,
    pub log_intercept: f64,
    pub stderr: f64,
    /// 95% band on the exponent from the Student t quantile.
    pub ci_low: f64,
    pub ci_high: f64,
    pub r_squared: f64,
    pub n_points: usize,
}

impl PowerLawFit {
    pub fn prefactor(&self) -> f64 {
        self.log_intercept.exp()
    }
}

pub const MIN_FIT_POINTS: usize = 4;

pub fn fit_power_law(scales: &[f64], values: &[f64]) -> Result<PowerLawFit> {
    if scales.len() != values.len() {
        return Err(Error::Domain("scales and values differ in length".into()));
    }
    let pts: Vec<(f64, f64)> = scales
        .iter()
        .zip(values)
        .filter(|(s, v)| **s > 0.0 && **v > 0.0 && v.is_finite())
        .map(|(s, v)| (s.ln(), v.ln()))
        .collect();
    if pts.len() < MIN_FIT_POINTS {
        return Err(Error::InsufficientScales { needed: MIN_FIT_POINTS, got: pts.len() });
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx <= 0.0 {
        return Err(Error::Domain("scales must not all coincide".into()));
    }
    let a = sxy / sxx;
    let c = my - a * mx;
    let rss: f64 = pts.iter().map(|p| (p.1 - c - a * p.0).powi(2)).sum();
    let stderr = (rss / (n - 2.0) / sxx).sqrt();
    let t = StudentsT::new(0.0, 1.0, n - 2.0)
        .map(|d| d.inverse_cdf(0.975))
        .unwrap_or(1.96);
    let r_squared = if syy > 0.0 { 1.0 - rss / syy } else { 1.0 };
    Ok(PowerLawFit {
        exponent: a,
        log_intercept: c,
        stderr,
        ci_low: a - t * stderr,
        ci_high: a + t * stderr,
        r_squared,
        n_points: pts.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn recovers_exact_power_law() {
        let xs: Vec<f64> = (1..8).map(|k| 2f64.powi(-k)).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * x.powf(0.75)).collect();
        let f = fit_power_law(&xs, &ys).unwrap();
        assert!((f.exponent - 0.75).abs() < 1e-12);
        assert!((f.prefactor() - 3.0).abs() < 1e-10);
        assert!(f.stderr < 1e-10);
    }

    #[test]
    fn too_few_scales() {
        let r = fit_power_law(&[1.0, 0.5, 0.25], &[1.0, 0.5, 0.25]);
        assert!(matches!(r, Err(Error::InsufficientScales { got: 3, .. })));
    }

    #[test]
    fn lm_norm_of_constant_vectors() {
        let s = vec![3.0, 4.0, 3.0, 4.0];
        let e = lm_norm(&s, 2, 2.0).unwrap();
        assert!((e.value - 5.0).abs() < 1e-14);
        assert_eq!(lm_norm(&s, 2, f64::INFINITY).unwrap().value, 5.0);
    }

    proptest! {
        #[test]
        fn pairwise_sum_close_to_naive(xs in proptest::collection::vec(-1e3f64..1e3, 0..300)) {
            let naive: f64 = xs.iter().sum();
            prop_assert!((pairwise_sum(&xs) - naive).abs() <= 1e-9 * (1.0 + xs.iter().map(|x| x.abs()).sum::<f64>()));
        }

        #[test]
        fn lm_norm_is_monotone_in_m(xs in proptest::collection::vec(-10f64..10.0, 2..100)) {
            let a = lm_norm(&xs, 1, 1.0).unwrap().value;
            let b = lm_norm(&xs, 1, 2.0).unwrap().value;
            let c = lm_norm(&xs, 1, 4.0).unwrap().value;
            prop_assert!(a <= b * (1.0 + 1e-12) && b <= c * (1.0 + 1e-12));
        }
    }
}
