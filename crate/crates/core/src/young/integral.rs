use serde::Serialize;

use super::HolderPath;
use crate::error::{Error, Result};
use crate::grid::Partition;

#[derive(Clone, Debug, Serialize)]
pub struct YoungIntegral {
    /// Left-point sum on the finest dyadic level.
    pub value: f64,
    /// Left-point sum one level coarser.
    pub previous: f64,
    pub error_estimate: f64,
    /// Richardson extrapolation with rate `min(α + β - 1, 1)`.
    pub extrapolated: f64,
    /// `|S_n - S_{n+1}|` for every level `n`.
    pub level_differences: Vec<f64>,
}

fn left_sum(y: &HolderPath, v: &HolderPath, part: &Partition) -> f64 {
    part.cells()
        .map(|(a, b)| {
            let (ya, va, vb) = (y.at(a), v.at(a), v.at(b));
            ya.iter().zip(va.iter().zip(vb)).map(|(y, (p, q))| y * (q - p)).sum::<f64>()
        })
        .sum()
}

/// `∫_s^t y · dv` by left-point sums over dyadic refinements of `[t_s, t_t]`.
pub fn young_integral(y: &HolderPath, v: &HolderPath, s: usize, t: usize) -> Result<YoungIntegral> {
    let rate = y.declared + v.declared - 1.0;
    if rate <= 0.0 {
        return Err(Error::Domain(format!(
            "Young integration needs α + β > 1, got {} + {}",
            y.declared, v.declared
        )));
    }
    if y.grid != v.grid || y.dim != v.dim {
        return Err(Error::GridMismatch("integrand and integrator differ in grid or dimension".into()));
    }
    if !(s < t && t <= y.grid.n_steps) {
        return Err(Error::Ordering(format!("[{s}, {t}]")));
    }
    let len = t - s;
    if !len.is_power_of_two() {
        return Err(Error::Domain(format!("interval of {len} cells is not dyadic")));
    }
    let top = len.trailing_zeros();
    let sums: Vec<f64> = (0..=top)
        .map(|n| Partition::dyadic(y.grid, s, t, n).map(|p| left_sum(y, v, &p)))
        .collect::<Result<_>>()?;
    let value = sums[top as usize];
    let previous = if top > 0 { sums[top as usize - 1] } else { value };
    let r = rate.min(1.0);
    let extrapolated = value + (value - previous) / (2f64.powf(r) - 1.0);
    Ok(YoungIntegral {
        value,
        previous,
        error_estimate: (value - previous).abs(),
        extrapolated,
        level_differences: sums.windows(2).map(|w| (w[1] - w[0]).abs()).collect(),
    })
}
