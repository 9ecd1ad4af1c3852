//! Covariance, Volterra kernel and conditional standard deviation of
//! fractional Brownian motion.
//!
//! For `H ≤ 1/2` the kernel is self-similar, `K_H(t, s) = s^{H-1/2} κ(s/t)`
//! with `κ(x) = c_H [((1-x)/x²)^{H-1/2} - (H-1/2) G(x)]` and
//! `G(x) = ∫_x^1 y^{-2H} (1-y)^{H-1/2} dy`. The conditional variance is
//! `σ_H²(s, t) = t^{2H} S(s/t)` with `S(y) = ∫_y^1 x^{2H-1} κ(x)² dx`.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::quad::integrate;

const REL_TOL: f64 = 1e-10;

pub fn check_hurst(h: f64) -> Result<()> {
    if !(h > 0.0 && h < 1.0) {
        return Err(Error::Domain(format!("Hurst index must lie in (0, 1), got {h}")));
    }
    Ok(())
}

fn check_kernel_hurst(h: f64) -> Result<()> {
    if !(h > 0.0 && h <= 0.5) {
        return Err(Error::Domain(format!("kernel representation needs H in (0, 1/2], got {h}")));
    }
    Ok(())
}

/// `E[B_s B_t] = (t^{2H} + s^{2H} - |t-s|^{2H}) / 2`.
pub fn covariance(h: f64, s: f64, t: f64) -> f64 {
    let p = 2.0 * h;
    0.5 * (t.abs().powf(p) + s.abs().powf(p) - (t - s).abs().powf(p))
}

/// `c_H = sqrt(2H Γ(3/2-H) / (Γ(H+1/2) Γ(2-2H)))`.
pub fn kernel_constant(h: f64) -> f64 {
    (2.0 * h * gamma(1.5 - h) / (gamma(h + 0.5) * gamma(2.0 - 2.0 * h))).sqrt()
}

/// `∫_s^t u^{H-3/2} (u-s)^{H-1/2} du` through `u = s + v²`.
pub fn kernel_inner_integral(h: f64, s: f64, t: f64) -> Result<f64> {
    check_kernel_hurst(h)?;
    if !(s > 0.0 && t >= s) {
        return Err(Error::Domain(format!("need 0 < s <= t, got s={s}, t={t}")));
    }
    let e = 2.0 * h;
    integrate(
        |v| 2.0 * v.powf(e) * (s + v * v).powf(h - 1.5),
        0.0,
        (t - s).sqrt(),
        REL_TOL,
        1e-300,
    )
}

/// `K_H(t, s)` for `0 < s < t`.
pub fn kernel(h: f64, t: f64, s: f64) -> Result<f64> {
    check_kernel_hurst(h)?;
    if !(s > 0.0 && t > s) {
        return Err(Error::Domain(format!("need 0 < s < t, got s={s}, t={t}")));
    }
    let c = kernel_constant(h);
    let a = h - 0.5;
    let first = (t / s).powf(a) * (t - s).powf(a);
    if a == 0.0 {
        return Ok(c * first);
    }
    let inner = kernel_inner_integral(h, s, t)?;
    Ok(c * (first - a * s.powf(-a) * inner))
}

/// `G(x) = ∫_x^1 y^{-2H} (1-y)^{H-1/2} dy`, computed as
/// `∫_0^{√(1-x)} 2 v^{2H} (1-v²)^{-2H} dv`.
pub fn kernel_g(h: f64, x: f64) -> Result<f64> {
    check_kernel_hurst(h)?;
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain(format!("G needs x in [0, 1], got {x}")));
    }
    if h == 0.5 {
        return Ok(-x.ln());
    }
    g_complement(h, 1.0 - x)
}

/// `G(1 - om)`, accurate for small `om`.
fn g_complement(h: f64, om: f64) -> Result<f64> {
    let e = 2.0 * h;
    integrate(|v| 2.0 * v.powf(e) * (1.0 - v * v).powf(-e), 0.0, om.sqrt(), REL_TOL, 1e-300)
}

/// Self-similar profile `κ(x)` with `K_H(t, s) = s^{H-1/2} κ(s/t)`.
pub fn kernel_profile(h: f64, x: f64) -> Result<f64> {
    check_kernel_hurst(h)?;
    if !(x > 0.0 && x < 1.0) {
        return Err(Error::Domain(format!("profile needs x in (0, 1), got {x}")));
    }
    let a = h - 0.5;
    let c = kernel_constant(h);
    let first = ((1.0 - x) / (x * x)).powf(a);
    if a == 0.0 {
        return Ok(c * first);
    }
    Ok(c * (first - a * kernel_g(h, x)?))
}

/// `S(y) = ∫_y^1 x^{2H-1} κ(x)² dx`, with power substitutions at both
/// endpoints so the integrands stay bounded.
pub fn sigma_profile(h: f64, y: f64) -> Result<f64> {
    check_kernel_hurst(h)?;
    if !(0.0..1.0).contains(&y) {
        return Err(Error::Domain(format!("profile needs y in [0, 1), got {y}")));
    }
    let e = 2.0 * h;
    let inv = 1.0 / e;
    let c = kernel_constant(h);
    let mut total = 0.0;
    let mid = 0.5;
    if y < mid {
        // x = w^{1/(2H)}: x^{2H-1} dx = dw / (2H)
        total += integrate(
            |w| {
                let x = w.powf(inv);
                let k = kernel_profile(h, x).unwrap_or(f64::NAN);
                inv * k * k
            },
            y.powf(e),
            mid.powf(e),
            REL_TOL,
            1e-300,
        )?;
    }
    let lo = y.max(mid);
    // 1 - x = w^{1/(2H)}: (1-x)^{2H-1} dx = -dw / (2H)
    total += integrate(
        |w| {
            // κ(x) (1-x)^{1/2-H} written in terms of om = 1 - x.
            let om = w.powf(inv);
            let x = 1.0 - om;
            let a = h - 0.5;
            let g = g_complement(h, om).unwrap_or(f64::NAN);
            let k = c * (x.powf(-2.0 * a) - a * g * om.powf(-a));
            inv * x.powf(e - 1.0) * k * k
        },
        0.0,
        (1.0 - lo).powf(e),
        REL_TOL,
        1e-300,
    )?;
    if !total.is_finite() {
        return Err(Error::Numerical(format!("sigma profile at y={y} is not finite")));
    }
    Ok(total)
}

/// `σ_H(s, t) = (∫_s^t K_H(t, r)² dr)^{1/2}`, the standard deviation of
/// `B_t` given the driving noise up to `s`.
pub fn sigma(h: f64, s: f64, t: f64) -> Result<f64> {
    check_kernel_hurst(h)?;
    if !(s >= 0.0 && t > s) {
        return Err(Error::Domain(format!("need 0 <= s < t, got s={s}, t={t}")));
    }
    if h == 0.5 {
        return Ok((t - s).sqrt());
    }
    Ok(t.powf(h) * sigma_profile(h, s / t)?.sqrt())
}

/// Ratios `σ_H(s, t) / |t - s|^H` over all pairs of the given times.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NdpReport {
    pub hurst: f64,
    pub pairs: Vec<(f64, f64, f64)>,
    pub min_ratio: f64,
    pub max_ratio: f64,
}

pub fn nondeterminism_profile(h: f64, times: &[f64]) -> Result<NdpReport> {
    let mut pairs = Vec::new();
    for (a, &s) in times.iter().enumerate() {
        for &t in &times[a + 1..] {
            if t <= s {
                return Err(Error::Ordering(format!("times must increase: {s} then {t}")));
            }
            let r = sigma(h, s, t)? / (t - s).powf(h);
            pairs.push((s, t, r));
        }
    }
    if pairs.is_empty() {
        return Err(Error::EmptySample);
    }
    let min_ratio = pairs.iter().map(|p| p.2).fold(f64::INFINITY, f64::min);
    let max_ratio = pairs.iter().map(|p| p.2).fold(0.0, f64::max);
    Ok(NdpReport { hurst: h, pairs, min_ratio, max_ratio })
}
