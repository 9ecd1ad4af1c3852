use serde::Serialize;

fn inv(p: f64) -> f64 {
    if p.is_infinite() {
        0.0
    } else {
        1.0 / p
    }
}

/// Regularity exponents of the drift classes and the conditions built on them.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Exponents {
    pub hurst: f64,
    pub dim: usize,
    pub p: f64,
    pub q: f64,
    pub nu: Option<f64>,
    /// `1 - H d / p - 1 / q`
    pub tau: f64,
    /// `1 + H ν - 1 / q`
    pub gamma: Option<f64>,
    /// `H d / p + 1 / q < 1/2`
    pub weak: bool,
    /// `H d / p + 1 / q < 1/2 - H`
    pub pathwise: bool,
    /// `γ > 1/2`
    pub nuq: Option<bool>,
}

/// `p, q ∈ [1, ∞]`, with `f64::INFINITY` for `∞`.
pub fn exponents(hurst: f64, dim: usize, p: f64, q: f64, nu: Option<f64>) -> Exponents {
    let load = hurst * dim as f64 * inv(p) + inv(q);
    let gamma = nu.map(|nu| 1.0 + hurst * nu - inv(q));
    Exponents {
        hurst,
        dim,
        p,
        q,
        nu,
        tau: 1.0 - load,
        gamma,
        weak: load < 0.5,
        pathwise: load < 0.5 - hurst,
        nuq: gamma.map(|g| g > 0.5),
    }
}
