//! Fields that can report `P_σ f_r` and `∇ P_σ f_r` at arbitrary points.

use std::sync::{Arc, OnceLock};

use statrs::function::erf::erf;

use super::field::GridField;
use super::spectral::{spectral_gradient_values, HeatOp};
use crate::error::{Error, Result};
use crate::quad::gauss_hermite_normal;

/// A scalar, possibly time-dependent, spatial field `f_r : ℝ^d → ℝ`.
pub trait SpatialField: Send + Sync {
    fn dim(&self) -> usize;

    /// Evaluator for `P_σ f_r`.
    fn prepare(&self, r: f64, sigma: f64) -> Result<Box<dyn Smoothed + '_>>;

    /// Whether `f_r` depends on `r`.
    fn time_dependent(&self) -> bool {
        false
    }
}

pub trait Smoothed: Send + Sync {
    fn value(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64], out: &mut [f64]);
}

fn check_sigma(sigma: f64) -> Result<()> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::Domain(format!("heat parameter must be >= 0, got {sigma}")));
    }
    Ok(())
}

struct GridSmoothed<'a> {
    field: &'a GridField,
    sigma: f64,
    raw: &'a [f64],
    values: Vec<f64>,
    grads: OnceLock<Vec<Vec<f64>>>,
}

impl Smoothed for GridSmoothed<'_> {
    fn value(&self, x: &[f64]) -> f64 {
        self.field.interpolate(&self.values, x)
    }
    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        let g = self.grads.get_or_init(|| {
            spectral_gradient_values(self.field, self.raw, self.sigma).expect("grid checked at prepare")
        });
        for (o, a) in out.iter_mut().zip(g) {
            *o = self.field.interpolate(a, x);
        }
    }
}

impl SpatialField for GridField {
    fn dim(&self) -> usize {
        self.dim
    }
    fn prepare(&self, r: f64, sigma: f64) -> Result<Box<dyn Smoothed + '_>> {
        check_sigma(sigma)?;
        let raw = self.slice_at(r);
        let values = if sigma == 0.0 { raw.to_vec() } else { HeatOp::new(sigma, self)?.apply_values(self, raw)? };
        Ok(Box::new(GridSmoothed { field: self, sigma, raw, values, grads: OnceLock::new() }))
    }
    fn time_dependent(&self) -> bool {
        self.time_slices.len() > 1
    }
}

#[derive(Clone, Copy, Debug)]
pub struct Constant {
    pub dim: usize,
    pub value: f64,
}

impl Smoothed for Constant {
    fn value(&self, _: &[f64]) -> f64 {
        self.value
    }
    fn gradient(&self, _: &[f64], out: &mut [f64]) {
        out.fill(0.0);
    }
}

impl SpatialField for Constant {
    fn dim(&self) -> usize {
        self.dim
    }
    fn prepare(&self, _: f64, sigma: f64) -> Result<Box<dyn Smoothed + '_>> {
        check_sigma(sigma)?;
        Ok(Box::new(*self))
    }
}

/// `x ↦ a·x + b`, invariant under `P_σ`.
#[derive(Clone, Debug)]
pub struct Affine {
    pub slope: Vec<f64>,
    pub offset: f64,
}

impl Smoothed for Affine {
    fn value(&self, x: &[f64]) -> f64 {
        self.offset + self.slope.iter().zip(x).map(|(a, x)| a * x).sum::<f64>()
    }
    fn gradient(&self, _: &[f64], out: &mut [f64]) {
        out.copy_from_slice(&self.slope);
    }
}

impl SpatialField for Affine {
    fn dim(&self) -> usize {
        self.slope.len()
    }
    fn prepare(&self, _: f64, sigma: f64) -> Result<Box<dyn Smoothed + '_>> {
        check_sigma(sigma)?;
        Ok(Box::new(self.clone()))
    }
}

/// `x ↦ amp · exp(-|x - c|² / (2 var))`.
#[derive(Clone, Debug)]
pub struct GaussianBump {
    pub center: Vec<f64>,
    pub var: f64,
    pub amp: f64,
}

impl SpatialField for GaussianBump {
    fn dim(&self) -> usize {
        self.center.len()
    }
    fn prepare(&self, _: f64, sigma: f64) -> Result<Box<dyn Smoothed + '_>> {
        check_sigma(sigma)?;
        let v = self.var + sigma;
        let amp = self.amp * (self.var / v).powf(self.center.len() as f64 / 2.0);
        Ok(Box::new(GaussianBump { center: self.center.clone(), var: v, amp }))
    }
}

impl Smoothed for GaussianBump {
    fn value(&self, x: &[f64]) -> f64 {
        let r2: f64 = x.iter().zip(&self.center).map(|(x, c)| (x - c) * (x - c)).sum();
        self.amp * (-r2 / (2.0 * self.var)).exp()
    }
    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        let v = self.value(x);
        for ((o, x), c) in out.iter_mut().zip(x).zip(&self.center) {
            *o = -(x - c) / self.var * v;
        }
    }
}

/// `x ↦ scale · sign(x_axis)`; `P_σ` gives `scale · erf(x_axis / √(2σ))`.
#[derive(Clone, Copy, Debug)]
pub struct Sign {
    pub dim: usize,
    pub axis: usize,
    pub scale: f64,
}

struct SignSmoothed {
    axis: usize,
    scale: f64,
    sigma: f64,
}

impl Smoothed for SignSmoothed {
    fn value(&self, x: &[f64]) -> f64 {
        let u = x[self.axis];
        if self.sigma == 0.0 {
            return self.scale * if u > 0.0 { 1.0 } else if u < 0.0 { -1.0 } else { 0.0 };
        }
        self.scale * erf(u / (2.0 * self.sigma).sqrt())
    }
    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        if self.sigma > 0.0 {
            let u = x[self.axis];
            out[self.axis] =
                self.scale * (-u * u / (2.0 * self.sigma)).exp() / (2.0 * std::f64::consts::PI * self.sigma).sqrt() * 2.0;
        }
    }
}

impl SpatialField for Sign {
    fn dim(&self) -> usize {
        self.dim
    }
    fn prepare(&self, _: f64, sigma: f64) -> Result<Box<dyn Smoothed + '_>> {
        check_sigma(sigma)?;
        Ok(Box::new(SignSmoothed { axis: self.axis, scale: self.scale, sigma }))
    }
}

/// `x ↦ Σ_k a_k cos(ω_k·x + φ_k)`; `P_σ` damps mode `k` by `exp(-σ|ω_k|²/2)`.
#[derive(Clone, Debug)]
pub struct FourierModes {
    pub dim: usize,
    /// `(amplitude, frequency vector, phase)`
    pub modes: Vec<(f64, Vec<f64>, f64)>,
}

impl FourierModes {
    /// Weierstrass-type sum `Σ_{k<K} 2^{-kτ} cos(2^k x + k)` on the line, which
    /// is `τ`-Hölder uniformly in `K`.
    pub fn weierstrass(tau: f64, terms: usize) -> Self {
        let modes = (0..terms)
            .map(|k| (2f64.powf(-(k as f64) * tau), vec![2f64.powi(k as i32)], k as f64))
            .collect();
        Self { dim: 1, modes }
    }
}

impl Smoothed for FourierModes {
    fn value(&self, x: &[f64]) -> f64 {
        self.modes
            .iter()
            .map(|(a, w, p)| a * (w.iter().zip(x).map(|(w, x)| w * x).sum::<f64>() + p).cos())
            .sum()
    }
    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        for (a, w, p) in &self.modes {
            let s = -a * (w.iter().zip(x).map(|(w, x)| w * x).sum::<f64>() + p).sin();
            for (o, w) in out.iter_mut().zip(w) {
                *o += s * w;
            }
        }
    }
}

impl SpatialField for FourierModes {
    fn dim(&self) -> usize {
        self.dim
    }
    fn prepare(&self, _: f64, sigma: f64) -> Result<Box<dyn Smoothed + '_>> {
        check_sigma(sigma)?;
        let modes = self
            .modes
            .iter()
            .map(|(a, w, p)| (a * (-0.5 * sigma * w.iter().map(|v| v * v).sum::<f64>()).exp(), w.clone(), *p))
            .collect();
        Ok(Box::new(FourierModes { dim: self.dim, modes }))
    }
}

type Closure = Arc<dyn Fn(f64, &[f64]) -> f64 + Send + Sync>;

/// A closed-form `f(r, x)` truncated to `f · 1_{|f| ≤ n}`; `P_σ` by a
/// tensor Gauss–Hermite rule, the gradient through `∇P_σ f = E[f(x+√σZ) Z]/√σ`.
#[derive(Clone)]
pub struct Callable {
    pub dim: usize,
    pub truncation: f64,
    pub nodes: usize,
    f: Closure,
    time_dependent: bool,
}

impl Callable {
    pub fn new(dim: usize, truncation: f64, f: impl Fn(f64, &[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Self { dim, truncation, nodes: 24, f: Arc::new(f), time_dependent: true }
    }

    pub fn autonomous(dim: usize, truncation: f64, f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Self { dim, truncation, nodes: 24, f: Arc::new(move |_, x| f(x)), time_dependent: false }
    }

    fn eval(&self, r: f64, x: &[f64]) -> f64 {
        let v = (self.f)(r, x);
        if v.abs() <= self.truncation { v } else { 0.0 }
    }
}

struct CallableSmoothed<'a> {
    c: &'a Callable,
    r: f64,
    sd: f64,
    z: Vec<f64>,
    w: Vec<f64>,
}

impl CallableSmoothed<'_> {
    fn expect(&self, x: &[f64], mut weight: impl FnMut(&[usize]) -> f64) -> f64 {
        let d = self.c.dim;
        let m = self.z.len();
        let mut idx = vec![0usize; d];
        let mut y = vec![0.0; d];
        let mut acc = 0.0;
        for k in 0..m.pow(d as u32) {
            let mut rem = k;
            let mut w = 1.0;
            for a in 0..d {
                idx[a] = rem % m;
                rem /= m;
                y[a] = x[a] + self.sd * self.z[idx[a]];
                w *= self.w[idx[a]];
            }
            acc += w * weight(&idx) * self.c.eval(self.r, &y);
        }
        acc
    }
}

impl Smoothed for CallableSmoothed<'_> {
    fn value(&self, x: &[f64]) -> f64 {
        if self.sd == 0.0 {
            return self.c.eval(self.r, x);
        }
        self.expect(x, |_| 1.0)
    }
    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        if self.sd == 0.0 {
            let h = 1e-6;
            let mut y = x.to_vec();
            for a in 0..self.c.dim {
                y[a] = x[a] + h;
                let up = self.c.eval(self.r, &y);
                y[a] = x[a] - h;
                let dn = self.c.eval(self.r, &y);
                y[a] = x[a];
                out[a] = (up - dn) / (2.0 * h);
            }
            return;
        }
        for a in 0..self.c.dim {
            out[a] = self.expect(x, |idx| self.z[idx[a]]) / self.sd;
        }
    }
}

impl SpatialField for Callable {
    fn dim(&self) -> usize {
        self.dim
    }
    fn prepare(&self, r: f64, sigma: f64) -> Result<Box<dyn Smoothed + '_>> {
        check_sigma(sigma)?;
        let (z, w) = gauss_hermite_normal(self.nodes);
        Ok(Box::new(CallableSmoothed { c: self, r, sd: sigma.sqrt(), z, w }))
    }
    fn time_dependent(&self) -> bool {
        self.time_dependent
    }
}

/// `P_δ f`, so that `prepare(r, σ)` returns `P_{σ+δ} f_r`.
#[derive(Clone)]
pub struct Mollified {
    pub inner: Arc<dyn SpatialField>,
    pub delta: f64,
}

impl SpatialField for Mollified {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn prepare(&self, r: f64, sigma: f64) -> Result<Box<dyn Smoothed + '_>> {
        check_sigma(sigma)?;
        self.inner.prepare(r, sigma + self.delta)
    }
    fn time_dependent(&self) -> bool {
        self.inner.time_dependent()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::heat::FieldClass;

    #[test]
    fn analytic_and_grid_smoothing_agree() {
        let bump = GaussianBump { center: vec![0.3], var: 0.05, amp: 2.0 };
        let grid = GridField::from_fn(1, 6.0, 2048, FieldClass::BoundedContinuous, |x| {
            2.0 * (-(x[0] - 0.3).powi(2) / 0.1).exp()
        })
        .unwrap();
        let a = bump.prepare(0.0, 0.02).unwrap();
        let g = grid.prepare(0.0, 0.02).unwrap();
        for &x in &[-0.5, 0.0, 0.31, 0.9] {
            assert!((a.value(&[x]) - g.value(&[x])).abs() < 1e-4);
            let (mut da, mut dg) = ([0.0], [0.0]);
            a.gradient(&[x], &mut da);
            g.gradient(&[x], &mut dg);
            assert!((da[0] - dg[0]).abs() < 1e-3, "{da:?} {dg:?}");
        }
    }

    #[test]
    fn gauss_hermite_smoothing_of_sign() {
        let mut c = Callable::autonomous(1, 10.0, |x| x[0].signum());
        c.nodes = 120;
        let s = Sign { dim: 1, axis: 0, scale: 1.0 };
        let (pc, ps) = (c.prepare(0.0, 0.5).unwrap(), s.prepare(0.0, 0.5).unwrap());
        // Hermite rules converge slowly on jumps; a loose tolerance suffices.
        let (a, b) = (pc.value(&[0.4]), ps.value(&[0.4]));
        assert!((a - b).abs() < 0.03, "{a} {b}");
        let smooth = Callable::autonomous(1, 10.0, |x| x[0].sin());
        let v = smooth.prepare(0.0, 0.3).unwrap().value(&[0.7]);
        assert!((v - (-0.15f64).exp() * 0.7f64.sin()).abs() < 1e-10);
        let mut g = [0.0];
        smooth.prepare(0.0, 0.3).unwrap().gradient(&[0.7], &mut g);
        assert!((g[0] - (-0.15f64).exp() * 0.7f64.cos()).abs() < 1e-10);
    }

    #[test]
    fn truncation_and_mollification() {
        let c = Callable::autonomous(1, 2.0, |x| 1.0 / x[0].abs());
        assert_eq!(c.prepare(0.0, 0.0).unwrap().value(&[0.1]), 0.0);
        assert_eq!(c.prepare(0.0, 0.0).unwrap().value(&[1.0]), 1.0);
        let m = Mollified { inner: Arc::new(GaussianBump { center: vec![0.0], var: 1.0, amp: 1.0 }), delta: 1.0 };
        let direct = GaussianBump { center: vec![0.0], var: 1.0, amp: 1.0 }.prepare(0.0, 1.5).unwrap().value(&[0.2]);
        assert!((m.prepare(0.0, 0.5).unwrap().value(&[0.2]) - direct).abs() < 1e-15);
    }

    #[test]
    fn fourier_damping() {
        let f = FourierModes::weierstrass(0.5, 6);
        let p = f.prepare(0.0, 0.1).unwrap();
        let direct: f64 = (0..6)
            .map(|k| {
                let w = 2f64.powi(k);
                2f64.powf(-(k as f64) * 0.5) * (-0.05 * w * w).exp() * (w * 0.3 + k as f64).cos()
            })
            .sum();
        assert!((p.value(&[0.3]) - direct).abs() < 1e-12);
    }
}
