use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{Partition, TimeGrid};
use crate::paths::PathBundle;
use crate::sewing::{dyadic_sums, Germ, RateReport};
use crate::stats::{lm_norm, mean_estimate, Estimate};

type ScalarFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type WriteFn = Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;

/// A `C³` function on `ℝ^d` with its first two derivatives and a declared
/// bound on the third.
#[derive(Clone)]
pub struct C3Fn {
    pub name: String,
    pub dim: usize,
    value: ScalarFn,
    grad: WriteFn,
    /// Row-major `d × d`.
    hess: WriteFn,
    third_norm: ScalarFn,
    pub third_bound: f64,
}

impl C3Fn {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        name: &str,
        dim: usize,
        value: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        grad: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
        hess: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
        third_norm: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        third_bound: f64,
    ) -> Self {
        Self {
            name: name.into(),
            dim,
            value: Arc::new(value),
            grad: Arc::new(grad),
            hess: Arc::new(hess),
            third_norm: Arc::new(third_norm),
            third_bound,
        }
    }

    /// `x ↦ a·x`.
    pub fn linear(a: Vec<f64>) -> Self {
        let d = a.len();
        let a2 = a.clone();
        Self::new(
            "linear",
            d,
            move |x| x.iter().zip(&a).map(|(x, a)| x * a).sum(),
            move |_, g| g.copy_from_slice(&a2),
            |_, h| h.fill(0.0),
            |_| 0.0,
            0.0,
        )
    }

    /// `x ↦ |x|²`.
    pub fn square(dim: usize) -> Self {
        Self::new(
            "square",
            dim,
            |x| x.iter().map(|v| v * v).sum(),
            |x, g| g.iter_mut().zip(x).for_each(|(g, x)| *g = 2.0 * x),
            move |_, h| {
                h.fill(0.0);
                for k in 0..dim {
                    h[k * dim + k] = 2.0;
                }
            },
            |_| 0.0,
            0.0,
        )
    }

    /// `x ↦ Σ_k sin x_k`.
    pub fn sin_sum(dim: usize) -> Self {
        Self::new(
            "sin",
            dim,
            |x| x.iter().map(|v| v.sin()).sum(),
            |x, g| g.iter_mut().zip(x).for_each(|(g, x)| *g = x.cos()),
            move |x, h| {
                h.fill(0.0);
                for k in 0..dim {
                    h[k * dim + k] = -x[k].sin();
                }
            },
            |x| x.iter().map(|v| v.cos().abs()).fold(0.0, f64::max),
            1.0,
        )
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        (self.value)(x)
    }
}

/// Terms of the second-order Taylor split of `f(M_t) - f(M_s)`:
/// `A = A1 + A2 + A3` and `A2 = A4 + A5`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum FormulaTerm {
    /// `f(M_t) - f(M_s)`
    Full,
    /// `⟨∇f(M_s), M_{s,t}⟩`
    A1,
    /// `½ ⟨∇²f(M_s), M_{s,t} ⊗ M_{s,t}⟩`
    A2,
    /// `A - A1 - A2`
    A3,
    /// `½ ⟨∇²f(M_s), [M]_{s,t}⟩`
    A4,
    /// `½ ⟨∇²f(M_s), M_{s,t} ⊗ M_{s,t} - [M]_{s,t}⟩`
    A5,
}

/// One term of the split as a germ, for Brownian `M` with `[M]_{s,t} = (t-s) I`.
pub struct ItoFormulaGerm {
    grid: TimeGrid,
    f: C3Fn,
    term: FormulaTerm,
    n_paths: usize,
    m: Vec<f64>,
}

impl ItoFormulaGerm {
    pub fn new(bundle: &PathBundle, f: C3Fn, term: FormulaTerm) -> Result<Self> {
        if f.dim != bundle.dim {
            return Err(Error::Domain(format!("f acts on ℝ^{} but paths live in ℝ^{}", f.dim, bundle.dim)));
        }
        let mut m = Vec::with_capacity(bundle.n_paths * bundle.grid.n_points() * bundle.dim);
        for p in 0..bundle.n_paths {
            m.extend(bundle.brownian_path(p)?);
        }
        Ok(Self { grid: bundle.grid, f, term, n_paths: bundle.n_paths, m })
    }

    fn point(&self, p: usize, i: usize) -> &[f64] {
        let (np, d) = (self.grid.n_points(), self.f.dim);
        &self.m[(p * np + i) * d..(p * np + i + 1) * d]
    }

    fn terms(&self, p: usize, s: usize, t: usize) -> [f64; 6] {
        let d = self.f.dim;
        let (ms, mt) = (self.point(p, s), self.point(p, t));
        let dm: Vec<f64> = mt.iter().zip(ms).map(|(a, b)| a - b).collect();
        let h = self.grid.time(t) - self.grid.time(s);
        let mut g = vec![0.0; d];
        let mut hs = vec![0.0; d * d];
        (self.f.grad)(ms, &mut g);
        (self.f.hess)(ms, &mut hs);
        let full = self.f.value(mt) - self.f.value(ms);
        let a1: f64 = g.iter().zip(&dm).map(|(g, x)| g * x).sum();
        let mut a2 = 0.0;
        let mut a4 = 0.0;
        for a in 0..d {
            for b in 0..d {
                a2 += 0.5 * hs[a * d + b] * dm[a] * dm[b];
            }
            a4 += 0.5 * hs[a * d + a] * h;
        }
        let a5 = a2 - a4;
        [full, a1, a2, full - a1 - a2, a4, a5]
    }
}

impl Germ for ItoFormulaGerm {
    fn grid(&self) -> &TimeGrid {
        &self.grid
    }
    fn n_paths(&self) -> usize {
        self.n_paths
    }
    fn out_dim(&self) -> usize {
        1
    }
    fn eval(&self, p: usize, s: usize, t: usize, out: &mut [f64]) {
        let v = self.terms(p, s, t);
        out[0] = match self.term {
            FormulaTerm::Full => v[0],
            FormulaTerm::A1 => v[1],
            FormulaTerm::A2 => v[2],
            FormulaTerm::A3 => v[3],
            FormulaTerm::A4 => v[4],
            FormulaTerm::A5 => v[5],
        };
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ItoFormulaReport {
    /// `f(M_T) - f(M_0) - Σ A1 - Σ A4` at the finest level, per path.
    pub residuals: Vec<f64>,
    pub residual_lm: f64,
    pub residual_mean: Estimate,
    /// `‖Σ A3‖_{L_m}` and `‖Σ A5‖_{L_m}` against the mesh.
    pub a3: RateReport,
    pub a5: RateReport,
    /// Largest sampled third-derivative norm.
    pub third_derivative_max: f64,
    /// Set when sampled third derivatives exceed the declared bound.
    pub warning: Option<String>,
}

/// Checks `f(M_T) - f(M_0) = ∫ ∇f(M)·dM + ½ ∫ ∇²f(M) : d[M]` on `[0, t_t]`.
pub fn ito_formula_check(f: &C3Fn, bundle: &PathBundle, t: usize, max_level: u32, m: f64) -> Result<ItoFormulaReport> {
    let germ = |term| ItoFormulaGerm::new(bundle, f.clone(), term);
    let g1 = germ(FormulaTerm::A1)?;
    let g3 = germ(FormulaTerm::A3)?;
    let g4 = germ(FormulaTerm::A4)?;
    let g5 = germ(FormulaTerm::A5)?;
    let fine = Partition::dyadic(bundle.grid, 0, t, max_level)?;
    let s1 = crate::sewing::riemann_sums(&g1, &fine)?;
    let s4 = crate::sewing::riemann_sums(&g4, &fine)?;
    let mut residuals = Vec::with_capacity(bundle.n_paths);
    let mut third_max: f64 = 0.0;
    for p in 0..bundle.n_paths {
        let lhs = f.value(g1.point(p, t)) - f.value(g1.point(p, 0));
        residuals.push(lhs - s1[p] - s4[p]);
        for i in 0..=t {
            third_max = third_max.max((f.third_norm)(g1.point(p, i)));
        }
    }
    let span = bundle.grid.time(t) - bundle.grid.time(0);
    let report = |g: &ItoFormulaGerm, label: &str| -> Result<RateReport> {
        let levels = dyadic_sums(g, 0, t, max_level)?;
        let mut sc = Vec::new();
        let mut vals = Vec::new();
        let mut errs = Vec::new();
        for (n, l) in levels.iter().enumerate().skip(1) {
            let e = lm_norm(l, 1, m)?;
            sc.push(span * 0.5f64.powi(n as i32));
            vals.push(e.value);
            errs.push(e.stderr);
        }
        Ok(RateReport::new(label, m, sc, vals, errs))
    };
    let warning = (third_max > f.third_bound * (1.0 + 1e-12)).then(|| {
        format!("sampled third derivative {third_max} exceeds the declared bound {}", f.third_bound)
    });
    Ok(ItoFormulaReport {
        residual_lm: lm_norm(&residuals, 1, m)?.value,
        residual_mean: mean_estimate(&residuals)?,
        residuals,
        a3: report(&g3, "A3 Riemann sums")?,
        a5: report(&g5, "A5 Riemann sums")?,
        third_derivative_max: third_max,
        warning,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::paths::sample_brownian;
    use proptest::prelude::*;

    #[test]
    fn linear_function_has_zero_residual() {
        let g = TimeGrid::dyadic(1.0, 8).unwrap();
        let b = sample_brownian(g, 2, 50, 1).unwrap();
        let r = ito_formula_check(&C3Fn::linear(vec![1.0, -2.0]), &b, 256, 8, 2.0).unwrap();
        assert!(r.residual_lm < 1e-12);
        assert!(r.warning.is_none());
    }

    #[test]
    fn square_residual_is_centred() {
        let g = TimeGrid::dyadic(1.0, 8).unwrap();
        let b = sample_brownian(g, 1, 2000, 5).unwrap();
        let r = ito_formula_check(&C3Fn::square(1), &b, 256, 8, 2.0).unwrap();
        assert!(r.residual_mean.value.abs() < 3.0 * r.residual_mean.stderr);
        // Residual is Σ (ΔB² - Δ); its L2 norm is sqrt(2Δ).
        assert!((r.residual_lm / (2.0f64 / 256.0).sqrt() - 1.0).abs() < 0.1);
    }

    #[test]
    fn warns_on_third_derivative_violation() {
        let mut f = C3Fn::sin_sum(1);
        f.third_bound = 0.1;
        let g = TimeGrid::dyadic(1.0, 4).unwrap();
        let b = sample_brownian(g, 1, 5, 5).unwrap();
        assert!(ito_formula_check(&f, &b, 16, 4, 2.0).unwrap().warning.is_some());
    }

    proptest! {
        #[test]
        fn taylor_bookkeeping_is_exact(seed in 0u64..1000, s in 0usize..16, len in 1usize..16) {
            let g = TimeGrid::dyadic(1.0, 5).unwrap();
            let b = sample_brownian(g, 2, 1, seed).unwrap();
            let f = C3Fn::sin_sum(2);
            let germ = ItoFormulaGerm::new(&b, f, FormulaTerm::Full).unwrap();
            let v = germ.terms(0, s, s + len);
            prop_assert!((v[0] - v[1] - v[2] - v[3]).abs() < 1e-12);
            prop_assert!((v[2] - v[4] - v[5]).abs() < 1e-12);
        }
    }
}
