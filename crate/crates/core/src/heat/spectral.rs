use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use super::field::GridField;
use crate::error::{Error, Result};

/// Angular frequencies of the periodic box, FFT order.
fn frequencies(n: usize, half_width: f64) -> Vec<f64> {
    let step = std::f64::consts::PI / half_width;
    (0..n)
        .map(|k| {
            let kk = if k <= n / 2 { k as f64 } else { k as f64 - n as f64 };
            kk * step
        })
        .collect()
}

/// In-place d-dimensional FFT, unnormalised in both directions.
fn fft_nd(data: &mut [Complex<f64>], n: usize, dim: usize, inverse: bool) {
    let mut planner = FftPlanner::new();
    let fft = if inverse { planner.plan_fft_inverse(n) } else { planner.plan_fft_forward(n) };
    if dim == 1 {
        fft.process(data);
        return;
    }
    // Rows, then columns through a transpose.
    for row in data.chunks_exact_mut(n) {
        fft.process(row);
    }
    let mut t = vec![Complex::new(0.0, 0.0); n * n];
    for i in 0..n {
        for j in 0..n {
            t[j * n + i] = data[i * n + j];
        }
    }
    for row in t.chunks_exact_mut(n) {
        fft.process(row);
    }
    for i in 0..n {
        for j in 0..n {
            data[i * n + j] = t[j * n + i];
        }
    }
}

fn to_spectrum(f: &GridField, vals: &[f64]) -> Vec<Complex<f64>> {
    let mut c: Vec<Complex<f64>> = vals.iter().map(|&v| Complex::new(v, 0.0)).collect();
    fft_nd(&mut c, f.n_cells, f.dim, false);
    c
}

fn from_spectrum(f: &GridField, mut c: Vec<Complex<f64>>) -> Vec<f64> {
    fft_nd(&mut c, f.n_cells, f.dim, true);
    let norm = 1.0 / c.len() as f64;
    c.into_iter().map(|z| z.re * norm).collect()
}

/// Multiplier table `exp(-σ |ξ|² / 2)` for one grid geometry.
#[derive(Clone, Debug)]
pub struct HeatOp {
    pub sigma: f64,
    pub dim: usize,
    pub half_width: f64,
    pub n_cells: usize,
    multipliers: Vec<f64>,
}

impl HeatOp {
    pub fn new(sigma: f64, like: &GridField) -> Result<Self> {
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(Error::Domain(format!("heat parameter must be >= 0, got {sigma}")));
        }
        let xi = frequencies(like.n_cells, like.half_width);
        let e: Vec<f64> = xi.iter().map(|x| (-0.5 * sigma * x * x).exp()).collect();
        let multipliers = if like.dim == 1 {
            e
        } else {
            e.iter().flat_map(|a| e.iter().map(move |b| a * b)).collect()
        };
        Ok(Self { sigma, dim: like.dim, half_width: like.half_width, n_cells: like.n_cells, multipliers })
    }

    fn check(&self, f: &GridField) -> Result<()> {
        if f.dim != self.dim || f.n_cells != self.n_cells || f.half_width != self.half_width {
            return Err(Error::GridMismatch("heat operator built for a different grid".into()));
        }
        Ok(())
    }

    /// `P_σ` applied to raw values laid out like the field.
    pub fn apply_values(&self, f: &GridField, vals: &[f64]) -> Result<Vec<f64>> {
        self.check(f)?;
        if self.sigma == 0.0 {
            return Ok(vals.to_vec());
        }
        let mut c = to_spectrum(f, vals);
        c.iter_mut().zip(&self.multipliers).for_each(|(z, m)| *z *= m);
        Ok(from_spectrum(f, c))
    }
}

/// `P_σ f`, applied to every time slice as well.
pub fn heat_apply(op: &HeatOp, f: &GridField) -> Result<GridField> {
    let mut out = f.with_values(op.apply_values(f, &f.values)?);
    out.time_slices = f
        .time_slices
        .iter()
        .map(|(r, v)| Ok((*r, op.apply_values(f, v)?)))
        .collect::<Result<_>>()?;
    Ok(out)
}

/// Spectral gradient of `P_σ` applied to `vals`, one array per axis. The
/// Nyquist mode is dropped.
pub fn spectral_gradient_values(f: &GridField, vals: &[f64], sigma: f64) -> Result<Vec<Vec<f64>>> {
    let op = HeatOp::new(sigma, f)?;
    let n = f.n_cells;
    let xi = frequencies(n, f.half_width);
    let mut c = to_spectrum(f, vals);
    c.iter_mut().zip(&op.multipliers).for_each(|(z, m)| *z *= m);
    let mut out = Vec::with_capacity(f.dim);
    for axis in 0..f.dim {
        let mut d = c.clone();
        for (k, z) in d.iter_mut().enumerate() {
            let idx = if f.dim == 1 { k } else if axis == 0 { k / n } else { k % n };
            let w = if n.is_multiple_of(2) && idx == n / 2 { 0.0 } else { xi[idx] };
            *z *= Complex::new(0.0, w);
        }
        out.push(from_spectrum(f, d));
    }
    Ok(out)
}

/// `∇ P_σ f` as one field per axis.
pub fn spectral_gradient(f: &GridField, sigma: f64) -> Result<Vec<GridField>> {
    Ok(spectral_gradient_values(f, &f.values, sigma)?
        .into_iter()
        .map(|v| f.with_values(v))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::heat::FieldClass;
    use proptest::prelude::*;

    fn noise(dim: usize, n: usize, draw: u64) -> GridField {
        GridField::white_noise(dim, 4.0, n, 17, draw).unwrap()
    }

    #[test]
    fn zero_sigma_is_identity() {
        let f = noise(1, 64, 0);
        assert_eq!(heat_apply(&HeatOp::new(0.0, &f).unwrap(), &f).unwrap(), f);
    }

    #[test]
    fn semigroup_law() {
        for dim in [1, 2] {
            let f = noise(dim, 32, 1);
            let a = heat_apply(&HeatOp::new(0.3, &f).unwrap(), &f).unwrap();
            let ab = heat_apply(&HeatOp::new(0.2, &f).unwrap(), &a).unwrap();
            let c = heat_apply(&HeatOp::new(0.5, &f).unwrap(), &f).unwrap();
            let scale = c.sup_norm();
            for (x, y) in ab.values.iter().zip(&c.values) {
                assert!((x - y).abs() <= 1e-10 * scale);
            }
        }
    }

    #[test]
    fn matches_gaussian_convolution_of_a_gaussian() {
        // P_σ of exp(-x²/(2v)) is sqrt(v/(v+σ)) exp(-x²/(2(v+σ))).
        let (v, s) = (0.2, 0.3);
        let f = GridField::from_fn(1, 8.0, 256, FieldClass::BoundedContinuous, |x| (-x[0] * x[0] / (2.0 * v)).exp()).unwrap();
        let g = heat_apply(&HeatOp::new(s, &f).unwrap(), &f).unwrap();
        let exact = GridField::from_fn(1, 8.0, 256, FieldClass::BoundedContinuous, |x| {
            (v / (v + s)).sqrt() * (-x[0] * x[0] / (2.0 * (v + s))).exp()
        })
        .unwrap();
        for (a, b) in g.values.iter().zip(&exact.values) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let f = GridField::from_fn(1, 4.0, 512, FieldClass::BoundedContinuous, |x| (-x[0] * x[0]).exp()).unwrap();
        let g = &spectral_gradient(&f, 0.01).unwrap()[0];
        let p = heat_apply(&HeatOp::new(0.01, &f).unwrap(), &f).unwrap();
        let h = f.spacing();
        let n = f.n_cells;
        for i in 0..n {
            let fd = (p.values[(i + 1) % n] - p.values[(i + n - 1) % n]) / (2.0 * h);
            assert!((fd - g.values[i]).abs() < 2.0 * h * h);
        }
    }

    #[test]
    fn grid_mismatch_is_reported() {
        let f = noise(1, 32, 0);
        let g = noise(1, 64, 0);
        assert!(matches!(heat_apply(&HeatOp::new(0.1, &f).unwrap(), &g), Err(Error::GridMismatch(_))));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(20))]
        #[test]
        fn contraction_and_mass(draw in 0u64..1000, sigma in 0.0f64..2.0) {
            let f = noise(1, 64, draw);
            let g = heat_apply(&HeatOp::new(sigma, &f).unwrap(), &f).unwrap();
            prop_assert!(g.sup_norm() <= f.sup_norm() * (1.0 + 1e-12));
            prop_assert!((g.mean() - f.mean()).abs() < 1e-10 * f.sup_norm());
        }
    }
}
