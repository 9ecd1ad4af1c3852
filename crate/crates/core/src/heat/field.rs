use std::io::{Read, Write};

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{path_rng, Stream};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FieldClass {
    BoundedContinuous,
    Lebesgue { p: f64 },
    /// Besov–Hölder class of regularity `nu ≤ 0`.
    Besov { nu: f64 },
}

/// Samples of a function on the periodic box `[-L, L)^d`, `d ∈ {1, 2}`,
/// at the nodes `-L + j h`, `h = 2L / n`. Values are row-major with the
/// last axis fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct GridField {
    pub dim: usize,
    pub half_width: f64,
    pub n_cells: usize,
    pub values: Vec<f64>,
    /// Piecewise-constant time dependence: slice `k` applies on
    /// `[r_k, r_{k+1})`. Empty for time-independent fields.
    pub time_slices: Vec<(f64, Vec<f64>)>,
    pub class: FieldClass,
}

impl GridField {
    pub fn new(dim: usize, half_width: f64, n_cells: usize, values: Vec<f64>, class: FieldClass) -> Result<Self> {
        if !(dim == 1 || dim == 2) {
            return Err(Error::Domain(format!("grid fields support d = 1 or 2, got {dim}")));
        }
        if !n_cells.is_power_of_two() || n_cells < 2 {
            return Err(Error::Domain(format!("cells per axis must be a power of two, got {n_cells}")));
        }
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(Error::Domain(format!("half width must be positive, got {half_width}")));
        }
        if values.len() != n_cells.pow(dim as u32) {
            return Err(Error::GridMismatch(format!("{} values for {n_cells}^{dim} nodes", values.len())));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("field values must be finite".into()));
        }
        Ok(Self { dim, half_width, n_cells, values, time_slices: Vec::new(), class })
    }

    /// Samples `f` at the nodes.
    pub fn from_fn(dim: usize, half_width: f64, n_cells: usize, class: FieldClass, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let h = 2.0 * half_width / n_cells as f64;
        let mut values = Vec::with_capacity(n_cells.pow(dim as u32));
        let mut x = vec![0.0; dim];
        for k in 0..n_cells.pow(dim as u32) {
            let mut rem = k;
            for a in (0..dim).rev() {
                x[a] = -half_width + (rem % n_cells) as f64 * h;
                rem /= n_cells;
            }
            values.push(f(&x));
        }
        Self::new(dim, half_width, n_cells, values, class)
    }

    /// Grid white noise: independent `N(0, h^{-d})` node values, so pairings
    /// with test functions have the white-noise variance `∫φ²`.
    pub fn white_noise(dim: usize, half_width: f64, n_cells: usize, seed: u64, draw: u64) -> Result<Self> {
        let h = 2.0 * half_width / n_cells as f64;
        let sd = h.powf(-(dim as f64) / 2.0);
        let mut rng = path_rng(seed, Stream::Field, draw);
        let values = (0..n_cells.pow(dim as u32))
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                sd * z
            })
            .collect();
        Self::new(dim, half_width, n_cells, values, FieldClass::Besov { nu: -(dim as f64) / 2.0 })
    }

    pub fn with_time_slices(mut self, slices: Vec<(f64, Vec<f64>)>) -> Result<Self> {
        if slices.windows(2).any(|w| !(w[0].0 < w[1].0)) {
            return Err(Error::Ordering("time slices must have increasing start times".into()));
        }
        if slices.iter().any(|s| s.1.len() != self.values.len()) {
            return Err(Error::GridMismatch("time slice has the wrong number of values".into()));
        }
        self.time_slices = slices;
        Ok(self)
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.n_cells as f64
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Values in force at time `r`.
    pub fn slice_at(&self, r: f64) -> &[f64] {
        match self.time_slices.iter().rposition(|s| s.0 <= r) {
            Some(k) => &self.time_slices[k].1,
            None => self.time_slices.first().map(|s| &s.1[..]).unwrap_or(&self.values),
        }
    }

    pub fn same_grid(&self, o: &GridField) -> bool {
        self.dim == o.dim && self.n_cells == o.n_cells && self.half_width == o.half_width
    }

    pub fn with_values(&self, values: Vec<f64>) -> Self {
        Self { values, time_slices: Vec::new(), ..self.clone() }
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |a, v| a.max(v.abs()))
    }

    pub fn mean(&self) -> f64 {
        crate::stats::pairwise_sum(&self.values) / self.values.len() as f64
    }

    /// Multilinear periodic interpolation of `vals` (laid out like `values`).
    pub fn interpolate(&self, vals: &[f64], x: &[f64]) -> f64 {
        let n = self.n_cells;
        let h = self.spacing();
        let mut base = [0usize; 2];
        let mut frac = [0.0; 2];
        for a in 0..self.dim {
            let u = (x[a] + self.half_width) / h;
            let f = u.floor();
            frac[a] = u - f;
            base[a] = (f as i64).rem_euclid(n as i64) as usize;
        }
        if self.dim == 1 {
            let i1 = (base[0] + 1) % n;
            vals[base[0]] * (1.0 - frac[0]) + vals[i1] * frac[0]
        } else {
            let (i0, j0) = (base[0], base[1]);
            let (i1, j1) = ((i0 + 1) % n, (j0 + 1) % n);
            let (fx, fy) = (frac[0], frac[1]);
            vals[i0 * n + j0] * (1.0 - fx) * (1.0 - fy)
                + vals[i0 * n + j1] * (1.0 - fx) * fy
                + vals[i1 * n + j0] * fx * (1.0 - fy)
                + vals[i1 * n + j1] * fx * fy
        }
    }

    /// Header (magic, dim, n_cells, half width) followed by row-major f64
    /// values, little endian. Time slices are not stored.
    pub fn write_binary(&self, mut w: impl Write) -> Result<()> {
        w.write_all(b"SWGF")?;
        w.write_all(&(self.dim as u64).to_le_bytes())?;
        w.write_all(&(self.n_cells as u64).to_le_bytes())?;
        w.write_all(&self.half_width.to_le_bytes())?;
        for v in &self.values {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary(mut r: impl Read, class: FieldClass) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != b"SWGF" {
            return Err(Error::Format("not a grid field".into()));
        }
        let mut b = [0u8; 8];
        r.read_exact(&mut b)?;
        let dim = u64::from_le_bytes(b) as usize;
        r.read_exact(&mut b)?;
        let n = u64::from_le_bytes(b) as usize;
        r.read_exact(&mut b)?;
        let half_width = f64::from_le_bytes(b);
        if dim > 2 || n > 1 << 24 {
            return Err(Error::Format(format!("implausible header: dim {dim}, {n} cells")));
        }
        let mut values = Vec::with_capacity(n.pow(dim as u32));
        for _ in 0..n.pow(dim as u32) {
            r.read_exact(&mut b)?;
            values.push(f64::from_le_bytes(b));
        }
        Self::new(dim, half_width, n, values, class)
    }

    /// One-dimensional field from a headerless CSV with one value per row.
    pub fn read_csv_1d(r: impl Read, half_width: f64, class: FieldClass) -> Result<Self> {
        let mut rd = csv::ReaderBuilder::new().has_headers(false).from_reader(r);
        let mut values = Vec::new();
        for rec in rd.records() {
            let rec = rec.map_err(|e| Error::Format(e.to_string()))?;
            let field = rec.get(rec.len().saturating_sub(1)).unwrap_or("");
            values.push(field.trim().parse::<f64>().map_err(|e| Error::Format(format!("{field:?}: {e}")))?);
        }
        let n = values.len();
        Self::new(1, half_width, n, values, class)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interpolation_is_exact_at_nodes_and_periodic() {
        let f = GridField::from_fn(2, 1.0, 8, FieldClass::BoundedContinuous, |x| x[0] + 10.0 * x[1]).unwrap();
        let h = f.spacing();
        let x = [-1.0 + 3.0 * h, -1.0 + 5.0 * h];
        assert!((f.interpolate(&f.values, &x) - (x[0] + 10.0 * x[1])).abs() < 1e-12);
        let y = [x[0] + 2.0, x[1] - 4.0];
        assert!((f.interpolate(&f.values, &y) - f.interpolate(&f.values, &x)).abs() < 1e-12);
    }

    #[test]
    fn binary_and_csv_round_trip() {
        let f = GridField::white_noise(1, 2.0, 16, 1, 0).unwrap();
        let mut buf = Vec::new();
        f.write_binary(&mut buf).unwrap();
        assert_eq!(GridField::read_binary(&buf[..], f.class).unwrap(), f);
        let csv: String = f.values.iter().map(|v| format!("{v:e}\n")).collect();
        let g = GridField::read_csv_1d(csv.as_bytes(), 2.0, f.class).unwrap();
        assert_eq!(g.values, f.values);
        assert!(GridField::read_csv_1d("1\n2\n3\n".as_bytes(), 1.0, f.class).is_err());
    }

    #[test]
    fn time_slices_are_piecewise_constant() {
        let f = GridField::from_fn(1, 1.0, 4, FieldClass::BoundedContinuous, |_| 0.0)
            .unwrap()
            .with_time_slices(vec![(0.0, vec![1.0; 4]), (0.5, vec![2.0; 4])])
            .unwrap();
        assert_eq!(f.slice_at(0.2)[0], 1.0);
        assert_eq!(f.slice_at(0.5)[0], 2.0);
    }
}
