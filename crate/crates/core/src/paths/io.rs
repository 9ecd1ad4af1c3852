//! Little-endian binary format for path bundles.

use std::io::{Read, Write};

use super::{PathBundle, PoissonJumps, VolterraFbm, VolterraNoise};
use crate::error::{Error, Result};
use crate::grid::TimeGrid;

const MAGIC: &[u8; 4] = b"SWPB";
const VERSION: u32 = 1;
const HAS_W: u8 = 1;
const HAS_FBM: u8 = 2;
const HAS_VOLTERRA: u8 = 4;
const HAS_POISSON: u8 = 8;

fn put_f64s(w: &mut impl Write, xs: &[f64]) -> Result<()> {
    for x in xs {
        w.write_all(&x.to_le_bytes())?;
    }
    Ok(())
}

fn get_u64(r: &mut impl Read) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn get_f64(r: &mut impl Read) -> Result<f64> {
    Ok(f64::from_bits(get_u64(r)?))
}

fn get_f64s(r: &mut impl Read, n: usize) -> Result<Vec<f64>> {
    (0..n).map(|_| get_f64(r)).collect()
}

pub(super) fn write_bundle(b: &PathBundle, mut w: impl Write) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    for v in [b.dim as u64, b.grid.n_steps as u64, b.n_paths as u64, b.path_offset] {
        w.write_all(&v.to_le_bytes())?;
    }
    put_f64s(&mut w, &[b.hurst.unwrap_or(f64::NAN), b.grid.t0, b.grid.t1])?;
    let mut flags = 0u8;
    if b.w_increments.is_some() {
        flags |= HAS_W;
    }
    if b.fbm_values.is_some() {
        flags |= HAS_FBM;
    }
    if b.volterra.is_some() {
        flags |= HAS_VOLTERRA;
    }
    if b.poisson.is_some() {
        flags |= HAS_POISSON;
    }
    w.write_all(&[flags])?;
    if let Some(x) = &b.w_increments {
        put_f64s(&mut w, x)?;
    }
    if let Some(x) = &b.fbm_values {
        put_f64s(&mut w, x)?;
    }
    if let Some(v) = &b.volterra {
        w.write_all(&(v.y.len() as u64).to_le_bytes())?;
        put_f64s(&mut w, &v.y)?;
        put_f64s(&mut w, &v.z)?;
    }
    if let Some(p) = &b.poisson {
        put_f64s(&mut w, &[p.intensity])?;
        for t in &p.times {
            w.write_all(&(t.len() as u64).to_le_bytes())?;
            put_f64s(&mut w, t)?;
        }
    }
    Ok(())
}

pub(super) fn read_bundle(mut r: impl Read) -> Result<PathBundle> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format("not a path bundle".into()));
    }
    let mut v = [0u8; 4];
    r.read_exact(&mut v)?;
    if u32::from_le_bytes(v) != VERSION {
        return Err(Error::Format(format!("unsupported bundle version {}", u32::from_le_bytes(v))));
    }
    let dim = get_u64(&mut r)? as usize;
    let n_steps = get_u64(&mut r)? as usize;
    let n_paths = get_u64(&mut r)? as usize;
    let path_offset = get_u64(&mut r)?;
    let hurst = get_f64(&mut r)?;
    let (t0, t1) = (get_f64(&mut r)?, get_f64(&mut r)?);
    let grid = TimeGrid::new(t0, t1, n_steps)?;
    let mut flags = [0u8];
    r.read_exact(&mut flags)?;
    let flags = flags[0];
    let mut b = PathBundle::empty(grid, dim, n_paths, path_offset);
    b.hurst = (!hurst.is_nan()).then_some(hurst);
    if flags & HAS_W != 0 {
        b.w_increments = Some(get_f64s(&mut r, n_paths * n_steps * dim)?);
    }
    if flags & HAS_FBM != 0 {
        b.fbm_values = Some(get_f64s(&mut r, n_paths * (n_steps + 1) * dim)?);
    }
    if flags & HAS_VOLTERRA != 0 {
        let h = b.hurst.ok_or_else(|| Error::Format("Volterra noise without Hurst index".into()))?;
        let ny = get_u64(&mut r)? as usize;
        let y = get_f64s(&mut r, ny)?;
        let z = get_f64s(&mut r, if ny == 0 { 0 } else { n_paths * dim })?;
        let model = VolterraFbm::new(h, grid)?;
        b.volterra = Some(VolterraNoise { model, y, z });
    }
    if flags & HAS_POISSON != 0 {
        let intensity = get_f64(&mut r)?;
        let mut times = Vec::with_capacity(n_paths);
        for _ in 0..n_paths {
            let n = get_u64(&mut r)? as usize;
            times.push(get_f64s(&mut r, n)?);
        }
        b.poisson = Some(PoissonJumps { intensity, times });
    }
    Ok(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::paths::sample_poisson;

    #[test]
    fn round_trip() {
        let g = TimeGrid::new(0.0, 1.0, 16).unwrap();
        let m = VolterraFbm::new(0.3, g).unwrap();
        let b = m.sample(2, 3, 5, 42, true).unwrap();
        let mut buf = Vec::new();
        b.write_to(&mut buf).unwrap();
        let c = PathBundle::read_from(&buf[..]).unwrap();
        assert_eq!(b.fbm_values, c.fbm_values);
        assert_eq!(b.w_increments, c.w_increments);
        assert_eq!(b.volterra.as_ref().unwrap().y, c.volterra.as_ref().unwrap().y);
        assert_eq!(c.path_offset, 5);

        let p = sample_poisson(g, 2.0, 4, 1).unwrap();
        let mut buf = Vec::new();
        p.write_to(&mut buf).unwrap();
        assert_eq!(PathBundle::read_from(&buf[..]).unwrap().poisson, p.poisson);
        assert!(PathBundle::read_from(&b"nope"[..]).is_err());
    }
}
