//! Public-API checks against closed forms and algebraic identities.

use proptest::prelude::*;
use sewing::grid::{Partition, TimeGrid};
use sewing::heat::{heat_apply, FieldClass, GridField, HeatOp};
use sewing::ito::{ItoGerm, QvGerm};
use sewing::paths::{fbm, sample_brownian, VolterraFbm};
use sewing::sewing::{allocation_check, riemann_sums};
use sewing::young::{young_integral, HolderPath};

#[test]
fn left_point_sum_of_b_db_is_the_discrete_ito_identity() {
    // Σ B_s ΔB = (B_T² - Σ (ΔB)²) / 2 holds exactly for any partition.
    let g = TimeGrid::dyadic(1.0, 8).unwrap();
    let b = sample_brownian(g, 1, 20, 3).unwrap();
    let ito = ItoGerm::scalar(&b, |x| x).unwrap();
    let qv = QvGerm::brownian(&b).unwrap();
    let part = Partition::new(g, vec![0, 3, 17, 64, 65, 200, 256]).unwrap();
    let s = riemann_sums(&ito, &part).unwrap();
    let q = riemann_sums(&qv, &part).unwrap();
    for p in 0..20 {
        let bt = b.brownian_path(p).unwrap()[256];
        assert!((s[p] - 0.5 * (bt * bt - q[p])).abs() < 1e-12);
    }
}

#[test]
fn brownian_kernel_quantities_are_elementary() {
    assert!((fbm::sigma(0.5, 0.3, 0.8).unwrap() - 0.5f64.sqrt()).abs() < 1e-12);
    assert!((fbm::covariance(0.5, 0.3, 0.8) - 0.3).abs() < 1e-12);
    // K_{1/2} = 1 on (0, t).
    assert!((fbm::kernel(0.5, 1.0, 0.4).unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn kernel_squared_integrates_to_the_variance() {
    // ∫_0^t K_H(t, r)² dr = t^{2H}, computed here by a crude midpoint rule
    // on a log-spaced grid that is independent of the library's quadrature.
    for h in [0.2, 0.4] {
        let t: f64 = 1.0;
        let n = 20000;
        let mut acc = 0.0;
        let (lo, hi) = (1e-12f64.ln(), 1.0f64.ln());
        for k in 0..n {
            // r = t (1 - e^u) covers the right end, mirror for the left.
            let u0 = lo + (hi - lo) * k as f64 / n as f64;
            let u1 = lo + (hi - lo) * (k + 1) as f64 / n as f64;
            let (a, b) = (u0.exp(), u1.exp());
            let m = 0.5 * (a + b);
            for r in [0.5 * m, t - 0.5 * m] {
                let kk = fbm::kernel(h, t, r).unwrap();
                acc += kk * kk * 0.5 * (b - a);
            }
        }
        assert!((acc - t.powf(2.0 * h)).abs() < 0.02, "H={h}: {acc}");
    }
}

#[test]
fn volterra_sampler_matches_fbm_covariance() {
    let g = TimeGrid::dyadic(1.0, 6).unwrap();
    let m = VolterraFbm::new(0.25, g).unwrap();
    for (i, k) in [(1, 1), (1, 64), (16, 48), (40, 64)] {
        let exact = fbm::covariance(0.25, g.time(i), g.time(k));
        let scale = (g.time(i) * g.time(k)).powf(0.25);
        assert!((m.covariance(i, k).unwrap() - exact).abs() < 0.01 * scale, "({i}, {k})");
    }
}

#[test]
fn heat_of_a_cosine_is_damped_exactly() {
    let f = GridField::from_fn(1, std::f64::consts::PI, 128, FieldClass::BoundedContinuous, |x| (3.0 * x[0]).cos()).unwrap();
    let s = 0.1;
    let g = heat_apply(&HeatOp::new(s, &f).unwrap(), &f).unwrap();
    let damp = (-0.5 * s * 9.0f64).exp();
    for (a, b) in g.values.iter().zip(&f.values) {
        assert!((a - damp * b).abs() < 1e-12);
    }
}

#[test]
fn young_integral_of_smooth_paths() {
    // ∫_0^1 t d(t²) = 2/3.
    let g = TimeGrid::dyadic(1.0, 10).unwrap();
    let y = HolderPath::from_fn(g, 1.0, |t| t).unwrap();
    let v = HolderPath::from_fn(g, 1.0, |t| t * t).unwrap();
    let r = young_integral(&y, &v, 0, 1024).unwrap();
    assert!((r.value - 2.0 / 3.0).abs() <= 2.0 * r.error_estimate);
    assert!((r.extrapolated - 2.0 / 3.0).abs() < 1e-6, "{}", r.extrapolated);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]
    #[test]
    fn allocation_identity_for_random_partitions(mut idx in prop::collection::vec(0usize..=128, 0..20), seed in 0u64..1000) {
        let g = TimeGrid::dyadic(1.0, 7).unwrap();
        let b = sample_brownian(g, 1, 3, seed).unwrap();
        let germ = ItoGerm::scalar(&b, f64::sin).unwrap();
        idx.push(0);
        idx.push(128);
        idx.sort_unstable();
        idx.dedup();
        let c = allocation_check(&germ, &Partition::new(g, idx).unwrap()).unwrap();
        prop_assert!(c.max_relative_error < 1e-10);
    }
}
