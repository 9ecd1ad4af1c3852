use serde::Deserialize;
use sewing::heat::{heat_apply, schauder_check, GridField, HeatOp, SchauderFamily};

use super::Experiment;
use crate::{Check, ExperimentConfig, HarnessError, Outcome};

pub const HEAT_SCHAUDER: Experiment = Experiment {
    name: "heat-schauder",
    description: "Semigroup law of the periodic heat operator and sup-norm smoothing exponents",
    statement: "P_a P_b = P_{a+b}, and ‖∇^k P_σ f‖_∞ ≲ σ^{(ν-k)/2} ‖f‖_{C^ν} for ν ≤ 0",
    run: heat_schauder,
    smoke: "[params]\nn_cells = 512\nn_cells_2d = 64\nnoise_draws = 2\n",
};

#[derive(Deserialize)]
#[serde(default, deny_unknown_fields)]
struct HeatParams {
    half_width: f64,
    n_cells: usize,
    half_width_2d: f64,
    n_cells_2d: usize,
    noise_draws: u64,
    semigroup_tol: f64,
    tol: f64,
}

impl Default for HeatParams {
    fn default() -> Self {
        Self {
            half_width: 4.0,
            n_cells: 2048,
            half_width_2d: 2.0,
            n_cells_2d: 256,
            noise_draws: 8,
            semigroup_tol: 1e-10,
            tol: 0.15,
        }
    }
}

/// Six doubling values of σ starting at `4 h²`, rounded up to a power of two.
fn sigmas(half_width: f64, n_cells: usize) -> Vec<f64> {
    let h = 2.0 * half_width / n_cells as f64;
    let start = 2f64.powf((4.0 * h * h).log2().ceil());
    (0..6).map(|k| start * 2f64.powi(k + 2)).collect()
}

fn heat_schauder(cfg: &ExperimentConfig) -> Result<Outcome, HarnessError> {
    let p: HeatParams = cfg.params()?;
    let mut out = Outcome::default();

    let mut worst = 0.0f64;
    for (dim, hw, n) in [(1, p.half_width, p.n_cells), (2, p.half_width_2d, p.n_cells_2d)] {
        let f = GridField::white_noise(dim, hw, n, cfg.seed, 0)?;
        let a = heat_apply(&HeatOp::new(0.03, &f)?, &f)?;
        let ab = heat_apply(&HeatOp::new(0.02, &f)?, &a)?;
        let c = heat_apply(&HeatOp::new(0.05, &f)?, &f)?;
        let scale = c.sup_norm();
        let err = ab.values.iter().zip(&c.values).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max) / scale;
        worst = worst.max(err);
    }
    out.check(Check::below("relative semigroup defect", worst, p.semigroup_tol));

    let mut table = String::from("family,dim,sigma,sup_norm\n");
    let cases = [
        (SchauderFamily::L1Bump, 1),
        (SchauderFamily::L1BumpGradient, 1),
        (SchauderFamily::WhiteNoise { draws: p.noise_draws }, 1),
        (SchauderFamily::Bounded, 1),
        (SchauderFamily::L1Bump, 2),
    ];
    for (family, dim) in cases {
        let (hw, n) = if dim == 1 { (p.half_width, p.n_cells) } else { (p.half_width_2d, p.n_cells_2d) };
        let r = schauder_check(family, dim, hw, n, &sigmas(hw, n), cfg.seed, p.tol)?;
        let name = match family {
            SchauderFamily::L1Bump => "l1-bump",
            SchauderFamily::L1BumpGradient => "l1-bump-gradient",
            SchauderFamily::WhiteNoise { .. } => "white-noise",
            SchauderFamily::Bounded => "bounded",
        };
        for (s, v) in r.sigmas.iter().zip(&r.sup_norms) {
            table.push_str(&format!("{name},{dim},{s},{v}\n"));
        }
        out.check(Check::near(format!("{name} exponent in d = {dim}"), r.fit.exponent, r.predicted, p.tol));
    }
    out.tables.insert("schauder".into(), table);
    Ok(out)
}
