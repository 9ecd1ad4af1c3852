//! The experiment registry.

mod determinism;
mod drift;
mod fbm;
mod flow;
mod heat;
mod ito;

use crate::{ExperimentConfig, HarnessError, Outcome};

pub type Runner = fn(&ExperimentConfig) -> Result<Outcome, HarnessError>;

pub struct Experiment {
    pub name: &'static str,
    pub description: &'static str,
    /// The mathematical statement the experiment probes.
    pub statement: &'static str,
    pub run: Runner,
    /// `n_paths` and `[params]` of a reduced run, as TOML.
    pub smoke: &'static str,
}

static REGISTRY: &[Experiment] = &[
    ito::QV_BROWNIAN,
    ito::QV_POISSON,
    ito::POISSON_COUNTEREXAMPLE,
    ito::ITO_INTEGRAL,
    ito::ITO_FORMULA,
    ito::DYADIC_ALLOCATION,
    fbm::FBM_LAW,
    fbm::FBM_CONDITIONAL,
    drift::GIRSANOV,
    drift::PSI_REGULARITY,
    drift::AVERAGING_EXPONENTS,
    drift::AVERAGED_VS_PATHWISE,
    flow::YOUNG_FLOW_JACOBIAN,
    flow::DIVISION_IDENTITY,
    heat::HEAT_SCHAUDER,
    determinism::DETERMINISM,
];

pub fn registry() -> &'static [Experiment] {
    REGISTRY
}

pub fn find(name: &str) -> Option<&'static Experiment> {
    REGISTRY.iter().find(|e| e.name == name)
}

/// Config text for the reduced run of `exp`.
pub fn smoke_config(exp: &Experiment, seed: u64) -> String {
    format!("experiment = \"{}\"\nseed = {seed}\n{}", exp.name, exp.smoke)
}

/// Lower-triangular table of means of `xs` laid out `[path][k]`.
pub(crate) fn column_means(xs: &[f64], width: usize) -> Vec<f64> {
    let n = xs.len() / width;
    (0..width)
        .map(|k| {
            let col: Vec<f64> = xs.iter().skip(k).step_by(width).cloned().collect();
            sewing::stats::pairwise_sum(&col) / n as f64
        })
        .collect()
}

pub(crate) fn exponent_or_nan(r: &sewing::sewing::RateReport) -> f64 {
    r.exponent().unwrap_or(f64::NAN)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_are_unique_and_smoke_configs_parse() {
        let mut names: Vec<_> = registry().iter().map(|e| e.name).collect();
        names.sort_unstable();
        names.dedup();
        assert_eq!(names.len(), registry().len());
        for e in registry() {
            ExperimentConfig::parse(&smoke_config(e, 1)).unwrap();
        }
    }
}
