//! Itô-type germs: stochastic integrals, quadratic variation, the
//! compensated Poisson counterexample and the Itô formula split.

mod formula;
mod germs;

pub use formula::{ito_formula_check, C3Fn, FormulaTerm, ItoFormulaGerm, ItoFormulaReport};
pub use germs::{
    clipped_power, ito_integral, poisson_counterexample, quadratic_variation, ItoGerm, PoissonGerm, PoissonTable,
    QvGerm, QvResult, VecFn,
};
