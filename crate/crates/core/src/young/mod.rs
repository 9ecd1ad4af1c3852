//! Young integrals, the linear flow equation and the division identity.

mod division;
mod flow;
mod holder;
mod integral;

pub use division::{division_identity_check, DivisionReport};
pub use flow::{build_v, compare_jacobian, solve_linear_young, BuiltV, FlowGerm, JacobianComparison};
pub use holder::{pooled_exponent, HolderPath};
pub use integral::{young_integral, YoungIntegral};
