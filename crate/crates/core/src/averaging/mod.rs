//! Averaged drifts along fBm, the mollified singular SDE, Girsanov weights
//! and exponential-moment checks.

mod exponents;
mod field;
mod germ;
mod girsanov;
mod moments;
mod sde;

pub use exponents::{exponents, Exponents};
pub use field::{averaged_field, gradient_exchange_check, AveragedField, AveragedFieldConfig, GradientExchange};
pub use germ::{cumulative_cells, finest_sum, AveragedGerm, Readout};
pub use girsanov::{girsanov_weights, GirsanovReport, GirsanovSample};
pub use moments::{moment_bound_check, MomentRow, MomentTable};
pub use sde::{pathwise_uniqueness_probe, solve_singular_sde, Mollification, SdeConfig, SdeSolution, UniquenessReport};
