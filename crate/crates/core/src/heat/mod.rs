//! Heat semigroup `P_σ` (Gaussian convolution with variance `σ`) on
//! periodic boxes, Besov-type norm estimates and smoothing of drift fields.

mod besov;
mod field;
mod schauder;
mod smooth;
mod spectral;

pub use besov::{besov_norm, BesovProbe};
pub use field::{FieldClass, GridField};
pub use schauder::{schauder_check, SchauderFamily, SchauderReport};
pub use smooth::{Affine, Callable, Constant, FourierModes, GaussianBump, Mollified, Sign, Smoothed, SpatialField};
pub use spectral::{heat_apply, spectral_gradient, HeatOp};
