//! Numerical toolkit for stochastic sewing.
//!
//! The crate is organised bottom-up: Gaussian path generation
//! ([`paths`]), the germ/sewing engine ([`sewing`]), Itô-type germs
//! ([`ito`]), heat-semigroup smoothing on periodic boxes ([`heat`]),
//! averaging along fractional paths and singular SDEs ([`averaging`]),
//! and Young integration / linear Young flows ([`young`]).

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop, clippy::excessive_precision)]

pub mod averaging;
pub mod error;
pub mod grid;
pub mod heat;
pub mod ito;
pub mod paths;
pub mod quad;
pub mod rng;
pub mod sewing;
pub mod stats;
pub mod young;

pub use error::{Error, Result};
pub use grid::{Partition, TimeGrid};
pub use paths::PathBundle;
