//! Boundary-integral solver for the biharmonic problem in plane domains with
//! corner points, built on monogenic functions in the biharmonic algebra.

pub mod algebra;
pub mod config;
pub mod error;
pub mod geometry;
pub mod integrate;
pub mod kernels;
pub mod lemmas;
pub mod pipeline;
pub mod quadrature;
pub mod run;
pub mod selftest;

pub use algebra::{BihNumber, MonogenicComponents};
pub use error::{Error, Result};
pub use geometry::{CornerDomainMap, CornerSpec};
pub use kernels::BoundaryDensity;
pub use quadrature::{BoundaryData, QuadratureGrid};
