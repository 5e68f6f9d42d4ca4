//! Arithmetic Okounkov bodies, Chebyshev transforms and arithmetic volumes of
//! adelically metrized line bundles on toric varieties over `ℚ`.

pub mod convex_geom;
pub mod error;
pub mod fit;
pub mod invariants;
pub mod linear_series;
pub mod metrics_arch;
pub mod metrics_nonarch;
pub mod quadrature;
pub mod rational;

pub use error::{Error, Result};
