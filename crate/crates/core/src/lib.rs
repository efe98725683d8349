//! Numerical laboratory for flat P¹-bundle laminations over hyperbolic
//! surfaces: hyperbolic geometry primitives, leafwise Brownian motion,
//! holonomy cocycles and their Lyapunov exponents, entropy and harmonic
//! measure estimators, limit-set dimension estimation, and exact
//! intersection theory on ruled surfaces.

pub mod brownian;
pub mod dimension;
pub mod error;
pub mod estimators;
pub mod hyperbolic;
pub mod report;
pub mod surface;
pub mod suspension;
pub mod verification;

pub use error::{Error, Result};
