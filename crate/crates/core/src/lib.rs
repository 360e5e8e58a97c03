//! Robin p-Laplacian laboratory: eigenvalue and Poisson solvers on masked
//! 2-D grids, distance-geometry limit formulas, and residual diagnostics for
//! the p -> infinity limit PDE.

pub mod check;
pub mod config;
pub mod domain;
pub mod eigen;
pub mod fields;
pub mod poisson;
pub mod run;
pub mod scalar;
pub mod viscosity;

pub use scalar::Real;

/// Concrete f64 aliases; the core is generic over the scalar type.
pub type Domain64 = domain::Domain<f64>;
pub type ScalarField64 = fields::ScalarField<f64>;
pub type RobinParams64 = fields::RobinParams<f64>;
pub type EigenResult64 = eigen::EigenResult<f64>;
pub type PoissonResult64 = poisson::PoissonResult<f64>;

pub type Domain32 = domain::Domain<f32>;
pub type ScalarField32 = fields::ScalarField<f32>;
