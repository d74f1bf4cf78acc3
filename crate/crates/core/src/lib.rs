//! Numerical library for worm-domain boundary analysis: chart geometry and
//! Levi data, discretized model operators, the partial Mellin transform, a
//! complex shooting solver with argument-principle zero location for the
//! boundary ODE family, and an inequality lab measuring empirical best
//! constants of the associated a priori estimates.
//!
//! All numerical kernels are generic over the scalar type (`f32`/`f64`)
//! through [`scalar::Scalar`]; the `f64` instantiations are aliased at the
//! crate root and are what the CLI and the test suites use.

pub mod error;
pub mod estimates;
pub mod fourier;
pub mod geometry;
pub mod linalg;
pub mod mellin;
pub mod operators;
pub mod quadrature;
pub mod scalar;
pub mod shooting;
pub mod sparse;
pub mod util;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Production scalar type.
pub type Real = f64;
/// Complex number over the production scalar.
pub type Complex = num_complex::Complex<Real>;

pub type WormConfig = geometry::WormConfig<Real>;
pub type ChartPoint = geometry::ChartPoint<Real>;
pub type LeviData = geometry::LeviData<Real>;
pub type OdeCoefficients = operators::OdeCoefficients<Real>;
pub type GridSpec = operators::GridSpec<Real>;
pub type DiscreteOperator = operators::DiscreteOperator<Real>;
pub type MellinGrid = mellin::MellinGrid<Real>;
pub type MellinSample = mellin::MellinSample<Real>;
pub type ShootingResult = shooting::ShootingResult<Real>;
pub type ZeroCertificate = shooting::ZeroCertificate<Real>;
pub type ExceptionalExponents = shooting::ExceptionalExponents<Real>;
pub type EstimateReport = estimates::EstimateReport;
