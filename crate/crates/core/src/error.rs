use thiserror::Error;

/// Errors produced by the numerical kernels.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid worm configuration: {0}")]
    InvalidWormConfig(String),

    #[error("point outside boundary chart: {0}")]
    OutsideChart(String),

    #[error("defining function undefined at z2 = 0")]
    ZeroZ2,

    #[error("profile misconfigured: 1 - phi(2x) = {0} is not positive")]
    ProfileDenominator(f64),

    #[error("finite-difference step {step} too large for chart of thickness {delta}")]
    StepTooLarge { step: f64, delta: f64 },

    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid coefficients: {0}")]
    InvalidCoefficients(String),

    #[error("operator shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("Fourier multiplier needs a linear t-axis (periodic or tapered)")]
    MultiplierNeedsLinearAxis,

    #[error("invalid Mellin grid: {0}")]
    InvalidMellinGrid(String),

    #[error("input does not decay at the grid ends (max end ratio {0:.3e}); enable windowing")]
    NonDecaying(f64),

    #[error("tolerance {0} outside supported range [1e-12, 1e-6]")]
    ToleranceOutOfRange(f64),

    #[error("step size underflow at x = {x}: {hint}")]
    StepUnderflow { x: f64, hint: String },

    #[error("contour edge passes too close to a zero after {0} box perturbations")]
    EdgeTooCloseToZero(usize),

    #[error("winding quadrature failed to certify an integer (last value {0})")]
    WindingUncertified(f64),

    #[error("zero certificate inconsistent: winding {winding} but {zeros} refined zeros")]
    CertificateMismatch { winding: i64, zeros: usize },

    #[error("empty search range: {0}")]
    EmptyRange(String),

    #[error("linear solve failed: {0}")]
    SingularSystem(String),

    #[error("support violation: {0}")]
    SupportViolation(String),
}

pub type Result<T> = std::result::Result<T, Error>;
