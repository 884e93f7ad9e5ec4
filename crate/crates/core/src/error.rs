use num_complex::Complex64;
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("generator must be square, got {rows}x{cols}")]
    Dimension { rows: usize, cols: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: String, found: String },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(
        "resolvent undefined: point {point} lies within {distance:.3e} of eigenvalue {eigenvalue} \
         (spectrum hit)"
    )]
    SpectrumHit {
        point: Complex64,
        eigenvalue: Complex64,
        distance: f64,
    },

    #[error(
        "generator is not hyperbolic: imaginary-axis gap {gap:.3e} does not exceed {threshold:.3e} \
         (the imaginary axis must lie in the resolvent set)"
    )]
    NotHyperbolic { gap: f64, threshold: f64 },

    #[error("semigroup overflow: ||exp(tA)|| exceeds the f64 range at t = {t}")]
    Overflow { t: f64 },

    #[error("fractional-power contour passes within {distance:.3e} of the shifted spectrum")]
    ContourCollision { distance: f64 },

    #[error("quadrature did not converge: refinement difference {estimate:.3e} > tolerance {tolerance:.3e}")]
    Accuracy { estimate: f64, tolerance: f64 },

    #[error("eigenvector basis too ill-conditioned for the spectral oracle: kappa(V) = {kappa:.3e}")]
    IllConditioned { kappa: f64 },

    #[error("bisection range [{lo}, {hi}] does not bracket a multiplier transition: {detail}")]
    Bracketing { lo: f64, hi: f64, detail: String },

    #[error("matrix is exactly singular: {0}")]
    Singular(String),

    #[error("numerical failure: {0}")]
    Numerical(String),
}
