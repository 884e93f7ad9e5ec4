//! Exponential dichotomy of matrix semigroups `e^{tA}`.
//!
//! The crate decides hyperbolicity of a finite-dimensional generator, builds
//! the Green's function and splitting projection from Cesàro-summed resolvent
//! integrals, solves the forced equation through the resolvent Fourier
//! multiplier and estimates fractional growth and spectral bounds. Each
//! constructive path has an eigendecomposition counterpart to check against.

pub mod bounds;
pub mod corpus;
pub mod error;
pub mod green;
pub mod io;
pub mod linalg;
pub mod multiplier;
pub mod operator_core;
pub mod parallel;
pub mod perron;
pub mod quadrature;
pub mod search;
pub mod special;
pub mod summation;

pub use error::{Error, Result};
pub use linalg::{CMatrix, CVector, C64};
pub use operator_core::{
    alpha_norm, fractional_power, fractional_power_oracle, FractionalConfig, Generator, PowerSign,
    SpectralData,
};
pub use bounds::{BoundsParams, BoundsReport};
pub use green::{HyperbolicityReport, GreenSamples, Provenance};
pub use multiplier::{GridFunction, MultiplierConfig, TorusFunction};
pub use perron::{MildSolution, PerronParams};
pub use summation::{CesaroResult, QuadratureParams};
