//! Resolvent Fourier multipliers on the sampled line and on the torus.

mod grid;
mod kernel;
mod line;
mod torus;
pub mod transform;

pub use grid::{lp_norm, weak_l1_quasinorm, GridFunction};
pub use kernel::{kernel_identity_checks, resolvent_kernel, KernelGrid, KernelResiduals};
pub use line::{
    apply_multiplier, apply_symbol, estimate_multiplier_norm, estimate_symbol_norm, kvl_functional, KvlReport,
    MultiplierConfig, NormEstimate, ProbeFamily, RHO0_FRACTION,
};
pub use torus::{
    annulus_operator, annulus_scan, cesaro_resolvent_sum, check_klt_identity, discrete_multiplier, semigroup_convolution_torus,
    torus_lp_norm, AnnulusPoint, AnnulusScan, KltReport, ResolventSum, TorusFunction, ANNULUS_BLOW_UP, DEFAULT_SUM_LADDER,
};
pub use transform::{transform, Direction};
