//! Generator storage, semigroup, resolvent, spectral oracle and fractional powers.

mod expm;
mod fractional;
mod generator;
mod spectral;

pub use expm::{expm, expm_scaled, log_norm_flow};
pub use fractional::{
    alpha_norm, branch_power, fractional_power, fractional_power_detailed, fractional_power_oracle,
    FractionalConfig, FractionalPower, PowerSign,
};
pub use generator::Generator;
pub use spectral::{SpectralData, AXIS_TOLERANCE, ORACLE_KAPPA_LIMIT};
