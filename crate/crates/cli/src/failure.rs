use std::fmt;

use dichotomy::Error;

/// Exit statuses: 2 contract violation, 3 numerical failure, 4 refusal for a
/// non-hyperbolic generator where hyperbolicity is a precondition.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    pub fn contract(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }

    pub fn numerical(message: impl Into<String>) -> Self {
        Self {
            code: 3,
            message: message.into(),
        }
    }

    /// Wraps a library error with the construct that needed it.
    pub fn from_error(construct: &str, err: Error) -> Self {
        let code = match err {
            Error::NotHyperbolic { .. } => 4,
            Error::Overflow { .. } | Error::Accuracy { .. } | Error::Singular(_) | Error::Numerical(_) => 3,
            Error::Dimension { .. }
            | Error::DimensionMismatch { .. }
            | Error::Parse(_)
            | Error::Input(_)
            | Error::Config(_)
            | Error::SpectrumHit { .. }
            | Error::ContourCollision { .. }
            | Error::IllConditioned { .. }
            | Error::Bracketing { .. } => 2,
        };
        Self {
            code,
            message: format!("{construct}: {err}"),
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

pub trait Context<T> {
    fn during(self, construct: &str) -> Result<T, Failure>;
}

impl<T> Context<T> for dichotomy::Result<T> {
    fn during(self, construct: &str) -> Result<T, Failure> {
        self.map_err(|e| Failure::from_error(construct, e))
    }
}
