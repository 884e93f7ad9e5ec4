use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::linalg::{c, identity, op_norm, solve, CMatrix, CVector, C64};

use super::expm::{expm_scaled, log_norm_flow};
use super::spectral::SpectralData;

/// A finite-dimensional generator `A` of the semigroup `T_t = e^{tA}`.
///
/// The spectral decomposition is computed on first use and cached; it is
/// write-once, so shared references can be handed to worker threads after
/// [`Generator::eager`] has filled it.
#[derive(Debug, Clone)]
pub struct Generator {
    matrix: CMatrix,
    norm: f64,
    spectral: OnceLock<SpectralData>,
}

impl Generator {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        if matrix.nrows() == 0 || matrix.nrows() != matrix.ncols() {
            return Err(Error::Dimension {
                rows: matrix.nrows(),
                cols: matrix.ncols(),
            });
        }
        if let Some((idx, z)) = matrix
            .iter()
            .enumerate()
            .find(|(_, z)| !(z.re.is_finite() && z.im.is_finite()))
        {
            let n = matrix.nrows();
            // nalgebra storage is column-major
            return Err(Error::Parse(format!(
                "entry ({}, {}) is not finite: {z}",
                idx % n,
                idx / n
            )));
        }
        let norm = op_norm(&matrix);
        Ok(Self {
            matrix,
            norm,
            spectral: OnceLock::new(),
        })
    }

    /// Builds a generator from row-major real and (optional) imaginary parts.
    pub fn from_rows(re: &[Vec<f64>], im: Option<&[Vec<f64>]>) -> Result<Self> {
        let rows = re.len();
        let cols = re.first().map_or(0, Vec::len);
        if re.iter().any(|r| r.len() != cols) {
            let bad = re.iter().map(Vec::len).find(|&l| l != cols).unwrap_or(0);
            return Err(Error::Dimension { rows, cols: bad });
        }
        if rows != cols || rows == 0 {
            return Err(Error::Dimension { rows, cols });
        }
        if let Some(im) = im {
            if im.len() != rows || im.iter().any(|r| r.len() != cols) {
                return Err(Error::DimensionMismatch {
                    expected: format!("{rows}x{cols} imaginary part"),
                    found: format!("{} rows", im.len()),
                });
            }
        }
        let m = CMatrix::from_fn(rows, cols, |i, j| {
            c(re[i][j], im.map_or(0.0, |im| im[i][j]))
        });
        Self::new(m)
    }

    /// Fills the spectral cache up front.
    pub fn eager(self) -> Result<Self> {
        self.spectral()?;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    /// Spectral norm `‖A‖₂`.
    pub fn norm(&self) -> f64 {
        self.norm
    }

    pub fn spectral(&self) -> Result<&SpectralData> {
        if let Some(s) = self.spectral.get() {
            return Ok(s);
        }
        let data = SpectralData::compute(&self.matrix)?;
        Ok(self.spectral.get_or_init(|| data))
    }

    pub fn cached_spectral(&self) -> Option<&SpectralData> {
        self.spectral.get()
    }

    /// A point `λ` counts as spectral when it lies within this distance of an eigenvalue.
    pub fn eigen_tolerance(&self) -> f64 {
        1e-10 * (1.0 + self.norm)
    }

    /// Hyperbolicity threshold on the gap `δ`.
    pub fn gap_threshold(&self) -> f64 {
        1e-6 * (1.0 + self.norm)
    }

    pub fn semigroup(&self, t: f64) -> Result<CMatrix> {
        expm_scaled(&self.matrix, t)
    }

    /// `T_t x`.
    pub fn semigroup_apply(&self, t: f64, x: &CVector) -> Result<CVector> {
        Ok(self.semigroup(t)? * x)
    }

    /// `ln ‖T_t B‖₂`, usable far past the overflow limit of `T_t` itself.
    pub fn semigroup_log_norm(&self, t: f64, b: &CMatrix) -> Result<f64> {
        log_norm_flow(&self.matrix, t, b)
    }

    /// Fails with a spectrum hit if `λ` is within tolerance of `σ(A)`.
    pub fn check_point(&self, lambda: C64) -> Result<()> {
        let spec = self.spectral()?;
        let (eig, dist) = spec.nearest_eigenvalue(lambda);
        if dist <= self.eigen_tolerance() {
            return Err(Error::SpectrumHit {
                point: lambda,
                eigenvalue: eig,
                distance: dist,
            });
        }
        Ok(())
    }

    /// `R(λ) = (λI − A)^{-1}`.
    pub fn resolvent(&self, lambda: C64) -> Result<CMatrix> {
        self.check_point(lambda)?;
        self.resolvent_unchecked(lambda)
    }

    /// `R(λ) B` for a block of right-hand sides.
    pub fn resolvent_apply(&self, lambda: C64, b: &CMatrix) -> Result<CMatrix> {
        self.check_point(lambda)?;
        solve(&self.shifted(lambda), b)
    }

    pub(crate) fn resolvent_unchecked(&self, lambda: C64) -> Result<CMatrix> {
        solve(&self.shifted(lambda), &identity(self.dim()))
    }

    fn shifted(&self, lambda: C64) -> CMatrix {
        let mut m = -self.matrix.clone();
        for i in 0..self.dim() {
            m[(i, i)] += lambda;
        }
        m
    }

    /// Riesz projection onto the eigenvalues with negative real part.
    pub fn spectral_projection(&self) -> Result<CMatrix> {
        let spec = self.spectral()?;
        if spec.gap == 0.0 {
            return Err(Error::NotHyperbolic {
                gap: spec.gap,
                threshold: super::spectral::AXIS_TOLERANCE,
            });
        }
        spec.function(|z| if z.re < 0.0 { c(1.0, 0.0) } else { c(0.0, 0.0) })
    }

    /// `V e^{t Λ} V^{-1}` through the eigendecomposition.
    pub fn semigroup_oracle(&self, t: f64) -> Result<CMatrix> {
        self.spectral()?.function(|z| (z * t).exp())
    }
}
