//! Eigendecomposition oracle built on the complex Schur form.

use nalgebra::Schur;

use crate::error::{Error, Result};
use crate::linalg::{condition_number, frobenius, CMatrix, CVector, C64, ONE, ZERO};

/// Eigen-basis condition number above which oracle paths refuse to run.
pub const ORACLE_KAPPA_LIMIT: f64 = 1e8;

/// Real parts this close to zero count as lying on the imaginary axis.
pub const AXIS_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct SpectralData {
    /// Sorted by real part, descending.
    pub eigenvalues: Vec<C64>,
    /// Unit-norm eigenvector columns in eigenvalue order.
    pub basis: CMatrix,
    pub condition: f64,
    /// `s(A) = max Re λ`.
    pub abscissa: f64,
    /// `δ = min |Re λ|`, clamped to zero inside [`AXIS_TOLERANCE`].
    pub gap: f64,
    pub diagonalizable: bool,
}

impl SpectralData {
    pub fn compute(a: &CMatrix) -> Result<Self> {
        let n = a.nrows();
        let schur = Schur::try_new(a.clone(), 1e-15, 100 * n.max(10) * n.max(10)).ok_or_else(|| {
            Error::Numerical(format!(
                "complex Schur iteration did not converge for a {n}x{n} matrix (norm {:.3e})",
                frobenius(a)
            ))
        })?;
        let (q, t) = schur.unpack();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| {
            let (a, b) = (t[(i, i)], t[(j, j)]);
            b.re.total_cmp(&a.re).then(b.im.total_cmp(&a.im))
        });
        let scale = frobenius(&t).max(f64::MIN_POSITIVE);
        let mut basis = CMatrix::zeros(n, n);
        let mut eigenvalues = Vec::with_capacity(n);
        for (col, &k) in order.iter().enumerate() {
            let lambda = t[(k, k)];
            let y = triangular_eigenvector(&t, k, scale);
            let v = &q * y;
            let norm = v.norm();
            basis.set_column(col, &(v / C64::new(norm, 0.0)));
            eigenvalues.push(lambda);
        }
        let condition = condition_number(&basis);
        let abscissa = eigenvalues.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
        let gap = eigenvalues.iter().map(|z| z.re.abs()).fold(f64::INFINITY, f64::min);
        let gap = if gap <= AXIS_TOLERANCE { 0.0 } else { gap };
        Ok(Self {
            eigenvalues,
            basis,
            condition,
            abscissa,
            gap,
            diagonalizable: condition.is_finite() && condition <= ORACLE_KAPPA_LIMIT,
        })
    }

    /// `f(A) = V diag(f(λ)) V^{-1}`; refuses for ill-conditioned bases.
    pub fn function(&self, f: impl Fn(C64) -> C64) -> Result<CMatrix> {
        if !self.diagonalizable {
            return Err(Error::IllConditioned { kappa: self.condition });
        }
        let values: Vec<C64> = self.eigenvalues.iter().map(|&z| f(z)).collect();
        let scaled = CMatrix::from_fn(self.basis.nrows(), self.basis.ncols(), |i, j| {
            self.basis[(i, j)] * values[j]
        });
        let vt = self.basis.transpose();
        // V^{-1} applied from the right: solve V^T X^T = (V D)^T
        let x = crate::linalg::solve(&vt, &scaled.transpose())?;
        Ok(x.transpose())
    }

    pub fn nearest_eigenvalue(&self, z: C64) -> (C64, f64) {
        self.eigenvalues
            .iter()
            .map(|&l| (l, (l - z).norm()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("spectrum of a nonempty matrix")
    }
}

/// Eigenvector of upper-triangular `t` for the diagonal entry `k`, by back
/// substitution. Tiny denominators (repeated eigenvalues) are perturbed so the
/// result stays finite; the condition number then exposes the defect.
fn triangular_eigenvector(t: &CMatrix, k: usize, scale: f64) -> CVector {
    let n = t.nrows();
    let lambda = t[(k, k)];
    let floor = f64::EPSILON * scale;
    let mut y = CVector::from_element(n, ZERO);
    y[k] = ONE;
    for j in (0..k).rev() {
        let mut s = ZERO;
        for l in j + 1..=k {
            s += t[(j, l)] * y[l];
        }
        let mut d = t[(j, j)] - lambda;
        if d.norm() < floor {
            d = C64::new(floor, 0.0);
        }
        y[j] = -s / d;
    }
    y
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, real_diag, real_matrix};

    #[test]
    fn diagonal_spectrum_sorted() {
        let s = SpectralData::compute(&real_diag(&[-1.0, 2.0])).unwrap();
        assert!((s.eigenvalues[0] - c(2.0, 0.0)).norm() < 1e-14);
        assert!((s.eigenvalues[1] - c(-1.0, 0.0)).norm() < 1e-14);
        assert_eq!(s.abscissa, 2.0);
        assert_eq!(s.gap, 1.0);
        assert!(s.diagonalizable);
    }

    #[test]
    fn rotation_has_zero_gap() {
        let s = SpectralData::compute(&real_matrix(&[vec![0.0, 1.0], vec![-1.0, 0.0]])).unwrap();
        assert_eq!(s.gap, 0.0);
        for l in &s.eigenvalues {
            assert!((l.norm() - 1.0).abs() < 1e-14 && l.re.abs() < 1e-14);
        }
    }

    #[test]
    fn jordan_block_is_flagged() {
        let s = SpectralData::compute(&real_matrix(&[vec![-1.0, 1.0], vec![0.0, -1.0]])).unwrap();
        assert!(!s.diagonalizable);
        assert!(matches!(s.function(|z| z), Err(Error::IllConditioned { .. })));
    }

    #[test]
    fn function_reconstructs_matrix() {
        let a = real_matrix(&[vec![0.2, 1.0, -0.3], vec![-0.7, -0.4, 0.5], vec![0.1, 0.9, -1.3]]);
        let s = SpectralData::compute(&a).unwrap();
        let back = s.function(|z| z).unwrap();
        assert!(frobenius(&(&back - &a)) < 1e-12 * frobenius(&a));
    }
}
