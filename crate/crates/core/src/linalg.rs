//! Small dense complex linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

pub fn frobenius(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn vec_norm(v: &CVector) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Largest singular value.
pub fn op_norm(m: &CMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    if m.ncols() == 1 || m.nrows() == 1 {
        return frobenius(m);
    }
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .cloned()
        .fold(0.0, f64::max)
}

/// Smallest singular value of a square matrix.
pub fn min_singular_value(m: &CMatrix) -> f64 {
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min)
}

/// 2-norm condition number, `inf` when singular.
pub fn condition_number(m: &CMatrix) -> f64 {
    let sv = m.clone().svd(false, false).singular_values;
    let max = sv.iter().cloned().fold(0.0, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

pub fn one_norm(m: &CMatrix) -> f64 {
    (0..m.ncols())
        .map(|j| m.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub fn inverse(m: &CMatrix) -> Result<CMatrix> {
    m.clone()
        .lu()
        .try_inverse()
        .ok_or_else(|| Error::Singular("LU factorisation hit a zero pivot".into()))
}

/// Solves `m * x = b` for a block of right-hand sides.
pub fn solve(m: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    m.clone()
        .lu()
        .solve(b)
        .ok_or_else(|| Error::Singular("LU factorisation hit a zero pivot".into()))
}

pub fn to_column(v: &CVector) -> CMatrix {
    CMatrix::from_column_slice(v.len(), 1, v.as_slice())
}

pub fn column_to_vector(m: &CMatrix) -> CVector {
    CVector::from_iterator(m.nrows(), m.column(0).iter().cloned())
}

pub fn all_finite(m: &CMatrix) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

pub fn real_matrix(rows: &[Vec<f64>]) -> CMatrix {
    let n = rows.len();
    let m = rows.first().map_or(0, |r| r.len());
    CMatrix::from_fn(n, m, |i, j| c(rows[i][j], 0.0))
}

pub fn diag(values: &[C64]) -> CMatrix {
    CMatrix::from_diagonal(&CVector::from_column_slice(values))
}

pub fn real_diag(values: &[f64]) -> CMatrix {
    CMatrix::from_fn(values.len(), values.len(), |i, j| {
        if i == j {
            c(values[i], 0.0)
        } else {
            ZERO
        }
    })
}

/// Sesquilinear pairing `<y, x> = sum conj(y_i) x_i`.
pub fn pairing(y: &CVector, x: &CVector) -> C64 {
    y.iter().zip(x.iter()).map(|(a, b)| a.conj() * b).sum()
}

/// Idempotency defect `||P^2 - P||_F`.
pub fn idempotency_defect(p: &CMatrix) -> f64 {
    frobenius(&(p * p - p))
}

pub fn commutator_norm(a: &CMatrix, b: &CMatrix) -> f64 {
    frobenius(&(a * b - b * a))
}
