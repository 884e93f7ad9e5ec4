#![allow(dead_code)]

use dichotomy::corpus::{gaussian_matrix, rng};
use dichotomy::linalg::{c, frobenius, op_norm};
use dichotomy::{CMatrix, CVector, Generator};

/// Random `n × n` generator rescaled to operator norm `norm`.
pub fn scaled_matrix(seed: u64, n: usize, norm: f64) -> CMatrix {
    let m = gaussian_matrix(&mut rng(seed), n, n, 1.0);
    let s = op_norm(&m);
    m * c(norm / s, 0.0)
}

pub fn unit_vector(seed: u64, n: usize) -> CVector {
    let m = gaussian_matrix(&mut rng(seed), n, 1, 1.0);
    let s = frobenius(&m);
    (m / c(s, 0.0)).column(0).into_owned()
}

pub fn bump(t: f64, centre: f64, radius: f64) -> f64 {
    let s = (t - centre) / radius;
    if s.abs() < 1.0 {
        (-1.0 / (1.0 - s * s)).exp()
    } else {
        0.0
    }
}

pub fn rel(a: &CMatrix, b: &CMatrix) -> f64 {
    frobenius(&(a - b)) / frobenius(b).max(f64::MIN_POSITIVE)
}

/// Green's function from the eigendecomposition, midpoint at `t = 0`.
pub fn green_oracle(g: &Generator, t: f64) -> CMatrix {
    g.spectral()
        .unwrap()
        .function(|l| {
            let stable = l.re < 0.0;
            if t == 0.0 {
                c(if stable { 0.5 } else { -0.5 }, 0.0)
            } else if t > 0.0 && stable {
                (l * t).exp()
            } else if t < 0.0 && !stable {
                -(l * t).exp()
            } else {
                c(0.0, 0.0)
            }
        })
        .unwrap()
}
