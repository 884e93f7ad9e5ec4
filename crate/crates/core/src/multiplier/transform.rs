//! Discrete Fourier transform with the continuous normalisation
//! `f̂(s) = ∫ f(t) e^{−ist} dt`, `f(t) = (1/2π) ∫ f̂(s) e^{ist} ds`.
//!
//! A time grid `t_j = a + jh` with `m` points pairs with the frequency grid
//! `s_k = s_0 + kΔs`, `Δs = 2π/(mh)`, `s_0 = −⌊m/2⌋Δs`.

use std::f64::consts::TAU;

use rustfft::FftPlanner;

use crate::linalg::{c, CVector, C64};

use super::grid::GridFunction;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

/// Frequency spacing and first node for a time grid of `m` points, spacing `h`.
pub fn frequency_grid(m: usize, h: f64) -> (f64, f64) {
    let ds = TAU / (m as f64 * h);
    (-((m / 2) as f64) * ds, ds)
}

/// Forward transform onto the paired frequency grid, or inverse transform
/// onto the centred time grid `a = −⌊m/2⌋h`.
pub fn transform(f: &GridFunction, direction: Direction) -> GridFunction {
    match direction {
        Direction::Forward => forward(f),
        Direction::Inverse => {
            let m = f.len();
            let h = TAU / (m as f64 * f.h);
            inverse_onto(f, -((m / 2) as f64) * h)
        }
    }
}

fn forward(f: &GridFunction) -> GridFunction {
    let m = f.len();
    let (s0, ds) = frequency_grid(m, f.h);
    let cols = columns(f);
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(m);
    let mut out = vec![CVector::zeros(f.dim()); m];
    for (i, mut col) in cols.into_iter().enumerate() {
        for (j, z) in col.iter_mut().enumerate() {
            *z *= c(0.0, -s0 * j as f64 * f.h).exp();
        }
        fft.process(&mut col);
        for (k, z) in col.into_iter().enumerate() {
            let s = s0 + k as f64 * ds;
            out[k][i] = z * c(0.0, -s * f.start).exp() * f.h;
        }
    }
    GridFunction {
        start: s0,
        h: ds,
        samples: out,
    }
}

/// Inverse transform of samples on a frequency grid onto the time grid that
/// starts at `a`. Exactly undoes [`transform`] forward when `a` is the
/// original start.
pub fn inverse_onto(fhat: &GridFunction, a: f64) -> GridFunction {
    let m = fhat.len();
    let ds = fhat.h;
    let s0 = fhat.start;
    let h = TAU / (m as f64 * ds);
    let cols = columns(fhat);
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_inverse(m);
    let mut out = vec![CVector::zeros(fhat.dim()); m];
    for (i, mut col) in cols.into_iter().enumerate() {
        for (k, z) in col.iter_mut().enumerate() {
            let s = s0 + k as f64 * ds;
            *z *= c(0.0, s * a).exp();
        }
        fft.process(&mut col);
        for (j, z) in col.into_iter().enumerate() {
            out[j][i] = z * c(0.0, s0 * j as f64 * h).exp() * (ds / TAU);
        }
    }
    GridFunction {
        start: a,
        h,
        samples: out,
    }
}

fn columns(f: &GridFunction) -> Vec<Vec<C64>> {
    (0..f.dim())
        .map(|i| f.samples.iter().map(|v| v[i]).collect())
        .collect()
}
