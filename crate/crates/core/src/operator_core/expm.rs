//! Matrix exponential by scaling and squaring with diagonal Padé approximants
//! (degrees 3, 5, 7, 9, 13), following Higham's 2005 parameter table.

use crate::error::{Error, Result};
use crate::linalg::{c, identity, one_norm, solve, CMatrix};

const THETA: [(usize, f64); 5] = [
    (3, 1.495_585_217_958_292e-2),
    (5, 2.539_398_330_063_23e-1),
    (7, 9.504_178_996_162_932e-1),
    (9, 2.097_847_961_257_068),
    (13, 5.371_920_351_148_152),
];

const B3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const B5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const B7: [f64; 8] = [
    17_297_280.0,
    8_648_640.0,
    1_995_840.0,
    277_200.0,
    25_200.0,
    1_512.0,
    56.0,
    1.0,
];
const B9: [f64; 10] = [
    17_643_225_600.0,
    8_821_612_800.0,
    2_075_673_600.0,
    302_702_400.0,
    30_270_240.0,
    2_162_160.0,
    110_880.0,
    3_960.0,
    90.0,
    1.0,
];
const B13: [f64; 14] = [
    64_764_752_532_480_000.0,
    32_382_376_266_240_000.0,
    7_771_770_303_897_600.0,
    1_187_353_796_428_800.0,
    129_060_195_264_000.0,
    10_559_470_521_600.0,
    670_442_572_800.0,
    33_522_128_640.0,
    1_323_241_920.0,
    40_840_800.0,
    960_960.0,
    16_380.0,
    182.0,
    1.0,
];

/// `exp(A)`; `None` when the result leaves the finite f64 range.
pub fn expm(a: &CMatrix) -> Option<CMatrix> {
    let n = a.nrows();
    if n == 1 {
        let z = a[(0, 0)].exp();
        return (z.re.is_finite() && z.im.is_finite()).then(|| CMatrix::from_element(1, 1, z));
    }
    let norm = one_norm(a);
    if !norm.is_finite() {
        return None;
    }
    for &(m, theta) in &THETA[..4] {
        if norm <= theta {
            let coeffs: &[f64] = match m {
                3 => &B3,
                5 => &B5,
                7 => &B7,
                _ => &B9,
            };
            return pade_low(a, coeffs).filter(finite);
        }
    }
    let theta13 = THETA[4].1;
    let squarings = if norm > theta13 {
        (norm / theta13).log2().ceil() as i32
    } else {
        0
    };
    let scaled = a * c(0.5f64.powi(squarings), 0.0);
    let mut e = pade13(&scaled)?;
    for _ in 0..squarings {
        e = &e * &e;
        if !finite(&e) {
            return None;
        }
    }
    Some(e).filter(finite)
}

/// `exp(tA)` with overflow reported as an error.
pub fn expm_scaled(a: &CMatrix, t: f64) -> Result<CMatrix> {
    if !t.is_finite() {
        return Err(Error::Input(format!("semigroup time must be finite, got {t}")));
    }
    if t == 0.0 {
        return Ok(identity(a.nrows()));
    }
    expm(&(a * c(t, 0.0))).ok_or(Error::Overflow { t })
}

/// `ln ||exp(tA) B||_2` without forming `exp(tA)` at full scale: the squaring
/// phase renormalises after each step and carries the scale as a logarithm.
pub fn log_norm_flow(a: &CMatrix, t: f64, b: &CMatrix) -> Result<f64> {
    let norm = one_norm(a) * t.abs();
    let squarings = if norm > 1.0 { norm.log2().ceil() as i32 } else { 0 };
    let step = t * 0.5f64.powi(squarings);
    let mut m = expm(&(a * c(step, 0.0))).ok_or(Error::Overflow { t })?;
    let mut log_scale = 0.0;
    for _ in 0..squarings {
        m = &m * &m;
        let s = crate::linalg::frobenius(&m);
        if s == 0.0 || !s.is_finite() {
            return Err(Error::Overflow { t });
        }
        m /= c(s, 0.0);
        // (e^L m)^2 = e^{2L + ln s} (m^2 / s)
        log_scale = 2.0 * log_scale + s.ln();
    }
    let tail = crate::linalg::op_norm(&(&m * b));
    Ok(log_scale + tail.ln())
}

fn finite(m: &CMatrix) -> bool {
    crate::linalg::all_finite(m)
}

fn pade_low(a: &CMatrix, b: &[f64]) -> Option<CMatrix> {
    let n = a.nrows();
    let id = identity(n);
    let a2 = a * a;
    let mut powers = vec![id.clone()];
    let degree = b.len() - 1;
    for _ in 1..=degree / 2 {
        let next = powers.last().unwrap() * &a2;
        powers.push(next);
    }
    let mut u = CMatrix::zeros(n, n);
    let mut v = CMatrix::zeros(n, n);
    for (k, p) in powers.iter().enumerate() {
        if 2 * k + 1 <= degree {
            u += p * c(b[2 * k + 1], 0.0);
        }
        v += p * c(b[2 * k], 0.0);
    }
    let u = a * u;
    solve(&(&v - &u), &(&v + &u)).ok()
}

fn pade13(a: &CMatrix) -> Option<CMatrix> {
    let n = a.nrows();
    let id = identity(n);
    let b = |k: usize| c(B13[k], 0.0);
    let a2 = a * a;
    let a4 = &a2 * &a2;
    let a6 = &a2 * &a4;
    let w1 = &a6 * b(13) + &a4 * b(11) + &a2 * b(9);
    let w2 = &a6 * &w1 + &a6 * b(7) + &a4 * b(5) + &a2 * b(3) + &id * b(1);
    let u = a * w2;
    let z1 = &a6 * b(12) + &a4 * b(10) + &a2 * b(8);
    let v = &a6 * &z1 + &a6 * b(6) + &a4 * b(4) + &a2 * b(2) + &id * b(0);
    solve(&(&v - &u), &(&v + &u)).ok()
}
