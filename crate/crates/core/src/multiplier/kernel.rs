//! The scalar kernel `ř_ρ(t, x, x*)`, inverse transform of `s ↦ ⟨x*, R(is + ρ)x⟩`,
//! and residual checks of its shift, adjoint and exponential-weight identities.
//!
//! With `B = A + cI`, `c = 1 + |ρ|` and `b = ρ + c`,
//!
//! ```text
//! R(is + ρ) = Σ_{k<3} B^k/(is + b)^{k+1} + B³ R(is + ρ)/(is + b)³ .
//! ```
//!
//! The first three terms invert in closed form to `t^k e^{−bt}/k!` on `t > 0`
//! and carry the jump at the origin. The remainder decays like `s^{−4}`, so its
//! inverse transform is smooth and the FFT handles it accurately.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{c, pairing, to_column, CMatrix, CVector, C64};
use crate::operator_core::Generator;
use crate::parallel::try_map;

use super::grid::GridFunction;
use super::line::check_band;
use super::transform::{frequency_grid, inverse_onto};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KernelGrid {
    pub h: f64,
    /// Residuals are taken over `|t| ≤ t_max`.
    pub t_max: f64,
}

impl Default for KernelGrid {
    fn default() -> Self {
        Self { h: 0.01, t_max: 5.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KernelResiduals {
    /// Shift identity, jump neighbourhoods excluded.
    pub res1: f64,
    /// Adjoint identity.
    pub res2: f64,
    /// Exponential-weight identity between `ρ = 0` and `ρ`.
    pub res3: f64,
    /// Window `|t| ≤ res3_window` used for `res3`: `min(t_max, 4/|ρ|)`, so that
    /// the weight `e^{ρt}` amplifies discretisation error by at most `e^4`.
    pub res3_window: f64,
}

/// `ř_ρ(t_j, x, x*)` on `t_j = start + jh`, `j < m`. At `t = 0` the value is
/// the midpoint of the jump.
pub fn resolvent_kernel(
    g: &Generator,
    rho: f64,
    x: &CVector,
    x_star: &CVector,
    start: f64,
    h: f64,
    m: usize,
) -> Result<GridFunction> {
    check_band(g, rho)?;
    let gap = g.spectral()?.gap;
    let n = g.dim();
    for v in [x, x_star] {
        if v.len() != n {
            return Err(Error::DimensionMismatch {
                expected: format!("vector of length {n}"),
                found: format!("length {}", v.len()),
            });
        }
    }
    if !(h > 0.0 && h.is_finite()) || m < 2 {
        return Err(Error::Input(format!("kernel grid needs h > 0 and at least two points, got h = {h}, m = {m}")));
    }
    let shift = 1.0 + rho.abs();
    let b = rho + shift;
    let mut bmat = g.matrix().clone();
    for i in 0..n {
        bmat[(i, i)] += c(shift, 0.0);
    }
    let bh = bmat.adjoint();
    let mut moments = [c(0.0, 0.0); 3];
    let mut y = x_star.clone();
    for m_k in &mut moments {
        *m_k = pairing(&y, x);
        y = &bh * y;
    }
    let y3 = y;

    let pad = ((25.0 / (gap - rho.abs())).min(5000.0) / h).ceil() as usize;
    let total = (m + 2 * pad).next_power_of_two();
    let inner_start = start - pad as f64 * h;
    let (s0, ds) = frequency_grid(total, h);
    let xcol = to_column(x);
    let remainder = try_map(total, |k| {
        let s = s0 + k as f64 * ds;
        let rx: CMatrix = g.resolvent_apply(c(rho, s), &xcol)?;
        let z = c(b, s);
        Ok(CVector::from_element(1, pairing(&y3, &rx.column(0).into_owned()) / (z * z * z)))
    })?;
    let rem = inverse_onto(
        &GridFunction {
            start: s0,
            h: ds,
            samples: remainder,
        },
        inner_start,
    );
    let samples = (0..m)
        .map(|j| {
            let t = start + j as f64 * h;
            CVector::from_element(1, rem.samples[pad + j][0] + analytic_part(&moments, b, t, h))
        })
        .collect();
    Ok(GridFunction { start, h, samples })
}

fn analytic_part(moments: &[C64; 3], b: f64, t: f64, h: f64) -> C64 {
    if t.abs() <= 1e-9 * h {
        return moments[0] * 0.5;
    }
    if t < 0.0 {
        return c(0.0, 0.0);
    }
    let e = (-b * t).exp();
    (moments[0] + moments[1] * t + moments[2] * (0.5 * t * t)) * e
}

/// Residuals of the three kernel identities:
///
/// ```text
/// ř_0(t − τ, T_τx, x*) = ř_0(t, x, x*) − ⟨x*, T_t x⟩ 𝟙_[0,τ](t)
/// ř_0(t, T_τx, x*)     = ř_0(t, x, T_τ* x*)
/// ř_0(t, x, x*)        = e^{ρt} ř_ρ(t, x, x*)
/// ```
///
/// The first maximum skips grid points within `2h` of the jumps at `0` and `τ`.
pub fn kernel_identity_checks(
    g: &Generator,
    x: &CVector,
    x_star: &CVector,
    tau: f64,
    rho: f64,
    grid: &KernelGrid,
) -> Result<KernelResiduals> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::Input(format!("shift tau must be positive, got {tau}")));
    }
    if !(grid.t_max > 0.0 && grid.t_max.is_finite()) {
        return Err(Error::Config(format!("t_max must be positive, got {}", grid.t_max)));
    }
    check_band(g, 0.0)?;
    check_band(g, rho)?;
    let h = grid.h;
    let half = (grid.t_max / h).round() as usize;
    let m = 2 * half + 1;
    let start = -(half as f64) * h;
    let t_tau = g.semigroup(tau)?;
    let shifted_x = &t_tau * x;
    let adjoint_x_star = t_tau.adjoint() * x_star;

    let base = resolvent_kernel(g, 0.0, x, x_star, start, h, m)?;
    let shifted = resolvent_kernel(g, 0.0, &shifted_x, x_star, start - tau, h, m)?;
    let mut res1 = 0.0f64;
    for j in 0..m {
        let t = base.time(j);
        if t.abs() <= 2.0 * h || (t - tau).abs() <= 2.0 * h {
            continue;
        }
        let mut rhs = base.samples[j][0];
        if (0.0..=tau).contains(&t) {
            rhs -= pairing(x_star, &g.semigroup_apply(t, x)?);
        }
        res1 = res1.max((shifted.samples[j][0] - rhs).norm());
    }

    let moved = resolvent_kernel(g, 0.0, &shifted_x, x_star, start, h, m)?;
    let adjoint = resolvent_kernel(g, 0.0, x, &adjoint_x_star, start, h, m)?;
    let res2 = moved
        .samples
        .iter()
        .zip(&adjoint.samples)
        .map(|(a, b)| (a[0] - b[0]).norm())
        .fold(0.0, f64::max);

    let window = if rho == 0.0 { grid.t_max } else { grid.t_max.min(4.0 / rho.abs()) };
    let weighted = resolvent_kernel(g, rho, x, x_star, start, h, m)?;
    let res3 = (0..m)
        .filter(|&j| base.time(j).abs() <= window + 1e-12)
        .map(|j| (base.samples[j][0] - weighted.samples[j][0] * (rho * base.time(j)).exp()).norm())
        .fold(0.0, f64::max);

    Ok(KernelResiduals {
        res1,
        res2,
        res3,
        res3_window: window,
    })
}
