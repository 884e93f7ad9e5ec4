//! Fractional powers `A_ω^{∓α}` of the shifted generator `A_ω = A − ωI`.
//!
//! The contour method integrates `μ^{-α} (μ − A_ω)^{-1}` along two rays
//! `μ = −1 + t e^{±iθ}`. The spectrum of `A_ω` lies strictly left of `−1`, the
//! branch cut of `μ^{-α}` is put on the positive reals (`arg μ ∈ (0, 2π)`), so
//! the rays separate the two and the integrand is analytic along the path.
//! Past the truncation length the resolvent is expanded in its Neumann series
//! and every term integrates in closed form, so the only quadrature error is
//! on the finite part, which is checked by doubling the node count.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, frobenius, identity, inverse, op_norm, solve, CMatrix, CVector, C64};
use crate::quadrature::{composite, GaussLegendre};

use super::generator::Generator;

/// Parameters of the two-ray contour.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FractionalConfig {
    pub alpha: f64,
    /// Shift `ω`; must exceed `s(A) + 1`.
    pub omega: f64,
    /// Half-opening angle `θ ∈ (0, π/6)`.
    pub theta: f64,
    pub ray_length: f64,
    pub nodes_per_ray: usize,
    /// Relative tolerance for the node-doubling check.
    pub tolerance: f64,
}

impl FractionalConfig {
    /// Defaults tied to `g`: `ω = max(s(A), 0) + 3`, `θ = π/8`,
    /// `L = max(50, 10‖A‖, 4(‖A_ω‖ + 1))`, 200 nodes per ray.
    pub fn for_generator(g: &Generator, alpha: f64) -> Result<Self> {
        let s = g.spectral()?.abscissa;
        let omega = s.max(0.0) + 3.0;
        Ok(Self::with_omega(g, alpha, omega))
    }

    pub fn with_omega(g: &Generator, alpha: f64, omega: f64) -> Self {
        let shifted_norm = g.norm() + omega.abs();
        Self {
            alpha,
            omega,
            theta: PI / 8.0,
            ray_length: 50f64.max(10.0 * g.norm()).max(4.0 * (shifted_norm + 1.0)),
            nodes_per_ray: 200,
            tolerance: 1e-10,
        }
    }

    pub fn validate(&self, g: &Generator) -> Result<()> {
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(Error::Config(format!("fractional order must be finite and >= 0, got {}", self.alpha)));
        }
        if !(self.theta > 0.0 && self.theta < PI / 6.0) {
            return Err(Error::Config(format!("contour angle must lie in (0, pi/6), got {}", self.theta)));
        }
        if !(self.ray_length > 0.0) || self.nodes_per_ray == 0 {
            return Err(Error::Config("ray length and node count must be positive".into()));
        }
        let s = g.spectral()?.abscissa;
        if !(self.omega > s + 1.0) {
            return Err(Error::Config(format!(
                "shift omega = {} must exceed s(A) + 1 = {}",
                self.omega,
                s + 1.0
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PowerSign {
    /// `A_ω^{-α}`
    Negative,
    /// `A_ω^{α}`
    Positive,
}

#[derive(Debug, Clone)]
pub struct FractionalPower {
    pub matrix: CMatrix,
    /// Difference between the quadrature at `m` and `2m` nodes per panel.
    pub refinement_error: f64,
    /// Bound on the first omitted term of the tail series.
    pub tail_remainder: f64,
}

/// `μ^{-a}` on the branch `arg μ ∈ (0, 2π)`.
pub fn branch_power(mu: C64, a: f64) -> C64 {
    let mut arg = mu.im.atan2(mu.re);
    if arg <= 0.0 {
        arg += TAU;
    }
    let ln = c(mu.norm().ln(), arg);
    (ln * (-a)).exp()
}

pub fn fractional_power(g: &Generator, cfg: &FractionalConfig, sign: PowerSign) -> Result<CMatrix> {
    Ok(fractional_power_detailed(g, cfg, sign)?.matrix)
}

pub fn fractional_power_detailed(
    g: &Generator,
    cfg: &FractionalConfig,
    sign: PowerSign,
) -> Result<FractionalPower> {
    cfg.validate(g)?;
    let n = g.dim();
    if cfg.alpha == 0.0 {
        return Ok(FractionalPower {
            matrix: identity(n),
            refinement_error: 0.0,
            tail_remainder: 0.0,
        });
    }
    let shifted = shifted(g, cfg.omega);
    check_collision(g, cfg)?;
    let breaks = ray_breaks(g, cfg);
    let per_panel = (cfg.nodes_per_ray / (breaks.len() - 1)).max(12);
    let coarse = ray_integral(&shifted, cfg, &breaks, per_panel)?;
    let fine = ray_integral(&shifted, cfg, &breaks, 2 * per_panel)?;
    let refinement_error = frobenius(&(&coarse - &fine));
    let (tail, tail_remainder) = tail_series(&shifted, cfg);
    let value = fine + tail;
    let scale = frobenius(&value).max(f64::MIN_POSITIVE);
    if refinement_error > cfg.tolerance * scale.max(1.0) {
        return Err(Error::Accuracy {
            estimate: refinement_error / scale,
            tolerance: cfg.tolerance,
        });
    }
    let matrix = match sign {
        PowerSign::Negative => value,
        PowerSign::Positive => inverse(&value)?,
    };
    Ok(FractionalPower {
        matrix,
        refinement_error,
        tail_remainder,
    })
}

/// `(A − ωI)^{∓α}` through the eigendecomposition, same branch as the contour.
pub fn fractional_power_oracle(g: &Generator, cfg: &FractionalConfig, sign: PowerSign) -> Result<CMatrix> {
    cfg.validate(g)?;
    let a = match sign {
        PowerSign::Negative => cfg.alpha,
        PowerSign::Positive => -cfg.alpha,
    };
    if cfg.alpha == 0.0 {
        return Ok(identity(g.dim()));
    }
    g.spectral()?.function(|z| branch_power(z - cfg.omega, a))
}

/// `‖x‖_α = ‖A_ω^{α} x‖`.
pub fn alpha_norm(g: &Generator, x: &CVector, cfg: &FractionalConfig) -> Result<f64> {
    if x.len() != g.dim() {
        return Err(Error::DimensionMismatch {
            expected: format!("vector of length {}", g.dim()),
            found: format!("length {}", x.len()),
        });
    }
    if cfg.alpha == 0.0 {
        cfg.validate(g)?;
        return Ok(x.norm());
    }
    let p = fractional_power(g, cfg, PowerSign::Positive)?;
    Ok((p * x).norm())
}

fn shifted(g: &Generator, omega: f64) -> CMatrix {
    let mut m = g.matrix().clone();
    for i in 0..g.dim() {
        m[(i, i)] -= c(omega, 0.0);
    }
    m
}

fn ray_point(t: f64, theta: f64, upper: bool) -> C64 {
    let dir = if upper { c(theta.cos(), theta.sin()) } else { c(theta.cos(), -theta.sin()) };
    c(-1.0, 0.0) + dir * t
}

fn distance_to_rays(z: C64, cfg: &FractionalConfig) -> f64 {
    [true, false]
        .iter()
        .map(|&upper| {
            let d = ray_point(1.0, cfg.theta, upper) - c(-1.0, 0.0);
            let rel = z - c(-1.0, 0.0);
            let t = (rel.re * d.re + rel.im * d.im).clamp(0.0, cfg.ray_length);
            (z - ray_point(t, cfg.theta, upper)).norm()
        })
        .fold(f64::INFINITY, f64::min)
}

fn check_collision(g: &Generator, cfg: &FractionalConfig) -> Result<()> {
    let spec = g.spectral()?;
    let d = spec
        .eigenvalues
        .iter()
        .map(|&l| distance_to_rays(l - cfg.omega, cfg))
        .fold(f64::INFINITY, f64::min);
    if d <= 1e-8 {
        return Err(Error::ContourCollision { distance: d });
    }
    Ok(())
}

/// Panel breakpoints on `[0, L]`: widths track the distance to the shifted
/// spectrum near the vertex and grow geometrically further out.
fn ray_breaks(g: &Generator, cfg: &FractionalConfig) -> Vec<f64> {
    let eig: Vec<C64> = g
        .cached_spectral()
        .map(|s| s.eigenvalues.iter().map(|&l| l - cfg.omega).collect())
        .unwrap_or_default();
    let dist = |t: f64| {
        eig.iter()
            .flat_map(|&l| [(ray_point(t, cfg.theta, true) - l).norm(), (ray_point(t, cfg.theta, false) - l).norm()])
            .fold(f64::INFINITY, f64::min)
    };
    let mut breaks = vec![0.0];
    let mut x = 0.0;
    while x < cfg.ray_length {
        let w = (0.5 * dist(x)).min(0.5f64.max(x)).max(1e-6);
        x = (x + w).min(cfg.ray_length);
        breaks.push(x);
    }
    breaks
}

fn ray_integral(shifted: &CMatrix, cfg: &FractionalConfig, breaks: &[f64], order: usize) -> Result<CMatrix> {
    let n = shifted.nrows();
    let rule = GaussLegendre::new(order);
    let up = c(cfg.theta.cos(), cfg.theta.sin());
    let down = up.conj();
    let mut acc = CMatrix::zeros(n, n);
    for (t, w) in composite(breaks, &rule) {
        for (upper, dir, orientation) in [(true, up, 1.0), (false, down, -1.0)] {
            let mu = ray_point(t, cfg.theta, upper);
            let mut m = -shifted.clone();
            for i in 0..n {
                m[(i, i)] += mu;
            }
            let r = solve(&m, &identity(n))?;
            acc += r * (branch_power(mu, cfg.alpha) * dir * (w * orientation));
        }
    }
    Ok(acc / c(0.0, TAU))
}

/// Closed-form integral over the ray parts beyond `L`:
/// `(1/2πi) Σ_k A_ω^k [μ_u^{-α-k} − μ_l^{-α-k}] / (α + k)`.
fn tail_series(shifted: &CMatrix, cfg: &FractionalConfig) -> (CMatrix, f64) {
    let n = shifted.nrows();
    let mu_u = ray_point(cfg.ray_length, cfg.theta, true);
    let mu_l = ray_point(cfg.ray_length, cfg.theta, false);
    let ratio = op_norm(shifted) / mu_u.norm();
    let mut power = identity(n);
    let mut acc = CMatrix::zeros(n, n);
    let mut remainder = 0.0;
    for k in 0..200 {
        let a = cfg.alpha + k as f64;
        let coef = (branch_power(mu_u, a) - branch_power(mu_l, a)) / (c(0.0, TAU) * a);
        acc += &power * coef;
        remainder = 2.0 * ratio.powi(k as i32 + 1) * mu_u.norm().powf(-cfg.alpha) / (TAU * (a + 1.0));
        if remainder < 1e-18 * (1.0 + frobenius(&acc)) {
            break;
        }
        power = &power * shifted;
    }
    (acc, remainder)
}
