//! Bounded mild solutions of `u' = Au + g` on the line.
//!
//! For hyperbolic `A` the unique bounded solution is `u = M_0 g = G * g`.
//! It is certified through the integral equation
//! `u(θ) = T_{θ−τ}u(τ) + ∫_τ^θ T_{θ−s} g(s) ds` on a lattice of pairs.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::green::green_regularized;
use crate::linalg::{c, identity, CMatrix, CVector};
use crate::multiplier::{apply_multiplier, GridFunction, MultiplierConfig};
use crate::operator_core::Generator;
use crate::parallel::try_map;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PerronParams {
    /// Differences `θ − τ` in the residual lattice.
    pub differences: Vec<f64>,
    /// Fraction of the grid (centred) in which pairs are placed.
    pub interior: f64,
    /// Spacing between successive `τ` in the lattice, in grid cells.
    pub stride: usize,
    /// Residuals are accepted up to `tolerance · ‖g‖_∞`.
    pub tolerance: f64,
    /// Points at which `M_0 g` is compared with the direct convolution `G * g`.
    pub cross_checks: usize,
}

impl Default for PerronParams {
    fn default() -> Self {
        Self {
            differences: vec![0.25, 0.5, 1.0, 2.0],
            interior: 0.8,
            stride: 25,
            tolerance: 5e-4,
            cross_checks: 9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResidualRow {
    pub theta: f64,
    pub tau: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MildSolution {
    pub u: GridFunction,
    pub forcing: GridFunction,
    pub residuals: Vec<ResidualRow>,
    pub max_residual: f64,
    /// `tolerance · ‖g‖_∞`.
    pub threshold: f64,
    pub accepted: bool,
    /// Largest `‖M_0 g − G * g‖` over the cross-check points.
    pub convolution_discrepancy: f64,
}

pub fn solve_mild(g: &Generator, forcing: &GridFunction, params: &PerronParams) -> Result<MildSolution> {
    let spec = g.spectral()?;
    if spec.gap <= g.gap_threshold() {
        return Err(Error::NotHyperbolic {
            gap: spec.gap,
            threshold: g.gap_threshold(),
        });
    }
    if forcing.dim() != g.dim() {
        return Err(Error::DimensionMismatch {
            expected: format!("forcing with values of length {}", g.dim()),
            found: format!("length {}", forcing.dim()),
        });
    }
    if !(params.interior > 0.0 && params.interior <= 1.0) || params.stride == 0 || !(params.tolerance > 0.0) {
        return Err(Error::Config(
            "residual lattice needs interior in (0, 1], positive stride and tolerance".into(),
        ));
    }
    check_support(forcing, 5.0 / spec.gap)?;
    let cfg = MultiplierConfig::new(g, 0.0)?;
    let u = apply_multiplier(g, &cfg, forcing)?;
    let convolution_discrepancy = cross_check(g, &u, forcing, params.cross_checks)?;
    let pairs = residual_pairs(&u, params);
    let residuals = mild_residual_table(g, &u, forcing, &pairs)?;
    let max_residual = residuals.iter().map(|r| r.residual).fold(0.0, f64::max);
    let threshold = params.tolerance * forcing.max_norm();
    Ok(MildSolution {
        accepted: max_residual <= threshold,
        u,
        forcing: forcing.clone(),
        residuals,
        max_residual,
        threshold,
        convolution_discrepancy,
    })
}

/// The forcing must vanish within `margin` of both grid ends.
fn check_support(forcing: &GridFunction, margin: f64) -> Result<()> {
    let scale = forcing.max_norm();
    let cells = (margin / forcing.h).ceil() as usize;
    if 2 * cells >= forcing.len() {
        return Err(Error::Input(format!(
            "grid [{}, {}] is too short for a decay margin of {margin:.3} on each side",
            forcing.start,
            forcing.end()
        )));
    }
    let m = forcing.len();
    if let Some(j) = (0..cells).chain(m - cells..m).find(|&j| forcing.samples[j].norm() > 1e-12 * scale) {
        return Err(Error::Input(format!(
            "forcing must vanish within {margin:.3} of the grid ends (decay margin 5/delta); nonzero at t = {}",
            forcing.time(j)
        )));
    }
    Ok(())
}

/// Pairs `(θ, τ)` with `θ − τ` from the configured differences, both inside the
/// central `interior` fraction of the grid.
pub fn residual_pairs(u: &GridFunction, params: &PerronParams) -> Vec<(f64, f64)> {
    let m = u.len();
    let margin = ((1.0 - params.interior) * 0.5 * (m - 1) as f64).ceil() as usize;
    let (lo, hi) = (margin, m - 1 - margin);
    let mut pairs = Vec::new();
    for &d in &params.differences {
        let cells = (d / u.h).round() as usize;
        let mut i = lo;
        while i + cells <= hi {
            pairs.push((u.time(i + cells), u.time(i)));
            i += params.stride;
        }
    }
    pairs
}

fn grid_index(f: &GridFunction, t: f64) -> Result<usize> {
    let x = (t - f.start) / f.h;
    let j = x.round();
    if (x - j).abs() > 1e-6 || j < 0.0 || j as usize >= f.len() {
        return Err(Error::Input(format!("time {t} is not a grid point of [{}, {}] with h = {}", f.start, f.end(), f.h)));
    }
    Ok(j as usize)
}

/// Largest residual of the mild equation over `pairs`.
pub fn mild_residual(g: &Generator, u: &GridFunction, forcing: &GridFunction, pairs: &[(f64, f64)]) -> Result<f64> {
    Ok(mild_residual_table(g, u, forcing, pairs)?
        .iter()
        .map(|r| r.residual)
        .fold(0.0, f64::max))
}

/// `‖u(θ) − T_{θ−τ}u(τ) − ∫_τ^θ T_{θ−s}g(s) ds‖` per pair, the integral by
/// composite Simpson on the grid.
pub fn mild_residual_table(
    g: &Generator,
    u: &GridFunction,
    forcing: &GridFunction,
    pairs: &[(f64, f64)],
) -> Result<Vec<ResidualRow>> {
    if !u.aligned_with(forcing) {
        return Err(Error::Input(format!(
            "solution grid (a = {}, h = {}, m = {}) and forcing grid (a = {}, h = {}, m = {}) are not aligned",
            u.start,
            u.h,
            u.len(),
            forcing.start,
            forcing.h,
            forcing.len()
        )));
    }
    if u.dim() != g.dim() || forcing.dim() != g.dim() {
        return Err(Error::DimensionMismatch {
            expected: format!("values of length {}", g.dim()),
            found: format!("{} and {}", u.dim(), forcing.dim()),
        });
    }
    let mut index_pairs = Vec::with_capacity(pairs.len());
    for &(theta, tau) in pairs {
        if theta < tau {
            return Err(Error::Input(format!("pair needs theta >= tau, got theta = {theta}, tau = {tau}")));
        }
        index_pairs.push((grid_index(u, theta)?, grid_index(u, tau)?));
    }
    let span = index_pairs.iter().map(|(i, j)| i - j).max().unwrap_or(0);
    let step = g.semigroup(u.h)?;
    let mut powers = Vec::with_capacity(span + 1);
    powers.push(identity(g.dim()));
    for k in 0..span {
        let next = &powers[k] * &step;
        powers.push(next);
    }
    try_map(index_pairs.len(), |p| {
        let (i, j) = index_pairs[p];
        let weights = simpson_weights(i - j);
        let mut integral = CVector::zeros(g.dim());
        for (l, w) in (j..=i).zip(&weights) {
            integral += &powers[i - l] * &forcing.samples[l] * c(w * u.h, 0.0);
        }
        let r = &u.samples[i] - &powers[i - j] * &u.samples[j] - integral;
        Ok(ResidualRow {
            theta: u.time(i),
            tau: u.time(j),
            residual: r.norm(),
        })
    })
}

/// Unit-spacing weights over `cells` intervals: Simpson's rule, closed by the
/// 3/8 rule on the last three cells when `cells` is odd. The trapezoid rule
/// was too coarse here: its error is amplified by unstable growth across the
/// window.
fn simpson_weights(cells: usize) -> Vec<f64> {
    let mut w = vec![0.0; cells + 1];
    match cells {
        0 => return w,
        1 => return vec![0.5, 0.5],
        _ => {}
    }
    let simpson_cells = if cells % 2 == 0 { cells } else { cells - 3 };
    for k in (0..simpson_cells).step_by(2) {
        w[k] += 1.0 / 3.0;
        w[k + 1] += 4.0 / 3.0;
        w[k + 2] += 1.0 / 3.0;
    }
    if simpson_cells < cells {
        let k = simpson_cells;
        for (o, a) in [3.0, 9.0, 9.0, 3.0].iter().enumerate() {
            w[k + o] += a / 8.0;
        }
    }
    w
}

/// Direct convolution `(G * g)(t_i) = ∫ G(t_i − r) g(r) dr` by the trapezoid
/// rule on each side of the jump, at evenly spread interior points.
fn cross_check(g: &Generator, u: &GridFunction, forcing: &GridFunction, points: usize) -> Result<f64> {
    if points == 0 {
        return Ok(0.0);
    }
    let n = g.dim();
    let p = green_regularized(g, 0.0, &identity(n))? + identity(n) * c(0.5, 0.0);
    let q = identity(n) - &p;
    let m = u.len();
    let forward = g.semigroup(u.h)?;
    let backward = g.semigroup(-u.h)?;
    let indices: Vec<usize> = (1..=points).map(|k| k * (m - 1) / (points + 1)).collect();
    let diffs = try_map(indices.len(), |idx| {
        let i = indices[idx];
        let mut acc = CVector::zeros(n);
        // r ≤ t_i: kernel T_{t_i − r} P
        let mut kernel: CMatrix = p.clone();
        for l in (0..=i).rev() {
            let w = if l == i || l == 0 { 0.5 } else { 1.0 };
            acc += &kernel * &forcing.samples[l] * c(w * u.h, 0.0);
            kernel = &forward * kernel;
        }
        // r ≥ t_i: kernel −T_{t_i − r}(I − P)
        let mut kernel: CMatrix = -q.clone();
        for l in i..m {
            let w = if l == i || l == m - 1 { 0.5 } else { 1.0 };
            acc += &kernel * &forcing.samples[l] * c(w * u.h, 0.0);
            kernel = &backward * kernel;
        }
        Ok::<_, Error>((&u.samples[i] - acc).norm())
    })?;
    Ok(diffs.into_iter().fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{real_diag, real_matrix};

    fn bump(t: f64, centre: f64, radius: f64) -> f64 {
        let x = (t - centre) / radius;
        if x.abs() < 1.0 {
            (-1.0 / (1.0 - x * x)).exp()
        } else {
            0.0
        }
    }

    #[test]
    fn scalar_gaussian_forcing() {
        let g = Generator::new(real_diag(&[-1.0])).unwrap();
        let f = GridFunction::from_fn(-20.0, 0.01, 4001, |t| CVector::from_element(1, c((-t * t / 2.0).exp(), 0.0))).unwrap();
        let sol = solve_mild(&g, &f, &PerronParams::default()).unwrap();
        for (j, v) in sol.u.samples.iter().enumerate().step_by(97) {
            let t = sol.u.time(j);
            let expect = (std::f64::consts::PI / 2.0).sqrt() * (0.5 - t).exp() * libm::erfc((1.0 - t) / 2f64.sqrt());
            assert!((v[0] - c(expect, 0.0)).norm() < 1e-4, "t = {t}");
        }
        assert!(sol.accepted, "{} > {}", sol.max_residual, sol.threshold);
        assert!(sol.convolution_discrepancy < 1e-4);
    }

    #[test]
    fn diagonal_bump_and_wrong_branch() {
        let g = Generator::new(real_diag(&[-1.0, 2.0])).unwrap();
        let f = GridFunction::from_fn(-15.0, 0.01, 3001, |t| CVector::from_element(2, c(bump(t, 0.0, 2.0), 0.0))).unwrap();
        let sol = solve_mild(&g, &f, &PerronParams::default()).unwrap();
        assert!(sol.accepted, "{} > {}", sol.max_residual, sol.threshold);
        let mut wrong = sol.u.clone();
        for (j, v) in wrong.samples.iter_mut().enumerate() {
            let t = sol.u.time(j);
            v[1] += c((2.0 * (t - 1.0)).exp() * bump(t, 1.0, 1.5), 0.0);
        }
        let pairs = residual_pairs(&sol.u, &PerronParams::default());
        assert!(mild_residual(&g, &wrong, &f, &pairs).unwrap() >= 0.1);
    }

    #[test]
    fn simpson_weights_integrate_cubics() {
        for cells in 1..9 {
            let w = simpson_weights(cells);
            let total: f64 = w.iter().sum();
            assert!((total - cells as f64).abs() < 1e-12);
            if cells > 1 {
                let cubic: f64 = w.iter().enumerate().map(|(k, w)| w * (k as f64).powi(3)).sum();
                assert!((cubic - (cells as f64).powi(4) / 4.0).abs() < 1e-9, "{cells}");
            }
        }
    }

    #[test]
    fn zero_forcing_and_refusals() {
        let g = Generator::new(real_diag(&[-1.0, 2.0])).unwrap();
        let zero = GridFunction::zeros(-15.0, 0.01, 3001, 2);
        let sol = solve_mild(&g, &zero, &PerronParams::default()).unwrap();
        assert_eq!(sol.u.max_norm(), 0.0);
        assert_eq!(mild_residual(&g, &zero, &zero, &[(1.0, 0.0)]).unwrap(), 0.0);
        let rot = Generator::new(real_matrix(&[vec![0.0, 1.0], vec![-1.0, 0.0]])).unwrap();
        assert!(matches!(solve_mild(&rot, &zero, &PerronParams::default()), Err(Error::NotHyperbolic { .. })));
        let shifted = GridFunction::zeros(-14.0, 0.01, 3001, 2);
        assert!(matches!(mild_residual(&g, &zero, &shifted, &[(1.0, 0.0)]), Err(Error::Input(_))));
        assert!(matches!(mild_residual(&g, &zero, &zero, &[(0.0, 1.0)]), Err(Error::Input(_))));
    }
}
