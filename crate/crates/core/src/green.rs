//! Green's function, splitting projection and dichotomy constants.
//!
//! `G(t)` is the kernel `T_t P` for `t > 0` and `−T_t (I − P)` for `t < 0`.
//! Two constructive routes are provided. [`green_apply`] is the raw Cesàro
//! mean of `(1/2π) ∫ R(is) x e^{ist} ds`. [`green_regularized`] peels two terms
//! off the resolvent for `|s| ≥ 1`,
//!
//! `R(is) = 1/(is) − A/s² − R(is) A²/s²`,
//!
//! and integrates each piece in closed form or absolutely:
//!
//! ```text
//! G(t)x = (1/2π) ∫_{|s|≤1} R(is)x e^{ist} ds
//!       − (1/π) (cos t − |t| (π/2 − Si|t|)) Ax
//!       − (1/2π) ∫_1^∞ [R(is) e^{ist} + R(−is) e^{−ist}] A²x / s² ds
//!       + (1/π) sgn(t) (π/2 − Si|t|) x
//! ```
//!
//! At `t = 0` the last term vanishes and `P = ½I + G(0)`.

use std::f64::consts::{PI, TAU};

use crate::error::{Error, Result};
use crate::linalg::{c, frobenius, identity, op_norm, CMatrix};
use crate::operator_core::Generator;
use crate::quadrature::{composite, uniform_panels, GaussLegendre};
use crate::special::sine_integral_tail;
use crate::summation::{cesaro_ladder, fejer_ladder_graded, CesaroResult, QuadratureParams};

/// Knobs of the regularized quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegularizedRule {
    pub order: usize,
    /// Upper limit of the oscillatory tail integral for `t ≠ 0`.
    pub s_max: f64,
}

impl Default for RegularizedRule {
    fn default() -> Self {
        Self { order: 16, s_max: 1000.0 }
    }
}

fn ensure_axis_free(g: &Generator) -> Result<()> {
    let tol = g.eigen_tolerance();
    if let Some(l) = g.spectral()?.eigenvalues.iter().find(|l| l.re.abs() <= tol) {
        return Err(Error::SpectrumHit {
            point: c(0.0, l.im),
            eigenvalue: *l,
            distance: l.re.abs(),
        });
    }
    Ok(())
}

/// Cesàro mean `(1/2π)(C,1)∫ R(is) x e^{ist} ds` at each time.
pub fn green_apply(g: &Generator, times: &[f64], x: &CMatrix, params: &QuadratureParams) -> Result<Vec<CesaroResult>> {
    check_rows(g, x)?;
    ensure_axis_free(g)?;
    cesaro_ladder(|s| g.resolvent_apply(c(0.0, s), x), times, params, frobenius(x))
}

pub fn green_regularized(g: &Generator, t: f64, x: &CMatrix) -> Result<CMatrix> {
    Ok(green_regularized_many(g, &[t], x, &RegularizedRule::default())?.remove(0))
}

/// Regularized Green's function at several times, sharing resolvent solves.
pub fn green_regularized_many(g: &Generator, times: &[f64], x: &CMatrix, rule: &RegularizedRule) -> Result<Vec<CMatrix>> {
    check_rows(g, x)?;
    ensure_axis_free(g)?;
    let (n, k) = x.shape();
    if frobenius(x) == 0.0 {
        return Ok(vec![CMatrix::zeros(n, k); times.len()]);
    }
    let a = g.matrix();
    let ax = a * x;
    let a2x = a * &ax;
    let gap = g.spectral()?.gap;
    let t_max = times.iter().fold(0.0f64, |m, t| m.max(t.abs()));
    let osc = if t_max > 0.0 { PI / (2.0 * t_max) } else { f64::INFINITY };
    let gl = GaussLegendre::new(rule.order);
    let mut out: Vec<CMatrix> = times
        .iter()
        .map(|&t| {
            let at = t.abs();
            let jump = if t == 0.0 { 0.0 } else { t.signum() * sine_integral_tail(at) / PI };
            let smooth = -(at.cos() - at * sine_integral_tail(at)) / PI;
            x * c(jump, 0.0) + &ax * c(smooth, 0.0)
        })
        .collect();

    // |s| ≤ 1, absolutely convergent
    let inner = uniform_panels(-1.0, 1.0, gap.clamp(1e-3, 0.25).min(osc));
    for (s, w) in composite(&inner, &gl) {
        let r = g.resolvent_apply(c(0.0, s), x)?;
        for (o, &t) in out.iter_mut().zip(times) {
            *o += &r * (c(0.0, s * t).exp() * (w / TAU));
        }
    }

    // 1 ≤ s ≤ S1, both signs
    let s1 = 4f64.max(2.0 * (g.norm() + 1.0));
    let middle = uniform_panels(1.0, s1, gap.clamp(1e-3, 1.0).min(osc));
    let all: Vec<usize> = (0..times.len()).collect();
    accumulate_tail(g, &a2x, &composite(&middle, &gl), times, &all, &mut out)?;

    // s ≥ S1 for t ≠ 0: long oscillatory range, the remainder beyond s_max is O(1/(|t| s_max³))
    let nonzero: Vec<usize> = all.iter().cloned().filter(|&i| times[i] != 0.0).collect();
    if !nonzero.is_empty() {
        let s_max = rule.s_max.max(50.0 * g.norm()).max(s1);
        let far = uniform_panels(s1, s_max, 1f64.min(osc));
        accumulate_tail(g, &a2x, &composite(&far, &gl), times, &nonzero, &mut out)?;
    }

    // s ≥ S1 at t = 0: u = 1/s maps the tail onto (0, 1/S1]; R(i/u) = u (i − uA)^{-1}
    if times.iter().any(|&t| t == 0.0) {
        let mut acc = CMatrix::zeros(n, k);
        let id = identity(n);
        for (u, w) in gl.on(0.0, 1.0 / s1) {
            let shifted_p = &id * c(0.0, 1.0) - a * c(u, 0.0);
            let shifted_m = &id * c(0.0, -1.0) - a * c(u, 0.0);
            let rp = crate::linalg::solve(&shifted_p, &a2x)?;
            let rm = crate::linalg::solve(&shifted_m, &a2x)?;
            acc += (rp + rm) * c(-w * u / TAU, 0.0);
        }
        for (o, &t) in out.iter_mut().zip(times) {
            if t == 0.0 {
                *o += &acc;
            }
        }
    }
    Ok(out)
}

/// Adds `−(1/2π) Σ w [R(is) e^{ist} + R(−is) e^{−ist}] A²x / s²` to the selected times.
fn accumulate_tail(
    g: &Generator,
    a2x: &CMatrix,
    nodes: &[(f64, f64)],
    times: &[f64],
    which: &[usize],
    out: &mut [CMatrix],
) -> Result<()> {
    for &(s, w) in nodes {
        let rp = g.resolvent_apply(c(0.0, s), a2x)?;
        let rm = g.resolvent_apply(c(0.0, -s), a2x)?;
        let f = c(-w / (TAU * s * s), 0.0);
        for &i in which {
            let e = c(0.0, s * times[i]).exp();
            out[i] += (&rp * e + &rm * e.conj()) * f;
        }
    }
    Ok(())
}

fn check_rows(g: &Generator, x: &CMatrix) -> Result<()> {
    if x.nrows() != g.dim() {
        return Err(Error::DimensionMismatch {
            expected: format!("{} rows", g.dim()),
            found: format!("{} rows", x.nrows()),
        });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Cesaro,
    SpectralOracle,
    Both,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::Cesaro => "cesaro",
            Provenance::SpectralOracle => "spectral-oracle",
            Provenance::Both => "both",
        }
    }
}

#[derive(Debug, Clone)]
pub struct HyperbolicityReport {
    pub is_hyperbolic: bool,
    pub gap: f64,
    pub gap_threshold: f64,
    /// `½I + G(0)` from the regularized formula, absent when the resolvent
    /// is undefined on the imaginary axis.
    pub projection: Option<CMatrix>,
    pub projection_oracle: Option<CMatrix>,
    pub idempotency_defect: Option<f64>,
    pub cesaro_converged: bool,
    pub cesaro_residual: Option<f64>,
    /// `‖P_cesaro − P_spec‖_F`.
    pub discrepancy: Option<f64>,
    /// `‖P_regularized − P_spec‖_F`.
    pub regularized_discrepancy: Option<f64>,
    pub constants: Option<DichotomyConstants>,
    /// `max ‖G(t)‖` over a few sample times, evidence of boundedness.
    pub green_sup: Option<f64>,
    pub provenance: Provenance,
}

/// Idempotency threshold for the hyperbolicity verdict.
pub const IDEMPOTENCY_VERDICT: f64 = 1e-4;

pub fn splitting_projection(g: &Generator, params: &QuadratureParams) -> Result<HyperbolicityReport> {
    let spec = g.spectral()?;
    let n = g.dim();
    let gap = spec.gap;
    let threshold = g.gap_threshold();
    let oracle = g.spectral_projection().ok();
    let mut report = HyperbolicityReport {
        is_hyperbolic: false,
        gap,
        gap_threshold: threshold,
        projection: None,
        projection_oracle: oracle.clone(),
        idempotency_defect: None,
        cesaro_converged: false,
        cesaro_residual: None,
        discrepancy: None,
        regularized_discrepancy: None,
        constants: None,
        green_sup: None,
        provenance: Provenance::SpectralOracle,
    };
    if ensure_axis_free(g).is_err() {
        return Ok(report);
    }
    let id = identity(n);
    let half = &id * c(0.5, 0.0);
    let sample_times = [0.0, -2.0, -1.0, -0.5, 0.5, 1.0, 2.0];
    let g_reg = green_regularized_many(g, &sample_times, &id, &RegularizedRule::default())?;
    let p = &half + &g_reg[0];
    let cesaro = cesaro_projection_mean(g, params.tolerance)?;
    let p_cesaro = &half + &cesaro.value;
    let defect = frobenius(&(&p * &p - &p));
    report.idempotency_defect = Some(defect);
    report.cesaro_converged = cesaro.converged;
    report.cesaro_residual = Some(cesaro.residual);
    report.green_sup = Some(g_reg[1..].iter().map(op_norm).fold(0.0, f64::max));
    if let Some(o) = &oracle {
        report.discrepancy = Some(frobenius(&(&p_cesaro - o)));
        report.regularized_discrepancy = Some(frobenius(&(&p - o)));
        report.provenance = Provenance::Both;
    } else {
        report.provenance = Provenance::Cesaro;
    }
    report.is_hyperbolic = gap > threshold && cesaro.converged && defect <= IDEMPOTENCY_VERDICT;
    if report.is_hyperbolic {
        let horizon = (10.0 / gap).min(40.0);
        report.constants = dichotomy_constants(g, &p, horizon, horizon / 200.0).ok();
    }
    report.projection = Some(p);
    Ok(report)
}

/// Fejér parameters of the projection ladder.
pub const PROJECTION_LADDER: [f64; 3] = [1e4, 1e5, 1e6];

/// Cesàro mean of `(1/2π)∫ R(is) ds` at `t = 0` along [`PROJECTION_LADDER`].
///
/// The integrand is not oscillatory here, so panels grow geometrically away
/// from the eigenvalue images `Im λ` and stay narrower than the distance to
/// the spectrum near them.
pub fn cesaro_projection_mean(g: &Generator, tolerance: f64) -> Result<CesaroResult> {
    ensure_axis_free(g)?;
    let n = g.dim();
    let eig = g.spectral()?.eigenvalues.clone();
    let dist = |s: f64| eig.iter().map(|l| (c(0.0, s) - l).norm()).fold(f64::INFINITY, f64::min);
    let n_max = PROJECTION_LADDER[PROJECTION_LADDER.len() - 1];
    let mut breaks = vec![0.0];
    let mut s = 0.0;
    while s < n_max {
        let w = (0.5 * dist(s)).max(1e-4).min(0.25f64.max(0.25 * s));
        let next = s + w;
        if let Some(&stop) = PROJECTION_LADDER.iter().find(|&&m| s < m && next > m) {
            s = stop;
        } else {
            s = next.min(n_max);
        }
        breaks.push(s);
    }
    // the same panels are mirrored, so also resolve features at −Im λ
    let mirrored: Vec<f64> = breaks.clone();
    let dist_neg = |s: f64| eig.iter().map(|l| (c(0.0, -s) - l).norm()).fold(f64::INFINITY, f64::min);
    let mut refined = vec![0.0];
    for w in mirrored.windows(2) {
        let (a, b) = (w[0], w[1]);
        let need = (0.5 * dist_neg(a).min(dist_neg(b))).max(1e-4);
        let pieces = ((b - a) / need).ceil().max(1.0) as usize;
        for k in 1..=pieces {
            refined.push(if k == pieces { b } else { a + (b - a) * k as f64 / pieces as f64 });
        }
    }
    let id = identity(n);
    let scale = frobenius(&id);
    fejer_ladder_graded(|s| g.resolvent(c(0.0, s)), 0.0, &refined, &PROJECTION_LADDER, 16, tolerance, scale)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DichotomyConstants {
    pub k: f64,
    pub omega: f64,
}

/// Fits `‖T_t P‖ ≤ K e^{−ωt}` and `‖T_{−t}(I − P)‖ ≤ K e^{−ωt}` on `(0, T_max]`.
pub fn dichotomy_constants(g: &Generator, p: &CMatrix, horizon: f64, step: f64) -> Result<DichotomyConstants> {
    let n = g.dim();
    if p.shape() != (n, n) {
        return Err(Error::DimensionMismatch {
            expected: format!("{n}x{n} projection"),
            found: format!("{}x{}", p.nrows(), p.ncols()),
        });
    }
    let pn = op_norm(p);
    let defect = frobenius(&(p * p - p));
    if defect > 1e-6 * (1.0 + pn * pn) {
        return Err(Error::Input(format!("projection is not idempotent: ||P^2 - P|| = {defect:.3e}")));
    }
    if !(horizon > 0.0 && step > 0.0 && step <= horizon) {
        return Err(Error::Config(format!("need 0 < step <= horizon, got step {step}, horizon {horizon}")));
    }
    let q = identity(n) - p;
    let forward = g.semigroup(step)? * p;
    let backward = g.semigroup(-step)? * &q;
    let count = (horizon / step).floor() as usize;
    let mut fits = Vec::new();
    let mut samples = Vec::new();
    for (one_step, part) in [(forward, p), (backward, &q)] {
        if op_norm(part) < 1e-12 {
            continue;
        }
        let mut m = one_step.clone();
        let mut pts = Vec::with_capacity(count);
        for k in 1..=count {
            let v = op_norm(&m);
            if v < 1e-250 {
                break;
            }
            pts.push((k as f64 * step, v.ln()));
            m = &m * &one_step;
        }
        if pts.len() >= 2 {
            fits.push(linear_fit(&pts));
        }
        samples.extend(pts);
    }
    if fits.is_empty() {
        return Err(Error::Numerical("no usable samples for the dichotomy fit".into()));
    }
    let omega = fits.iter().map(|&(_, slope)| -slope).fold(f64::INFINITY, f64::min);
    let mut log_k = fits.iter().map(|&(icpt, _)| icpt).fold(f64::NEG_INFINITY, f64::max);
    for &(t, y) in &samples {
        log_k = log_k.max(y + omega * t);
    }
    Ok(DichotomyConstants { k: log_k.exp(), omega })
}

/// Least squares `y ≈ a + b t`; returns `(a, b)`.
pub(crate) fn linear_fit(pts: &[(f64, f64)]) -> (f64, f64) {
    let m = pts.len() as f64;
    let (st, sy) = pts.iter().fold((0.0, 0.0), |(a, b), &(t, y)| (a + t, b + y));
    let (mt, my) = (st / m, sy / m);
    let (num, den) = pts
        .iter()
        .fold((0.0, 0.0), |(a, b), &(t, y)| (a + (t - mt) * (y - my), b + (t - mt) * (t - mt)));
    let slope = if den > 0.0 { num / den } else { 0.0 };
    (my - slope * mt, slope)
}

#[derive(Debug, Clone)]
pub struct GreenSamples {
    pub times: Vec<f64>,
    pub values: Vec<CMatrix>,
    /// `G(0)` with the midpoint convention, reported separately.
    pub at_zero: Option<CMatrix>,
    pub k_g: f64,
    pub omega_g: f64,
}

/// Relative size below which a sample of `‖G(t)‖` is left out of the decay fit.
pub const SAMPLE_FLOOR: f64 = 1e-7;

/// Samples `G(t)` by the regularized formula; `t = 0` is split off.
///
/// Each half-line gets its own log-linear fit and `ω_G` is the slower rate.
/// `K_G` is then the smallest constant covering every fitted sample.
pub fn green_samples(g: &Generator, times: &[f64]) -> Result<GreenSamples> {
    let mut sorted: Vec<f64> = times.iter().cloned().filter(|t| t.is_finite()).collect();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();
    let has_zero = sorted.contains(&0.0);
    sorted.retain(|&t| t != 0.0);
    let mut all = sorted.clone();
    if has_zero {
        all.push(0.0);
    }
    let mut values = green_regularized_many(g, &all, &identity(g.dim()), &RegularizedRule::default())?;
    let at_zero = has_zero.then(|| values.pop().unwrap());
    let logs: Vec<(f64, f64)> = sorted
        .iter()
        .zip(&values)
        .map(|(&t, v)| (t, op_norm(v).max(1e-300).ln()))
        .collect();
    // samples this far below the largest one sit at the quadrature noise floor
    let floor = logs.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max) + SAMPLE_FLOOR.ln();
    let usable: Vec<(f64, f64)> = logs.iter().cloned().filter(|p| p.1 >= floor).collect();
    let side = |positive: bool| -> Vec<(f64, f64)> {
        usable
            .iter()
            .filter(|p| (p.0 > 0.0) == positive)
            .map(|&(t, y)| (t.abs(), y))
            .collect()
    };
    let slopes: Vec<f64> = [side(true), side(false)]
        .iter()
        .filter(|pts| pts.len() >= 2)
        .map(|pts| -linear_fit(pts).1)
        .collect();
    let (k_g, omega_g) = if slopes.is_empty() {
        (logs.iter().map(|p| p.1.exp()).fold(0.0, f64::max), 0.0)
    } else {
        let omega = slopes.iter().cloned().fold(f64::INFINITY, f64::min);
        let log_k = usable.iter().fold(f64::NEG_INFINITY, |m, &(t, y)| m.max(y + omega * t.abs()));
        (log_k.exp(), omega)
    };
    Ok(GreenSamples {
        times: sorted,
        values,
        at_zero,
        k_g,
        omega_g,
    })
}

#[derive(Debug, Clone)]
pub struct IdentityResiduals {
    /// `(t, ‖G(t) − T_t P‖ or ‖G(t) + T_t(I − P)‖, ‖T_t‖)`.
    pub table: Vec<(f64, f64, f64)>,
    pub max_positive: f64,
    pub max_negative: f64,
    /// Largest residual divided by `‖T_t‖`.
    pub max_relative: f64,
}

/// Checks `G(t) = T_t P` for `t > 0` and `G(t) = −T_t(I − P)` for `t < 0`.
pub fn verify_green_identities(g: &Generator, p: &CMatrix, times: &[f64]) -> Result<IdentityResiduals> {
    let spec = g.spectral()?;
    if spec.gap <= g.gap_threshold() {
        return Err(Error::NotHyperbolic {
            gap: spec.gap,
            threshold: g.gap_threshold(),
        });
    }
    let n = g.dim();
    let times: Vec<f64> = times.iter().cloned().filter(|&t| t != 0.0).collect();
    let values = green_regularized_many(g, &times, &identity(n), &RegularizedRule::default())?;
    let q = identity(n) - p;
    let mut out = IdentityResiduals {
        table: Vec::new(),
        max_positive: 0.0,
        max_negative: 0.0,
        max_relative: 0.0,
    };
    for (&t, gt) in times.iter().zip(&values) {
        let tt = g.semigroup(t)?;
        let r = if t > 0.0 { op_norm(&(gt - &tt * p)) } else { op_norm(&(gt + &tt * &q)) };
        let scale = op_norm(&tt);
        if t > 0.0 {
            out.max_positive = out.max_positive.max(r);
        } else {
            out.max_negative = out.max_negative.max(r);
        }
        out.max_relative = out.max_relative.max(r / scale);
        out.table.push((t, r, scale));
    }
    Ok(out)
}

/// `G(0)` at the jump: the average of the one-sided limits, `P − ½I`.
pub fn green_midpoint(p: &CMatrix) -> CMatrix {
    p - identity(p.nrows()) * c(0.5, 0.0)
}
