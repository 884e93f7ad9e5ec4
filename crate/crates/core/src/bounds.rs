//! Growth and spectral bounds: the weighted spectral bound `s_α`, the
//! fractional growth bound `ω_α` from trajectories, and `ω_α` as the edge of
//! the region where `R(i· + ω) A_ω^{−α}` is a Fourier multiplier.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{c, min_singular_value, op_norm, solve, CMatrix, C64};
use crate::multiplier::{estimate_symbol_norm, ProbeFamily};
use crate::operator_core::{fractional_power, FractionalConfig, Generator, PowerSign};
use crate::parallel::try_map;
use crate::search::{compass_search, lattice, Peak, SearchBox};

/// Weighted resolvent norms above this count as unbounded in scans.
pub const SCAN_BLOW_UP: f64 = 1e8;
/// Multiplier lower bounds above this declare "not a multiplier".
pub const MULTIPLIER_BLOW_UP: f64 = 1e4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScanGrid {
    pub re_range: (f64, f64),
    pub im_range: (f64, f64),
    /// Spacing of the real-part lattice.
    pub spacing: f64,
    pub im_points: usize,
}

impl ScanGrid {
    /// `Re, Im ∈ [−(‖A‖ + 1), ‖A‖ + 1]`, which contains the spectrum, spacing 0.02.
    pub fn for_generator(g: &Generator) -> Self {
        let r = g.norm() + 1.0;
        Self {
            re_range: (-r, r),
            im_range: (-r, r),
            spacing: 0.02,
            im_points: 81,
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = self.re_range.0 < self.re_range.1
            && self.im_range.0 <= self.im_range.1
            && self.spacing > 0.0
            && self.im_points > 0
            && [self.re_range.0, self.re_range.1, self.im_range.0, self.im_range.1].iter().all(|v| v.is_finite());
        if !ok {
            return Err(Error::Config(format!("invalid scan grid {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SAlphaScan {
    pub alpha: f64,
    pub s_alpha: f64,
    pub spacing: f64,
    /// Points where the weighted norm exceeded the blow-up threshold.
    pub blow_ups: Vec<C64>,
    /// Lattice nodes skipped because `λI − A` was exactly singular there.
    pub skipped: Vec<C64>,
    /// Largest finite weighted norm seen on the lattice.
    pub lattice_sup: f64,
}

/// `ln(‖R(λ)‖ / (1 + |Im λ|^α))`, `+∞` where `λI − A` is exactly singular.
fn weighted_log_norm(g: &Generator, alpha: f64, lambda: C64) -> f64 {
    let sigma = min_singular_value(&shifted(g, lambda));
    if sigma == 0.0 {
        return f64::INFINITY;
    }
    -sigma.ln() - (1.0 + lambda.im.abs().powf(alpha)).ln()
}

fn shifted(g: &Generator, lambda: C64) -> CMatrix {
    let mut m = -g.matrix().clone();
    for i in 0..g.dim() {
        m[(i, i)] += lambda;
    }
    m
}

/// Smallest lattice abscissa `s` such that the sampled weighted resolvent
/// `‖R(λ)‖/(1 + |Im λ|^α)` stays below the blow-up threshold on `Re λ ≥ s`.
///
/// Poles are found by compass refinement from the local maxima of the lattice,
/// since the lattice alone never lands on an eigenvalue.
pub fn s_alpha_scan(g: &Generator, alpha: f64, grid: &ScanGrid) -> Result<SAlphaScan> {
    grid.validate()?;
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(Error::Config(format!("alpha must be finite and >= 0, got {alpha}")));
    }
    let nre = ((grid.re_range.1 - grid.re_range.0) / grid.spacing).round() as usize + 1;
    let res = lattice(grid.re_range, nre.max(2));
    let ims = lattice(grid.im_range, grid.im_points);
    let values = try_map(res.len(), |i| {
        Ok::<_, Error>(ims.iter().map(|&y| weighted_log_norm(g, alpha, c(res[i], y))).collect::<Vec<f64>>())
    })?;
    let threshold = SCAN_BLOW_UP.ln();
    let mut skipped = Vec::new();
    let mut blow_ups = Vec::new();
    let mut lattice_sup = f64::NEG_INFINITY;
    for (i, row) in values.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            let z = c(res[i], ims[j]);
            if v.is_infinite() {
                skipped.push(z);
                blow_ups.push(z);
            } else {
                lattice_sup = lattice_sup.max(v);
                if v > threshold {
                    blow_ups.push(z);
                }
            }
        }
    }
    let region = SearchBox {
        x: grid.re_range,
        y: grid.im_range,
    };
    let dy = if ims.len() > 1 { ims[1] - ims[0] } else { 1.0 };
    let mut f = |x: f64, y: f64| weighted_log_norm(g, alpha, c(x, y));
    for (i, j) in local_maxima(&values).into_iter().take(64) {
        let start = Peak {
            x: res[i],
            y: ims[j],
            value: values[i][j],
        };
        let p = compass_search(&mut f, start, (0.5 * grid.spacing, 0.5 * dy), &region, 2000);
        if p.value > threshold {
            blow_ups.push(c(p.x, p.y));
        }
    }
    let edge = blow_ups.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
    let slack = 1e-9 * (1.0 + edge.abs());
    let s_alpha = res.iter().copied().find(|&s| s >= edge - slack).unwrap_or(grid.re_range.1);
    Ok(SAlphaScan {
        alpha,
        s_alpha: if edge.is_finite() { s_alpha } else { res[0] },
        spacing: res[1] - res[0],
        blow_ups,
        skipped,
        lattice_sup: lattice_sup.exp(),
    })
}

/// Lattice points not below any of their eight neighbours, largest first.
fn local_maxima(values: &[Vec<f64>]) -> Vec<(usize, usize)> {
    let nx = values.len();
    let ny = values[0].len();
    let mut out = Vec::new();
    for i in 0..nx {
        for j in 0..ny {
            let v = values[i][j];
            if v.is_infinite() {
                continue;
            }
            let mut is_max = true;
            for di in -1i64..=1 {
                for dj in -1i64..=1 {
                    let (a, b) = (i as i64 + di, j as i64 + dj);
                    if (di, dj) == (0, 0) || a < 0 || b < 0 || a >= nx as i64 || b >= ny as i64 {
                        continue;
                    }
                    if values[a as usize][b as usize] > v {
                        is_max = false;
                    }
                }
            }
            if is_max {
                out.push((i, j));
            }
        }
    }
    out.sort_by(|a, b| values[b.0][b.1].total_cmp(&values[a.0][a.1]));
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayFit {
    /// Fitted exponential rate.
    pub omega: f64,
    /// Coefficient of `ln t`, absorbing polynomial factors from Jordan blocks.
    pub log_coefficient: f64,
    pub intercept: f64,
    /// `(t, ln ‖T_t A_ω^{−α}‖)`.
    pub samples: Vec<(f64, f64)>,
}

/// Growth rate of `sup_{‖x‖_α = 1} ‖T_t x‖ = ‖T_t A_ω^{−α}‖` from a fit of
/// `c + m ln t + ω t` on `t ∈ [horizon/2, horizon]`.
pub fn omega_alpha_decay(g: &Generator, alpha: f64, cfg: &FractionalConfig, horizon: f64) -> Result<DecayFit> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::Config(format!("horizon must be positive, got {horizon}")));
    }
    let cfg = FractionalConfig { alpha, ..*cfg };
    let smoothing = fractional_power(g, &cfg, PowerSign::Negative)?;
    let ts: Vec<f64> = (0..=40).map(|k| 0.5 * horizon * (1.0 + k as f64 / 40.0)).collect();
    let samples = ts
        .iter()
        .map(|&t| Ok((t, g.semigroup_log_norm(t, &smoothing)?)))
        .collect::<Result<Vec<_>>>()?;
    let design = DMatrix::from_fn(samples.len(), 3, |i, j| match j {
        0 => 1.0,
        1 => samples[i].0.ln(),
        _ => samples[i].0,
    });
    let rhs = DVector::from_iterator(samples.len(), samples.iter().map(|s| s.1));
    let coef = design
        .svd(true, true)
        .solve(&rhs, 1e-12)
        .map_err(|e| Error::Numerical(format!("decay fit failed: {e}")))?;
    Ok(DecayFit {
        omega: coef[2],
        log_coefficient: coef[1],
        intercept: coef[0],
        samples,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BisectionStep {
    pub omega: f64,
    /// Probe lower bound for the symbol on the line `Re λ = ω`, absent when a
    /// pole was found first.
    pub estimate: Option<f64>,
    /// Largest `‖R(λ)A_ω^{−α}‖` found on the half-plane `Re λ ≥ ω`.
    pub half_plane_peak: f64,
    pub peak_point: C64,
    pub multiplier: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MultiplierBisection {
    pub omega: f64,
    pub trace: Vec<BisectionStep>,
}

/// Decides at one abscissa whether `R(i· + ω)A_ω^{−α}` behaves as a multiplier:
/// first a lattice-plus-compass search of the half-plane `Re λ ≥ ω` (a pole
/// there rules it out), then a probe lower bound on the line itself.
fn multiplier_step(
    g: &Generator,
    smoothing: &CMatrix,
    omega: f64,
    p: f64,
    family: &ProbeFamily,
) -> Result<BisectionStep> {
    let reach = g.norm() + 1.0;
    let log_norm = |x: f64, y: f64| match solve(&shifted(g, c(x, y)), smoothing) {
        Ok(m) => op_norm(&m).ln(),
        Err(_) => f64::INFINITY,
    };
    let (half_plane_peak, peak_point) = if omega <= reach {
        let region = SearchBox {
            x: (omega, reach.max(omega + 0.1)),
            y: (-reach, reach),
        };
        let best = crate::search::maximize_on_box(log_norm, region, 24, 49, 6);
        (best.value.exp(), c(best.x, best.y))
    } else {
        (0.0, c(omega, 0.0))
    };
    if !(half_plane_peak <= MULTIPLIER_BLOW_UP) {
        return Ok(BisectionStep {
            omega,
            estimate: None,
            half_plane_peak,
            peak_point,
            multiplier: false,
        });
    }
    let estimate = match estimate_symbol_norm(
        g.dim(),
        |s| Ok(g.resolvent(c(omega, s))? * smoothing),
        p,
        family,
        50.0,
        &[peak_point.im],
        &[],
    ) {
        Ok(e) => e.lower_bound,
        Err(Error::SpectrumHit { .. }) => f64::INFINITY,
        Err(e) => return Err(e),
    };
    Ok(BisectionStep {
        omega,
        estimate: Some(estimate),
        half_plane_peak,
        peak_point,
        multiplier: estimate <= MULTIPLIER_BLOW_UP,
    })
}

/// Bisection for the infimum of the abscissae `ω` at which
/// `R(i· + ω)A_ω^{−α}` is an `L_p` multiplier. The range must bracket the
/// transition: not a multiplier at `range.0`, a multiplier at `range.1`.
pub fn omega_alpha_multiplier(
    g: &Generator,
    alpha: f64,
    p: f64,
    range: (f64, f64),
    tol: f64,
    family: &ProbeFamily,
) -> Result<MultiplierBisection> {
    let (mut lo, mut hi) = range;
    if !(lo < hi && tol > 0.0 && lo.is_finite() && hi.is_finite()) {
        return Err(Error::Config(format!("bisection needs lo < hi and tol > 0, got [{lo}, {hi}], tol {tol}")));
    }
    let cfg = FractionalConfig::for_generator(g, alpha)?;
    let smoothing = fractional_power(g, &cfg, PowerSign::Negative)?;
    let mut trace = Vec::new();
    let at_lo = multiplier_step(g, &smoothing, lo, p, family)?;
    let at_hi = multiplier_step(g, &smoothing, hi, p, family)?;
    trace.push(at_lo);
    trace.push(at_hi);
    if at_lo.multiplier || !at_hi.multiplier {
        return Err(Error::Bracketing {
            lo,
            hi,
            detail: format!(
                "multiplier verdict {} at lo (peak {:.3e} at {}), {} at hi (peak {:.3e} at {})",
                at_lo.multiplier, at_lo.half_plane_peak, at_lo.peak_point, at_hi.multiplier, at_hi.half_plane_peak, at_hi.peak_point
            ),
        });
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let step = multiplier_step(g, &smoothing, mid, p, family)?;
        trace.push(step);
        if step.multiplier {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(MultiplierBisection { omega: hi, trace })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthReport {
    pub alpha: f64,
    pub strip: (f64, f64),
    /// Sampled `sup ‖R(λ)‖ / (1 + |λ|^α)`.
    pub weighted_resolvent_sup: f64,
    /// Sampled `sup ‖R(λ)A_ω^{−α}‖`.
    pub smoothed_resolvent_sup: f64,
    pub weighted_bounded: bool,
    pub smoothed_bounded: bool,
    pub agree: bool,
}

/// Evaluates both boundedness conditions of the growth lemma on a vertical
/// strip `strip.0 ≤ Re λ ≤ strip.1`: `‖R(λ)‖/(1 + |λ|^α)` and
/// `‖R(λ)A_ω^{−α}‖`. Imaginary parts are sampled linearly where the
/// spectrum lives and logarithmically out to `im_max`; poles are chased by
/// compass refinement. Bounded means below the scan blow-up threshold.
pub fn growth_conditions(g: &Generator, alpha: f64, strip: (f64, f64), im_max: f64) -> Result<GrowthReport> {
    if !(strip.0 <= strip.1 && im_max > 0.0) {
        return Err(Error::Config(format!("invalid strip {strip:?} or im_max {im_max}")));
    }
    let cfg = FractionalConfig::for_generator(g, alpha)?;
    let smoothing = fractional_power(g, &cfg, PowerSign::Negative)?;
    let reach = 2.0 * (g.norm() + 1.0);
    let mut ims: Vec<f64> = lattice((-reach.min(im_max), reach.min(im_max)), 81);
    if im_max > reach {
        for k in 0..=24 {
            let y = reach * (im_max / reach).powf(k as f64 / 24.0);
            ims.push(y);
            ims.push(-y);
        }
    }
    let res = lattice(strip, if strip.0 == strip.1 { 1 } else { 21 });
    let weighted = |x: f64, y: f64| {
        let lambda = c(x, y);
        let sigma = min_singular_value(&shifted(g, lambda));
        if sigma == 0.0 {
            return f64::INFINITY;
        }
        -sigma.ln() - (1.0 + lambda.norm().powf(alpha)).ln()
    };
    let smoothed = |x: f64, y: f64| match solve(&shifted(g, c(x, y)), &smoothing) {
        Ok(m) => op_norm(&m).ln(),
        Err(_) => f64::INFINITY,
    };
    let region = SearchBox {
        x: strip,
        y: (-reach, reach),
    };
    let dx = if res.len() > 1 { res[1] - res[0] } else { 0.1 };
    let sup_of = |f: &dyn Fn(f64, f64) -> f64| {
        let mut pts: Vec<Peak> = res
            .iter()
            .flat_map(|&x| ims.iter().map(move |&y| (x, y)))
            .map(|(x, y)| Peak { x, y, value: f(x, y) })
            .collect();
        pts.sort_by(|a, b| b.value.total_cmp(&a.value));
        let mut best = pts[0];
        let mut g = |x: f64, y: f64| f(x, y);
        for start in pts.iter().take(6) {
            if start.value.is_infinite() {
                break;
            }
            let peak = compass_search(&mut g, *start, (0.5 * dx, 0.05 * reach), &region, 2000);
            if peak.value > best.value {
                best = peak;
            }
        }
        best.value.exp()
    };
    let weighted_resolvent_sup = sup_of(&weighted);
    let smoothed_resolvent_sup = sup_of(&smoothed);
    let weighted_bounded = weighted_resolvent_sup <= SCAN_BLOW_UP;
    let smoothed_bounded = smoothed_resolvent_sup <= SCAN_BLOW_UP;
    Ok(GrowthReport {
        alpha,
        strip,
        weighted_resolvent_sup,
        smoothed_resolvent_sup,
        weighted_bounded,
        smoothed_bounded,
        agree: weighted_bounded == smoothed_bounded,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundsParams {
    pub alpha: f64,
    pub p: f64,
    pub horizon: f64,
    pub scan: ScanGrid,
    pub bisection_tol: f64,
    /// Half-width of the bisection range around the scanned `s_α`.
    pub bisection_half_width: f64,
    pub probes: ProbeFamily,
}

impl BoundsParams {
    pub fn for_generator(g: &Generator, alpha: f64) -> Self {
        Self {
            alpha,
            p: 2.0,
            horizon: 40.0,
            scan: ScanGrid::for_generator(g),
            bisection_tol: 0.01,
            bisection_half_width: 1.0,
            probes: ProbeFamily {
                h: 0.1,
                ..ProbeFamily::default()
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundsReport {
    pub alpha: f64,
    pub s0: f64,
    pub s_alpha: f64,
    pub omega_alpha_decay: f64,
    pub omega_alpha_multiplier: f64,
    /// `ω_α ≥ s_α − 0.05`.
    pub growth_inequality_holds: bool,
    pub scan: SAlphaScan,
    pub decay: DecayFit,
    pub bisection: MultiplierBisection,
}

pub fn bounds_report(g: &Generator, params: &BoundsParams) -> Result<BoundsReport> {
    let alpha = params.alpha;
    let s0 = s_alpha_scan(g, 0.0, &params.scan)?.s_alpha;
    let scan = s_alpha_scan(g, alpha, &params.scan)?;
    let cfg = FractionalConfig::for_generator(g, alpha)?;
    let decay = omega_alpha_decay(g, alpha, &cfg, params.horizon)?;
    let w = params.bisection_half_width;
    let bisection = omega_alpha_multiplier(
        g,
        alpha,
        params.p,
        (scan.s_alpha - w, scan.s_alpha + w),
        params.bisection_tol,
        &params.probes,
    )?;
    Ok(BoundsReport {
        alpha,
        s0,
        s_alpha: scan.s_alpha,
        omega_alpha_decay: decay.omega,
        omega_alpha_multiplier: bisection.omega,
        growth_inequality_holds: decay.omega >= scan.s_alpha - 0.05,
        scan,
        decay,
        bisection,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{identity, real_diag, real_matrix};

    #[test]
    fn diagonal_scan() {
        let g = Generator::new(real_diag(&[-1.0, 2.0])).unwrap();
        let grid = ScanGrid::for_generator(&g);
        for alpha in [0.0, 1.0] {
            let s = s_alpha_scan(&g, alpha, &grid).unwrap();
            assert!((s.s_alpha - 2.0).abs() <= s.spacing, "alpha {alpha}: {}", s.s_alpha);
        }
    }

    #[test]
    fn decay_examples() {
        let g = Generator::new(identity(3) * c(-3.0, 0.0)).unwrap();
        let cfg = FractionalConfig::for_generator(&g, 0.5).unwrap();
        assert!((omega_alpha_decay(&g, 0.5, &cfg, 40.0).unwrap().omega + 3.0).abs() < 0.02);
        let g = Generator::new(real_diag(&[-1.0, 2.0])).unwrap();
        let cfg = FractionalConfig::for_generator(&g, 0.5).unwrap();
        assert!((omega_alpha_decay(&g, 0.5, &cfg, 40.0).unwrap().omega - 2.0).abs() < 0.05);
        let j = Generator::new(real_matrix(&[vec![-1.0, 1.0, 0.0], vec![0.0, -1.0, 1.0], vec![0.0, 0.0, -1.0]])).unwrap();
        let cfg = FractionalConfig::for_generator(&j, 0.0).unwrap();
        assert!((omega_alpha_decay(&j, 0.0, &cfg, 40.0).unwrap().omega + 1.0).abs() < 0.05);
    }

    #[test]
    fn multiplier_bisection() {
        let family = BoundsParams::for_generator(&Generator::new(identity(1)).unwrap(), 0.0).probes;
        let g = Generator::new(real_diag(&[-1.0, 2.0])).unwrap();
        let b = omega_alpha_multiplier(&g, 0.0, 1.0, (1.0, 3.0), 0.01, &family).unwrap();
        assert!((b.omega - 2.0).abs() < 0.1, "{}", b.omega);
        let g = Generator::new(-identity(2)).unwrap();
        let b = omega_alpha_multiplier(&g, 0.0, 1.0, (-2.0, 0.0), 0.01, &family).unwrap();
        assert!((b.omega + 1.0).abs() < 0.1, "{}", b.omega);
        assert!(matches!(
            omega_alpha_multiplier(&g, 0.0, 1.0, (0.0, 1.0), 0.01, &family),
            Err(Error::Bracketing { .. })
        ));
    }

    #[test]
    fn growth_conditions_agree() {
        let g = Generator::new(real_diag(&[-1.0, 2.0])).unwrap();
        let inside = growth_conditions(&g, 0.5, (1.5, 2.5), 1e4).unwrap();
        assert!(!inside.weighted_bounded && !inside.smoothed_bounded);
        let outside = growth_conditions(&g, 0.5, (2.5, 3.5), 1e4).unwrap();
        assert!(outside.weighted_bounded && outside.smoothed_bounded && outside.agree);
    }
}
