//! Cesàro (C,1) summation of oscillatory integrals over the real line.
//!
//! The Fejér mean `(1/2π) ∫_{-N}^{N} f(s) e^{ist} (1 − |s|/N) ds` is evaluated
//! with the trapezoid rule on a uniform lattice. A refinement ladder of
//! `(S, h, N)` triples gives the convergence verdict; all ladder steps sit on
//! sub-lattices of the finest one, so the integrand is sampled only once.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, frobenius, CMatrix};
use crate::operator_core::Generator;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LadderStep {
    /// Integration range `|s| ≤ S`.
    pub truncation: f64,
    pub h: f64,
    pub fejer_n: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureParams {
    pub ladder: Vec<LadderStep>,
    /// Relative tolerance between the last two ladder values.
    pub tolerance: f64,
}

impl Default for QuadratureParams {
    fn default() -> Self {
        Self::from_final(4000.0, 0.05, 4000.0)
    }
}

impl QuadratureParams {
    /// Three-step ladder ending at `(S, h, N)`:
    /// `(S/4, 2h, N/4)`, `(S/2, 2h, N/2)`, `(S, h, N)`.
    pub fn from_final(truncation: f64, h: f64, fejer_n: f64) -> Self {
        let step = |k: f64, hh: f64| LadderStep {
            truncation: truncation / k,
            h: hh,
            fejer_n: fejer_n / k,
        };
        Self {
            ladder: vec![step(4.0, 2.0 * h), step(2.0, 2.0 * h), step(1.0, h)],
            tolerance: 1e-3,
        }
    }

    pub fn single(truncation: f64, h: f64, fejer_n: f64) -> Self {
        Self {
            ladder: vec![LadderStep { truncation, h, fejer_n }],
            tolerance: 1e-3,
        }
    }

    pub fn finest(&self) -> LadderStep {
        *self.ladder.last().expect("validated ladder is nonempty")
    }

    pub fn validate(&self) -> Result<()> {
        if self.ladder.is_empty() {
            return Err(Error::Config("quadrature ladder is empty".into()));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::Config(format!("ladder tolerance must be positive, got {}", self.tolerance)));
        }
        let fine = self.min_h();
        for (k, st) in self.ladder.iter().enumerate() {
            if !(st.h > 0.0 && st.truncation > 0.0 && st.fejer_n > 0.0) {
                return Err(Error::Config(format!("ladder step {k} has a non-positive parameter: {st:?}")));
            }
            if st.fejer_n > st.truncation * (1.0 + 1e-12) {
                return Err(Error::Config(format!(
                    "ladder step {k}: Fejer parameter N = {} exceeds truncation S = {}",
                    st.fejer_n, st.truncation
                )));
            }
            let ratio = st.h / fine;
            if (ratio - ratio.round()).abs() > 1e-9 * ratio {
                return Err(Error::Config(format!(
                    "ladder step {k}: spacing {} is not a multiple of the finest spacing {fine}",
                    st.h
                )));
            }
        }
        for (k, w) in self.ladder.windows(2).enumerate() {
            if w[1].truncation < w[0].truncation || w[1].fejer_n < w[0].fejer_n {
                return Err(Error::Config(format!("ladder must increase in S and N (step {})", k + 1)));
            }
        }
        Ok(())
    }

    /// Spacing bound `h ≤ min(0.1, π/(4 t_max))` for resolving `e^{ist}`.
    pub fn validate_for_times(&self, times: &[f64]) -> Result<()> {
        self.validate()?;
        let t_max = times.iter().fold(0.0f64, |m, t| m.max(t.abs()));
        let limit = if t_max > 0.0 { 0.1f64.min(std::f64::consts::PI / (4.0 * t_max)) } else { 0.1 };
        let coarsest = self.ladder.iter().map(|s| s.h).fold(0.0, f64::max);
        if coarsest > limit * (1.0 + 1e-12) {
            return Err(Error::Config(format!(
                "grid spacing {coarsest} too coarse for |t| up to {t_max} (limit {limit})"
            )));
        }
        Ok(())
    }

    fn min_h(&self) -> f64 {
        self.ladder.iter().map(|s| s.h).fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CesaroResult {
    pub value: CMatrix,
    pub converged: bool,
    /// Norm of the difference between the last two ladder values.
    pub residual: f64,
    pub ladder: Vec<CMatrix>,
}

impl CesaroResult {
    pub(crate) fn from_ladder(ladder: Vec<CMatrix>, tolerance: f64, scale: f64) -> Self {
        let value = ladder.last().cloned().expect("nonempty ladder");
        let (converged, residual) = if ladder.len() < 2 {
            (false, f64::INFINITY)
        } else {
            let r = frobenius(&(&ladder[ladder.len() - 1] - &ladder[ladder.len() - 2]));
            let finite = r.is_finite() && value.iter().all(|z| z.re.is_finite() && z.im.is_finite());
            (finite && r <= tolerance * (frobenius(&value) + scale), r)
        };
        Self {
            value,
            converged,
            residual,
            ladder,
        }
    }

    pub fn scaled(mut self, factor: f64) -> Self {
        let f = c(factor, 0.0);
        self.value *= f;
        for v in &mut self.ladder {
            *v *= f;
        }
        self.residual *= factor.abs();
        self
    }
}

/// `(1/2π) Σ h (1 − |s_j|/N) f(s_j) e^{i s_j t}` over samples on a uniform grid
/// covering `[−N, N]`.
pub fn fejer_weighted_integral(nodes: &[f64], values: &[CMatrix], t: f64, fejer_n: f64) -> Result<CMatrix> {
    if nodes.len() != values.len() || nodes.len() < 2 {
        return Err(Error::Input(format!(
            "need at least two samples with matching nodes, got {} nodes and {} values",
            nodes.len(),
            values.len()
        )));
    }
    let h = nodes[1] - nodes[0];
    if !(h > 0.0) {
        return Err(Error::Input("sample nodes must increase".into()));
    }
    for (k, w) in nodes.windows(2).enumerate() {
        if ((w[1] - w[0]) - h).abs() > 1e-6 * h {
            return Err(Error::Input(format!("grid is not uniform at node {}", k + 1)));
        }
    }
    let slack = 1e-9 * h;
    if nodes[0] > -fejer_n + slack || *nodes.last().unwrap() < fejer_n - slack {
        return Err(Error::Input(format!(
            "grid [{}, {}] does not cover [-{fejer_n}, {fejer_n}]",
            nodes[0],
            nodes.last().unwrap()
        )));
    }
    let (r, k) = values[0].shape();
    let mut acc = CMatrix::zeros(r, k);
    for (&s, f) in nodes.iter().zip(values) {
        let w = 1.0 - s.abs() / fejer_n;
        if w <= 0.0 {
            continue;
        }
        acc += f * (c(0.0, s * t).exp() * (h * w));
    }
    Ok(acc / c(TAU, 0.0))
}

/// Evaluates the Fejér mean along the ladder at each time in `times`.
///
/// `scale` sets the absolute floor of the convergence test; pass the norm of
/// the data the integrand acts on.
pub fn cesaro_ladder<F>(source: F, times: &[f64], params: &QuadratureParams, scale: f64) -> Result<Vec<CesaroResult>>
where
    F: FnMut(f64) -> Result<CMatrix>,
{
    params.validate_for_times(times)?;
    let ladders = accumulate(source, times, params)?;
    Ok(ladders
        .into_iter()
        .map(|l| CesaroResult::from_ladder(l, params.tolerance, scale))
        .collect())
}

/// Per time, the list of ladder values.
fn accumulate<F>(mut source: F, times: &[f64], params: &QuadratureParams) -> Result<Vec<Vec<CMatrix>>>
where
    F: FnMut(f64) -> Result<CMatrix>,
{
    let fine = params.min_h();
    let strides: Vec<i64> = params.ladder.iter().map(|s| (s.h / fine).round() as i64).collect();
    let reach = params
        .ladder
        .iter()
        .map(|s| s.fejer_n.min(s.truncation))
        .fold(0.0, f64::max);
    let jmax = (reach / fine).floor() as i64;
    let mut out: Vec<Vec<CMatrix>> = Vec::new();
    let mut shape = None;
    for j in -jmax..=jmax {
        let s = j as f64 * fine;
        let active: Vec<(usize, f64)> = params
            .ladder
            .iter()
            .enumerate()
            .filter(|(k, _)| j % strides[*k] == 0)
            .filter_map(|(k, st)| {
                let limit = st.fejer_n.min(st.truncation);
                let w = 1.0 - s.abs() / st.fejer_n;
                (s.abs() < limit && w > 0.0).then_some((k, st.h * w))
            })
            .collect();
        if active.is_empty() {
            continue;
        }
        let f = source(s)?;
        if shape.is_none() {
            shape = Some(f.shape());
            let (r, k) = f.shape();
            out = times
                .iter()
                .map(|_| vec![CMatrix::zeros(r, k); params.ladder.len()])
                .collect();
        }
        for (ti, &t) in times.iter().enumerate() {
            let phase = c(0.0, s * t).exp();
            let fp = &f * phase;
            for &(k, w) in &active {
                out[ti][k] += &fp * c(w / TAU, 0.0);
            }
        }
    }
    if out.is_empty() {
        return Err(Error::Config("ladder contains no interior lattice points".into()));
    }
    Ok(out)
}

/// Fejér means at `t` for each `N` in `fejer_n`, integrated with Gauss–Legendre
/// panels instead of a uniform lattice.
///
/// Meant for non-oscillatory integrands (`t = 0`), where the `O(ln N / N)`
/// Fejér bias calls for `N` far beyond what a uniform lattice can afford.
/// `positive_breaks` are the panel breakpoints on `[0, N_max]`; they are
/// mirrored to the negative axis and must contain every ladder `N`.
pub fn fejer_ladder_graded<F>(
    mut source: F,
    t: f64,
    positive_breaks: &[f64],
    fejer_n: &[f64],
    order: usize,
    tolerance: f64,
    scale: f64,
) -> Result<CesaroResult>
where
    F: FnMut(f64) -> Result<CMatrix>,
{
    if fejer_n.is_empty() || positive_breaks.first() != Some(&0.0) {
        return Err(Error::Config("graded ladder needs breakpoints from 0 and at least one N".into()));
    }
    for &n in fejer_n {
        if !positive_breaks.iter().any(|&b| b == n) {
            return Err(Error::Config(format!("Fejer parameter {n} is not a panel breakpoint")));
        }
    }
    let rule = crate::quadrature::GaussLegendre::new(order);
    let nodes = crate::quadrature::composite(positive_breaks, &rule);
    let mut ladder: Vec<CMatrix> = Vec::new();
    for (s, w) in nodes {
        for sign in [1.0, -1.0] {
            let x = sign * s;
            let f = source(x)? * (c(0.0, x * t).exp() * (w / TAU));
            if ladder.is_empty() {
                ladder = vec![CMatrix::zeros(f.nrows(), f.ncols()); fejer_n.len()];
            }
            for (acc, &n) in ladder.iter_mut().zip(fejer_n) {
                if s < n {
                    *acc += &f * c(1.0 - s / n, 0.0);
                }
            }
        }
    }
    Ok(CesaroResult::from_ladder(ladder, tolerance, scale))
}

/// `F_t(x) = (1/2πi) (C,1) ∫_{Re λ = ρ} e^{λt} R(λ) x dλ`, evaluated as
/// `e^{ρt}` times the Fejér mean of `R(ρ + is) x`.
///
/// For `ρ > s(A)` the contract is `T_t x` for `t > 0`, `x/2` at `t = 0` and
/// `0` for `t < 0`.
pub fn laplace_inversion(g: &Generator, x: &CMatrix, times: &[f64], rho: f64, params: &QuadratureParams) -> Result<Vec<CesaroResult>> {
    if x.nrows() != g.dim() {
        return Err(Error::DimensionMismatch {
            expected: format!("{} rows", g.dim()),
            found: format!("{} rows", x.nrows()),
        });
    }
    let spec = g.spectral()?;
    let tol = g.eigen_tolerance();
    if let Some(l) = spec.eigenvalues.iter().find(|l| (l.re - rho).abs() <= tol) {
        return Err(Error::SpectrumHit {
            point: c(rho, l.im),
            eigenvalue: *l,
            distance: (l.re - rho).abs(),
        });
    }
    if rho <= spec.abscissa {
        return Err(Error::Config(format!(
            "inversion line Re = {rho} must lie right of the spectral abscissa s(A) = {}",
            spec.abscissa
        )));
    }
    let scale = frobenius(x);
    let results = cesaro_ladder(|s| g.resolvent_apply(c(rho, s), x), times, params, scale)?;
    let limits = line_limit(g, x, times, rho, params)?;
    Ok(results
        .into_iter()
        .zip(limits)
        .zip(times)
        .map(|((mut r, limit), &t)| {
            r.value = limit;
            let f = (rho * t).exp();
            // keep the convergence floor relative to the unscaled data
            let converged = r.converged;
            let mut r = r.scaled(f);
            r.converged = converged;
            r
        })
        .collect())
}

/// The (C,1) limit of `(1/2π)∫ e^{ist} R(ρ + is) x ds` without the Fejér bias.
///
/// With `b = 1 + |ρ|`, `B = A − (ρ − b)I` and `z = is + b`, the resolvent splits as
/// `R = Σ_{j<3} B^j / z^{j+1} + B³ R / z³`. The first three terms invert in
/// closed form to `t^j e^{−bt} / j!` on `t > 0` (the `j = 0` term takes the
/// midpoint `1/2` at `t = 0`). The remainder decays like `|s|^{−4}`, so its
/// integral converges absolutely and is taken with the trapezoid rule on the
/// finest lattice of the ladder.
fn line_limit(g: &Generator, x: &CMatrix, times: &[f64], rho: f64, params: &QuadratureParams) -> Result<Vec<CMatrix>> {
    let b = 1.0 + rho.abs();
    let n = g.dim();
    let shift = CMatrix::identity(n, n) * c(rho - b, 0.0);
    let bm = g.matrix() - shift;
    let bx = &bm * x;
    let b2x = &bm * &bx;
    let b3 = &bm * &bm * &bm;
    let h = params.min_h();
    let reach = params.ladder.iter().map(|s| s.truncation).fold(0.0, f64::max);
    let jmax = (reach / h).floor() as i64;
    let count = (2 * jmax + 1) as usize;
    let chunks = count.div_ceil(512);
    let partial = crate::parallel::try_map(chunks, |ci| -> Result<Vec<CMatrix>> {
        let mut acc = vec![CMatrix::zeros(x.nrows(), x.ncols()); times.len()];
        for idx in ci * 512..((ci + 1) * 512).min(count) {
            let s = (idx as i64 - jmax) as f64 * h;
            let z = c(b, s);
            let rem = &b3 * g.resolvent_apply(c(rho, s), x)? * (c(h / TAU, 0.0) / (z * z * z));
            for (a, &t) in acc.iter_mut().zip(times) {
                *a += &rem * c(0.0, s * t).exp();
            }
        }
        Ok(acc)
    })?;
    Ok(times
        .iter()
        .enumerate()
        .map(|(ti, &t)| {
            let mut v = partial.iter().fold(CMatrix::zeros(x.nrows(), x.ncols()), |a, p| a + &p[ti]);
            let e = (-b * t).exp();
            if t > 0.0 {
                v += x * c(e, 0.0) + &bx * c(t * e, 0.0) + &b2x * c(t * t * e / 2.0, 0.0);
            } else if t == 0.0 {
                v += x * c(0.5, 0.0);
            }
            v
        })
        .collect())
}
