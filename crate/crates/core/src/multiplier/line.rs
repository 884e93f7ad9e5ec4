//! The resolvent multiplier `M_ρ f = [R(i· + ρ) f̂]^∨` on a sampled line.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::corpus::rng;
use crate::error::{Error, Result};
use crate::linalg::{c, op_norm, pairing, to_column, CMatrix, CVector, C64};
use crate::operator_core::Generator;
use crate::parallel::try_map;
use crate::search::{compass_search, Peak, SearchBox};

use super::grid::{lp_norm, GridFunction};
use super::transform::{frequency_grid, inverse_onto, transform, Direction};

/// Fraction of the gap used for the default band half-width `ρ_0`.
pub const RHO0_FRACTION: f64 = 0.9;

/// Largest padded FFT length the line operators will allocate.
const MAX_FFT_LEN: usize = 1 << 22;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MultiplierConfig {
    pub rho: f64,
    pub rho0: f64,
    /// Zero padding (time units) on each side before transforming.
    /// Defaults to `30/(δ − |ρ|)`, capped at 2000.
    pub padding: Option<f64>,
}

impl MultiplierConfig {
    /// `ρ_0 = 0.9 δ`, validated against `g`.
    pub fn new(g: &Generator, rho: f64) -> Result<Self> {
        check_band(g, rho)?;
        let cfg = Self {
            rho,
            rho0: RHO0_FRACTION * g.spectral()?.gap,
            padding: None,
        };
        cfg.validate(g)?;
        Ok(cfg)
    }

    pub fn validate(&self, g: &Generator) -> Result<()> {
        if !self.rho.is_finite() {
            return Err(Error::Config(format!("rho must be finite, got {}", self.rho)));
        }
        check_band(g, self.rho)?;
        let gap = g.spectral()?.gap;
        if !(self.rho0 > 0.0 && self.rho0 < gap) {
            return Err(Error::Config(format!(
                "band half-width rho0 = {} must lie in (0, delta) with delta = {gap}",
                self.rho0
            )));
        }
        if self.rho.abs() >= self.rho0 {
            return Err(Error::Config(format!(
                "|rho| = {} must be below rho0 = {}",
                self.rho.abs(),
                self.rho0
            )));
        }
        if let Some(p) = self.padding {
            if !(p >= 0.0 && p.is_finite()) {
                return Err(Error::Config(format!("padding must be finite and nonnegative, got {p}")));
            }
        }
        Ok(())
    }

    pub fn padding_length(&self, g: &Generator) -> Result<f64> {
        if let Some(p) = self.padding {
            return Ok(p);
        }
        let margin = g.spectral()?.gap - self.rho.abs();
        Ok((30.0 / margin).min(2000.0))
    }
}

/// Refuses a shift `ρ` outside the spectrum-free band `|ρ| < δ`. The reported
/// eigenvalue is one with real part between `0` and `ρ` (inclusive, up to
/// tolerance) when the line crosses the spectrum, and otherwise one attaining
/// `δ = min |Re λ|`, whose strip the line has left.
pub(crate) fn check_band(g: &Generator, rho: f64) -> Result<()> {
    let spec = g.spectral()?;
    let tol = g.eigen_tolerance();
    let (lo, hi) = if rho >= 0.0 { (0.0, rho) } else { (rho, 0.0) };
    let crossed = spec
        .eigenvalues
        .iter()
        .filter(|l| l.re >= lo - tol && l.re <= hi + tol)
        .min_by(|a, b| (a.re - rho).abs().total_cmp(&(b.re - rho).abs()));
    let hit = crossed.or_else(|| {
        (rho.abs() >= spec.gap)
            .then(|| spec.eigenvalues.iter().min_by(|a, b| a.re.abs().total_cmp(&b.re.abs())))
            .flatten()
    });
    match hit {
        Some(&l) => Err(Error::SpectrumHit {
            point: c(rho, l.im),
            eigenvalue: l,
            distance: (l.re - rho).abs(),
        }),
        None => Ok(()),
    }
}

/// The zero-padded grid around `f` and how to cut the original window back out.
struct Padded {
    grid: GridFunction,
    offset: usize,
    len: usize,
}

impl Padded {
    fn new(f: &GridFunction, padding: f64) -> Result<Self> {
        let pad = (padding / f.h).ceil() as usize;
        let total = (f.len() + 2 * pad).next_power_of_two();
        if total > MAX_FFT_LEN {
            return Err(Error::Config(format!(
                "padded grid of {total} points exceeds the limit {MAX_FFT_LEN}; coarsen h or shorten the padding"
            )));
        }
        let mut samples = vec![CVector::zeros(f.dim()); total];
        samples[pad..pad + f.len()].clone_from_slice(&f.samples);
        Ok(Self {
            grid: GridFunction {
                start: f.start - pad as f64 * f.h,
                h: f.h,
                samples,
            },
            offset: pad,
            len: f.len(),
        })
    }

    fn trim(&self, mut out: GridFunction) -> GridFunction {
        out.samples.truncate(self.offset + self.len);
        out.samples.drain(..self.offset);
        out.start = self.grid.start + self.offset as f64 * self.grid.h;
        out
    }
}

/// `[m(·) f̂]^∨` for a matrix symbol `m`, with zero padding against wrap-around.
pub fn apply_symbol<F>(symbol: F, f: &GridFunction, padding: f64) -> Result<GridFunction>
where
    F: Fn(f64) -> Result<CMatrix> + Sync,
{
    let padded = Padded::new(f, padding)?;
    let fhat = transform(&padded.grid, Direction::Forward);
    let values = try_map(fhat.len(), |k| {
        let m = symbol(fhat.start + k as f64 * fhat.h)?;
        if m.ncols() != f.dim() {
            return Err(Error::DimensionMismatch {
                expected: format!("symbol with {} columns", f.dim()),
                found: format!("{}x{}", m.nrows(), m.ncols()),
            });
        }
        Ok(m * &fhat.samples[k])
    })?;
    let out = inverse_onto(
        &GridFunction {
            start: fhat.start,
            h: fhat.h,
            samples: values,
        },
        padded.grid.start,
    );
    Ok(padded.trim(out))
}

/// `M_ρ f`. Every frequency node `ρ + is_k` is checked against the spectrum.
pub fn apply_multiplier(g: &Generator, cfg: &MultiplierConfig, f: &GridFunction) -> Result<GridFunction> {
    cfg.validate(g)?;
    if f.dim() != g.dim() {
        return Err(Error::DimensionMismatch {
            expected: format!("samples of length {}", g.dim()),
            found: format!("length {}", f.dim()),
        });
    }
    let rho = cfg.rho;
    apply_symbol(|s| g.resolvent(c(rho, s)), f, cfg.padding_length(g)?)
}

/// Probe family for sampled operator-norm lower bounds.
///
/// Scalar profiles (Gaussians, Gaussians modulated at the peak frequencies of
/// the symbol, indicator blocks) are tensored with seeded random unit
/// vectors, caller-supplied vectors and top singular vectors of the symbol at
/// its peaks. With `plane_waves` the limiting ratio `‖m(ξ)‖` of ever wider
/// modulated Gaussians at each peak `ξ` is included as well.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeFamily {
    pub seed: u64,
    pub random_vectors: usize,
    pub gaussian_widths: Vec<f64>,
    pub modulated_widths: Vec<f64>,
    pub block_widths: Vec<f64>,
    pub h: f64,
    pub plane_waves: bool,
}

impl Default for ProbeFamily {
    fn default() -> Self {
        Self {
            seed: 0,
            random_vectors: 4,
            gaussian_widths: vec![0.25, 1.0, 4.0],
            modulated_widths: vec![2.0, 8.0],
            block_widths: vec![0.5, 2.0, 8.0],
            h: 0.05,
            plane_waves: true,
        }
    }
}

impl ProbeFamily {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }

    fn support(&self) -> f64 {
        let g = self.gaussian_widths.iter().chain(&self.modulated_widths).fold(0.0f64, |m, &w| m.max(6.0 * w));
        let b = self.block_widths.iter().fold(0.0f64, |m, &w| m.max(0.5 * w));
        g.max(b) + 1.0
    }

    fn validate(&self) -> Result<()> {
        let widths = self.gaussian_widths.iter().chain(&self.modulated_widths).chain(&self.block_widths);
        if !(self.h > 0.0 && self.h.is_finite()) || widths.clone().any(|&w| !(w > 0.0 && w.is_finite())) {
            return Err(Error::Config("probe widths and spacing must be positive and finite".into()));
        }
        if let Some(&w) = self.block_widths.iter().find(|&&w| w < 2.0 * self.h) {
            return Err(Error::Config(format!("indicator block of width {w} is not resolved by h = {}", self.h)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormEstimate {
    /// Largest sampled ratio `‖Mf‖_p / ‖f‖_p`; a lower bound, never the norm.
    pub lower_bound: f64,
    pub attained_by: String,
    pub probes: usize,
    /// Frequency where the symbol norm peaks.
    pub peak_frequency: f64,
    pub peak_symbol_norm: f64,
}

/// Lower bound for the `L_p` norm of `M_ρ` over a [`ProbeFamily`].
pub fn estimate_multiplier_norm(g: &Generator, cfg: &MultiplierConfig, p: f64, family: &ProbeFamily) -> Result<NormEstimate> {
    cfg.validate(g)?;
    let spec = g.spectral()?;
    let hints: Vec<f64> = spec.eigenvalues.iter().map(|l| l.im).collect();
    let vectors: Vec<CVector> = (0..spec.basis.ncols()).map(|j| spec.basis.column(j).into_owned()).collect();
    let rho = cfg.rho;
    estimate_symbol_norm(
        g.dim(),
        |s| g.resolvent(c(rho, s)),
        p,
        family,
        cfg.padding_length(g)?,
        &hints,
        &vectors,
    )
}

/// Generic form of [`estimate_multiplier_norm`] for any matrix symbol with
/// `dim` columns. `hint_frequencies` seed the peak search; `vectors` join
/// the tensor factors.
pub fn estimate_symbol_norm<F>(
    dim: usize,
    symbol: F,
    p: f64,
    family: &ProbeFamily,
    padding: f64,
    hint_frequencies: &[f64],
    vectors: &[CVector],
) -> Result<NormEstimate>
where
    F: Fn(f64) -> Result<CMatrix> + Sync,
{
    if !(p >= 1.0) {
        return Err(Error::Config(format!("L_p exponent must be at least 1, got {p}")));
    }
    family.validate()?;
    let h = family.h;
    let half = family.support();
    let core = (2.0 * half / h).ceil() as usize + 1;
    let pad = (padding / h).ceil() as usize;
    let m = (core + 2 * pad).next_power_of_two().min(MAX_FFT_LEN);
    let start = -((m / 2) as f64) * h;
    let (s0, ds) = frequency_grid(m, h);

    let symbols = try_map(m, |k| symbol(s0 + k as f64 * ds))?;
    let peaks = find_peaks(&symbol, &symbols, s0, ds, hint_frequencies)?;
    let (peak_frequency, peak_symbol_norm) = peaks.first().copied().unwrap_or((0.0, 0.0));

    let mut best = (0.0f64, String::from("none"));
    let mut probes = 0usize;
    let consider = |ratio: f64, label: String, best: &mut (f64, String)| {
        if ratio > best.0 {
            *best = (ratio, label);
        }
    };

    let mut units: Vec<(CVector, String)> = Vec::new();
    let mut rng = rng(family.seed);
    for r in 0..family.random_vectors {
        let v = CVector::from_fn(dim, |_, _| c(rng.sample(StandardNormal), rng.sample(StandardNormal)));
        units.push((v, format!("random vector {r}")));
    }
    for (j, v) in vectors.iter().enumerate() {
        units.push((v.clone(), format!("supplied vector {j}")));
    }
    for &(xi, norm) in &peaks {
        let m_xi = symbol(xi)?;
        if family.plane_waves {
            probes += 1;
            consider(norm, format!("plane wave at s = {xi:.6}"), &mut best);
        }
        if let Some(v) = top_right_singular_vector(&m_xi) {
            units.push((v, format!("top singular vector at s = {xi:.6}")));
        }
    }
    units.retain(|(v, _)| v.norm() > 0.0 && v.len() == dim);
    for (v, _) in &mut units {
        let n = v.norm();
        *v /= c(n, 0.0);
    }

    let mut profiles: Vec<(Vec<C64>, String)> = Vec::new();
    let times: Vec<f64> = (0..m).map(|j| start + j as f64 * h).collect();
    for &w in &family.gaussian_widths {
        profiles.push((times.iter().map(|t| c((-t * t / (2.0 * w * w)).exp(), 0.0)).collect(), format!("gaussian width {w}")));
    }
    for &w in &family.modulated_widths {
        for &(xi, _) in &peaks {
            profiles.push((
                times.iter().map(|t| c(0.0, xi * t).exp() * (-t * t / (2.0 * w * w)).exp()).collect(),
                format!("gaussian width {w} modulated at s = {xi:.6}"),
            ));
        }
    }
    for &w in &family.block_widths {
        profiles.push((
            times.iter().map(|&t| if t.abs() <= 0.5 * w { c(1.0, 0.0) } else { c(0.0, 0.0) }).collect(),
            format!("indicator block width {w}"),
        ));
    }
    let spectra: Vec<(Vec<C64>, f64)> = profiles
        .iter()
        .map(|(phi, _)| {
            let grid = GridFunction {
                start,
                h,
                samples: phi.iter().map(|&z| CVector::from_element(1, z)).collect(),
            };
            let norm = lp_norm(&grid, p);
            let hat = transform(&grid, Direction::Forward);
            (hat.samples.iter().map(|v| v[0]).collect(), norm)
        })
        .collect();

    for (v, vlabel) in &units {
        let images: Vec<CVector> = symbols.iter().map(|s| s * v).collect();
        for ((_, plabel), (phihat, phinorm)) in profiles.iter().zip(&spectra) {
            if *phinorm == 0.0 {
                continue;
            }
            let out = inverse_onto(
                &GridFunction {
                    start: s0,
                    h: ds,
                    samples: images.iter().zip(phihat).map(|(w, &z)| w * z).collect(),
                },
                start,
            );
            probes += 1;
            consider(lp_norm(&out, p) / phinorm, format!("{plabel} x {vlabel}"), &mut best);
        }
    }

    Ok(NormEstimate {
        lower_bound: best.0,
        attained_by: best.1,
        probes,
        peak_frequency,
        peak_symbol_norm,
    })
}

/// Local maxima of `s ↦ ‖m(s)‖₂`: the best grid node and every hint,
/// each refined by a one-dimensional compass search. Sorted by norm, descending.
fn find_peaks<F>(symbol: &F, sampled: &[CMatrix], s0: f64, ds: f64, hints: &[f64]) -> Result<Vec<(f64, f64)>>
where
    F: Fn(f64) -> Result<CMatrix> + Sync,
{
    let frob: Vec<f64> = sampled.iter().map(|m| m.norm()).collect();
    let kbest = frob
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map_or(0, |(k, _)| k);
    let s_end = s0 + (sampled.len() - 1) as f64 * ds;
    let mut starts = vec![s0 + kbest as f64 * ds];
    starts.extend(hints.iter().filter(|s| s.is_finite() && **s >= s0 && **s <= s_end));
    let region = SearchBox {
        x: (s0, s_end),
        y: (0.0, 0.0),
    };
    let mut eval = |s: f64, _: f64| symbol(s).map_or(f64::NAN, |m| op_norm(&m));
    let mut peaks: Vec<(f64, f64)> = Vec::new();
    for s in starts {
        let value = eval(s, 0.0);
        if !value.is_finite() {
            continue;
        }
        let p = compass_search(&mut eval, Peak { x: s, y: 0.0, value }, (ds, 0.0), &region, 200);
        if !peaks.iter().any(|q| (q.0 - p.x).abs() <= 1e-9 * (1.0 + p.x.abs())) {
            peaks.push((p.x, p.value));
        }
    }
    peaks.sort_by(|a, b| b.1.total_cmp(&a.1));
    Ok(peaks)
}

fn top_right_singular_vector(m: &CMatrix) -> Option<CVector> {
    let svd = m.clone().svd(false, true);
    let vt = svd.v_t?;
    let (k, _) = svd.singular_values.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1))?;
    Some(vt.row(k).transpose().map(|z| z.conj()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KvlReport {
    /// `⟨r_ρ, Φ⟩ = ∫ ⟨x*, R(is + ρ)x⟩ Φ(s) ds`.
    pub value: C64,
    /// `‖Φ̌‖₁` from the discrete inverse transform of the samples of `Φ`.
    pub phi_check_l1: f64,
    /// `|⟨r_ρ, Φ⟩| / (‖x‖ ‖x*‖ ‖Φ̌‖₁)`, zero when the denominator vanishes.
    pub ratio: f64,
}

/// Pairs the resolvent matrix element with a scalar test function sampled on
/// an `s`-grid, by the trapezoid rule.
pub fn kvl_functional(g: &Generator, rho: f64, x: &CVector, x_star: &CVector, phi: &GridFunction) -> Result<KvlReport> {
    if phi.dim() != 1 {
        return Err(Error::DimensionMismatch {
            expected: "scalar test function".into(),
            found: format!("samples of length {}", phi.dim()),
        });
    }
    for v in [x, x_star] {
        if v.len() != g.dim() {
            return Err(Error::DimensionMismatch {
                expected: format!("vector of length {}", g.dim()),
                found: format!("length {}", v.len()),
            });
        }
    }
    let spec = g.spectral()?;
    if let Some(&l) = spec.eigenvalues.iter().find(|l| (l.re - rho).abs() <= g.eigen_tolerance()) {
        return Err(Error::SpectrumHit {
            point: c(rho, l.im),
            eigenvalue: l,
            distance: (l.re - rho).abs(),
        });
    }
    let xcol = to_column(x);
    let last = phi.len() - 1;
    let terms = try_map(phi.len(), |j| {
        let z = phi.samples[j][0];
        if z == c(0.0, 0.0) {
            return Ok(c(0.0, 0.0));
        }
        let rx = g.resolvent_apply(c(rho, phi.time(j)), &xcol)?;
        let w = if j == 0 || j == last { 0.5 } else { 1.0 };
        Ok(pairing(x_star, &rx.column(0).into_owned()) * z * w)
    })?;
    let value = terms.into_iter().sum::<C64>() * phi.h;
    let phi_check_l1 = lp_norm(&transform(phi, Direction::Inverse), 1.0);
    let denom = x.norm() * x_star.norm() * phi_check_l1;
    Ok(KvlReport {
        value,
        phi_check_l1,
        ratio: if denom > 0.0 { value.norm() / denom } else { 0.0 },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::real_diag;
    use std::f64::consts::PI;

    fn scalar(a: f64) -> Generator {
        Generator::new(real_diag(&[a])).unwrap()
    }

    fn gaussian(start: f64, h: f64, m: usize) -> GridFunction {
        GridFunction::from_fn(start, h, m, |t| CVector::from_element(1, c((-t * t / 2.0).exp(), 0.0))).unwrap()
    }

    #[test]
    fn scalar_multiplier_is_causal_convolution() {
        let g = scalar(-1.0);
        let cfg = MultiplierConfig::new(&g, 0.0).unwrap();
        let f = gaussian(-8.0, 0.01, 1601);
        let u = apply_multiplier(&g, &cfg, &f).unwrap();
        // (e^{-t}H * e^{-t²/2})(t) = sqrt(pi/2) e^{1/2 - t} erfc((1 - t)/sqrt 2)
        for (j, v) in u.samples.iter().enumerate().step_by(50) {
            let t = u.time(j);
            let expect = (PI / 2.0).sqrt() * (0.5 - t).exp() * libm::erfc((1.0 - t) / 2f64.sqrt());
            assert!((v[0] - c(expect, 0.0)).norm() < 1e-4, "t = {t}: {} vs {expect}", v[0]);
        }
    }

    #[test]
    fn zero_in_zero_out_and_band_violation() {
        let g = Generator::new(real_diag(&[-1.0, 2.0])).unwrap();
        let cfg = MultiplierConfig::new(&g, 0.3).unwrap();
        let f = GridFunction::zeros(-1.0, 0.1, 21, 2);
        assert!(apply_multiplier(&g, &cfg, &f).unwrap().max_norm() == 0.0);
        for rho in [1.0, -1.5, 2.5] {
            assert!(matches!(MultiplierConfig::new(&g, rho), Err(Error::SpectrumHit { .. })), "rho = {rho}");
        }
        let bad = MultiplierConfig { rho: 0.5, rho0: 1.2, padding: None };
        assert!(matches!(apply_multiplier(&g, &bad, &f), Err(Error::Config(_))));
    }

    #[test]
    fn scalar_norm_bound() {
        let g = scalar(-1.0);
        let cfg = MultiplierConfig::new(&g, 0.0).unwrap();
        let est = estimate_multiplier_norm(&g, &cfg, 1.0, &ProbeFamily::default()).unwrap();
        assert!(est.lower_bound >= 0.9 && est.lower_bound <= 1.01, "{est:?}");
    }

    #[test]
    fn near_axis_resonance() {
        let g = Generator::new(crate::linalg::diag(&[c(-0.01, 3.0), c(-2.0, 0.0)])).unwrap();
        let cfg = MultiplierConfig::new(&g, 0.0).unwrap();
        let est = estimate_multiplier_norm(&g, &cfg, 2.0, &ProbeFamily::default()).unwrap();
        assert!(est.lower_bound >= 50.0, "{est:?}");
        assert!((est.peak_frequency - 3.0).abs() < 1e-3);
    }

    #[test]
    fn kvl_scalar_gaussian() {
        let g = scalar(-1.0);
        let one = CVector::from_element(1, c(1.0, 0.0));
        let phi = gaussian(-10.0, 0.01, 2001);
        let r = kvl_functional(&g, 0.0, &one, &one, &phi).unwrap();
        let expect = PI * 0.5f64.exp() * libm::erfc(0.5f64.sqrt());
        assert!((r.value - c(expect, 0.0)).norm() < 1e-5, "{r:?}");
        assert!((r.phi_check_l1 - 1.0).abs() < 1e-6);
        let zero = GridFunction::zeros(-1.0, 0.1, 21, 1);
        assert_eq!(kvl_functional(&g, 0.0, &one, &one, &zero).unwrap().value, c(0.0, 0.0));
        assert!(matches!(kvl_functional(&g, -1.0, &one, &one, &phi), Err(Error::SpectrumHit { .. })));
    }
}
