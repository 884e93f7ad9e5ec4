//! Operators on functions over `[0, 2π)`: the discrete multiplier `L`, the
//! semigroup convolution `K`, Cesàro sums of `R(ik)` and the annulus
//! operators `U_z = (zI − T_{2π})^{-1}`.

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{c, frobenius, identity, min_singular_value, CMatrix, CVector, C64};
use crate::operator_core::Generator;
use crate::parallel::try_map;
use crate::quadrature::{composite, uniform_panels, GaussLegendre};
use crate::search::{compass_search, lattice, Peak, SearchBox};
use crate::summation::CesaroResult;

/// Trigonometric polynomial `Σ_{|k|≤M} f̂(k) e^{ikθ}` with vector coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct TorusFunction {
    truncation: usize,
    coeffs: Vec<CVector>,
}

impl TorusFunction {
    /// `coeffs[k + M]` is `f̂(k)`.
    pub fn new(truncation: usize, coeffs: Vec<CVector>) -> Result<Self> {
        if truncation == 0 {
            return Err(Error::Input("torus truncation M must be positive".into()));
        }
        if coeffs.len() != 2 * truncation + 1 {
            return Err(Error::DimensionMismatch {
                expected: format!("{} coefficients for M = {truncation}", 2 * truncation + 1),
                found: format!("{}", coeffs.len()),
            });
        }
        let dim = coeffs[0].len();
        if dim == 0 {
            return Err(Error::Input("torus coefficients must be nonempty vectors".into()));
        }
        for (i, v) in coeffs.iter().enumerate() {
            if v.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: format!("coefficients of length {dim}"),
                    found: format!("length {} at k = {}", v.len(), i as i64 - truncation as i64),
                });
            }
            if !v.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
                return Err(Error::Input(format!("coefficient k = {} is not finite", i as i64 - truncation as i64)));
            }
        }
        Ok(Self { truncation, coeffs })
    }

    /// Missing frequencies are zero; keys must satisfy `|k| ≤ M`.
    pub fn from_map(truncation: usize, dim: usize, map: &BTreeMap<i64, CVector>) -> Result<Self> {
        let mut coeffs = vec![CVector::zeros(dim); 2 * truncation + 1];
        for (&k, v) in map {
            if k.unsigned_abs() as usize > truncation {
                return Err(Error::Input(format!("frequency {k} exceeds the truncation M = {truncation}")));
            }
            coeffs[(k + truncation as i64) as usize] = v.clone();
        }
        Self::new(truncation, coeffs)
    }

    pub fn zeros(truncation: usize, dim: usize) -> Self {
        Self {
            truncation,
            coeffs: vec![CVector::zeros(dim); 2 * truncation + 1],
        }
    }

    pub fn truncation(&self) -> usize {
        self.truncation
    }

    pub fn dim(&self) -> usize {
        self.coeffs[0].len()
    }

    pub fn coeff(&self, k: i64) -> &CVector {
        &self.coeffs[(k + self.truncation as i64) as usize]
    }

    /// `(k, f̂(k))` for `k = −M..=M`.
    pub fn iter(&self) -> impl Iterator<Item = (i64, &CVector)> {
        let m = self.truncation as i64;
        self.coeffs.iter().enumerate().map(move |(i, v)| (i as i64 - m, v))
    }

    pub fn eval(&self, theta: f64) -> CVector {
        let mut out = CVector::zeros(self.dim());
        for (k, v) in self.iter() {
            out += v * c(0.0, k as f64 * theta).exp();
        }
        out
    }

    /// Values at `θ_j = 2πj/p`.
    pub fn sample(&self, p: usize) -> Vec<CVector> {
        (0..p).map(|j| self.eval(TAU * j as f64 / p as f64)).collect()
    }

    /// Re-expands samples at `θ_j = 2πj/p` into coefficients `|k| ≤ M`; exact
    /// for trigonometric polynomials of degree `M` once `p ≥ 2M + 1`.
    pub fn from_samples(samples: &[CVector], truncation: usize) -> Result<Self> {
        let p = samples.len();
        if p < 2 * truncation + 1 {
            return Err(Error::Input(format!(
                "{p} samples cannot resolve {} coefficients",
                2 * truncation + 1
            )));
        }
        let dim = samples[0].len();
        let coeffs = (-(truncation as i64)..=truncation as i64)
            .map(|k| {
                let mut acc = CVector::zeros(dim);
                for (j, v) in samples.iter().enumerate() {
                    acc += v * c(0.0, -k as f64 * TAU * j as f64 / p as f64).exp();
                }
                acc / c(p as f64, 0.0)
            })
            .collect();
        Self::new(truncation, coeffs)
    }

    fn map_coeffs(&self, mut f: impl FnMut(i64, &CVector) -> Result<CVector>) -> Result<Self> {
        let coeffs = self.iter().map(|(k, v)| f(k, v)).collect::<Result<Vec<_>>>()?;
        Self::new(self.truncation, coeffs)
    }
}

/// `L_p([0, 2π))` norm from `samples` equispaced values.
pub fn torus_lp_norm(f: &TorusFunction, p: f64, samples: usize) -> f64 {
    let values = f.sample(samples.max(1));
    let norms = values.iter().map(|v| v.norm());
    if p.is_infinite() {
        return norms.fold(0.0, f64::max);
    }
    let w = TAU / samples.max(1) as f64;
    (w * norms.map(|x| x.powf(p)).sum::<f64>()).powf(1.0 / p)
}

/// `(Lf)^(k) = R(ik) f̂(k)`.
pub fn discrete_multiplier(g: &Generator, f: &TorusFunction) -> Result<TorusFunction> {
    check_dim(g, f.dim())?;
    f.map_coeffs(|k, v| Ok(g.resolvent(c(0.0, k as f64))? * v))
}

/// `Kf(θ) = ∫_0^{2π} T_s f((θ − s) mod 2π) ds` at the given angles, by
/// composite Gauss–Legendre quadrature.
pub fn semigroup_convolution_torus(g: &Generator, f: &TorusFunction, thetas: &[f64]) -> Result<Vec<CVector>> {
    check_dim(g, f.dim())?;
    let rule = GaussLegendre::new(16);
    let panels = 8 + 2 * f.truncation();
    let nodes = composite(&uniform_panels(0.0, TAU, TAU / panels as f64), &rule);
    let weighted = try_map(nodes.len(), |i| {
        let (s, w) = nodes[i];
        Ok::<_, Error>((s, g.semigroup(s)? * c(w, 0.0)))
    })?;
    Ok(thetas
        .iter()
        .map(|&theta| {
            let mut acc = CVector::zeros(f.dim());
            for (s, tw) in &weighted {
                acc += tw * f.eval(theta - s);
            }
            acc
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KltReport {
    /// `max_θ ‖Kf(θ) − L(I − T_{2π})f(θ)‖`.
    pub residual: f64,
    /// `max_θ ‖f(θ)‖` over the same angles.
    pub f_norm: f64,
    pub angles: usize,
}

/// Checks `K = L(I − T_{2π})` on `f` at `max(64, 4M + 4)` equispaced angles.
pub fn check_klt_identity(g: &Generator, f: &TorusFunction) -> Result<KltReport> {
    check_dim(g, f.dim())?;
    let p = (4 * f.truncation() + 4).max(64);
    let thetas: Vec<f64> = (0..p).map(|j| TAU * j as f64 / p as f64).collect();
    let lhs = semigroup_convolution_torus(g, f, &thetas)?;
    let defect = identity(g.dim()) - g.semigroup(TAU)?;
    let rhs = discrete_multiplier(g, &f.map_coeffs(|_, v| Ok(&defect * v))?)?;
    let mut residual = 0.0f64;
    let mut f_norm = 0.0f64;
    for (theta, k) in thetas.iter().zip(&lhs) {
        residual = residual.max((k - rhs.eval(*theta)).norm());
        f_norm = f_norm.max(f.eval(*theta).norm());
    }
    Ok(KltReport {
        residual,
        f_norm,
        angles: p,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResolventSum {
    /// Fejér means `(1/2π) Σ_{|k|≤N} (1 − |k|/N) R(ik) x` on the ladder, with
    /// the convergence verdict.
    pub fejer: CesaroResult,
    /// The (C,1) limit `S x` itself.
    pub value: CMatrix,
    /// The operator `S`.
    pub operator: CMatrix,
    /// `‖(½I + S)(I − T_{2π})x − x‖_F`.
    pub identity_residual: f64,
}

pub const DEFAULT_SUM_LADDER: [usize; 3] = [2500, 10_000, 40_000];

/// `S = (1/2π)(C,1) Σ_k R(ik)` applied to the columns of `x`.
///
/// The Fejér means converge like `ln N / N`, too slowly for the identity
/// check once `T_{2π}` has large unstable growth. The limit is therefore also
/// evaluated with the first three terms of `R(ik) = Σ_j B^j/(ik+1)^{j+1} +
/// B³R(ik)/(ik+1)³`, `B = A + I`, summed in closed form:
/// `Σ 1/(ik+1) = π coth π`, `Σ 1/(ik+1)² = π² csch² π`,
/// `Σ 1/(ik+1)³ = π³ csch² π coth π`. The remainder converges absolutely
/// with terms of order `k^{-4}` and is summed plainly.
pub fn cesaro_resolvent_sum(g: &Generator, x: &CMatrix, ladder: &[usize], tolerance: f64) -> Result<ResolventSum> {
    check_dim(g, x.nrows())?;
    let mut ladder = ladder.to_vec();
    ladder.sort_unstable();
    ladder.dedup();
    if ladder.first().map_or(true, |&n| n == 0) {
        return Err(Error::Config("Cesàro ladder needs positive truncations".into()));
    }
    let n_max = *ladder.last().unwrap();
    let n = g.dim();
    let mut b = g.matrix().clone();
    for i in 0..n {
        b[(i, i)] += c(1.0, 0.0);
    }
    let b3 = &b * &b * &b;
    let terms = try_map(n_max + 1, |k| {
        let plus = g.resolvent(c(0.0, k as f64))?;
        if k == 0 {
            return Ok((plus.clone(), CMatrix::zeros(n, n), &b3 * plus * (c(1.0, 0.0))));
        }
        let minus = g.resolvent(c(0.0, -(k as f64)))?;
        let zp = c(1.0, k as f64);
        let zm = c(1.0, -(k as f64));
        let rem = &b3 * (&plus / (zp * zp * zp) + &minus / (zm * zm * zm));
        let pair = &plus + &minus;
        Ok((pair.clone(), pair * c(k as f64, 0.0), rem))
    })?;

    let mut plain = CMatrix::zeros(n, n);
    let mut moment = CMatrix::zeros(n, n);
    let mut remainder = CMatrix::zeros(n, n);
    let mut means = Vec::with_capacity(ladder.len());
    let mut next = 0;
    for (k, (pair, weighted, rem)) in terms.iter().enumerate() {
        plain += pair;
        moment += weighted;
        remainder += rem;
        while next < ladder.len() && ladder[next] == k {
            let nn = k as f64;
            means.push((&plain - &moment / c(nn, 0.0)) * x / c(TAU, 0.0));
            next += 1;
        }
    }
    let fejer = CesaroResult::from_ladder(means, tolerance, frobenius(x));

    let coth = 1.0 / PI.tanh();
    let csch2 = 1.0 / PI.sinh().powi(2);
    let closed = identity(n) * c(PI * coth, 0.0) + &b * c(PI * PI * csch2, 0.0) + &b * &b * c(PI.powi(3) * csch2 * coth, 0.0);
    let operator = (closed + remainder) / c(TAU, 0.0);
    let value = &operator * x;
    let defect = identity(n) - g.semigroup(TAU)?;
    let lhs = (identity(n) * c(0.5, 0.0) + &operator) * defect * x;
    let identity_residual = frobenius(&(lhs - x));
    Ok(ResolventSum {
        fejer,
        value,
        operator,
        identity_residual,
    })
}

/// Norms of `U_z` above this count as blow-up.
pub const ANNULUS_BLOW_UP: f64 = 1e8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AnnulusPoint {
    pub r: f64,
    pub phi: f64,
    /// `‖U_z‖₂`, infinite where `zI − T_{2π}` is exactly singular.
    pub norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnnulusScan {
    pub sup: f64,
    pub sup_point: AnnulusPoint,
    pub blow_up: bool,
    /// One row per lattice point, radii outer, angles inner.
    pub table: Vec<AnnulusPoint>,
}

/// `U_z = (zI − T_{2π})^{-1}`.
pub fn annulus_operator(g: &Generator, z: C64) -> Result<CMatrix> {
    crate::linalg::inverse(&shifted(&g.semigroup(TAU)?, z))
}

fn shifted(t: &CMatrix, z: C64) -> CMatrix {
    identity(t.nrows()) * z - t
}

/// Scans `‖U_z‖` over `z = r e^{iφ}` with `n_radii` radii spanning
/// `[r_min, r_max]` and angles `φ_j = 2π(j + ½)/n_angles`, then refines the
/// largest lattice values by compass search. Exact singularity at a lattice
/// point is an error; the refinement may walk into the spectrum, which is
/// recorded as an infinite norm.
pub fn annulus_scan(g: &Generator, r_min: f64, r_max: f64, n_radii: usize, n_angles: usize) -> Result<AnnulusScan> {
    if !(r_min > 0.0 && r_min <= r_max && r_max.is_finite()) || n_radii == 0 || n_angles == 0 {
        return Err(Error::Config(format!(
            "annulus needs 0 < r_min <= r_max and positive lattice sizes, got [{r_min}, {r_max}], {n_radii} x {n_angles}"
        )));
    }
    let t = g.semigroup(TAU)?;
    let norm_at = |r: f64, phi: f64| {
        let sigma = min_singular_value(&shifted(&t, C64::from_polar(r, phi)));
        if sigma == 0.0 {
            f64::INFINITY
        } else {
            1.0 / sigma
        }
    };
    let radii = lattice((r_min, r_max), n_radii);
    let angles: Vec<f64> = (0..n_angles).map(|j| TAU * (j as f64 + 0.5) / n_angles as f64).collect();
    let mut table = Vec::with_capacity(radii.len() * angles.len());
    for &r in &radii {
        for &phi in &angles {
            let norm = norm_at(r, phi);
            if norm.is_infinite() {
                return Err(Error::Singular(format!(
                    "zI - T_2pi is exactly singular at z = {r} e^(i {phi}); U_z does not exist there"
                )));
            }
            table.push(AnnulusPoint { r, phi, norm });
        }
    }
    let mut order: Vec<usize> = (0..table.len()).collect();
    order.sort_by(|&a, &b| table[b].norm.total_cmp(&table[a].norm));
    let region = SearchBox {
        x: (r_min, r_max),
        y: (0.0, TAU),
    };
    let dr = if n_radii > 1 { (r_max - r_min) / (n_radii - 1) as f64 } else { (r_max - r_min).max(1e-3) };
    let dphi = TAU / n_angles as f64;
    let mut log_norm = |r: f64, phi: f64| norm_at(r, phi).ln();
    let mut sup_point = table[order[0]];
    for &i in order.iter().take(3) {
        let p = table[i];
        let start = Peak {
            x: p.r,
            y: p.phi,
            value: p.norm.ln(),
        };
        let best = compass_search(&mut log_norm, start, (0.5 * dr, 0.5 * dphi), &region, 2000);
        let norm = best.value.exp();
        if norm > sup_point.norm {
            sup_point = AnnulusPoint {
                r: best.x,
                phi: best.y,
                norm,
            };
        }
    }
    Ok(AnnulusScan {
        sup: sup_point.norm,
        sup_point,
        blow_up: sup_point.norm > ANNULUS_BLOW_UP,
        table,
    })
}

fn check_dim(g: &Generator, dim: usize) -> Result<()> {
    if dim != g.dim() {
        return Err(Error::DimensionMismatch {
            expected: format!("vectors of length {}", g.dim()),
            found: format!("length {dim}"),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{real_diag, real_matrix};

    fn constant(dim: usize, m: usize) -> TorusFunction {
        let mut map = BTreeMap::new();
        map.insert(0, CVector::from_element(dim, c(1.0, 0.0)));
        TorusFunction::from_map(m, dim, &map).unwrap()
    }

    #[test]
    fn round_trip() {
        let f = TorusFunction::new(
            2,
            (0..5).map(|k| CVector::from_column_slice(&[c(k as f64, -0.5), c(0.25, k as f64 * 0.1)])).collect(),
        )
        .unwrap();
        let back = TorusFunction::from_samples(&f.sample(7), 2).unwrap();
        for (a, b) in f.iter().zip(back.iter()) {
            assert!((a.1 - b.1).norm() < 1e-12);
        }
    }

    #[test]
    fn scalar_klt() {
        let g = Generator::new(real_diag(&[-1.0])).unwrap();
        let f = constant(1, 1);
        let l = discrete_multiplier(&g, &f).unwrap();
        assert!((l.coeff(0)[0] - c(1.0, 0.0)).norm() < 1e-15);
        let k = semigroup_convolution_torus(&g, &f, &[0.0, 1.0]).unwrap();
        for v in k {
            assert!((v[0] - c(1.0 - (-TAU).exp(), 0.0)).norm() < 1e-12);
        }
        assert!(check_klt_identity(&g, &f).unwrap().residual <= 1e-6);
        assert_eq!(check_klt_identity(&g, &TorusFunction::zeros(3, 1)).unwrap().residual, 0.0);
        let rot = Generator::new(real_matrix(&[vec![0.0, 1.0], vec![-1.0, 0.0]])).unwrap();
        assert!(matches!(discrete_multiplier(&rot, &constant(2, 2)), Err(Error::SpectrumHit { .. })));
    }

    #[test]
    fn scalar_resolvent_sum() {
        let g = Generator::new(real_diag(&[-1.0])).unwrap();
        let s = cesaro_resolvent_sum(&g, &identity(1), &DEFAULT_SUM_LADDER, 1e-3).unwrap();
        let expect = 1.0 / (1.0 - (-TAU).exp()) - 0.5;
        assert!((s.value[(0, 0)] - c(expect, 0.0)).norm() < 1e-10);
        assert!((s.fejer.value[(0, 0)] - c(expect, 0.0)).norm() < 1e-3);
        assert!(s.fejer.converged);
        assert!(s.identity_residual < 1e-10);
    }

    #[test]
    fn diagonal_resolvent_sum_identity() {
        let g = Generator::new(real_diag(&[-1.0, 2.0])).unwrap();
        let x = CMatrix::from_element(2, 1, c(1.0, 0.0));
        let s = cesaro_resolvent_sum(&g, &x, &DEFAULT_SUM_LADDER, 1e-3).unwrap();
        assert!(s.identity_residual <= 1e-3, "{}", s.identity_residual);
        let zero = cesaro_resolvent_sum(&g, &CMatrix::zeros(2, 1), &DEFAULT_SUM_LADDER, 1e-3).unwrap();
        assert_eq!(frobenius(&zero.value), 0.0);
    }

    #[test]
    fn annulus_examples() {
        let g = Generator::new(real_diag(&[-1.0, 2.0])).unwrap();
        let scan = annulus_scan(&g, 0.5, 1.5, 11, 64).unwrap();
        let bound = 1.0 / (0.5 - (-TAU).exp());
        assert!(!scan.blow_up && scan.sup <= bound * (1.0 + 1e-9), "{} vs {bound}", scan.sup);
        assert!(scan.sup >= 0.99 * bound);
        let rot = Generator::new(real_matrix(&[vec![0.0, 1.0], vec![-1.0, 0.0]])).unwrap();
        let scan = annulus_scan(&rot, 0.5, 1.5, 11, 64).unwrap();
        assert!(scan.blow_up);
        assert!((scan.sup_point.r - 1.0).abs() < 1e-3);
        let u = annulus_operator(&Generator::new(real_diag(&[-1.0])).unwrap(), c(2.0, 0.0)).unwrap();
        assert!((u[(0, 0)] - c(1.0 / (2.0 - (-TAU).exp()), 0.0)).norm() < 1e-15);
    }
}
