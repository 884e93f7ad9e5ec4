use crate::error::{Error, Result};
use crate::linalg::{CVector, C64};

/// Uniformly sampled vector-valued function on `[a, a + (m − 1)h]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    pub start: f64,
    pub h: f64,
    pub samples: Vec<CVector>,
}

impl GridFunction {
    pub fn new(start: f64, h: f64, samples: Vec<CVector>) -> Result<Self> {
        if !(h > 0.0 && h.is_finite() && start.is_finite()) {
            return Err(Error::Input(format!("grid needs finite start and positive spacing, got a = {start}, h = {h}")));
        }
        if samples.len() < 2 {
            return Err(Error::Input(format!("grid needs at least two samples, got {}", samples.len())));
        }
        let dim = samples[0].len();
        if dim == 0 {
            return Err(Error::Input("grid samples must be nonempty vectors".into()));
        }
        for (j, v) in samples.iter().enumerate() {
            if v.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: format!("samples of length {dim}"),
                    found: format!("length {} at index {j}", v.len()),
                });
            }
            if !v.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
                return Err(Error::Input(format!("sample {j} is not finite")));
            }
        }
        Ok(Self { start, h, samples })
    }

    /// Samples `profile(t) · v` at `t_j = start + j h`.
    pub fn from_fn(start: f64, h: f64, m: usize, mut profile: impl FnMut(f64) -> CVector) -> Result<Self> {
        Self::new(start, h, (0..m).map(|j| profile(start + j as f64 * h)).collect())
    }

    pub fn zeros(start: f64, h: f64, m: usize, dim: usize) -> Self {
        Self {
            start,
            h,
            samples: vec![CVector::zeros(dim); m],
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.samples[0].len()
    }

    pub fn time(&self, j: usize) -> f64 {
        self.start + j as f64 * self.h
    }

    pub fn end(&self) -> f64 {
        self.time(self.len() - 1)
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(|j| self.time(j))
    }

    pub fn scaled(&self, factor: C64) -> Self {
        Self {
            start: self.start,
            h: self.h,
            samples: self.samples.iter().map(|v| v * factor).collect(),
        }
    }

    /// Same start, spacing and length (up to rounding in the start).
    pub fn aligned_with(&self, other: &Self) -> bool {
        self.len() == other.len()
            && (self.h - other.h).abs() <= 1e-12 * self.h
            && (self.start - other.start).abs() <= 1e-9 * self.h
    }

    pub fn max_norm(&self) -> f64 {
        lp_norm(self, f64::INFINITY)
    }
}

/// Riemann-sum `L_p` norm, `p = ∞` giving the sample maximum.
pub fn lp_norm(f: &GridFunction, p: f64) -> f64 {
    let norms = f.samples.iter().map(|v| v.norm());
    if p.is_infinite() {
        return norms.fold(0.0, f64::max);
    }
    assert!(p >= 1.0, "L_p norm needs p >= 1, got {p}");
    if p == 1.0 {
        return f.h * norms.sum::<f64>();
    }
    (f.h * norms.map(|x| x.powf(p)).sum::<f64>()).powf(1.0 / p)
}

/// `sup_σ σ · |{t : ‖f(t)‖ ≥ σ}|` for the step function carried by the samples.
pub fn weak_l1_quasinorm(f: &GridFunction) -> f64 {
    let mut norms: Vec<f64> = f.samples.iter().map(|v| v.norm()).collect();
    norms.sort_by(|a, b| b.total_cmp(a));
    norms
        .iter()
        .enumerate()
        .map(|(k, &v)| v * (k + 1) as f64 * f.h)
        .fold(0.0, f64::max)
}
