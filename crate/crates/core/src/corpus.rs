//! Seeded test corpora: random hyperbolic generators, normal generators and
//! negative controls with spectrum on or next to the imaginary axis.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::linalg::{c, diag, CMatrix, C64};
use crate::operator_core::Generator;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Complex Gaussian matrix with entry standard deviation `sigma`.
pub fn gaussian_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize, sigma: f64) -> CMatrix {
    let s = sigma / std::f64::consts::SQRT_2;
    CMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        c(s * re, s * im)
    })
}

/// Haar-distributed unitary via QR of a Gaussian matrix with phase correction.
pub fn random_unitary<R: Rng>(rng: &mut R, n: usize) -> CMatrix {
    let qr = gaussian_matrix(rng, n, n, 1.0).qr();
    let (mut q, r) = qr.unpack();
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { c(1.0, 0.0) };
        let col = q.column(j) * phase;
        q.set_column(j, &col);
    }
    q
}

/// Random generators with `δ ≥ min_gap` and `κ(V) ≤ max_kappa`, resampled until accepted.
pub fn hyperbolic_corpus(seed: u64, count: usize, n: usize, min_gap: f64, max_kappa: f64) -> Vec<Generator> {
    let mut rng = rng(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let g = match Generator::new(gaussian_matrix(&mut rng, n, n, 0.8)) {
            Ok(g) => g,
            Err(_) => continue,
        };
        let ok = g
            .spectral()
            .map(|s| s.gap >= min_gap && s.condition <= max_kappa)
            .unwrap_or(false);
        if ok {
            out.push(g);
        }
    }
    out
}

/// Normal generators `U diag(λ) U*` with `|Re λ| ≥ min_gap`.
pub fn normal_corpus(seed: u64, count: usize, n: usize, min_gap: f64) -> Vec<Generator> {
    let mut rng = rng(seed);
    (0..count)
        .map(|_| {
            let lambdas: Vec<C64> = (0..n)
                .map(|_| loop {
                    let re: f64 = rng.gen_range(-3.0..3.0);
                    let im: f64 = rng.gen_range(-4.0..4.0);
                    if re.abs() >= min_gap {
                        break c(re, im);
                    }
                })
                .collect();
            let u = random_unitary(&mut rng, n);
            let a = &u * diag(&lambdas) * u.adjoint();
            Generator::new(a).expect("finite square matrix").eager().expect("spectral data")
        })
        .collect()
}

/// Generators with an eigenvalue on, or within 1e-8 of, the imaginary axis.
pub fn negative_controls(seed: u64) -> Vec<(&'static str, Generator)> {
    let mut rng = rng(seed);
    let rotation = CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(-1.0, 0.0), c(0.0, 0.0)]);
    let pure_imaginary = CMatrix::from_element(1, 1, c(0.0, 0.7));
    let embedded = {
        let d = diag(&[c(0.0, 1.3), c(-1.0, 0.5), c(2.0, -1.0), c(-0.5, -2.0)]);
        let v = CMatrix::identity(4, 4) + gaussian_matrix(&mut rng, 4, 4, 0.3);
        let vi = crate::linalg::inverse(&v).expect("perturbed identity is invertible");
        &v * d * vi
    };
    let jordan = CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
    let near_axis = diag(&[c(1e-9, 2.0), c(-1.0, 0.0)]);
    vec![
        ("rotation", rotation),
        ("pure-imaginary-scalar", pure_imaginary),
        ("embedded-1.3i", embedded),
        ("jordan-at-zero", jordan),
        ("near-axis-1e-9", near_axis),
    ]
    .into_iter()
    .map(|(name, m)| (name, Generator::new(m).expect("finite square matrix")))
    .collect()
}
