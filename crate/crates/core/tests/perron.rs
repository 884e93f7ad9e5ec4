mod common;

use dichotomy::corpus::{hyperbolic_corpus, rng};
use dichotomy::linalg::{c, identity, real_diag};
use dichotomy::perron::{mild_residual, residual_pairs, solve_mild};
use dichotomy::{CVector, Error, Generator, GridFunction, PerronParams};
use rand::Rng;

const H: f64 = 0.01;

fn forcing(g: &Generator, seed: u64, centre: f64) -> GridFunction {
    let n = g.dim();
    let half = 2.0 + 6.0 / g.spectral().unwrap().gap;
    let m = (2.0 * half / H).round() as usize + 1;
    let v = common::unit_vector(seed, n);
    let w = common::unit_vector(seed + 1, n);
    GridFunction::from_fn(-half, H, m, |t| {
        &v * c(common::bump(t, centre, 1.5), 0.0) + &w * c(0.0, common::bump(t, centre + 0.5, 0.7))
    })
    .unwrap()
}

fn sup_diff(a: &GridFunction, b: &GridFunction) -> f64 {
    a.samples.iter().zip(&b.samples).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

#[test]
fn solution_is_linear_in_the_forcing() {
    let params = PerronParams::default();
    for g in hyperbolic_corpus(12, 4, 4, 0.5, 100.0) {
        let f1 = forcing(&g, 1, -0.5);
        let f2 = forcing(&g, 7, 0.8);
        let sum = GridFunction::new(
            f1.start,
            H,
            f1.samples.iter().zip(&f2.samples).map(|(a, b)| a + b * c(-2.0, 0.5)).collect(),
        )
        .unwrap();
        let (u1, u2, us) = (
            solve_mild(&g, &f1, &params).unwrap().u,
            solve_mild(&g, &f2, &params).unwrap().u,
            solve_mild(&g, &sum, &params).unwrap().u,
        );
        let combined = GridFunction::new(
            u1.start,
            H,
            u1.samples.iter().zip(&u2.samples).map(|(a, b)| a + b * c(-2.0, 0.5)).collect(),
        )
        .unwrap();
        assert!(sup_diff(&us, &combined) <= 1e-8 * us.max_norm());
    }
}

#[test]
fn shifting_the_forcing_shifts_the_solution() {
    let params = PerronParams::default();
    for g in hyperbolic_corpus(13, 4, 4, 0.5, 100.0) {
        let f = forcing(&g, 3, 0.0);
        let mut shifted = f.samples.clone();
        shifted.rotate_right(1);
        let fs = GridFunction::new(f.start, H, shifted).unwrap();
        let u = solve_mild(&g, &f, &params).unwrap().u;
        let us = solve_mild(&g, &fs, &params).unwrap().u;
        let err = (1..u.len()).map(|j| (&us.samples[j] - &u.samples[j - 1]).norm()).fold(0.0, f64::max);
        assert!(err <= 1e-6 * u.max_norm(), "{err:.3e}");
    }
}

#[test]
fn perturbed_solutions_are_caught_by_the_residual() {
    // If ‖u + η‖ passes the residual check at tolerance ε, then η must be
    // within 10ε of zero; by linearity that means res(η) ≥ 0.1 ‖η‖_∞.
    let params = PerronParams::default();
    let mut r = rng(14);
    let mut gens = vec![Generator::new(real_diag(&[-1.0, 2.0])).unwrap()];
    gens.extend(hyperbolic_corpus(14, 3, 4, 0.5, 100.0));
    for g in gens {
        let n = g.dim();
        let f = forcing(&g, 5, 0.0);
        let sol = solve_mild(&g, &f, &params).unwrap();
        let pairs = residual_pairs(&sol.u, &params);
        let p = g.spectral_projection().unwrap();
        let q = identity(n) - &p;
        for trial in 0..6 {
            let v = common::unit_vector(r.gen(), n);
            let centre = r.gen_range(-1.0..1.0);
            let width = r.gen_range(0.5..1.5);
            let branch = if trial % 2 == 0 { &p } else { &q };
            let eta: Vec<CVector> = (0..f.len())
                .map(|j| {
                    let t = f.time(j);
                    let w = common::bump(t, centre, width);
                    if w == 0.0 {
                        CVector::zeros(n)
                    } else if trial < 2 {
                        &v * c(w, 0.0)
                    } else {
                        g.semigroup(t - centre).unwrap() * branch * &v * c(w, 0.0)
                    }
                })
                .collect();
            let size = eta.iter().map(|e| e.norm()).fold(0.0, f64::max);
            if size == 0.0 {
                continue;
            }
            let eta = GridFunction::new(f.start, H, eta.into_iter().map(|e| e / c(size, 0.0)).collect()).unwrap();
            let zero = GridFunction::zeros(f.start, H, f.len(), n);
            let res = mild_residual(&g, &eta, &zero, &pairs).unwrap();
            assert!(res >= 0.1, "trial {trial}: residual {res:.3e} for a unit perturbation");
            let perturbed = GridFunction::new(
                f.start,
                H,
                sol.u.samples.iter().zip(&eta.samples).map(|(a, b)| a + b * c(1e-3, 0.0)).collect(),
            )
            .unwrap();
            assert!(mild_residual(&g, &perturbed, &f, &pairs).unwrap() >= 1e-4 - sol.max_residual);
        }
    }
}

#[test]
fn zero_forcing_and_refusals() {
    let params = PerronParams::default();
    let g = Generator::new(real_diag(&[-1.0, 2.0])).unwrap();
    let zero = GridFunction::zeros(-10.0, H, 2001, 2);
    let sol = solve_mild(&g, &zero, &params).unwrap();
    assert_eq!(sol.u.max_norm(), 0.0);
    assert_eq!(sol.max_residual, 0.0);

    let rotation = Generator::new(dichotomy::linalg::real_matrix(&[vec![0.0, 1.0], vec![-1.0, 0.0]])).unwrap();
    assert!(matches!(solve_mild(&rotation, &zero, &params), Err(Error::NotHyperbolic { .. })));

    let edge = GridFunction::from_fn(-3.0, H, 601, |t| CVector::from_element(2, c(common::bump(t, -2.5, 1.0), 0.0))).unwrap();
    assert!(matches!(solve_mild(&g, &edge, &params), Err(Error::Input(_))));

    let short = GridFunction::zeros(-10.0, 0.02, 1001, 2);
    assert!(matches!(mild_residual(&g, &zero, &short, &[(1.0, 0.0)]), Err(Error::Input(_))));
    assert!(matches!(mild_residual(&g, &zero, &zero, &[(0.0, 1.0)]), Err(Error::Input(_))));
}
