//! Acceptance suite. Prints one line per criterion and exits non-zero if any
//! criterion fails. Run with `cargo test --test acceptance`.

use std::error::Error as StdError;
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::process::Command;
use std::time::Instant;

use dichotomy::bounds::{bounds_report, growth_conditions};
use dichotomy::corpus::{gaussian_matrix, hyperbolic_corpus, negative_controls, normal_corpus, rng};
use dichotomy::green::{splitting_projection, verify_green_identities};
use dichotomy::io::MatrixJson;
use dichotomy::linalg::{c, frobenius, identity, op_norm, real_diag};
use dichotomy::multiplier::{
    apply_multiplier, cesaro_resolvent_sum, check_klt_identity, kernel_identity_checks, KernelGrid,
    DEFAULT_SUM_LADDER,
};
use dichotomy::operator_core::{fractional_power, fractional_power_oracle, FractionalConfig, PowerSign};
use dichotomy::perron::{mild_residual, residual_pairs, solve_mild};
use dichotomy::summation::laplace_inversion;
use dichotomy::{
    BoundsParams, CMatrix, CVector, Generator, GridFunction, MultiplierConfig, PerronParams, QuadratureParams,
    TorusFunction, C64,
};
use rand::Rng;
use serde_json::Value;

type Check = Result<(bool, String), Box<dyn StdError>>;

/// `1/(1 − e^{−2π}) − 1/2`, the resolvent sum for `A = −1` by scalar
/// geometric-series inversion (evaluated independently, frozen here).
const SCALAR_RESOLVENT_SUM: f64 = 0.501_870_936_598_660_7;

fn corpus() -> Vec<Generator> {
    hyperbolic_corpus(2024, 20, 8, 0.5, 100.0)
}

fn unit(v: CMatrix) -> CMatrix {
    let n = frobenius(&v);
    v / c(n, 0.0)
}

fn bump(s: f64) -> f64 {
    if s.abs() < 1.0 {
        (-1.0 / (1.0 - s * s)).exp()
    } else {
        0.0
    }
}

fn criterion_1() -> Check {
    let start = Instant::now();
    let params = QuadratureParams::default();
    let (mut dist, mut defect, mut hyperbolic) = (0.0f64, 0.0f64, true);
    for g in corpus() {
        let rep = splitting_projection(&g, &params)?;
        let p = rep.projection.clone().ok_or("no projection for a hyperbolic generator")?;
        let oracle = g.spectral_projection()?;
        dist = dist.max(frobenius(&(&p - &oracle)));
        let pn = op_norm(&p);
        defect = defect.max(frobenius(&(&p * &p - &p)) / (1e-6 * (1.0 + pn * pn)));
        hyperbolic &= rep.is_hyperbolic;
    }
    let secs = start.elapsed().as_secs_f64();
    Ok((
        dist <= 1e-3 && defect <= 1.0 && hyperbolic && secs <= 30.0,
        format!(
            "max |P - P_spec|_F = {dist:.2e} (<= 1e-3), max idempotency defect / 1e-6(1+|P|^2) = {defect:.2e} (<= 1), \
             all hyperbolic = {hyperbolic}, {secs:.1} s (<= 30 s)"
        ),
    ))
}

fn criterion_2() -> Check {
    let mut worst = 0.0f64;
    for g in corpus() {
        let p = g.spectral_projection()?;
        let r = verify_green_identities(&g, &p, &[-2.0, -1.0, -0.25, 0.25, 1.0, 2.0])?;
        worst = worst.max(r.max_relative);
    }
    Ok((worst <= 5e-3, format!("max residual / |T_t| = {worst:.2e} (<= 5e-3)")))
}

fn criterion_3() -> Check {
    let mut r = rng(303);
    let params = QuadratureParams::default();
    let (mut pos, mut zero, mut neg) = (0.0f64, 0.0f64, 0.0f64);
    for g in hyperbolic_corpus(303, 20, 6, 0.0, 1e4) {
        let x = gaussian_matrix(&mut r, 6, 1, 1.0);
        let xn = frobenius(&x);
        let rho = g.spectral()?.abscissa + 1.0;
        let times = [-1.0, 0.0, 0.5, 1.0];
        let f = laplace_inversion(&g, &x, &times, rho, &params)?;
        for (&t, ft) in times.iter().zip(&f) {
            if t > 0.0 {
                let tx = g.semigroup(t)? * &x;
                pos = pos.max(frobenius(&(&ft.value - &tx)) / (1.0 + frobenius(&tx)));
            } else if t == 0.0 {
                zero = zero.max(frobenius(&(&ft.value - &x * c(0.5, 0.0))) / xn);
            } else {
                neg = neg.max(frobenius(&ft.value) / xn);
            }
        }
    }
    Ok((
        pos <= 1e-3 && zero <= 5e-3 && neg <= 5e-3,
        format!(
            "t>0: {pos:.2e} (<= 1e-3), t=0 vs x/2: {zero:.2e} (<= 5e-3), t=-1: {neg:.2e} (<= 5e-3), relative"
        ),
    ))
}

fn criterion_4() -> Check {
    let mut r = rng(404);
    let grid = KernelGrid::default();
    let (mut r1, mut r2, mut r3) = (0.0f64, 0.0f64, 0.0f64);
    for g in normal_corpus(404, 20, 6, 0.5) {
        let delta = g.spectral()?.gap;
        let x = unit(gaussian_matrix(&mut r, 6, 1, 1.0)).column(0).into_owned();
        let y = unit(gaussian_matrix(&mut r, 6, 1, 1.0)).column(0).into_owned();
        let rho = r.gen_range(-0.9..=0.9) * delta;
        let k = kernel_identity_checks(&g, &x, &y, 0.5, rho, &grid)?;
        r1 = r1.max(k.res1);
        r2 = r2.max(k.res2);
        r3 = r3.max(k.res3);
    }
    let worst = r1.max(r2).max(r3);
    Ok((worst <= 1e-3, format!("res1 = {r1:.2e}, res2 = {r2:.2e}, res3 = {r3:.2e} (each <= 1e-3)")))
}

/// `G(lh)` from the eigendecomposition, with the jump midpoint at `l = 0`.
fn green_oracle(g: &Generator, t: f64) -> Result<CMatrix, Box<dyn StdError>> {
    let spec = g.spectral()?;
    Ok(spec.function(|l| {
        let stable = l.re < 0.0;
        if t == 0.0 {
            c(if stable { 0.5 } else { -0.5 }, 0.0)
        } else if t > 0.0 && stable {
            (l * t).exp()
        } else if t < 0.0 && !stable {
            -(l * t).exp()
        } else {
            c(0.0, 0.0)
        }
    })?)
}

fn criterion_5() -> Check {
    let mut r = rng(505);
    let (h, half) = (0.01, 1000usize);
    let m = 2 * half + 1;
    let start = -(half as f64) * h;
    let mut worst = 0.0f64;
    for g in corpus() {
        let n = g.dim();
        let lags: Vec<CMatrix> = (0..2 * m - 1)
            .map(|k| green_oracle(&g, (k as f64 - (m - 1) as f64) * h))
            .collect::<Result<_, _>>()?;
        let cfg = MultiplierConfig::new(&g, 0.0)?;
        for _ in 0..10 {
            let v = unit(gaussian_matrix(&mut r, n, 1, 1.0)).column(0).into_owned();
            let (centre, width, freq) = (r.gen_range(-1.0..1.0), r.gen_range(0.5..2.0), r.gen_range(0.0..3.0));
            let f = GridFunction::from_fn(start, h, m, |t| {
                &v * (c(0.0, freq * t).exp() * bump((t - centre) / width))
            })?;
            let f_l1: f64 = f.samples.iter().map(|s| s.norm()).sum::<f64>() * h;
            let support: Vec<usize> = (0..m).filter(|&k| f.samples[k].norm() > 0.0).collect();
            let mf = apply_multiplier(&g, &cfg, &f)?;
            let mut err = 0.0f64;
            for j in (0..m).step_by(4) {
                let mut acc = CVector::zeros(n);
                for &k in &support {
                    acc += &lags[j + m - 1 - k] * &f.samples[k];
                }
                acc *= c(h, 0.0);
                err = err.max((&mf.samples[j] - acc).norm());
            }
            worst = worst.max(err / f_l1);
        }
    }
    Ok((worst <= 5e-4, format!("max |M_0 f - G*f|_inf / |f|_1 = {worst:.2e} (<= 5e-4), 200 probes")))
}

fn criterion_6() -> Check {
    let mut r = rng(606);
    let mut gens = vec![Generator::new(real_diag(&[-1.0, 2.0]))?, Generator::new(real_diag(&[-1.0]))?];
    gens.extend(corpus());
    let params = PerronParams::default();
    let (mut worst, mut detected) = (0.0f64, f64::INFINITY);
    for g in &gens {
        let n = g.dim();
        let spec = g.spectral()?;
        let half = 2.0 + 6.0 / spec.gap;
        let h = 0.01;
        let m = (2.0 * half / h).round() as usize + 1;
        let v = unit(gaussian_matrix(&mut r, n, 1, 1.0)).column(0).into_owned();
        let f = GridFunction::from_fn(-half, h, m, |t| &v * c(bump(t / 2.0), 0.0))?;
        let sol = solve_mild(g, &f, &params)?;
        worst = worst.max(sol.max_residual / sol.threshold * params.tolerance);
        let p = g.spectral_projection()?;
        let q = identity(n) - &p;
        let branch = if frobenius(&q) > 1e-8 { q } else { p };
        let mut wrong = sol.u.clone();
        let mut bumped = Vec::with_capacity(m);
        for j in 0..m {
            let t = wrong.time(j);
            let w = bump((t - 1.0) / 1.5);
            let y = if w > 0.0 { (g.semigroup(t - 1.0)? * &branch) * &v * c(w, 0.0) } else { CVector::zeros(n) };
            bumped.push(y);
        }
        let scale = bumped.iter().map(|y| y.norm()).fold(0.0, f64::max);
        for (u, y) in wrong.samples.iter_mut().zip(&bumped) {
            *u += y / c(scale, 0.0);
        }
        let pairs = residual_pairs(&sol.u, &params);
        detected = detected.min(mild_residual(g, &wrong, &f, &pairs)?);
    }
    Ok((
        worst <= 5e-4 && detected >= 0.1,
        format!(
            "max residual / |g|_inf = {worst:.2e} (<= 5e-4), smallest wrong-branch residual = {detected:.2e} (>= 0.1)"
        ),
    ))
}

fn criterion_7() -> Check {
    let mut r = rng(707);
    let (mut klt, mut ident) = (0.0f64, 0.0f64);
    for g in corpus() {
        let n = g.dim();
        let coeffs = gaussian_matrix(&mut r, n, 17, 1.0);
        let f = TorusFunction::new(8, (0..17).map(|k| coeffs.column(k).into_owned()).collect())?;
        let rep = check_klt_identity(&g, &f)?;
        klt = klt.max(rep.residual / rep.f_norm);
        let x = unit(gaussian_matrix(&mut r, n, 1, 1.0));
        let sum = cesaro_resolvent_sum(&g, &x, &DEFAULT_SUM_LADDER, 1e-3)?;
        ident = ident.max(sum.identity_residual);
    }
    let scalar = Generator::new(real_diag(&[-1.0]))?;
    let s = cesaro_resolvent_sum(&scalar, &identity(1), &DEFAULT_SUM_LADDER, 1e-3)?;
    let value: C64 = s.value[(0, 0)];
    let scalar_err = (value - c(SCALAR_RESOLVENT_SUM, 0.0)).norm();
    Ok((
        klt <= 1e-5 && ident <= 1e-3 && scalar_err <= 1e-3,
        format!(
            "KLT residual / |f| = {klt:.2e} (<= 1e-5), sum identity = {ident:.2e} (<= 1e-3), \
             scalar sum {:.6} vs 0.501871 off by {scalar_err:.2e} (<= 1e-3)",
            value.re
        ),
    ))
}

fn criterion_8() -> Check {
    let (mut methods, mut integer, mut disagreements, mut checked) = (0.0f64, 0.0f64, 0usize, 0usize);
    for g in corpus() {
        let spec = g.spectral()?;
        if spec.diagonalizable {
            for alpha in [0.25, 0.5, 0.75] {
                let cfg = FractionalConfig::for_generator(&g, alpha)?;
                for sign in [PowerSign::Negative, PowerSign::Positive] {
                    let a = fractional_power(&g, &cfg, sign)?;
                    let b = fractional_power_oracle(&g, &cfg, sign)?;
                    methods = methods.max(frobenius(&(&a - &b)) / frobenius(&b));
                }
            }
        }
        let cfg = FractionalConfig::for_generator(&g, 1.0)?;
        let inv = fractional_power(&g, &cfg, PowerSign::Negative)?;
        let res = g.resolvent(c(cfg.omega, 0.0))?;
        integer = integer.max(frobenius(&(&inv + &res)) / frobenius(&res));
        let s = spec.abscissa;
        let lowest = spec.eigenvalues.iter().map(|l| l.re).fold(f64::INFINITY, f64::min);
        for alpha in [0.0, 0.5, 1.0] {
            for strip in [(s + 0.25, s + 1.25), (lowest - 0.5, s)] {
                checked += 1;
                if !growth_conditions(&g, alpha, strip, 1e3)?.agree {
                    disagreements += 1;
                }
            }
        }
    }
    Ok((
        methods <= 1e-6 && integer <= 1e-8 && disagreements == 0,
        format!(
            "contour vs eigendecomposition = {methods:.2e} (<= 1e-6), alpha = 1 vs -R(omega) = {integer:.2e} \
             (<= 1e-8), growth verdicts disagree on {disagreements}/{checked} strips (0 allowed)"
        ),
    ))
}

fn criterion_9() -> Check {
    let start = Instant::now();
    let (mut mult, mut decay, mut inequality) = (0.0f64, 0.0f64, f64::INFINITY);
    for (k, g) in corpus().iter().enumerate() {
        let s = g.spectral()?.abscissa;
        for alpha in [0.0, 0.5, 1.0] {
            let mut params = BoundsParams::for_generator(g, alpha);
            params.probes.seed = 900 + k as u64;
            let rep = bounds_report(g, &params)?;
            mult = mult.max((rep.omega_alpha_multiplier - s).abs());
            decay = decay.max((rep.omega_alpha_decay - s).abs());
            inequality = inequality
                .min(rep.omega_alpha_decay - rep.s_alpha)
                .min(rep.omega_alpha_multiplier - rep.s_alpha);
        }
    }
    let secs = start.elapsed().as_secs_f64();
    Ok((
        mult <= 0.1 && decay <= 0.1 && inequality >= -0.05 && secs <= 180.0,
        format!(
            "max |omega_mult - s(A)| = {mult:.3} (<= 0.1), max |omega_decay - s(A)| = {decay:.3} (<= 0.1), \
             min omega - s_alpha = {inequality:.3} (>= -0.05), {secs:.1} s (<= 180 s)"
        ),
    ))
}

fn cli(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_dichotomy")).args(args).output().expect("cli binary runs")
}

fn criterion_10() -> Check {
    let dir: PathBuf = std::env::temp_dir().join(format!("dichotomy-acceptance-{}", std::process::id()));
    fs::create_dir_all(&dir)?;
    let mut failures = Vec::new();
    let controls = negative_controls(1010);
    for (name, g) in &controls {
        let input = dir.join(format!("{name}.json"));
        fs::write(&input, serde_json::to_string(&MatrixJson::from_matrix(g.matrix()))?)?;
        let input = input.to_str().ok_or("non-utf8 temp path")?;
        let analyze = cli(&["analyze", "--input", input]);
        let verdict: Value = serde_json::from_slice(&analyze.stdout).unwrap_or(Value::Null);
        if analyze.status.code() != Some(0) || verdict["is_hyperbolic"] != Value::Bool(false) {
            failures.push(format!("{name}: analyze"));
        }
        let out = dir.join(format!("{name}.green.csv"));
        let green = cli(&["green", "--input", input, "--output", out.to_str().unwrap()]);
        let summary: Value = serde_json::from_slice(&green.stdout).unwrap_or(Value::Null);
        let non_convergent = green.status.code() == Some(3) && summary["converged"] == Value::Bool(false);
        let spectrum_hit =
            green.status.code() == Some(2) && String::from_utf8_lossy(&green.stderr).contains("spectrum hit");
        if !(non_convergent || spectrum_hit) {
            failures.push(format!("{name}: green"));
        }
        if cli(&["solve", "--input", input]).status.code() != Some(4) {
            failures.push(format!("{name}: solve"));
        }
        let out = dir.join(format!("{name}.scan.csv"));
        let scan = cli(&["scan", "--input", input, "--output", out.to_str().unwrap()]);
        let summary: Value = serde_json::from_slice(&scan.stdout).unwrap_or(Value::Null);
        if scan.status.code() != Some(0) || summary["blow_up"] != Value::Bool(true) {
            failures.push(format!("{name}: scan"));
        }
    }
    let _ = fs::remove_dir_all(&dir);
    Ok((
        failures.is_empty(),
        if failures.is_empty() {
            format!("{} controls: not hyperbolic, green refused or divergent, solve exit 4, scan blow-up", controls.len())
        } else {
            format!("failed: {}", failures.join(", "))
        },
    ))
}

fn main() {
    let criteria: [(&str, fn() -> Check); 10] = [
        ("projection equivalence", criterion_1),
        ("Green identities", criterion_2),
        ("Laplace inversion", criterion_3),
        ("kernel identities", criterion_4),
        ("multiplier equals convolution", criterion_5),
        ("Perron solver", criterion_6),
        ("discrete identities", criterion_7),
        ("fractional powers", criterion_8),
        ("bounds collapse", criterion_9),
        ("negative controls", criterion_10),
    ];
    let only: Option<usize> = std::env::var("ACCEPTANCE_ONLY").ok().and_then(|s| s.parse().ok());
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        if only.is_some_and(|o| o != k + 1) {
            continue;
        }
        let start = Instant::now();
        let (pass, detail) = match catch_unwind(AssertUnwindSafe(check)) {
            Ok(Ok(result)) => result,
            Ok(Err(e)) => (false, format!("error: {e}")),
            Err(_) => (false, "panicked".into()),
        };
        if !pass {
            failed += 1;
        }
        println!(
            "criterion {:>2} {} {name}: {detail} [{:.1} s]",
            k + 1,
            if pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
