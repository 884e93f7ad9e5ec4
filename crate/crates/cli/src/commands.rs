use std::fmt::Write as _;
use std::path::Path;

use dichotomy::bounds::bounds_report;
use dichotomy::corpus::{gaussian_matrix, rng};
use dichotomy::green::{green_samples, splitting_projection};
use dichotomy::io::{grid_from_csv, grid_to_csv, parse_generator, torus_to_json};
use dichotomy::linalg::{c, column_to_vector, frobenius};
use dichotomy::multiplier::{annulus_scan, cesaro_resolvent_sum, check_klt_identity, DEFAULT_SUM_LADDER};
use dichotomy::perron::solve_mild;
use dichotomy::summation::laplace_inversion;
use dichotomy::{
    BoundsParams, CMatrix, CVector, CesaroResult, Generator, GridFunction, HyperbolicityReport, PerronParams,
    QuadratureParams, TorusFunction,
};
use serde_json::{json, Value};

use crate::config::{Command, RunConfig};
use crate::failure::{Context, Failure};
use crate::output::{emit, json, matrix, sibling, write_atomic};

/// Green's function sample times.
const GREEN_TIMES: (f64, f64, usize) = (-4.0, 0.25, 33);
/// Time step of the built-in forcing for `solve`.
const SOLVE_H: f64 = 0.01;
const TORUS_TRUNCATION: usize = 8;
const ANNULUS: (f64, f64, usize, usize) = (0.5, 1.5, 21, 64);

pub fn run(cfg: &RunConfig) -> Result<(), Failure> {
    let g = load_generator(&cfg.input)?;
    match cfg.command {
        Command::Analyze => analyze(&g, cfg),
        Command::Green => green(&g, cfg),
        Command::Project => project(&g, cfg),
        Command::Solve => solve(&g, cfg),
        Command::Bounds => bounds(&g, cfg),
        Command::Torus => torus(&g, cfg),
        Command::Scan => scan(&g, cfg),
    }
}

fn load_generator(path: &Path) -> Result<Generator, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::contract(format!("input file {} must exist and be readable: {e}", path.display())))?;
    parse_generator(&text).during(&format!("generator matrix JSON in {}", path.display()))
}

fn quadrature(cfg: &RunConfig) -> Result<QuadratureParams, Failure> {
    let base = QuadratureParams::default().finest();
    let s = cfg.trunc_s.unwrap_or(base.truncation);
    let n = cfg.fejer_n.unwrap_or(s.min(base.fejer_n));
    let mut q = QuadratureParams::from_final(s, cfg.grid_h.unwrap_or(base.h), n);
    if let Some(t) = cfg.tolerance {
        q.tolerance = t;
    }
    q.validate().during("Cesàro quadrature ladder")?;
    Ok(q)
}

fn opt(x: Option<f64>) -> Value {
    x.map_or(Value::Null, finite)
}

fn finite(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else if x.is_nan() {
        json!("nan")
    } else if x > 0.0 {
        json!("inf")
    } else {
        json!("-inf")
    }
}

fn complex_list(zs: impl IntoIterator<Item = dichotomy::C64>) -> Value {
    Value::Array(zs.into_iter().map(|z| json!([finite(z.re), finite(z.im)])).collect())
}

fn hyperbolicity_json(g: &Generator, r: &HyperbolicityReport) -> Result<Value, Failure> {
    let spec = g.spectral().during("eigendecomposition of the generator")?;
    Ok(json!({
        "is_hyperbolic": r.is_hyperbolic,
        "gap": finite(r.gap),
        "gap_threshold": finite(r.gap_threshold),
        "spectral_abscissa": finite(spec.abscissa),
        "eigenvalues": complex_list(spec.eigenvalues.iter().copied()),
        "eigenbasis_condition": finite(spec.condition),
        "projection": r.projection.as_ref().map_or(Value::Null, matrix),
        "projection_oracle": r.projection_oracle.as_ref().map_or(Value::Null, matrix),
        "idempotency_defect": opt(r.idempotency_defect),
        "cesaro_converged": r.cesaro_converged,
        "cesaro_residual": opt(r.cesaro_residual),
        "discrepancy": opt(r.discrepancy),
        "regularized_discrepancy": opt(r.regularized_discrepancy),
        "dichotomy_constants": r.constants.map_or(Value::Null, |k| json!({"K": finite(k.k), "omega": finite(k.omega)})),
        "green_sup": opt(r.green_sup),
        "provenance": r.provenance.as_str(),
    }))
}

fn analyze(g: &Generator, cfg: &RunConfig) -> Result<(), Failure> {
    let q = quadrature(cfg)?;
    let report = splitting_projection(g, &q).during("splitting projection P = ½I + G(0)")?;
    emit(cfg.output.as_deref(), &json(&hyperbolicity_json(g, &report)?))
}

fn project(g: &Generator, cfg: &RunConfig) -> Result<(), Failure> {
    let q = quadrature(cfg)?;
    let report = splitting_projection(g, &q).during("splitting projection P = ½I + G(0)")?;
    if !report.is_hyperbolic {
        return Err(Failure {
            code: 4,
            message: format!(
                "splitting projection P = ½I + G(0) requires a hyperbolic generator: gap {:.3e} (threshold {:.3e}), \
                 Cesàro converged = {}, idempotency defect = {}",
                report.gap,
                report.gap_threshold,
                report.cesaro_converged,
                report.idempotency_defect.map_or("n/a".into(), |d| format!("{d:.3e}")),
            ),
        });
    }
    let value = json!({
        "projection": report.projection.as_ref().map_or(Value::Null, matrix),
        "projection_oracle": report.projection_oracle.as_ref().map_or(Value::Null, matrix),
        "discrepancy": opt(report.discrepancy),
        "regularized_discrepancy": opt(report.regularized_discrepancy),
        "idempotency_defect": opt(report.idempotency_defect),
        "provenance": report.provenance.as_str(),
    });
    emit(cfg.output.as_deref(), &json(&value))
}

fn green(g: &Generator, cfg: &RunConfig) -> Result<(), Failure> {
    let q = quadrature(cfg)?;
    let (t0, dt, m) = GREEN_TIMES;
    let times: Vec<f64> = (0..m).map(|j| t0 + dt * j as f64).collect();
    q.validate_for_times(&times).during("Cesàro quadrature ladder")?;
    let id = CMatrix::identity(g.dim(), g.dim());
    let results = if cfg.rho == 0.0 {
        dichotomy::green::green_apply(g, &times, &id, &q)
            .during("Green's function by Cesàro-summed resolvent integral along the imaginary axis")?
    } else {
        laplace_inversion(g, &id, &times, cfg.rho, &q)
            .during(&format!("Cesàro-summed Laplace inversion along Re λ = {}", cfg.rho))?
    };
    let csv = green_csv(g.dim(), &times, &results);
    let converged = results.iter().all(|r| r.converged);
    let max_residual = results.iter().map(|r| r.residual).fold(0.0, f64::max);
    let mut summary = json!({
        "rho": cfg.rho,
        "times": m,
        "converged": converged,
        "max_ladder_residual": finite(max_residual),
    });
    if cfg.rho == 0.0 {
        if let Ok(s) = green_samples(g, &times) {
            summary["K_G"] = finite(s.k_g);
            summary["omega_G"] = finite(s.omega_g);
            let oracle = times
                .iter()
                .zip(&results)
                .filter(|(t, _)| **t != 0.0)
                .map(|(t, r)| {
                    let k = s.times.iter().position(|u| u == t).expect("same sample times");
                    frobenius(&(&r.value - &s.values[k]))
                })
                .fold(0.0, f64::max);
            summary["max_regularized_discrepancy"] = finite(oracle);
        }
    }
    side_outputs(cfg, &csv, &summary)?;
    if !converged {
        return Err(Failure::numerical(format!(
            "Cesàro summation of the Green's function did not converge (ladder residual {max_residual:.3e}); \
             the imaginary axis is numerically spectral"
        )));
    }
    Ok(())
}

fn green_csv(n: usize, times: &[f64], results: &[CesaroResult]) -> String {
    let mut out = String::from("t,converged,residual");
    for i in 1..=n {
        for j in 1..=n {
            let _ = write!(out, ",re{i}{j},im{i}{j}");
        }
    }
    out.push('\n');
    for (t, r) in times.iter().zip(results) {
        let _ = write!(out, "{t:e},{},{:e}", r.converged, r.residual);
        for i in 0..n {
            for j in 0..n {
                let z = r.value[(i, j)];
                let _ = write!(out, ",{:e},{:e}", z.re, z.im);
            }
        }
        out.push('\n');
    }
    out
}

/// A table goes to `--output` with the JSON summary on stdout; without
/// `--output` the table goes to stdout and the summary to stderr.
fn side_outputs(cfg: &RunConfig, table: &str, summary: &Value) -> Result<(), Failure> {
    match &cfg.output {
        Some(path) => {
            write_atomic(path, table)?;
            print!("{}", json(summary));
        }
        None => {
            print!("{table}");
            eprint!("{}", json(summary));
        }
    }
    Ok(())
}

fn default_forcing(g: &Generator, h: f64) -> Result<GridFunction, Failure> {
    let gap = g.spectral().during("eigendecomposition of the generator")?.gap;
    let half = (1.0 + 6.0 / gap.max(1e-300)).min(200.0);
    let m = (2.0 * half / h).round() as usize + 1;
    let ones = CVector::from_element(g.dim(), c(1.0, 0.0));
    let bump = |t: f64| if t.abs() < 1.0 { (-1.0 / (1.0 - t * t)).exp() } else { 0.0 };
    GridFunction::from_fn(-half, h, m, |t| &ones * c(bump(t), 0.0)).during("default bump forcing")
}

fn solve(g: &Generator, cfg: &RunConfig) -> Result<(), Failure> {
    let spec = g.spectral().during("eigendecomposition of the generator")?;
    if spec.gap <= g.gap_threshold() {
        return Err(Failure::from_error(
            "bounded mild solution u = G * g requires an exponential dichotomy",
            dichotomy::Error::NotHyperbolic {
                gap: spec.gap,
                threshold: g.gap_threshold(),
            },
        ));
    }
    let forcing = match &cfg.forcing {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::contract(format!("forcing file {} must be readable: {e}", path.display())))?;
            grid_from_csv(&text).during(&format!("forcing grid function in {}", path.display()))?
        }
        None => default_forcing(g, cfg.grid_h.unwrap_or(SOLVE_H))?,
    };
    let mut params = PerronParams::default();
    if let Some(t) = cfg.tolerance {
        params.tolerance = t;
    }
    let sol = solve_mild(g, &forcing, &params).during("bounded mild solution via the multiplier M_0")?;
    let residuals = json!({
        "max_residual": finite(sol.max_residual),
        "threshold": finite(sol.threshold),
        "accepted": sol.accepted,
        "convolution_discrepancy": finite(sol.convolution_discrepancy),
        "forcing_sup": finite(sol.forcing.max_norm()),
        "table": sol.residuals.iter().map(|r| json!({
            "theta": r.theta, "tau": r.tau, "residual": finite(r.residual)
        })).collect::<Vec<_>>(),
    });
    let csv = grid_to_csv(&sol.u);
    let mut summary = residuals.clone();
    summary.as_object_mut().expect("object").remove("table");
    match &cfg.output {
        Some(path) => {
            let table_path = sibling(path, "residuals.json");
            write_atomic(path, &csv)?;
            write_atomic(&table_path, &json(&residuals))?;
            summary["residual_table"] = json!(table_path.display().to_string());
            print!("{}", json(&summary));
        }
        None => {
            print!("{csv}");
            eprint!("{}", json(&residuals));
        }
    }
    if !sol.accepted {
        return Err(Failure::numerical(format!(
            "mild-equation residual {:.3e} exceeds {:.3e}; the solution is not certified",
            sol.max_residual, sol.threshold
        )));
    }
    Ok(())
}

fn bounds(g: &Generator, cfg: &RunConfig) -> Result<(), Failure> {
    let mut params = BoundsParams::for_generator(g, cfg.alpha);
    params.p = cfg.p;
    params.probes.seed = cfg.seed;
    if let Some(t) = cfg.tolerance {
        params.bisection_tol = t;
    }
    let report = bounds_report(g, &params).during("growth and spectral bounds s_α, ω_α")?;
    let value = serde_json::to_value(&report).map_err(|e| Failure::numerical(format!("bounds report: {e}")))?;
    emit(cfg.output.as_deref(), &json(&value))
}

fn seeded_trig_polynomial(dim: usize, seed: u64) -> Result<TorusFunction, Failure> {
    let mut r = rng(seed);
    let coeffs = gaussian_matrix(&mut r, dim, 2 * TORUS_TRUNCATION + 1, 1.0);
    let coeffs = (0..coeffs.ncols()).map(|k| coeffs.column(k).into_owned()).collect();
    TorusFunction::new(TORUS_TRUNCATION, coeffs).during("seeded trigonometric polynomial")
}

fn torus(g: &Generator, cfg: &RunConfig) -> Result<(), Failure> {
    let f = seeded_trig_polynomial(g.dim(), cfg.seed)?;
    let klt = check_klt_identity(g, &f).during("torus identity K f = L_T (I − T_2π) f")?;
    let ladder = match cfg.fejer_n {
        Some(n) if n >= 16.0 => {
            let n = n as usize;
            vec![n / 16, n / 4, n]
        }
        Some(n) => return Err(Failure::contract(format!("--fejer-N for `torus` must be at least 16, got {n}"))),
        None => DEFAULT_SUM_LADDER.to_vec(),
    };
    let x = CMatrix::from_element(g.dim(), 1, c(1.0, 0.0));
    let sum = cesaro_resolvent_sum(g, &x, &ladder, cfg.tolerance.unwrap_or(1e-3))
        .during("Cesàro resolvent sum S = (1/2π)(C,1) Σ R(ik)")?;
    let value = json!({
        "seed": cfg.seed,
        "klt": {
            "residual": finite(klt.residual),
            "f_norm": finite(klt.f_norm),
            "relative_residual": finite(klt.residual / klt.f_norm.max(f64::MIN_POSITIVE)),
            "angles": klt.angles,
            "f": torus_to_json(&f),
        },
        "resolvent_sum": {
            "x": complex_list(column_to_vector(&x).iter().copied()),
            "value": complex_list(column_to_vector(&sum.value).iter().copied()),
            "operator": matrix(&sum.operator),
            "fejer_converged": sum.fejer.converged,
            "fejer_residual": finite(sum.fejer.residual),
            "identity_residual": finite(sum.identity_residual),
            "ladder": ladder,
        },
    });
    emit(cfg.output.as_deref(), &json(&value))
}

fn scan(g: &Generator, cfg: &RunConfig) -> Result<(), Failure> {
    let (r_min, r_max, n_r, n_phi) = ANNULUS;
    let s = annulus_scan(g, r_min, r_max, n_r, n_phi).during("annulus scan of (zI − T_2π)^{-1}")?;
    let mut csv = String::from("r,phi,norm\n");
    for p in &s.table {
        let _ = writeln!(csv, "{:e},{:e},{:e}", p.r, p.phi, p.norm);
    }
    let summary = json!({
        "sup": finite(s.sup),
        "sup_point": {"r": s.sup_point.r, "phi": s.sup_point.phi, "norm": finite(s.sup_point.norm)},
        "blow_up": s.blow_up,
        "radii": [r_min, r_max, n_r],
        "angles": n_phi,
    });
    side_outputs(cfg, &csv, &summary)
}
