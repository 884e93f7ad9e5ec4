//! Sine integral `Si(x) = ∫_0^x sin(s)/s ds`.

use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;

const SERIES_LIMIT: f64 = 4.0;

pub fn sine_integral(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x < 0.0 {
        return -sine_integral(-x);
    }
    if x.is_infinite() {
        return FRAC_PI_2;
    }
    if x <= SERIES_LIMIT {
        series(x)
    } else {
        FRAC_PI_2 + exponential_integral_imaginary(x).im
    }
}

/// `∫_x^∞ sin(s)/s ds` for `x ≥ 0`, computed without cancellation for large `x`.
pub fn sine_integral_tail(x: f64) -> f64 {
    if x <= SERIES_LIMIT {
        FRAC_PI_2 - series(x)
    } else {
        -exponential_integral_imaginary(x).im
    }
}

fn series(x: f64) -> f64 {
    // Si(x) = sum_k (-1)^k x^(2k+1) / ((2k+1) (2k+1)!)
    let x2 = x * x;
    let mut term = x; // x^(2k+1)/(2k+1)!
    let mut sum = x;
    let mut k = 0usize;
    loop {
        k += 1;
        let m = (2 * k) as f64;
        term *= -x2 / (m * (m + 1.0));
        let add = term / (m + 1.0);
        sum += add;
        if add.abs() < 1e-17 * sum.abs() || k > 60 {
            break;
        }
    }
    sum
}

/// `E1(ix)` for `x > 2` by the modified Lentz continued fraction.
fn exponential_integral_imaginary(x: f64) -> Complex64 {
    let tiny = 1e-300;
    let mut b = Complex64::new(1.0, x);
    let mut cc = Complex64::new(1.0 / tiny, 0.0);
    let mut d = Complex64::new(1.0, 0.0) / b;
    let mut h = d;
    for i in 1..200 {
        let a = -((i * i) as f64);
        b += Complex64::new(2.0, 0.0);
        d = Complex64::new(1.0, 0.0) / (d * a + b);
        cc = b + Complex64::new(a, 0.0) / cc;
        let del = cc * d;
        h *= del;
        if (del - 1.0).norm() < 1e-16 {
            break;
        }
    }
    Complex64::new(x.cos(), -x.sin()) * h
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{composite, uniform_panels, GaussLegendre};

    fn quadrature_si(x: f64) -> f64 {
        let rule = GaussLegendre::new(20);
        composite(&uniform_panels(0.0, x, 0.5), &rule)
            .into_iter()
            .map(|(s, w)| w * if s == 0.0 { 1.0 } else { s.sin() / s })
            .sum()
    }

    #[test]
    fn matches_quadrature_across_branch_switch() {
        for &x in &[0.1, 1.0, 3.9, 4.0, 4.1, 7.5, 8.0, 12.0, 30.0, 100.0] {
            let expect = quadrature_si(x);
            assert!(
                (sine_integral(x) - expect).abs() < 1e-12,
                "x = {x}: {} vs {expect}",
                sine_integral(x)
            );
        }
    }

    #[test]
    fn odd_and_limits() {
        assert_eq!(sine_integral(0.0), 0.0);
        assert!((sine_integral(-2.5) + sine_integral(2.5)).abs() < 1e-16);
        assert!((sine_integral(1e6) - FRAC_PI_2).abs() < 1e-6);
        assert!((sine_integral(f64::INFINITY) - FRAC_PI_2).abs() == 0.0);
        // reference value Si(1) = 0.946083070367183...
        assert!((sine_integral(1.0) - 0.946_083_070_367_183_0).abs() < 1e-15);
    }

    #[test]
    fn tail_is_complement() {
        for &x in &[0.5, 3.0, 6.0, 50.0] {
            assert!((sine_integral_tail(x) + sine_integral(x) - FRAC_PI_2).abs() < 1e-14);
        }
    }
}
