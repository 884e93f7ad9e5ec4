//! Gauss–Legendre rules and composite panel helpers.

use std::f64::consts::PI;

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = (n + 1) / 2;
        for i in 0..m {
            // Tricomi initial guess, then Newton on P_n.
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() <= 1e-16 * x.abs().max(1.0) {
                    let (_, d) = legendre_with_derivative(n, x);
                    dp = d;
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    /// Nodes and weights mapped to `[a, b]`.
    pub fn on(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(self.weights.iter())
            .map(move |(&x, &w)| (mid + half * x, half * w))
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        self.on(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let n = n as f64;
    let dp = n * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Breakpoints `a = x_0 < ... < x_k = b` with panels of width at most `width`.
pub fn uniform_panels(a: f64, b: f64, width: f64) -> Vec<f64> {
    let count = ((b - a) / width).ceil().max(1.0) as usize;
    (0..=count)
        .map(|i| a + (b - a) * i as f64 / count as f64)
        .collect()
}

/// Breakpoints on `[0, length]` graded geometrically away from zero:
/// `0, first, 2 first, 4 first, ..., length`.
pub fn graded_panels(length: f64, first: f64) -> Vec<f64> {
    let mut points = vec![0.0];
    let mut x = first.min(length);
    while x < length {
        points.push(x);
        x *= 2.0;
    }
    points.push(length);
    points
}

/// Composite rule over the given breakpoints.
pub fn composite(breaks: &[f64], rule: &GaussLegendre) -> Vec<(f64, f64)> {
    breaks
        .windows(2)
        .flat_map(|w| rule.on(w[0], w[1]).collect::<Vec<_>>())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrates_polynomials_exactly() {
        let rule = GaussLegendre::new(7);
        // degree 13 is the exactness limit for 7 nodes
        let v = rule.integrate(-1.0, 2.0, |x| x.powi(13) - 3.0 * x.powi(4));
        let exact = (2f64.powi(14) - 1.0) / 14.0 - 3.0 * (32.0 + 1.0) / 5.0;
        assert!((v - exact).abs() < 1e-9 * exact.abs());
        assert!((rule.weights.iter().sum::<f64>() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn large_rules_are_stable() {
        let rule = GaussLegendre::new(64);
        let v = rule.integrate(0.0, PI, f64::sin);
        assert!((v - 2.0).abs() < 1e-14);
    }

    #[test]
    fn graded_panels_cover_interval() {
        let p = graded_panels(50.0, 0.25);
        assert_eq!(p[0], 0.0);
        assert_eq!(*p.last().unwrap(), 50.0);
        assert!(p.windows(2).all(|w| w[1] > w[0]));
    }
}
