//! Two-parameter maximisation: lattice sampling followed by compass search.
//!
//! Used wherever a supremum of a resolvent-type norm over a planar region is
//! needed. Near a pole the lattice alone never sees the blow-up, the compass
//! refinement walks into it.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak {
    pub x: f64,
    pub y: f64,
    pub value: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct SearchBox {
    pub x: (f64, f64),
    pub y: (f64, f64),
}

impl SearchBox {
    fn clamp(&self, x: f64, y: f64) -> (f64, f64) {
        (x.clamp(self.x.0, self.x.1), y.clamp(self.y.0, self.y.1))
    }
}

/// Compass search from `start` with initial steps `step`, staying inside `region`.
pub fn compass_search<F: FnMut(f64, f64) -> f64>(
    f: &mut F,
    start: Peak,
    step: (f64, f64),
    region: &SearchBox,
    max_iter: usize,
) -> Peak {
    let mut best = start;
    let (mut sx, mut sy) = step;
    let scale = region.x.1 - region.x.0 + region.y.1 - region.y.0;
    let min_step = 1e-15 * scale.max(1.0);
    for _ in 0..max_iter {
        if best.value.is_infinite() {
            break;
        }
        let mut moved = false;
        for (dx, dy) in [(sx, 0.0), (-sx, 0.0), (0.0, sy), (0.0, -sy)] {
            let (x, y) = region.clamp(best.x + dx, best.y + dy);
            if x == best.x && y == best.y {
                continue;
            }
            let v = f(x, y);
            if v > best.value || v.is_nan() {
                if v.is_nan() {
                    continue;
                }
                best = Peak { x, y, value: v };
                moved = true;
                break;
            }
        }
        if !moved {
            sx *= 0.5;
            sy *= 0.5;
            if sx.max(sy) < min_step {
                break;
            }
        }
    }
    best
}

/// Maximises `f` over `region`: `nx × ny` lattice, then compass refinement of
/// the `refine` best lattice points. Returns the overall best point.
pub fn maximize_on_box<F: FnMut(f64, f64) -> f64>(
    mut f: F,
    region: SearchBox,
    nx: usize,
    ny: usize,
    refine: usize,
) -> Peak {
    let nx = nx.max(1);
    let ny = ny.max(1);
    let xs = lattice(region.x, nx);
    let ys = lattice(region.y, ny);
    let mut samples = Vec::with_capacity(nx * ny);
    for &x in &xs {
        for &y in &ys {
            let v = f(x, y);
            samples.push(Peak {
                x,
                y,
                value: if v.is_nan() { f64::NEG_INFINITY } else { v },
            });
        }
    }
    samples.sort_by(|a, b| b.value.total_cmp(&a.value));
    let dx = if nx > 1 { (region.x.1 - region.x.0) / (nx - 1) as f64 } else { (region.x.1 - region.x.0).max(1e-3) };
    let dy = if ny > 1 { (region.y.1 - region.y.0) / (ny - 1) as f64 } else { (region.y.1 - region.y.0).max(1e-3) };
    let mut best = samples[0];
    for start in samples.iter().take(refine.max(1)) {
        let p = compass_search(&mut f, *start, (0.5 * dx, 0.5 * dy), &region, 400);
        if p.value > best.value {
            best = p;
        }
    }
    best
}

pub(crate) fn lattice(range: (f64, f64), n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![0.5 * (range.0 + range.1)];
    }
    (0..n)
        .map(|i| range.0 + (range.1 - range.0) * i as f64 / (n - 1) as f64)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_pole_between_lattice_points() {
        // -log distance to an off-lattice point
        let (px, py) = (0.123456, -0.7654321);
        let f = |x: f64, y: f64| -((x - px).powi(2) + (y - py).powi(2)).sqrt().ln();
        let region = SearchBox { x: (-1.0, 1.0), y: (-1.0, 1.0) };
        let peak = maximize_on_box(f, region, 9, 9, 3);
        assert!((peak.x - px).abs() < 1e-10 && (peak.y - py).abs() < 1e-10);
        assert!(peak.value > 20.0);
    }

    #[test]
    fn respects_box_boundary() {
        let f = |x: f64, _y: f64| x;
        let region = SearchBox { x: (-2.0, 3.0), y: (0.0, 1.0) };
        let peak = maximize_on_box(f, region, 4, 2, 1);
        assert_eq!(peak.x, 3.0);
    }
}
