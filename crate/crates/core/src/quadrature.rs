//! One-dimensional quadrature building blocks.

use std::f64::consts::PI;

/// Gauss–Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Newton iteration on `P_n` from the Chebyshev initial guess.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss–Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, z);
                dp = d;
                let dz = p / d;
                z -= dz;
                if dz.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, z);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - z * z) * dp * dp);
            nodes[i] = -z;
            nodes[n - 1 - i] = z;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        GaussLegendre { nodes, weights }
    }

    /// Nodes and weights mapped to `[a, b]`.
    pub fn on(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&t, &w)| (mid + half * t, half * w))
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        self.on(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

/// `(P_n(z), P_n'(z))` by the three-term recurrence.
fn legendre(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// Panel breakpoints on `[lo, hi]` refined geometrically toward `lo`:
/// panel lengths double from `first` until they reach `cap`, then stay at
/// most `cap`.
pub fn graded_panels(lo: f64, hi: f64, first: f64, cap: f64) -> Vec<f64> {
    let mut edges = vec![lo];
    if hi <= lo {
        return edges;
    }
    let mut len = first.min(cap).max(f64::MIN_POSITIVE);
    let mut x = lo;
    while x < hi {
        let remaining = hi - x;
        // avoid a sliver panel at the end
        let step = if remaining <= 1.5 * len { remaining } else { len };
        x += step;
        edges.push(if remaining <= 1.5 * len { hi } else { x });
        len = (2.0 * len).min(cap);
    }
    edges
}

/// Breakpoints on `[0, hi]` refined geometrically toward 0 over `levels`
/// halvings; the innermost panel is `[0, hi / 2^levels]`.
pub fn panels_toward_zero(hi: f64, levels: u32) -> Vec<f64> {
    let mut edges = Vec::with_capacity(levels as usize + 2);
    edges.push(0.0);
    for l in (0..=levels).rev() {
        edges.push(hi / f64::powi(2.0, l as i32));
    }
    edges
}

/// Uniform periodic trapezoid rule on `[0, 2π)`: `(angle, weight)`.
pub fn periodic_trapezoid(n: usize) -> Vec<(f64, f64)> {
    let w = 2.0 * PI / n as f64;
    (0..n).map(|k| (k as f64 * w, w)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gauss_legendre_is_exact_for_polynomials() {
        for n in [1usize, 2, 5, 8, 16, 33] {
            let gl = GaussLegendre::new(n);
            assert_relative_eq!(gl.weights.iter().sum::<f64>(), 2.0, epsilon = 1e-13);
            let deg = 2 * n - 1;
            let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
            let got = gl.integrate(-1.0, 1.0, |x| x.powi(deg as i32));
            assert!((got - exact).abs() < 1e-13, "n={n}");
            let even = 2 * n - 2;
            let got = gl.integrate(0.0, 2.0, |x| x.powi(even as i32));
            let exact = 2f64.powi(even as i32 + 1) / (even as f64 + 1.0);
            assert_relative_eq!(got, exact, max_relative = 1e-13);
        }
    }

    #[test]
    fn graded_panels_cover_the_interval() {
        let e = graded_panels(0.05, 1.97, 0.01, 0.2);
        assert_eq!(e[0], 0.05);
        assert_eq!(*e.last().unwrap(), 1.97);
        assert!(e.windows(2).all(|w| w[1] > w[0] && w[1] - w[0] <= 0.3 + 1e-12));
        let z = panels_toward_zero(0.5, 4);
        assert_eq!(z, vec![0.0, 0.5 / 16.0, 0.5 / 8.0, 0.5 / 4.0, 0.25, 0.5]);
    }
}
