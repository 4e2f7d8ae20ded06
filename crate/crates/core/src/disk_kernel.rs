//! Green–Neumann function of the unit disk.
//!
//! `G(x, y) = -(1/2π)[ln|x - y| + ½ ln Q(x, y)] + (|x|² + |y|²)/(4π) - 3/(8π)`
//! with `Q = |x|²|y|² - 2x·y + 1 = |x|²·|y - x*|²`, `x* = x/|x|²` the Kelvin
//! image. It satisfies `-Δ_y G = δ_x - 1/π`, `∂_n G = 0` on `|y| = 1`,
//! `∫ G(x, y) dy = 0` and `G(x, y) = G(y, x)`; the tests check each of these
//! numerically rather than trusting the formula.

use crate::error::{LabError, Result};
use crate::rng;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::f64::consts::PI;

pub const DEFAULT_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy)]
pub struct DiskKernel {
    /// Smallest admissible `|x - y|`.
    pub floor: f64,
}

impl Default for DiskKernel {
    fn default() -> Self {
        DiskKernel { floor: DEFAULT_FLOOR }
    }
}

/// Derivative multi-index over the `y` components, `|β| ≤ 2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MultiIndex(pub u8, pub u8);

impl MultiIndex {
    pub fn order(&self) -> u8 {
        self.0 + self.1
    }
}

impl std::fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({},{})", self.0, self.1)
    }
}

/// Additive normalizer making `y ↦ G(x, y)` average-free.
pub fn normalizer(x: [f64; 2]) -> f64 {
    (x[0] * x[0] + x[1] * x[1]) / (4.0 * PI) - 3.0 / (8.0 * PI)
}

impl DiskKernel {
    fn check(&self, x: [f64; 2], y: [f64; 2]) -> Result<()> {
        for p in [x, y] {
            if !(p[0] * p[0] + p[1] * p[1] <= 1.0 + 1e-12) {
                return Err(LabError::Domain { point: p.to_vec(), domain: "unit disk" });
            }
        }
        let d = (x[0] - y[0]).hypot(x[1] - y[1]);
        if d < self.floor {
            return Err(LabError::NearSingularity { distance: d, floor: self.floor });
        }
        Ok(())
    }

    pub fn green(&self, x: [f64; 2], y: [f64; 2]) -> Result<f64> {
        self.check(x, y)?;
        Ok(green_unchecked(x, y))
    }

    /// `∂_y^β G(x, y)`.
    pub fn green_deriv(&self, x: [f64; 2], y: [f64; 2], beta: MultiIndex) -> Result<f64> {
        self.check(x, y)?;
        Ok(match beta {
            MultiIndex(0, 0) => green_unchecked(x, y),
            MultiIndex(1, 0) => gradient_unchecked(x, y)[0],
            MultiIndex(0, 1) => gradient_unchecked(x, y)[1],
            MultiIndex(2, 0) => hessian_unchecked(x, y)[0][0],
            MultiIndex(1, 1) => hessian_unchecked(x, y)[0][1],
            MultiIndex(0, 2) => hessian_unchecked(x, y)[1][1],
            b => return Err(LabError::Parameter(format!("derivative order {} above 2", b.order()))),
        })
    }

    pub fn gradient_y(&self, x: [f64; 2], y: [f64; 2]) -> Result<[f64; 2]> {
        self.check(x, y)?;
        Ok(gradient_unchecked(x, y))
    }

    pub fn hessian_y(&self, x: [f64; 2], y: [f64; 2]) -> Result<[[f64; 2]; 2]> {
        self.check(x, y)?;
        Ok(hessian_unchecked(x, y))
    }
}

pub(crate) fn green_unchecked(x: [f64; 2], y: [f64; 2]) -> f64 {
    let r2 = (x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2);
    let x2 = x[0] * x[0] + x[1] * x[1];
    let y2 = y[0] * y[0] + y[1] * y[1];
    let q = x2 * y2 - 2.0 * (x[0] * y[0] + x[1] * y[1]) + 1.0;
    -(r2.ln() + q.ln()) / (4.0 * PI) + (x2 + y2) / (4.0 * PI) - 3.0 / (8.0 * PI)
}

pub(crate) fn gradient_unchecked(x: [f64; 2], y: [f64; 2]) -> [f64; 2] {
    let d = [y[0] - x[0], y[1] - x[1]];
    let r2 = d[0] * d[0] + d[1] * d[1];
    let x2 = x[0] * x[0] + x[1] * x[1];
    let g = [x2 * y[0] - x[0], x2 * y[1] - x[1]];
    let q = x2 * (y[0] * y[0] + y[1] * y[1]) - 2.0 * (x[0] * y[0] + x[1] * y[1]) + 1.0;
    let c = -1.0 / (2.0 * PI);
    [
        c * (d[0] / r2 + g[0] / q) + y[0] / (2.0 * PI),
        c * (d[1] / r2 + g[1] / q) + y[1] / (2.0 * PI),
    ]
}

pub(crate) fn hessian_unchecked(x: [f64; 2], y: [f64; 2]) -> [[f64; 2]; 2] {
    let d = [y[0] - x[0], y[1] - x[1]];
    let r2 = d[0] * d[0] + d[1] * d[1];
    let x2 = x[0] * x[0] + x[1] * x[1];
    let g = [x2 * y[0] - x[0], x2 * y[1] - x[1]];
    let q = x2 * (y[0] * y[0] + y[1] * y[1]) - 2.0 * (x[0] * y[0] + x[1] * y[1]) + 1.0;
    let c = -1.0 / (2.0 * PI);
    let mut h = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            let delta = if i == j { 1.0 } else { 0.0 };
            let direct = delta / r2 - 2.0 * d[i] * d[j] / (r2 * r2);
            let image = x2 * delta / q - 2.0 * g[i] * g[j] / (q * q);
            h[i][j] = c * (direct + image) + delta / (2.0 * PI);
        }
    }
    h
}

#[derive(Debug, Clone, Serialize)]
pub struct Stratum {
    /// Distance-to-boundary band of `x` (or of the midpoint).
    pub band: String,
    pub samples: u64,
    pub sup_ratio: f64,
}

#[derive(Debug, Clone)]
pub struct BoundReport {
    /// `"(i,j)"` for a derivative bound, `"diff"` for the difference bound.
    pub label: String,
    pub samples: usize,
    pub sup_ratio: f64,
    /// Coordinates of the maximizing sample: `x, y` or `x₁, x₂, y`.
    pub argmax: Vec<f64>,
    pub seed: u64,
    pub strata: Vec<Stratum>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundRow {
    pub beta: String,
    pub samples: usize,
    pub sup_ratio: f64,
    pub argmax: String,
    pub seed: u64,
}

impl BoundReport {
    pub fn csv_row(&self) -> BoundRow {
        BoundRow {
            beta: self.label.clone(),
            samples: self.samples,
            sup_ratio: self.sup_ratio,
            argmax: self.argmax.iter().map(|v| format!("{v:.9}")).collect::<Vec<_>>().join(";"),
            seed: self.seed,
        }
    }
}

const BANDS: [(f64, f64, &str); 3] = [(0.0, 0.05, "[0,0.05)"), (0.05, 0.2, "[0.05,0.2)"), (0.2, 1.01, "[0.2,1]")];

fn band_of(p: [f64; 2]) -> usize {
    let dist = 1.0 - p[0].hypot(p[1]);
    BANDS.iter().position(|(lo, hi, _)| dist >= *lo && dist < *hi).unwrap_or(2)
}

fn uniform_in_disk(rng: &mut ChaCha8Rng) -> [f64; 2] {
    let r = rng.gen::<f64>().sqrt();
    let a = rng.gen::<f64>() * 2.0 * PI;
    [r * a.cos(), r * a.sin()]
}

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    (lo.ln() + rng.gen::<f64>() * (hi.ln() - lo.ln())).exp()
}

struct SupTracker {
    sup: f64,
    argmax: Vec<f64>,
    strata: [(u64, f64); 3],
}

impl SupTracker {
    fn new() -> Self {
        SupTracker { sup: 0.0, argmax: Vec::new(), strata: [(0, 0.0); 3] }
    }

    fn record(&mut self, ratio: f64, band: usize, at: impl FnOnce() -> Vec<f64>) {
        self.strata[band].0 += 1;
        self.strata[band].1 = self.strata[band].1.max(ratio);
        if ratio > self.sup || self.argmax.is_empty() {
            self.sup = ratio;
            self.argmax = at();
        }
    }

    fn finish(self, label: String, samples: usize, seed: u64) -> BoundReport {
        BoundReport {
            label,
            samples,
            sup_ratio: self.sup,
            argmax: self.argmax,
            seed,
            strata: BANDS
                .iter()
                .zip(self.strata)
                .map(|((_, _, name), (n, s))| Stratum { band: name.to_string(), samples: n, sup_ratio: s })
                .collect(),
        }
    }
}

/// Draws the `i`-th pair of the pointwise-bound sample: even draws are
/// uniform in the disk, odd draws place `y` at a log-uniform distance from
/// `x` to probe the singularity.
fn pointwise_pair(rng: &mut ChaCha8Rng, kernel: &DiskKernel) -> ([f64; 2], [f64; 2]) {
    let near = rng.gen::<bool>();
    loop {
        let x = uniform_in_disk(rng);
        let y = if near {
            let rho = log_uniform(rng, 1e-6, 2.0);
            let a = rng.gen::<f64>() * 2.0 * PI;
            [x[0] + rho * a.cos(), x[1] + rho * a.sin()]
        } else {
            uniform_in_disk(rng)
        };
        if y[0].hypot(y[1]) < 1.0 && (x[0] - y[0]).hypot(x[1] - y[1]) >= kernel.floor {
            return (x, y);
        }
    }
}

/// `sup |∂_y^β G(x, y)|·|x - y|^{|β|}` over sampled pairs; for `|β| = 0`
/// the logarithmic ratio `|G|/(1 + |ln|x - y||)`.
pub fn check_pointwise_bound(beta: MultiIndex, sample_count: usize, seed: u64) -> Result<BoundReport> {
    if beta.order() > 2 {
        return Err(LabError::Parameter(format!("derivative order {} above 2", beta.order())));
    }
    let kernel = DiskKernel::default();
    let mut rng = rng::stream(seed, "pointwise-bound");
    let mut sup = SupTracker::new();
    for _ in 0..sample_count {
        let (x, y) = pointwise_pair(&mut rng, &kernel);
        let dist = (x[0] - y[0]).hypot(x[1] - y[1]);
        let value = kernel.green_deriv(x, y, beta)?.abs();
        let ratio = if beta.order() == 0 {
            value / (1.0 + dist.ln().abs())
        } else {
            value * dist.powi(beta.order() as i32)
        };
        sup.record(ratio, band_of(x), || vec![x[0], x[1], y[0], y[1]]);
    }
    Ok(sup.finish(beta.to_string(), sample_count, seed))
}

/// `|∂²_y G(x₁, y) - ∂²_y G(x₂, y)|·|x̄ - y|³ / h` for `h = |x₁ - x₂|`.
pub fn difference_ratio(x1: [f64; 2], x2: [f64; 2], y: [f64; 2]) -> f64 {
    let h = (x1[0] - x2[0]).hypot(x1[1] - x2[1]);
    if h == 0.0 {
        return 0.0;
    }
    let mid = [0.5 * (x1[0] + x2[0]), 0.5 * (x1[1] + x2[1])];
    let far = (mid[0] - y[0]).hypot(mid[1] - y[1]);
    let (a, b) = (hessian_unchecked(x1, y), hessian_unchecked(x2, y));
    let mut best: f64 = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            best = best.max((a[i][j] - b[i][j]).abs());
        }
    }
    best * far.powi(3) / h
}

/// Samples `(x₁, x₂, y)` with `|x̄ - y| ≥ h` and reports the sup of
/// [`difference_ratio`].
pub fn check_difference_bound(sample_count: usize, seed: u64) -> Result<BoundReport> {
    let mut rng = rng::stream(seed, "difference-bound");
    let mut sup = SupTracker::new();
    for _ in 0..sample_count {
        let (x1, x2, y) = loop {
            let mid = uniform_in_disk(&mut rng);
            let h = log_uniform(&mut rng, 1e-4, 0.5);
            let a = rng.gen::<f64>() * 2.0 * PI;
            let e = [0.5 * h * a.cos(), 0.5 * h * a.sin()];
            let x1 = [mid[0] + e[0], mid[1] + e[1]];
            let x2 = [mid[0] - e[0], mid[1] - e[1]];
            let rho = log_uniform(&mut rng, h, 2.0);
            let b = rng.gen::<f64>() * 2.0 * PI;
            let y = [mid[0] + rho * b.cos(), mid[1] + rho * b.sin()];
            if x1[0].hypot(x1[1]) < 1.0 && x2[0].hypot(x2[1]) < 1.0 && y[0].hypot(y[1]) < 1.0 {
                break (x1, x2, y);
            }
        };
        let ratio = difference_ratio(x1, x2, y);
        let mid = [0.5 * (x1[0] + x2[0]), 0.5 * (x1[1] + x2[1])];
        sup.record(ratio, band_of(mid), || vec![x1[0], x1[1], x2[0], x2[1], y[0], y[1]]);
    }
    Ok(sup.finish("diff".to_string(), sample_count, seed))
}

/// Residuals of the defining problem of `G`, each to be compared against
/// its own tolerance.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct DefiningResiduals {
    /// `max |Δ_y G - 1/π|` by the 5-point stencil (h = 10⁻³).
    pub laplacian: f64,
    /// `max |∂_r G|` on `|y| = 1` by second-order one-sided differences.
    pub neumann: f64,
    /// `max |G(x, y) - G(y, x)|`.
    pub symmetry: f64,
    /// `max |∫ G(x, y) dy|` by polar quadrature centred at `x`.
    pub average: f64,
}

pub const LAPLACIAN_TOL: f64 = 1e-4;
pub const NEUMANN_TOL: f64 = 1e-6;
pub const SYMMETRY_TOL: f64 = 1e-10;
pub const AVERAGE_TOL: f64 = 1e-8;

impl DefiningResiduals {
    pub fn within_tolerance(&self) -> bool {
        self.laplacian < LAPLACIAN_TOL
            && self.neumann < NEUMANN_TOL
            && self.symmetry < SYMMETRY_TOL
            && self.average < AVERAGE_TOL
    }
}

/// `∫_disk f(y) dy` in polar coordinates centred at `x ∈ disk`, with the
/// exact boundary distance along each ray: `n_rad` Gauss points on each
/// of the panels refined toward `x`, `n_ang` trapezoid angles.
pub fn integrate_centred<F: FnMut([f64; 2]) -> f64>(x: [f64; 2], n_rad: usize, n_ang: usize, mut f: F) -> f64 {
    let gl = crate::quadrature::GaussLegendre::new(n_rad);
    let mut total = 0.0;
    for (a, wa) in crate::quadrature::periodic_trapezoid(n_ang) {
        let e = [a.cos(), a.sin()];
        let xe = x[0] * e[0] + x[1] * e[1];
        let x2 = x[0] * x[0] + x[1] * x[1];
        let reach = -xe + (xe * xe + 1.0 - x2).sqrt();
        let edges = crate::quadrature::panels_toward_zero(reach, 20);
        for w in edges.windows(2) {
            for (rho, wr) in gl.on(w[0], w[1]) {
                total += wa * wr * rho * f([x[0] + rho * e[0], x[1] + rho * e[1]]);
            }
        }
    }
    total
}

/// Evaluates the defining-problem residuals on `samples` seeded points.
pub fn defining_residuals(samples: usize, seed: u64) -> DefiningResiduals {
    let mut rng = rng::stream(seed, "defining-residuals");
    let mut res = DefiningResiduals { laplacian: 0.0, neumann: 0.0, symmetry: 0.0, average: 0.0 };
    let h = 1e-3;
    for s in 0..samples {
        let x = loop {
            let p = uniform_in_disk(&mut rng);
            if p[0].hypot(p[1]) <= 0.9 {
                break p;
            }
        };
        // away from x and from its Kelvin image, where the stencil truncation
        // stays below the tolerance
        let y = loop {
            let p = uniform_in_disk(&mut rng);
            if p[0].hypot(p[1]) < 0.8 && (p[0] - x[0]).hypot(p[1] - x[1]) > 0.3 {
                break p;
            }
        };
        let g = |p: [f64; 2]| green_unchecked(x, p);
        let lap = (g([y[0] + h, y[1]]) + g([y[0] - h, y[1]]) + g([y[0], y[1] + h]) + g([y[0], y[1] - h])
            - 4.0 * g(y))
            / (h * h);
        res.laplacian = res.laplacian.max((lap - 1.0 / PI).abs());

        let a = rng.gen::<f64>() * 2.0 * PI;
        let n = [a.cos(), a.sin()];
        let hb = 1e-5;
        let at = |t: f64| g([n[0] * (1.0 - t), n[1] * (1.0 - t)]);
        let dr = (3.0 * at(0.0) - 4.0 * at(hb) + at(2.0 * hb)) / (2.0 * hb);
        res.neumann = res.neumann.max(dr.abs());

        res.symmetry = res.symmetry.max((green_unchecked(x, y) - green_unchecked(y, x)).abs());

        if s < 8 {
            let avg = integrate_centred(x, 16, 256, |p| green_unchecked(x, p));
            res.average = res.average.max(avg.abs());
        }
    }
    res
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_pair(rng: &mut ChaCha8Rng) -> ([f64; 2], [f64; 2]) {
        loop {
            let x = uniform_in_disk(rng);
            let y = uniform_in_disk(rng);
            if (x[0] - y[0]).hypot(x[1] - y[1]) > 1e-3 {
                return (x, y);
            }
        }
    }

    #[test]
    fn kernel_is_symmetric() {
        let mut rng = rng::stream(1, "sym");
        for _ in 0..10_000 {
            let (x, y) = random_pair(&mut rng);
            assert!((green_unchecked(x, y) - green_unchecked(y, x)).abs() < 1e-10);
        }
    }

    #[test]
    fn defining_problem_residuals() {
        let r = defining_residuals(1000, 3);
        assert!(r.laplacian < LAPLACIAN_TOL, "{r:?}");
        assert!(r.neumann < NEUMANN_TOL, "{r:?}");
        assert!(r.symmetry < SYMMETRY_TOL, "{r:?}");
        assert!(r.average < AVERAGE_TOL, "{r:?}");
    }

    #[test]
    fn normalizer_matches_quadrature_of_the_raw_kernel() {
        // 64 × 256 polar quadrature of the kernel without its constant
        for x in [[0.0, 0.0], [0.3, -0.2], [0.0, 0.85], [-0.6, 0.55]] {
            let raw = integrate_centred(x, 64, 256, |y| green_unchecked(x, y) - normalizer(x));
            assert!((-raw / PI - normalizer(x)).abs() < 1e-9, "x = {x:?}");
        }
    }

    #[test]
    fn derivatives_match_central_differences() {
        let k = DiskKernel::default();
        let (x, y) = ([0.3, 0.0], [-0.2, 0.4]);
        let h = 1e-5;
        let fd = (green_unchecked(x, [y[0] + h, y[1]]) - green_unchecked(x, [y[0] - h, y[1]])) / (2.0 * h);
        let exact = k.green_deriv(x, y, MultiIndex(1, 0)).unwrap();
        assert!((fd - exact).abs() < 1e-6 * exact.abs());
        assert_eq!(k.green_deriv(x, y, MultiIndex(0, 0)).unwrap(), k.green(x, y).unwrap());

        let mut rng = rng::stream(5, "deriv");
        let h = 1e-5;
        for _ in 0..500 {
            let (x, y) = random_pair(&mut rng);
            if (x[0] - y[0]).hypot(x[1] - y[1]) < 0.2 || y[0].hypot(y[1]) > 0.8 || x[0].hypot(x[1]) > 0.8 {
                continue;
            }
            let gr = gradient_unchecked(x, y);
            let he = hessian_unchecked(x, y);
            for i in 0..2 {
                let mut yp = y;
                let mut ym = y;
                yp[i] += h;
                ym[i] -= h;
                let fd = (green_unchecked(x, yp) - green_unchecked(x, ym)) / (2.0 * h);
                assert!((fd - gr[i]).abs() <= 1e-6 * gr[i].abs().max(1.0));
                let (gp, gm) = (gradient_unchecked(x, yp), gradient_unchecked(x, ym));
                for j in 0..2 {
                    let fd = (gp[j] - gm[j]) / (2.0 * h);
                    assert!((fd - he[i][j]).abs() <= 1e-6 * he[i][j].abs().max(1.0));
                }
            }
            assert!((he[0][0] + he[1][1] - 1.0 / PI).abs() < 1e-8);
        }
    }

    #[test]
    fn gradient_symmetry() {
        // ∇_x G(x, z) = ∇_y G(z, x)
        let mut rng = rng::stream(6, "gradsym");
        let h = 1e-6;
        for _ in 0..1000 {
            let (x, z) = random_pair(&mut rng);
            if (x[0] - z[0]).hypot(x[1] - z[1]) < 0.05 || x[0].hypot(x[1]) > 0.99 {
                continue;
            }
            let rhs = gradient_unchecked(z, x);
            for i in 0..2 {
                let mut xp = x;
                let mut xm = x;
                xp[i] += h;
                xm[i] -= h;
                let fd = (green_unchecked(xp, z) - green_unchecked(xm, z)) / (2.0 * h);
                assert!((fd - rhs[i]).abs() <= 1e-6 * rhs[i].abs().max(1.0), "{fd} vs {}", rhs[i]);
            }
        }
    }

    #[test]
    fn near_singularity_and_domain_errors() {
        let k = DiskKernel::default();
        assert!(matches!(k.green([0.1, 0.1], [0.1, 0.1]), Err(LabError::NearSingularity { .. })));
        assert!(matches!(k.green([1.1, 0.0], [0.1, 0.1]), Err(LabError::Domain { .. })));
        assert!(k.green([0.0, 0.0], [1.0, 0.0]).is_ok());
        assert!(k.green_deriv([0.0, 0.0], [0.5, 0.0], MultiIndex(2, 1)).is_err());
    }

    #[test]
    fn pointwise_bounds_are_stable_under_refinement() {
        for beta in [MultiIndex(0, 0), MultiIndex(1, 0), MultiIndex(1, 1)] {
            let coarse = check_pointwise_bound(beta, 10_000, 9).unwrap();
            let fine = check_pointwise_bound(beta, 100_000, 9).unwrap();
            assert!(coarse.sup_ratio.is_finite() && coarse.sup_ratio > 0.0);
            assert!(fine.sup_ratio >= coarse.sup_ratio);
            assert!(fine.sup_ratio <= 2.0 * coarse.sup_ratio, "{beta}: {} vs {}", fine.sup_ratio, coarse.sup_ratio);
        }
    }

    #[test]
    fn far_pairs_stay_below_the_global_sup() {
        let report = check_pointwise_bound(MultiIndex(1, 0), 20_000, 4).unwrap();
        let k = DiskKernel::default();
        let mut rng = rng::stream(4, "far");
        for _ in 0..5000 {
            let (x, y) = random_pair(&mut rng);
            let d = (x[0] - y[0]).hypot(x[1] - y[1]);
            if d > 0.5 {
                let r = k.green_deriv(x, y, MultiIndex(1, 0)).unwrap().abs() * d;
                assert!(r <= report.sup_ratio);
            }
        }
    }

    #[test]
    fn difference_bound() {
        assert_eq!(difference_ratio([0.2, 0.1], [0.2, 0.1], [-0.5, 0.3]), 0.0);
        let coarse = check_difference_bound(10_000, 2).unwrap();
        let fine = check_difference_bound(100_000, 2).unwrap();
        assert!(fine.sup_ratio >= coarse.sup_ratio && fine.sup_ratio <= 2.0 * coarse.sup_ratio);
        assert_eq!(fine.argmax.len(), 6);
    }

    #[test]
    fn difference_ratio_converges_to_the_third_derivative() {
        // first-order Taylor oracle: third derivative of G by differences of
        // the closed-form Hessian in x
        let y: [f64; 2] = [-0.55, -0.45];
        let mid: [f64; 2] = [0.3, 0.2];
        let e: [f64; 2] = [0.6, 0.8];
        let far = (mid[0] - y[0]).hypot(mid[1] - y[1]);
        assert!(far > 0.7);
        let t = 1e-5;
        let hp = hessian_unchecked([mid[0] + t * e[0], mid[1] + t * e[1]], y);
        let hm = hessian_unchecked([mid[0] - t * e[0], mid[1] - t * e[1]], y);
        let mut oracle: f64 = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                oracle = oracle.max(((hp[i][j] - hm[i][j]) / (2.0 * t)).abs());
            }
        }
        oracle *= far.powi(3);
        let mut prev_err = f64::INFINITY;
        for k in 2..12 {
            let h = f64::powi(2.0, -k);
            let x1 = [mid[0] + 0.5 * h * e[0], mid[1] + 0.5 * h * e[1]];
            let x2 = [mid[0] - 0.5 * h * e[0], mid[1] - 0.5 * h * e[1]];
            let err = (difference_ratio(x1, x2, y) - oracle).abs();
            assert!(err <= prev_err * 1.01 + 1e-9, "k = {k}: {err} after {prev_err}");
            prev_err = err;
        }
        assert!(prev_err < 1e-4 * oracle);
    }
}
