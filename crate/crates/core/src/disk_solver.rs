//! Pressure on the unit disk, two independent ways.
//!
//! * [`pressure_representation`]: singular quadrature of
//!   `p(x) = ∫ ∂²_{y_i y_j} G(x, y) (u_i(y) - u_i(x)) u_j(y) dy`, in polar
//!   coordinates centred at `x` so the `ρ^{θ-2}·ρ` cusp is integrated by
//!   geometrically refined Gauss panels.
//! * [`pressure_fd`]: angular FFT plus one finite-volume radial solve per
//!   Fourier mode of `-Δp = ∂_i u_j ∂_j u_i`, `∂_r p = |u|²` at `r = 1`.
//!
//! Also the weak-form residual against closed-form test functions and the
//! near/far splitting of `p(x₁) - p(x₂)` used to study Hölder scaling.

use crate::disk_kernel::{gradient_unchecked, hessian_unchecked};
use crate::error::{LabError, Result};
use crate::fields::{Domain, VelocityFieldSpec};
use crate::grid::{Geometry, GridField};
use crate::quadrature::{graded_panels, panels_toward_zero, periodic_trapezoid, GaussLegendre};
use crate::rng;
use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::io::Read;

/// Smallest near-field radius before a target counts as unresolvable.
pub const MIN_NEAR_RADIUS: f64 = 1e-6;
/// Relative tolerance on `∫F + ∮B` for the Neumann problem.
pub const COMPATIBILITY_TOL: f64 = 1e-6;

/// Two-tier polar quadrature for the representation integral.
///
/// The near patch `ρ < δ` around the target uses `near_levels` geometric
/// halvings toward the target, `near_gauss` points per panel and
/// `near_angles` uniform angles. The far region `δ < ρ < R(α)` (exact
/// distance to the circle along each ray) uses panels graded from `δ` up to
/// `far_cap`, `gauss` points each, and `far_angles` uniform angles. The patch replaces the far cells it
/// overlaps, so no region is counted twice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureScheme {
    pub near_radius: f64,
    pub near_levels: u32,
    pub near_gauss: usize,
    pub near_angles: usize,
    pub gauss: usize,
    pub far_cap: f64,
    pub far_angles: usize,
    /// Gauss radial × trapezoid angular nodes of the grid whose mean is
    /// removed from the result.
    pub reference: (usize, usize),
}

impl Default for QuadratureScheme {
    fn default() -> Self {
        QuadratureScheme {
            near_radius: 0.05,
            near_levels: 30,
            near_gauss: 8,
            near_angles: 64,
            gauss: 8,
            far_cap: 0.05,
            far_angles: 256,
            reference: (16, 32),
        }
    }
}

impl QuadratureScheme {
    /// Default scheme with enough angles and short enough panels for the
    /// highest wavenumber of `spec`.
    pub fn for_field(spec: &VelocityFieldSpec) -> Self {
        let k = spec.max_wavenumber();
        let base = QuadratureScheme::default();
        let far_angles = base.far_angles.max((8.0 * k).ceil() as usize);
        QuadratureScheme {
            far_angles: far_angles.next_multiple_of(8),
            far_cap: base.far_cap.min(4.0 / k.max(1.0)),
            ..base
        }
    }

    /// Halved near radius with twice the near-field nodes in each direction.
    pub fn refined(&self) -> Self {
        QuadratureScheme {
            near_radius: self.near_radius / 2.0,
            near_gauss: self.near_gauss * 2,
            near_angles: self.near_angles * 2,
            ..*self
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.near_radius > 0.0) || !(self.far_cap > 0.0) {
            return Err(LabError::Parameter("quadrature radii must be positive".into()));
        }
        if self.near_gauss == 0 || self.gauss == 0 || self.near_angles < 4 || self.far_angles < 4 {
            return Err(LabError::Parameter("quadrature node counts too small".into()));
        }
        if self.reference.0 == 0 || self.reference.1 < 4 {
            return Err(LabError::Parameter("reference grid too small".into()));
        }
        Ok(())
    }
}

/// Distance from `x` to the unit circle along direction `e`.
fn exit_distance(x: [f64; 2], e: [f64; 2]) -> f64 {
    let xe = x[0] * e[0] + x[1] * e[1];
    let x2 = x[0] * x[0] + x[1] * x[1];
    -xe + (xe * xe + (1.0 - x2).max(0.0)).sqrt()
}

fn norm(x: [f64; 2]) -> f64 {
    x[0].hypot(x[1])
}

/// Splits every panel longer than `cap`.
fn capped(edges: &[f64], cap: f64) -> Vec<f64> {
    let mut out = vec![edges[0]];
    for w in edges.windows(2) {
        let pieces = ((w[1] - w[0]) / cap).ceil().max(1.0) as usize;
        for s in 1..=pieces {
            out.push(w[0] + (w[1] - w[0]) * s as f64 / pieces as f64);
        }
    }
    out
}

fn check_disk(spec: &VelocityFieldSpec) -> Result<()> {
    if spec.domain != Domain::UnitDisk {
        return Err(LabError::Parameter(format!("expected a unit-disk field, got {}", spec.domain.name())));
    }
    Ok(())
}

fn check_interior(x: [f64; 2]) -> Result<()> {
    if !(norm(x) < 1.0) {
        return Err(LabError::Domain { point: x.to_vec(), domain: "open unit disk" });
    }
    Ok(())
}

/// Visits every node `(y, weight)` of the scheme centred at `x`.
fn for_each_node(x: [f64; 2], scheme: &QuadratureScheme, mut visit: impl FnMut([f64; 2], f64)) -> Result<()> {
    check_interior(x)?;
    let delta = scheme.near_radius.min(0.5 * (1.0 - norm(x)));
    if delta < MIN_NEAR_RADIUS {
        return Err(LabError::Resolution(format!(
            "near-field radius {delta:.3e} at |x| = {} below {MIN_NEAR_RADIUS:.0e}",
            norm(x)
        )));
    }
    let near = GaussLegendre::new(scheme.near_gauss);
    let near_edges = panels_toward_zero(delta, scheme.near_levels);
    for (a, wa) in periodic_trapezoid(scheme.near_angles) {
        let e = [a.cos(), a.sin()];
        for w in near_edges.windows(2) {
            for (rho, wr) in near.on(w[0], w[1]) {
                visit([x[0] + rho * e[0], x[1] + rho * e[1]], wa * wr * rho);
            }
        }
    }
    let far = GaussLegendre::new(scheme.gauss);
    for (a, wa) in periodic_trapezoid(scheme.far_angles) {
        let e = [a.cos(), a.sin()];
        let reach = exit_distance(x, e);
        let edges = graded_panels(delta, reach, delta.min(scheme.far_cap), scheme.far_cap);
        for w in edges.windows(2) {
            for (rho, wr) in far.on(w[0], w[1]) {
                visit([x[0] + rho * e[0], x[1] + rho * e[1]], wa * wr * rho);
            }
        }
    }
    Ok(())
}

/// Quadrature of the constant 1 with the nodes centred at `x`; equals π
/// up to rounding when the layout covers the disk exactly once.
pub fn unit_integral(x: [f64; 2], scheme: &QuadratureScheme) -> Result<f64> {
    integrate_about(x, scheme, |_| 1.0)
}

/// `∫_disk f` with the nodes centred at `x`.
pub fn integrate_about(x: [f64; 2], scheme: &QuadratureScheme, mut f: impl FnMut([f64; 2]) -> f64) -> Result<f64> {
    let mut total = 0.0;
    for_each_node(x, scheme, |y, w| total += w * f(y))?;
    Ok(total)
}

/// `∂²G(x, y)(u(y) - u(x))·u(y)`.
fn representation_integrand(spec: &VelocityFieldSpec, x: [f64; 2], ux: [f64; 2], y: [f64; 2]) -> f64 {
    let h = hessian_unchecked(x, y);
    let u = spec.disk_velocity(y);
    let d = [u[0] - ux[0], u[1] - ux[1]];
    h[0][0] * d[0] * u[0] + h[0][1] * (d[0] * u[1] + d[1] * u[0]) + h[1][1] * d[1] * u[1]
}

/// Representation integral at `x` before the mean shift.
pub fn representation_raw(spec: &VelocityFieldSpec, x: [f64; 2], scheme: &QuadratureScheme) -> Result<f64> {
    let ux = spec.disk_velocity(x);
    let mut total = 0.0;
    for_each_node(x, scheme, |y, w| total += w * representation_integrand(spec, x, ux, y))?;
    Ok(total)
}

/// Gauss (in `r`, weight `r dr`) × trapezoid (in `φ`) nodes covering the
/// disk, weights summing to π.
pub fn reference_nodes(nr: usize, nphi: usize) -> Vec<([f64; 2], f64)> {
    let gl = GaussLegendre::new(nr);
    let mut out = Vec::with_capacity(nr * nphi);
    for (r, wr) in gl.on(0.0, 1.0) {
        for (a, wa) in periodic_trapezoid(nphi) {
            out.push(([r * a.cos(), r * a.sin()], r * wr * wa));
        }
    }
    out
}

/// Representation solver with its reference-grid mean cached.
#[derive(Debug, Clone)]
pub struct Representation {
    pub spec: VelocityFieldSpec,
    pub scheme: QuadratureScheme,
    /// Quadrature mean of the raw integral over the reference grid.
    pub shift: f64,
}

impl Representation {
    pub fn new(spec: &VelocityFieldSpec, scheme: QuadratureScheme) -> Result<Self> {
        check_disk(spec)?;
        scheme.validate()?;
        let nodes = reference_nodes(scheme.reference.0, scheme.reference.1);
        let values: Vec<f64> = nodes
            .par_iter()
            .map(|(y, _)| representation_raw(spec, *y, &scheme))
            .collect::<Result<_>>()?;
        let shift = nodes.iter().zip(&values).map(|((_, w), v)| w * v).sum::<f64>() / PI;
        Ok(Representation { spec: spec.clone(), scheme, shift })
    }

    pub fn evaluate(&self, targets: &[[f64; 2]]) -> Result<Vec<f64>> {
        targets
            .par_iter()
            .map(|x| representation_raw(&self.spec, *x, &self.scheme).map(|v| v - self.shift))
            .collect()
    }
}

/// Zero-average pressure at `targets` from the representation formula.
pub fn pressure_representation(
    spec: &VelocityFieldSpec,
    targets: &[[f64; 2]],
    scheme: &QuadratureScheme,
) -> Result<Vec<f64>> {
    Representation::new(spec, *scheme)?.evaluate(targets)
}

#[derive(Deserialize)]
struct TargetRow {
    x1: f64,
    x2: f64,
}

/// Target points from CSV with `x1,x2` columns.
pub fn read_targets(reader: impl Read) -> Result<Vec<[f64; 2]>> {
    let mut out = Vec::new();
    for row in csv::Reader::from_reader(reader).deserialize() {
        let row: TargetRow = row?;
        if !(row.x1.is_finite() && row.x2.is_finite()) {
            return Err(LabError::Input("non-finite target coordinate".into()));
        }
        out.push([row.x1, row.x2]);
    }
    Ok(out)
}

/// `∂_i u_j ∂_j u_i` from the closed-form Jacobian.
pub fn div_div_source(spec: &VelocityFieldSpec, x: [f64; 2]) -> f64 {
    let j = spec.disk_jacobian(x);
    j[0][0] * j[0][0] + 2.0 * j[0][1] * j[1][0] + j[1][1] * j[1][1]
}

/// Relative mismatch `|∫F + ∮B| / (|∫F| + |∮B|)` of the Neumann data,
/// by Gauss–trapezoid quadrature of the closed forms.
pub fn compatibility_residual(spec: &VelocityFieldSpec) -> f64 {
    let k = spec.max_wavenumber();
    let panels = ((k / 2.0).ceil() as usize).max(16);
    let n_ang = ((8.0 * k) as usize + 32).max(64);
    let gl = GaussLegendre::new(8);
    let angles = periodic_trapezoid(n_ang);
    let mut interior = 0.0;
    for p in 0..panels {
        let (lo, hi) = (p as f64 / panels as f64, (p + 1) as f64 / panels as f64);
        for (r, wr) in gl.on(lo, hi) {
            for &(a, wa) in &angles {
                interior += r * wr * wa * div_div_source(spec, [r * a.cos(), r * a.sin()]);
            }
        }
    }
    let boundary: f64 = angles
        .iter()
        .map(|&(a, wa)| {
            let u = spec.disk_velocity([a.cos(), a.sin()]);
            wa * (u[0] * u[0] + u[1] * u[1])
        })
        .sum();
    let scale = interior.abs() + boundary.abs();
    if scale < 1e-300 {
        0.0
    } else {
        (interior + boundary).abs() / scale
    }
}

/// Thomas algorithm for a real tridiagonal matrix and complex right side.
fn solve_tridiagonal(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &mut [Complex64]) {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut beta = diag[0];
    rhs[0] /= beta;
    for i in 1..n {
        c[i - 1] = upper[i - 1] / beta;
        beta = diag[i] - lower[i] * c[i - 1];
        let prev = rhs[i - 1];
        rhs[i] = (rhs[i] - prev * lower[i]) / beta;
    }
    for i in (0..n - 1).rev() {
        let next = rhs[i + 1];
        rhs[i] -= next * c[i];
    }
}

/// Zero-average pressure on the `N_r × N_φ` midpoint polar grid.
///
/// Cell `i` spans `[ih, (i+1)h]`; the mode-`m` equation is the flux
/// balance `r_{i+½}(p_{i+1} - p_i) - r_{i-½}(p_i - p_{i-1}) - (mh)²/r_i·p_i
/// = -r_i h² F_i` with no flux through `r = 0` and flux `h·B` through
/// `r = 1`. The `m = 0` system is singular: the source is projected onto
/// the compatible subspace and the first ring pinned before solving.
pub fn pressure_fd(spec: &VelocityFieldSpec, nr: usize, nphi: usize) -> Result<GridField> {
    check_disk(spec)?;
    if nr < 4 || nphi < 8 {
        return Err(LabError::Parameter(format!("polar grid {nr}x{nphi} too small")));
    }
    let residual = compatibility_residual(spec);
    if residual > COMPATIBILITY_TOL {
        return Err(LabError::Compatibility {
            residual,
            tolerance: COMPATIBILITY_TOL,
            context: "Neumann data (non-tangential or non-solenoidal velocity?)",
        });
    }
    let geometry = Geometry::Polar { nr, nphi };
    let h = 1.0 / nr as f64;
    let radii = geometry.radii();

    let mut planner = FftPlanner::<f64>::new();
    let forward = planner.plan_fft_forward(nphi);
    let inverse = planner.plan_fft_inverse(nphi);

    // ring-major spectra of the source, one row per ring
    let mut source: Vec<Complex64> = (0..nr * nphi)
        .into_par_iter()
        .map(|idx| {
            let c = geometry.coords(idx);
            Complex64::new(div_div_source(spec, [c[0], c[1]]), 0.0)
        })
        .collect();
    for row in source.chunks_mut(nphi) {
        forward.process(row);
    }
    let mut flux: Vec<Complex64> = (0..nphi)
        .map(|k| {
            let a = 2.0 * PI * k as f64 / nphi as f64;
            let u = spec.disk_velocity([a.cos(), a.sin()]);
            Complex64::new(u[0] * u[0] + u[1] * u[1], 0.0)
        })
        .collect();
    forward.process(&mut flux);

    let modes: Vec<Vec<Complex64>> = (0..nphi)
        .into_par_iter()
        .map(|k| {
            let m = k.min(nphi - k) as f64;
            let mut f: Vec<Complex64> = (0..nr).map(|i| source[i * nphi + k]).collect();
            if k == 0 {
                let mismatch = (flux[0] + f.iter().zip(&radii).map(|(fi, r)| fi * (r * h)).sum::<Complex64>()) * 2.0;
                for fi in &mut f {
                    *fi -= mismatch;
                }
            }
            let mut lower = vec![0.0; nr];
            let mut diag = vec![0.0; nr];
            let mut upper = vec![0.0; nr];
            let mut rhs = vec![Complex64::new(0.0, 0.0); nr];
            for i in 0..nr {
                let inner = i as f64 * h;
                let outer = if i + 1 < nr { (i + 1) as f64 * h } else { 0.0 };
                lower[i] = inner;
                upper[i] = outer;
                diag[i] = -(inner + outer) - (m * h).powi(2) / radii[i];
                rhs[i] = -f[i] * (radii[i] * h * h);
            }
            rhs[nr - 1] -= flux[k] * h;
            if k == 0 {
                diag[0] = 1.0;
                upper[0] = 0.0;
                rhs[0] = Complex64::new(0.0, 0.0);
            }
            solve_tridiagonal(&lower, &diag, &upper, &mut rhs);
            rhs
        })
        .collect();

    let mut values = vec![0.0; nr * nphi];
    let mut row = vec![Complex64::new(0.0, 0.0); nphi];
    for i in 0..nr {
        for (k, slot) in row.iter_mut().enumerate() {
            *slot = modes[k][i];
        }
        inverse.process(&mut row);
        for (k, v) in row.iter().enumerate() {
            values[i * nphi + k] = v.re / nphi as f64;
        }
    }
    let mut p = GridField::new(geometry, 1, values)?;
    p.remove_mean();
    p.check_finite()?;
    Ok(p)
}

/// Closed-form test functions for the weak formulation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TestFunction {
    /// `y₁^a y₂^b`.
    Monomial { a: u32, b: u32 },
    /// `cos(k·y + phase)`.
    PlaneWave { k: [f64; 2], phase: f64 },
    /// `Re zᵐ`, or `Im zᵐ` when `imaginary`.
    Harmonic { m: u32, imaginary: bool },
}

fn powi(x: f64, n: i64) -> f64 {
    if n < 0 {
        0.0
    } else {
        x.powi(n as i32)
    }
}

impl TestFunction {
    pub fn value(&self, y: [f64; 2]) -> f64 {
        match *self {
            TestFunction::Monomial { a, b } => powi(y[0], a as i64) * powi(y[1], b as i64),
            TestFunction::PlaneWave { k, phase } => (k[0] * y[0] + k[1] * y[1] + phase).cos(),
            TestFunction::Harmonic { m, imaginary } => {
                let z = Complex64::new(y[0], y[1]).powu(m);
                if imaginary {
                    z.im
                } else {
                    z.re
                }
            }
        }
    }

    pub fn gradient(&self, y: [f64; 2]) -> [f64; 2] {
        match *self {
            TestFunction::Monomial { a, b } => {
                let (a, b) = (a as i64, b as i64);
                [
                    a as f64 * powi(y[0], a - 1) * powi(y[1], b),
                    b as f64 * powi(y[0], a) * powi(y[1], b - 1),
                ]
            }
            TestFunction::PlaneWave { k, phase } => {
                let s = -(k[0] * y[0] + k[1] * y[1] + phase).sin();
                [k[0] * s, k[1] * s]
            }
            TestFunction::Harmonic { m, imaginary } => {
                // f' = m z^{m-1}; ∂₁ = f', ∂₂ = i f'
                if m == 0 {
                    return [0.0, 0.0];
                }
                let d = Complex64::new(y[0], y[1]).powu(m - 1) * m as f64;
                if imaginary {
                    [d.im, d.re]
                } else {
                    [d.re, -d.im]
                }
            }
        }
    }

    /// `[∂₁₁, ∂₁₂, ∂₂₂]`.
    pub fn hessian(&self, y: [f64; 2]) -> [f64; 3] {
        match *self {
            TestFunction::Monomial { a, b } => {
                let (a, b) = (a as i64, b as i64);
                let (af, bf) = (a as f64, b as f64);
                [
                    af * (af - 1.0) * powi(y[0], a - 2) * powi(y[1], b),
                    af * bf * powi(y[0], a - 1) * powi(y[1], b - 1),
                    bf * (bf - 1.0) * powi(y[0], a) * powi(y[1], b - 2),
                ]
            }
            TestFunction::PlaneWave { k, phase } => {
                let c = -(k[0] * y[0] + k[1] * y[1] + phase).cos();
                [k[0] * k[0] * c, k[0] * k[1] * c, k[1] * k[1] * c]
            }
            TestFunction::Harmonic { m, imaginary } => {
                if m < 2 {
                    return [0.0; 3];
                }
                let d = Complex64::new(y[0], y[1]).powu(m - 2) * (m * (m - 1)) as f64;
                // ∂₁₁ = f'', ∂₁₂ = i f'', ∂₂₂ = -f''
                let (a, b) = if imaginary { (d.im, d.re) } else { (d.re, -d.im) };
                [a, b, -a]
            }
        }
    }

    pub fn laplacian(&self, y: [f64; 2]) -> f64 {
        let h = self.hessian(y);
        h[0] + h[2]
    }

    /// Outward normal derivative on the unit circle at angle `a`.
    pub fn normal_derivative(&self, a: f64) -> f64 {
        let n = [a.cos(), a.sin()];
        let g = self.gradient(n);
        g[0] * n[0] + g[1] * n[1]
    }
}

/// A fixed mix of monomials, harmonic polynomials and plane waves.
pub fn standard_test_functions() -> Vec<TestFunction> {
    vec![
        TestFunction::Monomial { a: 2, b: 0 },
        TestFunction::Monomial { a: 1, b: 1 },
        TestFunction::Monomial { a: 3, b: 1 },
        TestFunction::Harmonic { m: 2, imaginary: false },
        TestFunction::Harmonic { m: 3, imaginary: true },
        TestFunction::PlaneWave { k: [1.0, 2.0], phase: 0.3 },
    ]
}

/// `count` test functions drawn deterministically from `seed`, cycling
/// through the three families.
pub fn seeded_test_functions(seed: u64, count: usize) -> Vec<TestFunction> {
    let mut rng = rng::stream(seed, "test-functions");
    (0..count)
        .map(|i| match i % 3 {
            0 => {
                let a = rng.gen_range(0..=4);
                TestFunction::Monomial { a, b: rng.gen_range(0..=(4 - a)) }
            }
            1 => TestFunction::Harmonic { m: rng.gen_range(1..=6), imaginary: rng.gen() },
            _ => {
                let kk = rng.gen_range(0.5..4.0);
                let a = rng.gen::<f64>() * 2.0 * PI;
                TestFunction::PlaneWave { k: [kk * a.cos(), kk * a.sin()], phase: rng.gen::<f64>() * 2.0 * PI }
            }
        })
        .collect()
}

/// `|-∫ p Δφ + ∮ p ∂_n φ - ∫ u⊗u : ∇²φ|` with midpoint polar quadrature on
/// the grid of `p`; boundary values of `p` by quadratic extrapolation
/// from the three outermost rings.
pub fn weak_residual(p: &GridField, spec: &VelocityFieldSpec, phi: &TestFunction) -> Result<f64> {
    Ok(weak_residuals(p, spec, std::slice::from_ref(phi))?[0])
}

/// [`weak_residual`] for several test functions, sampling `u` once.
pub fn weak_residuals(p: &GridField, spec: &VelocityFieldSpec, phis: &[TestFunction]) -> Result<Vec<f64>> {
    let Geometry::Polar { nr, nphi } = p.geometry else {
        return Err(LabError::Shape("weak residual needs a polar grid".into()));
    };
    if nr < 3 || p.components != 1 {
        return Err(LabError::Shape("weak residual needs a scalar field with at least 3 rings".into()));
    }
    let values = p.component(0);
    // per-ring partial sums, added in ring order so the result is reproducible
    let rings: Vec<Vec<f64>> = (0..nr)
        .into_par_iter()
        .map(|i| {
            let mut acc = vec![0.0; phis.len()];
            for k in 0..nphi {
                let idx = i * nphi + k;
                let c = p.geometry.coords(idx);
                let y = [c[0], c[1]];
                let u = spec.disk_velocity(y);
                let w = p.geometry.weight(idx);
                for (a, phi) in acc.iter_mut().zip(phis) {
                    let h = phi.hessian(y);
                    let uu_h = u[0] * u[0] * h[0] + 2.0 * u[0] * u[1] * h[1] + u[1] * u[1] * h[2];
                    *a += w * (-values[idx] * (h[0] + h[2]) - uu_h);
                }
            }
            acc
        })
        .collect();
    let mut total = vec![0.0; phis.len()];
    for ring in rings {
        for (t, r) in total.iter_mut().zip(ring) {
            *t += r;
        }
    }
    let da = 2.0 * PI / nphi as f64;
    for k in 0..nphi {
        let ring = |i: usize| values[i * nphi + k];
        let edge = (15.0 * ring(nr - 1) - 10.0 * ring(nr - 2) + 3.0 * ring(nr - 3)) / 8.0;
        for (t, phi) in total.iter_mut().zip(phis) {
            *t += da * edge * phi.normal_derivative(k as f64 * da);
        }
    }
    Ok(total.into_iter().map(f64::abs).collect())
}

/// Near/far decomposition of `p(x₁) - p(x₂)` with `λ = |x₁ - x₂|` and
/// `x̄` the midpoint:
///
/// * `a`: both representation integrals restricted to `B(x̄, λ) ∩ Ω`;
/// * `b1`: `∫_{Ω∖B} (∂²G(x₁,·) - ∂²G(x₂,·))(u - u(x₁))·u`;
/// * `b2`: the remaining `∫_{Ω∖B} ∂²G(x₂,·)(u(x₂) - u(x₁))·u` after one
///   more integration by parts, a line integral over `∂B ∩ Ω` (the
///   boundary part vanishes by tangency).
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ProofSplit {
    pub x1: [f64; 2],
    pub x2: [f64; 2],
    pub lambda: f64,
    pub a: f64,
    pub b1: f64,
    pub b2: f64,
    pub reconstructed: f64,
}

impl ProofSplit {
    pub fn largest_term(&self) -> f64 {
        self.a.abs().max(self.b1.abs()).max(self.b2.abs())
    }

    pub fn term_sum(&self) -> f64 {
        self.a.abs() + self.b1.abs() + self.b2.abs()
    }
}

/// Ray length from `x` in direction `e` to the circle of radius `radius`
/// around `c`, assuming `x` lies inside it.
fn ball_exit(x: [f64; 2], c: [f64; 2], radius: f64, e: [f64; 2]) -> f64 {
    let d = [x[0] - c[0], x[1] - c[1]];
    let de = d[0] * e[0] + d[1] * e[1];
    -de + (de * de + radius * radius - d[0] * d[0] - d[1] * d[1]).max(0.0).sqrt()
}

/// `∫_{B(c,λ) ∩ Ω} ∂²G(x,·)(u - u(x))·u` in polar coordinates about `x`.
fn ball_term(spec: &VelocityFieldSpec, x: [f64; 2], c: [f64; 2], lambda: f64, scheme: &QuadratureScheme) -> f64 {
    let ux = spec.disk_velocity(x);
    let gl = GaussLegendre::new(scheme.near_gauss);
    let mut total = 0.0;
    for (a, wa) in periodic_trapezoid(scheme.near_angles.max(128)) {
        let e = [a.cos(), a.sin()];
        let limit = ball_exit(x, c, lambda, e).min(exit_distance(x, e));
        let edges = capped(&panels_toward_zero(limit, scheme.near_levels), scheme.far_cap);
        for w in edges.windows(2) {
            for (rho, wr) in gl.on(w[0], w[1]) {
                let y = [x[0] + rho * e[0], x[1] + rho * e[1]];
                total += wa * wr * rho * representation_integrand(spec, x, ux, y);
            }
        }
    }
    total
}

/// Polar quadrature about `c` over `Ω ∖ B(c, λ)`.
fn outside_ball(c: [f64; 2], lambda: f64, scheme: &QuadratureScheme, mut f: impl FnMut([f64; 2]) -> f64) -> f64 {
    let gl = GaussLegendre::new(scheme.gauss);
    let mut total = 0.0;
    for (a, wa) in periodic_trapezoid(scheme.far_angles) {
        let e = [a.cos(), a.sin()];
        let reach = exit_distance(c, e);
        if reach <= lambda {
            continue;
        }
        let edges = graded_panels(lambda, reach, (0.25 * lambda).min(scheme.far_cap), scheme.far_cap);
        for w in edges.windows(2) {
            for (rho, wr) in gl.on(w[0], w[1]) {
                total += wa * wr * rho * f([c[0] + rho * e[0], c[1] + rho * e[1]]);
            }
        }
    }
    total
}

/// Angular intervals of `∂B(c, λ)` inside the open disk.
fn arc_inside(c: [f64; 2], lambda: f64) -> Option<(f64, f64)> {
    let rc = norm(c);
    if rc + lambda < 1.0 {
        return Some((0.0, 2.0 * PI));
    }
    // |c + λe|² < 1  ⇔  cos(α - arg c) < (1 - |c|² - λ²)/(2λ|c|)
    let bound = (1.0 - rc * rc - lambda * lambda) / (2.0 * lambda * rc);
    if bound <= -1.0 {
        return None;
    }
    let half = bound.min(1.0).acos();
    let base = c[1].atan2(c[0]);
    Some((base + half, base + 2.0 * PI - half))
}

/// `c_i ∫_{∂B(x̄,λ) ∩ Ω} ∂_{y_i}G(x₂, y) u_j(y) n_j dS` with `n` pointing
/// into the ball (outward from `Ω ∖ B`).
fn arc_term(spec: &VelocityFieldSpec, x2: [f64; 2], c: [f64; 2], mid: [f64; 2], lambda: f64, scheme: &QuadratureScheme) -> f64 {
    let Some((lo, hi)) = arc_inside(mid, lambda) else {
        return 0.0;
    };
    let integrand = |a: f64| {
        let e = [a.cos(), a.sin()];
        let y = [mid[0] + lambda * e[0], mid[1] + lambda * e[1]];
        let g = gradient_unchecked(x2, y);
        let u = spec.disk_velocity(y);
        -(g[0] * c[0] + g[1] * c[1]) * (u[0] * e[0] + u[1] * e[1]) * lambda
    };
    if hi - lo >= 2.0 * PI - 1e-15 {
        return periodic_trapezoid(scheme.far_angles).into_iter().map(|(a, w)| w * integrand(a)).sum();
    }
    let gl = GaussLegendre::new(scheme.gauss);
    let panels = (scheme.far_angles / scheme.gauss).max(1);
    let step = (hi - lo) / panels as f64;
    (0..panels)
        .map(|p| gl.integrate(lo + p as f64 * step, lo + (p + 1) as f64 * step, integrand))
        .sum()
}

/// Splits `p(x₁) - p(x₂)` into near term, kernel-difference term and arc
/// term; see [`ProofSplit`].
pub fn proof_split(spec: &VelocityFieldSpec, x1: [f64; 2], x2: [f64; 2], scheme: &QuadratureScheme) -> Result<ProofSplit> {
    check_disk(spec)?;
    scheme.validate()?;
    check_interior(x1)?;
    check_interior(x2)?;
    let lambda = (x1[0] - x2[0]).hypot(x1[1] - x2[1]);
    if lambda == 0.0 {
        return Ok(ProofSplit { x1, x2, lambda, a: 0.0, b1: 0.0, b2: 0.0, reconstructed: 0.0 });
    }
    if lambda / 4.0 < MIN_NEAR_RADIUS {
        return Err(LabError::Resolution(format!("λ = {lambda:.3e} below the near-field resolution")));
    }
    let mid = [0.5 * (x1[0] + x2[0]), 0.5 * (x1[1] + x2[1])];
    let a = ball_term(spec, x1, mid, lambda, scheme) - ball_term(spec, x2, mid, lambda, scheme);
    let u1 = spec.disk_velocity(x1);
    let u2 = spec.disk_velocity(x2);
    let b1 = outside_ball(mid, lambda, scheme, |y| {
        let (h1, h2) = (hessian_unchecked(x1, y), hessian_unchecked(x2, y));
        let u = spec.disk_velocity(y);
        let d = [u[0] - u1[0], u[1] - u1[1]];
        let mut s = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                s += (h1[i][j] - h2[i][j]) * d[i] * u[j];
            }
        }
        s
    });
    let c = [u2[0] - u1[0], u2[1] - u1[1]];
    let b2 = arc_term(spec, x2, c, mid, lambda, scheme);
    Ok(ProofSplit { x1, x2, lambda, a, b1, b2, reconstructed: a + b1 + b2 })
}

/// Volume form of the arc term, `c_i ∫_{Ω∖B} ∂²_{ij}G(x₂,·) u_j`; the
/// arc integral must agree with it.
pub fn arc_term_volume_form(spec: &VelocityFieldSpec, x1: [f64; 2], x2: [f64; 2], scheme: &QuadratureScheme) -> f64 {
    let lambda = (x1[0] - x2[0]).hypot(x1[1] - x2[1]);
    let mid = [0.5 * (x1[0] + x2[0]), 0.5 * (x1[1] + x2[1])];
    let (u1, u2) = (spec.disk_velocity(x1), spec.disk_velocity(x2));
    let c = [u2[0] - u1[0], u2[1] - u1[1]];
    outside_ball(mid, lambda, scheme, |y| {
        let h = hessian_unchecked(x2, y);
        let u = spec.disk_velocity(y);
        (0..2).map(|i| (0..2).map(|j| c[i] * h[i][j] * u[j]).sum::<f64>()).sum()
    })
}

/// Sup over `directions` unit vectors of the largest proof term at
/// separation `lambda` around `center`.
pub fn proof_terms_sup(
    spec: &VelocityFieldSpec,
    center: [f64; 2],
    lambda: f64,
    directions: usize,
    scheme: &QuadratureScheme,
) -> Result<[f64; 3]> {
    let mut sup = [0.0f64; 3];
    for k in 0..directions {
        let a = PI * k as f64 / directions as f64;
        let e = [0.5 * lambda * a.cos(), 0.5 * lambda * a.sin()];
        let split = proof_split(spec, [center[0] + e[0], center[1] + e[1]], [center[0] - e[0], center[1] - e[1]], scheme)?;
        sup[0] = sup[0].max(split.a.abs());
        sup[1] = sup[1].max(split.b1.abs());
        sup[2] = sup[2].max(split.b2.abs());
    }
    Ok(sup)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::make_disk_field;

    fn rotation_pressure(x: [f64; 2]) -> f64 {
        0.5 * (x[0] * x[0] + x[1] * x[1]) - 0.25
    }

    #[test]
    fn layout_integrates_one_to_pi() {
        let scheme = QuadratureScheme::default();
        for x in [[0.0, 0.0], [0.3, -0.4], [0.0, 0.97], [-0.7, 0.7]] {
            assert!((unit_integral(x, &scheme).unwrap() - PI).abs() < 1e-8, "x = {x:?}");
        }
        // ∫ (y₁² + 3y₁y₂ + y₂ + y₁⁴) = π/4 + π/8
        let poly = |y: [f64; 2]| y[0] * y[0] + 3.0 * y[0] * y[1] + y[1] + y[0].powi(4);
        for x in [[0.0, 0.0], [0.3, -0.4], [0.0, 0.99], [-0.7, 0.7], [0.999, 0.0]] {
            let v = integrate_about(x, &scheme, poly).unwrap();
            assert!((v - 3.0 * PI / 8.0).abs() < 1e-8, "x = {x:?}: {v}");
        }
        let w: f64 = reference_nodes(16, 32).iter().map(|n| n.1).sum();
        assert!((w - PI).abs() < 1e-12);
    }

    #[test]
    fn representation_reproduces_rotation() {
        let spec = VelocityFieldSpec::rigid_rotation();
        let targets = [[0.0, 0.0], [0.5, 0.1], [-0.2, 0.7], [0.0, -0.95]];
        let p = pressure_representation(&spec, &targets, &QuadratureScheme::default()).unwrap();
        for (x, v) in targets.iter().zip(p) {
            assert!((v - rotation_pressure(*x)).abs() < 1e-3, "{x:?}: {v}");
        }
    }

    #[test]
    fn representation_errors() {
        let spec = VelocityFieldSpec::rigid_rotation();
        let scheme = QuadratureScheme::default();
        assert!(matches!(representation_raw(&spec, [1.0, 0.0], &scheme), Err(LabError::Domain { .. })));
        assert!(matches!(representation_raw(&spec, [1.0 - 1e-7, 0.0], &scheme), Err(LabError::Resolution(_))));
        let zero = pressure_representation(&VelocityFieldSpec::disk_zero(), &[[0.2, 0.2]], &scheme).unwrap();
        assert_eq!(zero[0], 0.0);
    }

    #[test]
    fn fd_reproduces_rotation_at_second_order() {
        let spec = VelocityFieldSpec::rigid_rotation();
        let err = |n: usize| {
            let p = pressure_fd(&spec, n, n).unwrap();
            (0..p.n_nodes())
                .map(|i| {
                    let c = p.geometry.coords(i);
                    (p.values[i] - rotation_pressure([c[0], c[1]])).abs()
                })
                .fold(0.0, f64::max)
        };
        let (e64, e128) = (err(64), err(128));
        assert!(e128 < 1e-4);
        assert!(e64 / e128 >= 3.5, "{e64} / {e128}");
    }

    #[test]
    fn fd_zero_field_and_bad_input() {
        let p = pressure_fd(&VelocityFieldSpec::disk_zero(), 16, 16).unwrap();
        assert_eq!(p.max_abs(), 0.0);
        // without the envelope the stream function is not constant on the circle
        let mut leaky = make_disk_field(0.4, 2, 1).unwrap();
        leaky.envelope = false;
        assert!(matches!(pressure_fd(&leaky, 32, 32), Err(LabError::Compatibility { .. })));
        assert!(pressure_fd(&VelocityFieldSpec::rigid_rotation(), 2, 32).is_err());
    }

    #[test]
    fn fd_agrees_with_representation_on_a_smooth_field() {
        let spec = make_disk_field(0.4, 2, 3).unwrap();
        let p = pressure_fd(&spec, 256, 512).unwrap();
        let targets: Vec<[f64; 2]> = [(40usize, 3usize), (128, 100), (200, 333), (250, 17)]
            .iter()
            .map(|&(i, k)| {
                let c = p.geometry.coords(i * 512 + k);
                [c[0], c[1]]
            })
            .collect();
        let rep = pressure_representation(&spec, &targets, &QuadratureScheme::for_field(&spec)).unwrap();
        let scale = p.max_abs();
        for ((i, k), v) in [(40usize, 3usize), (128, 100), (200, 333), (250, 17)].iter().zip(rep) {
            let fd = p.values[i * 512 + k];
            assert!((fd - v).abs() < 1e-3 * scale, "ring {i}: fd {fd} rep {v}");
        }
    }

    #[test]
    fn test_function_derivatives_match_differences() {
        let mut all = standard_test_functions();
        all.extend(seeded_test_functions(4, 12));
        let y = [0.31, -0.47];
        let h = 1e-5;
        for phi in all {
            let g = phi.gradient(y);
            let hs = phi.hessian(y);
            let fd = |i: usize, f: &dyn Fn([f64; 2]) -> f64| {
                let mut p = y;
                let mut m = y;
                p[i] += h;
                m[i] -= h;
                (f(p) - f(m)) / (2.0 * h)
            };
            for i in 0..2 {
                assert!((fd(i, &|z| phi.value(z)) - g[i]).abs() < 1e-7, "{phi:?}");
            }
            assert!((fd(0, &|z| phi.gradient(z)[0]) - hs[0]).abs() < 1e-6, "{phi:?}");
            assert!((fd(1, &|z| phi.gradient(z)[0]) - hs[1]).abs() < 1e-6, "{phi:?}");
            assert!((fd(1, &|z| phi.gradient(z)[1]) - hs[2]).abs() < 1e-6, "{phi:?}");
        }
        assert_eq!(TestFunction::Harmonic { m: 4, imaginary: false }.laplacian(y), 0.0);
    }

    #[test]
    fn weak_residual_examples() {
        let rot = VelocityFieldSpec::rigid_rotation();
        let p = pressure_fd(&rot, 128, 128).unwrap();
        let phi = TestFunction::Monomial { a: 2, b: 0 };
        let harmonic = TestFunction::Harmonic { m: 2, imaginary: false };
        assert!(weak_residual(&p, &rot, &harmonic).unwrap() < 1e-4);
        assert!(weak_residual(&p, &rot, &phi).unwrap() < 1e-3);

        let zero = VelocityFieldSpec::disk_zero();
        let p0 = pressure_fd(&zero, 32, 32).unwrap();
        for phi in seeded_test_functions(1, 6) {
            assert!(weak_residual(&p0, &zero, &phi).unwrap() < 1e-12);
        }
        // a wrong pressure is detected
        let mut bad = p.clone();
        bad.values.iter_mut().for_each(|v| *v *= 1.5);
        assert!(weak_residual(&bad, &rot, &phi).unwrap() > 1e-2);
    }

    #[test]
    fn proof_split_reconstructs_the_difference() {
        let spec = make_disk_field(0.4, 3, 5).unwrap();
        let scheme = QuadratureScheme::for_field(&spec);
        for (x1, x2) in [([0.1, 0.2], [0.16, 0.25]), ([0.5, -0.3], [0.3, -0.3]), ([0.0, 0.9], [0.05, 0.82])] {
            let split = proof_split(&spec, x1, x2, &scheme).unwrap();
            let direct = representation_raw(&spec, x1, &scheme).unwrap() - representation_raw(&spec, x2, &scheme).unwrap();
            assert!(
                (split.reconstructed - direct).abs() < 1e-2 * split.term_sum(),
                "{split:?} vs {direct}"
            );
        }
        let same = proof_split(&spec, [0.1, 0.1], [0.1, 0.1], &scheme).unwrap();
        assert_eq!((same.a, same.b1, same.b2), (0.0, 0.0, 0.0));
        assert!(matches!(
            proof_split(&spec, [0.1, 0.1], [0.1, 0.1 + 1e-7], &scheme),
            Err(LabError::Resolution(_))
        ));
    }

    #[test]
    fn arc_term_matches_its_volume_form() {
        let spec = make_disk_field(0.4, 3, 8).unwrap();
        let scheme = QuadratureScheme::for_field(&spec);
        // interior ball and one cut by the boundary circle
        for (x1, x2) in [([0.2, 0.1], [0.3, 0.05]), ([0.0, 0.85], [0.1, 0.8])] {
            let split = proof_split(&spec, x1, x2, &scheme).unwrap();
            let volume = arc_term_volume_form(&spec, x1, x2, &scheme);
            assert!((split.b2 - volume).abs() < 1e-6 * volume.abs().max(1e-3), "{} vs {volume}", split.b2);
        }
    }

    #[test]
    fn targets_from_csv() {
        let pts = read_targets("x1,x2\n0.1,0.2\n-0.3,0.4\n".as_bytes()).unwrap();
        assert_eq!(pts, vec![[0.1, 0.2], [-0.3, 0.4]]);
        assert!(read_targets("x1,x2\n0.1,abc\n".as_bytes()).is_err());
    }
}
