//! Smooth, divergence-free, tangential approximation of disk fields.
//!
//! `ũ_ε = η_ε * u` is computed by a fixed tensor Gauss rule over the bump
//! support applied to the closed-form field (globally defined, so no
//! extension step is needed). Mollification preserves `div u = 0` but not
//! tangency, so the harmonic Neumann correction `Δφ = 0`, `∂_r φ = ũ_ε·n`
//! on `|x| = 1` is subtracted: `u^ε = ũ_ε - ∇φ`.

use super::{Domain, VelocityFieldSpec};
use crate::error::{LabError, Result};
use crate::grid::{Geometry, GridField};
use crate::quadrature::GaussLegendre;
use num_complex::Complex64;
use rustfft::FftPlanner;
use std::f64::consts::PI;

/// Nodes per axis of the tensor rule over `[-ε, ε]²`.
pub const MOLLIFIER_NODES: usize = 33;
/// Largest admissible mean boundary flux of the mollified field.
pub const FLUX_TOLERANCE: f64 = 1e-8;

/// Normalized `C^∞` radial bump `exp(-1/(1 - |z/ε|²))` of radius `ε`.
#[derive(Debug, Clone)]
pub struct Mollifier {
    pub epsilon: f64,
    offsets: Vec<[f64; 2]>,
    weights: Vec<f64>,
}

impl Mollifier {
    pub fn new(epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(LabError::Parameter(format!("epsilon must be positive, got {epsilon}")));
        }
        let gl = GaussLegendre::new(MOLLIFIER_NODES);
        let mut offsets = Vec::new();
        let mut weights = Vec::new();
        for (a, wa) in gl.on(-epsilon, epsilon) {
            for (b, wb) in gl.on(-epsilon, epsilon) {
                let s = (a * a + b * b) / (epsilon * epsilon);
                if s < 1.0 {
                    let bump = (-1.0 / (1.0 - s)).exp();
                    if bump > 0.0 {
                        offsets.push([a, b]);
                        weights.push(wa * wb * bump);
                    }
                }
            }
        }
        let total: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= total);
        Ok(Mollifier { epsilon, offsets, weights })
    }

    /// `(η_ε * u)(x)` by the discrete rule.
    pub fn apply(&self, spec: &VelocityFieldSpec, x: [f64; 2]) -> [f64; 2] {
        let mut acc = [0.0; 2];
        for (z, w) in self.offsets.iter().zip(&self.weights) {
            let v = spec.disk_velocity([x[0] - z[0], x[1] - z[1]]);
            acc[0] += w * v[0];
            acc[1] += w * v[1];
        }
        acc
    }
}

/// The approximant `u^ε` sampled on a polar grid with its diagnostics.
#[derive(Debug, Clone)]
pub struct MollifiedField {
    pub field: GridField,
    pub epsilon: f64,
    /// Mean boundary flux of `ũ_ε` (the `m = 0` coefficient).
    pub flux_mean: f64,
    /// `max |u^ε·n|` over the tangency check points on `|x| = 1`.
    pub tangency_residual: f64,
    /// `max |u^ε - u|` over the grid nodes.
    pub c0_distance: f64,
    /// Boundary flux coefficients `b_m`, `m` in FFT order.
    flux_coeffs: Vec<Complex64>,
}

impl MollifiedField {
    /// `∇φ` at a point, from the flux coefficients.
    pub fn correction_gradient(&self, x: [f64; 2]) -> [f64; 2] {
        correction_gradient(&self.flux_coeffs, x)
    }
}

fn signed_mode(idx: usize, n: usize) -> i64 {
    if idx <= n / 2 {
        idx as i64
    } else {
        idx as i64 - n as i64
    }
}

/// `φ = Σ_{m≠0} (b_m/|m|) r^{|m|} e^{imφ}`; returns the Cartesian gradient.
fn correction_gradient(coeffs: &[Complex64], x: [f64; 2]) -> [f64; 2] {
    let n = coeffs.len();
    let r = x[0].hypot(x[1]);
    let phi = x[1].atan2(x[0]);
    let (mut dr, mut dphi_over_r) = (0.0, 0.0);
    for (idx, b) in coeffs.iter().enumerate() {
        let m = signed_mode(idx, n);
        if m == 0 || (n % 2 == 0 && idx == n / 2) {
            continue;
        }
        let am = m.unsigned_abs() as i32;
        let rad = r.powi(am - 1);
        if rad == 0.0 {
            continue;
        }
        let e = Complex64::from_polar(1.0, m as f64 * phi);
        let term = b * e * rad;
        dr += term.re;
        // (1/r)∂_φ of (b/|m|) r^{|m|} e^{imφ} = i·sign(m)·b r^{|m|-1} e^{imφ}
        dphi_over_r += (term * Complex64::new(0.0, m.signum() as f64)).re;
    }
    let (c, s) = (phi.cos(), phi.sin());
    [dr * c - dphi_over_r * s, dr * s + dphi_over_r * c]
}

/// Builds `u^ε = η_ε * u - ∇φ^ε` on `geometry` (a polar grid).
///
/// `boundary_nodes` points on the unit circle carry the flux transform and
/// `check_points` further equispaced points (offset by half a step) are used
/// for the tangency residual.
pub fn mollify_and_correct(
    spec: &VelocityFieldSpec,
    epsilon: f64,
    geometry: Geometry,
    boundary_nodes: usize,
    check_points: usize,
) -> Result<MollifiedField> {
    if spec.domain != Domain::UnitDisk {
        return Err(LabError::Parameter("mollify_and_correct needs a disk field".into()));
    }
    if !matches!(geometry, Geometry::Polar { .. }) {
        return Err(LabError::Shape("mollified fields are sampled on a polar grid".into()));
    }
    if boundary_nodes < 8 {
        return Err(LabError::Parameter("need at least 8 boundary nodes".into()));
    }
    let moll = Mollifier::new(epsilon)?;

    let mut flux: Vec<Complex64> = (0..boundary_nodes)
        .map(|k| {
            let a = 2.0 * PI * k as f64 / boundary_nodes as f64;
            let n = [a.cos(), a.sin()];
            let v = moll.apply(spec, n);
            Complex64::new(v[0] * n[0] + v[1] * n[1], 0.0)
        })
        .collect();
    FftPlanner::new().plan_fft_forward(boundary_nodes).process(&mut flux);
    let scale = 1.0 / boundary_nodes as f64;
    flux.iter_mut().for_each(|c| *c *= scale);
    let flux_mean = flux[0].re;
    if flux_mean.abs() > FLUX_TOLERANCE {
        return Err(LabError::Compatibility {
            residual: flux_mean.abs(),
            tolerance: FLUX_TOLERANCE,
            context: "mean boundary flux of the mollified field",
        });
    }

    let n = geometry.n_nodes();
    let mut values = vec![0.0; 2 * n];
    let mut c0_distance: f64 = 0.0;
    for i in 0..n {
        let c = geometry.coords(i);
        let x = [c[0], c[1]];
        let m = moll.apply(spec, x);
        let g = correction_gradient(&flux, x);
        let v = [m[0] - g[0], m[1] - g[1]];
        let exact = spec.disk_velocity(x);
        c0_distance = c0_distance.max((v[0] - exact[0]).hypot(v[1] - exact[1]));
        values[i] = v[0];
        values[n + i] = v[1];
    }

    let mut tangency_residual: f64 = 0.0;
    for k in 0..check_points {
        let a = 2.0 * PI * (k as f64 + 0.5) / check_points as f64;
        let nrm = [a.cos(), a.sin()];
        let m = moll.apply(spec, nrm);
        let g = correction_gradient(&flux, nrm);
        let un = (m[0] - g[0]) * nrm[0] + (m[1] - g[1]) * nrm[1];
        tangency_residual = tangency_residual.max(un.abs());
    }

    Ok(MollifiedField {
        field: GridField::new(geometry, 2, values)?,
        epsilon,
        flux_mean,
        tangency_residual,
        c0_distance,
        flux_coeffs: flux,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::make_disk_field;

    #[test]
    fn mollifier_is_normalized_and_symmetric() {
        let m = Mollifier::new(0.1).unwrap();
        let total: f64 = m.weights.iter().sum();
        assert!((total - 1.0).abs() < 1e-14);
        let first: f64 = m.offsets.iter().zip(&m.weights).map(|(z, w)| w * z[0]).sum();
        assert!(first.abs() < 1e-16);
        assert!(Mollifier::new(0.0).is_err());
    }

    #[test]
    fn rigid_rotation_is_a_fixed_point() {
        let spec = VelocityFieldSpec::rigid_rotation();
        let g = Geometry::Polar { nr: 8, nphi: 16 };
        let out = mollify_and_correct(&spec, 0.05, g, 64, 100).unwrap();
        assert!(out.c0_distance < 1e-14, "{}", out.c0_distance);
        assert!(out.tangency_residual < 1e-14);
        let grad = out.correction_gradient([0.3, -0.2]);
        assert!(grad[0].abs() < 1e-14 && grad[1].abs() < 1e-14);
    }

    #[test]
    fn correction_restores_tangency() {
        let spec = make_disk_field(0.4, 4, 2).unwrap();
        let g = Geometry::Polar { nr: 16, nphi: 32 };
        let out = mollify_and_correct(&spec, 0.1, g, 256, 1000).unwrap();
        assert!(out.flux_mean.abs() < 1e-12);
        assert!(out.tangency_residual < 1e-6, "{}", out.tangency_residual);
        // the uncorrected mollification is not tangential
        let moll = Mollifier::new(0.1).unwrap();
        let raw = (0..100)
            .map(|k| {
                let a = 2.0 * PI * k as f64 / 100.0;
                let v = moll.apply(&spec, [a.cos(), a.sin()]);
                (v[0] * a.cos() + v[1] * a.sin()).abs()
            })
            .fold(0.0, f64::max);
        assert!(raw > 1e-4);
    }

    #[test]
    fn torus_fields_are_rejected() {
        let spec = crate::fields::make_torus_field(2, 0.3, 2, 4, 0, None).unwrap();
        let r = mollify_and_correct(&spec, 0.1, Geometry::Polar { nr: 4, nphi: 8 }, 16, 10);
        assert!(matches!(r, Err(LabError::Parameter(_))));
    }
}
