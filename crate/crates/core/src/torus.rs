//! Pseudo-spectral pressure solves on the flat torus `[0, 2π)^d`.
//!
//! Quadratic products are formed on a grid refined by 3/2 (zero-padded
//! spectra), which makes every retained Fourier coefficient of a product
//! of two band-limited fields exact. The Nyquist plane is dropped from all
//! inputs so that outputs stay real.

use crate::error::{LabError, Result};
use crate::grid::{Geometry, GridField};
use crate::rng;
use num_complex::Complex64;
use rand::Rng;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

/// Transform plans and buffers for one `N^d` grid and its 3/2 refinement.
pub struct SpectralWorkspace {
    n: usize,
    dim: usize,
    padded: usize,
    fwd_n: Arc<dyn Fft<f64>>,
    inv_n: Arc<dyn Fft<f64>>,
    fwd_m: Arc<dyn Fft<f64>>,
    inv_m: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
    /// `n`-grid flat index → padded-grid flat index (`None` for Nyquist).
    pad_map: Vec<Option<usize>>,
    kvecs: Vec<[f64; 3]>,
}

fn wavenumber(idx: usize, n: usize) -> i64 {
    if idx < n / 2 {
        idx as i64
    } else {
        idx as i64 - n as i64
    }
}

/// Transposes a `rows × cols` row-major block into `cols × rows`.
fn transpose(src: &[Complex64], dst: &mut [Complex64], rows: usize, cols: usize) {
    const B: usize = 32;
    for r0 in (0..rows).step_by(B) {
        for c0 in (0..cols).step_by(B) {
            for r in r0..(r0 + B).min(rows) {
                for c in c0..(c0 + B).min(cols) {
                    dst[c * rows + r] = src[r * cols + c];
                }
            }
        }
    }
}

impl SpectralWorkspace {
    pub fn new(n: usize, dim: usize) -> Result<Self> {
        if n < 16 || n % 2 != 0 {
            return Err(LabError::Parameter(format!("grid size must be even and ≥ 16, got {n}")));
        }
        if dim != 2 && dim != 3 {
            return Err(LabError::Parameter(format!("torus dimension must be 2 or 3, got {dim}")));
        }
        let padded = 3 * n / 2;
        let mut planner = FftPlanner::new();
        let fwd_n = planner.plan_fft_forward(n);
        let inv_n = planner.plan_fft_inverse(n);
        let fwd_m = planner.plan_fft_forward(padded);
        let inv_m = planner.plan_fft_inverse(padded);
        let scratch_len = [&fwd_n, &inv_n, &fwd_m, &inv_m]
            .iter()
            .map(|p| p.get_inplace_scratch_len())
            .max()
            .unwrap_or(0);
        let total = n.pow(dim as u32);
        let mut pad_map = Vec::with_capacity(total);
        for idx in 0..total {
            let mut rest = idx;
            let mut target = 0usize;
            let mut stride = 1usize;
            let mut keep = true;
            for _ in 0..dim {
                let i = rest % n;
                rest /= n;
                if i == n / 2 {
                    keep = false;
                }
                let k = wavenumber(i, n);
                let j = k.rem_euclid(padded as i64) as usize;
                target += j * stride;
                stride *= padded;
            }
            pad_map.push(keep.then_some(target));
        }
        let kvecs = (0..total)
            .map(|idx| {
                let mut k = [0.0; 3];
                let mut rest = idx;
                for a in (0..dim).rev() {
                    k[a] = wavenumber(rest % n, n) as f64;
                    rest /= n;
                }
                k
            })
            .collect();
        Ok(SpectralWorkspace {
            n,
            dim,
            padded,
            fwd_n,
            inv_n,
            fwd_m,
            inv_m,
            scratch: vec![Complex64::new(0.0, 0.0); scratch_len],
            pad_map,
            kvecs,
        })
    }

    /// Workspace matching a torus grid field.
    pub fn for_field(field: &GridField) -> Result<Self> {
        match field.geometry {
            Geometry::Torus { dim, n } => Self::new(n, dim),
            Geometry::Polar { .. } => Err(LabError::Shape("spectral solves need a torus grid".into())),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn geometry(&self) -> Geometry {
        Geometry::Torus { dim: self.dim, n: self.n }
    }

    fn total(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    /// Wavevector of flat spectral index `idx` on the `N^d` grid.
    pub fn wavevector(&self, idx: usize) -> [f64; 3] {
        self.kvecs[idx]
    }

    fn is_nyquist(&self, idx: usize) -> bool {
        self.pad_map[idx].is_none()
    }

    /// In-place transform of every axis of an `size^dim` array.
    fn transform(&mut self, data: &mut Vec<Complex64>, padded: bool, forward: bool) {
        let size = if padded { self.padded } else { self.n };
        let plan = match (padded, forward) {
            (false, true) => Arc::clone(&self.fwd_n),
            (false, false) => Arc::clone(&self.inv_n),
            (true, true) => Arc::clone(&self.fwd_m),
            (true, false) => Arc::clone(&self.inv_m),
        };
        let rows = data.len() / size;
        let mut tmp = vec![Complex64::new(0.0, 0.0); data.len()];
        for _ in 0..self.dim {
            plan.process_with_scratch(data, &mut self.scratch);
            transpose(data, &mut tmp, rows, size);
            std::mem::swap(data, &mut tmp);
        }
    }

    /// Fourier coefficients `f̂(k) = N^{-d} Σ f(x) e^{-ik·x}`.
    pub fn forward(&mut self, real: &[f64]) -> Vec<Complex64> {
        debug_assert_eq!(real.len(), self.total());
        let mut data: Vec<Complex64> = real.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.transform(&mut data, false, true);
        let scale = 1.0 / self.total() as f64;
        data.iter_mut().for_each(|c| *c *= scale);
        data
    }

    /// Real part of `Σ f̂(k) e^{ik·x}` on the `N^d` grid.
    pub fn inverse(&mut self, mut coeffs: Vec<Complex64>) -> Vec<f64> {
        self.transform(&mut coeffs, false, false);
        coeffs.into_iter().map(|c| c.re).collect()
    }

    /// Physical values on the 3/2 grid of the band-limited interpolant.
    fn to_padded(&mut self, coeffs: &[Complex64]) -> Vec<f64> {
        let mut data = vec![Complex64::new(0.0, 0.0); self.padded.pow(self.dim as u32)];
        for (c, target) in coeffs.iter().zip(&self.pad_map) {
            if let Some(t) = target {
                data[*t] = *c;
            }
        }
        self.transform(&mut data, true, false);
        data.into_iter().map(|c| c.re).collect()
    }

    /// Coefficients of a padded-grid product, truncated to `|k| < N/2`.
    fn from_padded(&mut self, real: &[f64]) -> Vec<Complex64> {
        let mut data: Vec<Complex64> = real.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.transform(&mut data, true, true);
        let scale = 1.0 / self.padded.pow(self.dim as u32) as f64;
        self.pad_map
            .iter()
            .map(|t| t.map_or(Complex64::new(0.0, 0.0), |t| data[t] * scale))
            .collect()
    }

    fn check(&self, field: &GridField, components: usize) -> Result<()> {
        if field.geometry != self.geometry() || field.components != components {
            return Err(LabError::Shape(format!(
                "expected a {components}-component field on {:?}, got {} components on {:?}",
                self.geometry(),
                field.components,
                field.geometry
            )));
        }
        field.check_finite()
    }

    fn coefficients(&mut self, field: &GridField) -> Vec<Vec<Complex64>> {
        (0..field.components).map(|c| self.forward(field.component(c))).collect()
    }

    fn finish_scalar(&mut self, coeffs: Vec<Complex64>) -> Result<GridField> {
        let values = self.inverse(coeffs);
        let mut p = GridField::new(self.geometry(), 1, values)?;
        p.remove_mean();
        Ok(p)
    }

    /// Zero-average `T(u, v)` with `p̂(k) = -k_i k_j (u_i v_j)^(k) / |k|²`.
    pub fn bilinear_pressure(&mut self, u: &GridField, v: &GridField) -> Result<GridField> {
        let d = self.dim;
        self.check(u, d)?;
        self.check(v, d)?;
        let uc = self.coefficients(u);
        let vc = self.coefficients(v);
        let up: Vec<Vec<f64>> = uc.iter().map(|c| self.to_padded(c)).collect();
        let vp: Vec<Vec<f64>> = vc.iter().map(|c| self.to_padded(c)).collect();
        let total = self.total();
        let mut acc = vec![Complex64::new(0.0, 0.0); total];
        for i in 0..d {
            for j in i..d {
                let prod: Vec<f64> = (0..up[i].len())
                    .map(|x| 0.5 * (up[i][x] * vp[j][x] + up[j][x] * vp[i][x]))
                    .collect();
                let s = self.from_padded(&prod);
                let mult = if i == j { 1.0 } else { 2.0 };
                for (idx, a) in acc.iter_mut().enumerate() {
                    let k = self.wavevector(idx);
                    let k2: f64 = k[..d].iter().map(|c| c * c).sum();
                    if k2 > 0.0 {
                        *a -= s[idx] * (mult * k[i] * k[j] / k2);
                    }
                }
            }
        }
        self.finish_scalar(acc)
    }

    /// Zero-average pressure of `u`: `T(u, u)`.
    pub fn pressure(&mut self, u: &GridField) -> Result<GridField> {
        self.bilinear_pressure(u, u)
    }

    /// Spectral gradient of a scalar field.
    pub fn gradient(&mut self, f: &GridField) -> Result<GridField> {
        self.check(f, 1)?;
        let c = self.forward(&f.values);
        let mut values = Vec::with_capacity(self.total() * self.dim);
        for a in 0..self.dim {
            let da = self.derivative(&c, a);
            values.extend(self.inverse(da));
        }
        GridField::new(self.geometry(), self.dim, values)
    }

    fn derivative(&self, coeffs: &[Complex64], axis: usize) -> Vec<Complex64> {
        coeffs
            .iter()
            .enumerate()
            .map(|(idx, c)| {
                if self.is_nyquist(idx) {
                    Complex64::new(0.0, 0.0)
                } else {
                    c * Complex64::new(0.0, self.wavevector(idx)[axis])
                }
            })
            .collect()
    }

    /// Spectral divergence of a vector field.
    pub fn divergence(&mut self, u: &GridField) -> Result<GridField> {
        let d = self.dim;
        self.check(u, d)?;
        let uc = self.coefficients(u);
        let mut acc = vec![Complex64::new(0.0, 0.0); self.total()];
        for (a, c) in uc.iter().enumerate() {
            for (x, y) in acc.iter_mut().zip(self.derivative(c, a)) {
                *x += y;
            }
        }
        let values = self.inverse(acc);
        GridField::new(self.geometry(), 1, values)
    }

    /// Zero-average solution of `Δf = g`.
    fn inverse_laplacian(&self, g: &[Complex64]) -> Vec<Complex64> {
        g.iter()
            .enumerate()
            .map(|(idx, c)| {
                let k = self.wavevector(idx);
                let k2: f64 = k[..self.dim].iter().map(|v| v * v).sum();
                if k2 == 0.0 || self.is_nyquist(idx) {
                    Complex64::new(0.0, 0.0)
                } else {
                    -c / k2
                }
            })
            .collect()
    }

    /// Splits `u = w + ∇f` with `Δf = div u` and returns the three partial
    /// pressures of `div div((w + v) ⊗ (w + v))`, `v = ∇f`.
    pub fn divergence_decomposition(&mut self, u: &GridField) -> Result<Decomposition> {
        let d = self.dim;
        self.check(u, d)?;
        let total = self.total();
        let uc = self.coefficients(u);
        let mut gc = vec![Complex64::new(0.0, 0.0); total];
        for (a, c) in uc.iter().enumerate() {
            for (x, y) in gc.iter_mut().zip(self.derivative(c, a)) {
                *x += y;
            }
        }
        let fc = self.inverse_laplacian(&gc);
        let vc: Vec<Vec<Complex64>> = (0..d).map(|a| self.derivative(&fc, a)).collect();
        let wc: Vec<Vec<Complex64>> = uc
            .iter()
            .zip(&vc)
            .map(|(u, v)| {
                u.iter()
                    .zip(v)
                    .enumerate()
                    .map(|(idx, (a, b))| if self.is_nyquist(idx) { Complex64::new(0.0, 0.0) } else { a - b })
                    .collect()
            })
            .collect();

        let f = GridField::new(self.geometry(), 1, self.inverse(fc.clone()))?;
        let mut v_vals = Vec::with_capacity(total * d);
        let mut w_vals = Vec::with_capacity(total * d);
        for a in 0..d {
            v_vals.extend(self.inverse(vc[a].clone()));
            w_vals.extend(self.inverse(wc[a].clone()));
        }
        let v = GridField::new(self.geometry(), d, v_vals)?;
        let w = GridField::new(self.geometry(), d, w_vals)?;

        let p1 = self.bilinear_pressure(&w, &w)?;
        let p3 = self.bilinear_pressure(&v, &v)?;

        // q_j = (w·∇)v_j on the padded grid, then -Δp₂ = 2 ∂_j q_j.
        let wp: Vec<Vec<f64>> = wc.iter().map(|c| self.to_padded(c)).collect();
        let mut p2c = vec![Complex64::new(0.0, 0.0); total];
        for j in 0..d {
            let mut q = vec![0.0; wp[0].len()];
            for i in 0..d {
                let dv = self.derivative(&vc[j], i);
                let dvp = self.to_padded(&dv);
                for (qx, (wx, dx)) in q.iter_mut().zip(wp[i].iter().zip(&dvp)) {
                    *qx += wx * dx;
                }
            }
            let qc = self.from_padded(&q);
            for (idx, acc) in p2c.iter_mut().enumerate() {
                let k = self.wavevector(idx);
                let k2: f64 = k[..d].iter().map(|c| c * c).sum();
                if k2 > 0.0 {
                    *acc += qc[idx] * Complex64::new(0.0, 2.0 * k[j] / k2);
                }
            }
        }
        let p2 = self.finish_scalar(p2c)?;
        let p_direct = self.pressure(u)?;
        Ok(Decomposition { f, v, w, p1, p2, p3, p_direct })
    }

    /// Max relative error of forward∘inverse on seeded white noise.
    pub fn round_trip_error(&mut self, seed: u64) -> f64 {
        let mut rng = rng::stream(seed, "round-trip");
        let x: Vec<f64> = (0..self.total()).map(|_| rng.gen::<f64>() - 0.5).collect();
        let c = self.forward(&x);
        let mut data = c;
        self.transform(&mut data, false, false);
        let scale = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        x.iter()
            .zip(&data)
            .map(|(a, b)| (a - b.re).abs().max(b.im.abs()))
            .fold(0.0, f64::max)
            / scale
    }
}

/// Output of [`SpectralWorkspace::divergence_decomposition`].
#[derive(Debug, Clone)]
pub struct Decomposition {
    /// Zero-average potential with `Δf = div u`.
    pub f: GridField,
    /// Gradient part `v = ∇f`.
    pub v: GridField,
    /// Solenoidal part `w = u - v`.
    pub w: GridField,
    /// `-Δp₁ = div div(w ⊗ w)`.
    pub p1: GridField,
    /// `-Δp₂ = 2 div((w·∇)v)`.
    pub p2: GridField,
    /// `-Δp₃ = div div(v ⊗ v)`.
    pub p3: GridField,
    pub p_direct: GridField,
}

impl Decomposition {
    /// `max |p₁ + p₂ + p₃ - p_direct|`.
    pub fn identity_residual(&self) -> f64 {
        (0..self.p_direct.values.len())
            .map(|i| (self.p1.values[i] + self.p2.values[i] + self.p3.values[i] - self.p_direct.values[i]).abs())
            .fold(0.0, f64::max)
    }
}

/// Zero-average pressure of a velocity sampled on a torus grid.
pub fn pressure_spectral(u: &GridField) -> Result<GridField> {
    SpectralWorkspace::for_field(u)?.pressure(u)
}

/// Zero-average `T(u, v)`.
pub fn bilinear_pressure(u: &GridField, v: &GridField) -> Result<GridField> {
    if u.geometry != v.geometry {
        return Err(LabError::Shape("T(u, v) needs both fields on the same grid".into()));
    }
    SpectralWorkspace::for_field(u)?.bilinear_pressure(u, v)
}

pub fn divergence_decomposition(u: &GridField) -> Result<Decomposition> {
    SpectralWorkspace::for_field(u)?.divergence_decomposition(u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{make_torus_field, LacunaryMode, TrigPolynomial, VelocityFieldSpec};

    fn crossed_cosines() -> VelocityFieldSpec {
        let mode = |k: Vec<f64>, s: Vec<f64>| LacunaryMode {
            octave: 0,
            direction: k.clone(),
            polarization: s,
            phase: 0.0,
            amplitude: 1.0,
            wavevector: k,
        };
        VelocityFieldSpec::torus_from_modes(
            2,
            0.5,
            vec![mode(vec![0.0, 1.0], vec![1.0, 0.0]), mode(vec![1.0, 0.0], vec![0.0, 1.0])],
            None,
        )
        .unwrap()
    }

    #[test]
    fn workspace_round_trip() {
        let mut ws = SpectralWorkspace::new(32, 2).unwrap();
        assert!(ws.round_trip_error(3) < 1e-12);
        let mut ws = SpectralWorkspace::new(16, 3).unwrap();
        assert!(ws.round_trip_error(3) < 1e-12);
        assert!(SpectralWorkspace::new(15, 2).is_err());
        assert!(SpectralWorkspace::new(8, 2).is_err());
    }

    #[test]
    fn crossed_cosines_give_sin_sin() {
        let g = Geometry::Torus { dim: 2, n: 64 };
        let u = GridField::sample_velocity(&crossed_cosines(), g).unwrap();
        let p = pressure_spectral(&u).unwrap();
        let exact = GridField::from_fn(g, |x| x[0].sin() * x[1].sin()).unwrap();
        assert!(p.max_abs_diff(&exact).unwrap() < 1e-10);
        assert!(p.satisfies_zero_average());
    }

    #[test]
    fn shear_and_constant_flows_have_no_pressure() {
        let g = Geometry::Torus { dim: 2, n: 32 };
        let shear = GridField::from_fn(g, |x| x[1].cos()).unwrap();
        let mut u = GridField::zeros(g, 2).unwrap();
        u.component_mut(0).copy_from_slice(&shear.values);
        assert!(pressure_spectral(&u).unwrap().max_abs() < 1e-12);
        let c = GridField::new(g, 2, [vec![0.7; 1024], vec![-1.3; 1024]].concat()).unwrap();
        assert!(pressure_spectral(&c).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn bilinear_operator_is_symmetric() {
        let g = Geometry::Torus { dim: 2, n: 64 };
        let a = GridField::sample_velocity(&make_torus_field(2, 0.3, 3, 4, 1, None).unwrap(), g).unwrap();
        let b = GridField::sample_velocity(&make_torus_field(2, 0.6, 3, 4, 2, None).unwrap(), g).unwrap();
        let tab = bilinear_pressure(&a, &b).unwrap();
        let tba = bilinear_pressure(&b, &a).unwrap();
        assert!(tab.max_abs_diff(&tba).unwrap() <= 1e-12 * tab.max_abs());
        let zero = GridField::zeros(g, 2).unwrap();
        assert_eq!(bilinear_pressure(&a, &zero).unwrap().max_abs(), 0.0);
        assert_eq!(bilinear_pressure(&a, &a).unwrap(), pressure_spectral(&a).unwrap());
        let other = GridField::zeros(Geometry::Torus { dim: 2, n: 32 }, 2).unwrap();
        assert!(matches!(bilinear_pressure(&a, &other), Err(LabError::Shape(_))));
    }

    #[test]
    fn non_finite_input_is_rejected() {
        let g = Geometry::Torus { dim: 2, n: 16 };
        let mut u = GridField::zeros(g, 2).unwrap();
        u.values[5] = f64::NAN;
        assert!(matches!(pressure_spectral(&u), Err(LabError::Input(_))));
    }

    #[test]
    fn decomposition_of_solenoidal_and_gradient_fields() {
        let g = Geometry::Torus { dim: 2, n: 64 };
        let u = GridField::sample_velocity(&make_torus_field(2, 0.4, 3, 4, 5, None).unwrap(), g).unwrap();
        let dec = divergence_decomposition(&u).unwrap();
        assert!(dec.v.max_abs() < 1e-12);
        assert!(dec.p2.max_abs() < 1e-12 && dec.p3.max_abs() < 1e-12);
        assert!(dec.p1.max_abs_diff(&dec.p_direct).unwrap() < 1e-12);

        let grad = VelocityFieldSpec::torus_from_modes(2, 0.5, vec![], Some(TrigPolynomial::sin_sin())).unwrap();
        let u = GridField::sample_velocity(&grad, g).unwrap();
        let dec = divergence_decomposition(&u).unwrap();
        assert!(dec.w.max_abs() < 1e-12);
        assert!(dec.p1.max_abs() < 1e-12 && dec.p2.max_abs() < 1e-12);
        assert!(dec.p3.max_abs_diff(&dec.p_direct).unwrap() < 1e-12);
        let f_exact = GridField::from_fn(g, |x| x[0].sin() * x[1].sin()).unwrap();
        assert!(dec.f.max_abs_diff(&f_exact).unwrap() < 1e-12);
    }

    #[test]
    fn decomposition_identity_in_three_dimensions() {
        let g = Geometry::Torus { dim: 3, n: 16 };
        let spec = make_torus_field(3, 0.4, 2, 4, 8, Some(TrigPolynomial::sin_sin())).unwrap();
        let u = GridField::sample_velocity(&spec, g).unwrap();
        let dec = divergence_decomposition(&u).unwrap();
        assert!(dec.identity_residual() < 1e-10 * dec.p_direct.max_abs());
        let div_w = SpectralWorkspace::new(16, 3).unwrap().divergence(&dec.w).unwrap();
        assert!(div_w.max_abs() < 1e-12);
    }
}
