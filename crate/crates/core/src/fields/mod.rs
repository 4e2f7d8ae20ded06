//! Synthetic velocity fields with prescribed Hölder regularity.
//!
//! Torus fields are lacunary sums of divergence-free plane waves,
//! `u(x) = Σ a σ cos(k·x + φ)` with integer wavevectors `k ⊥ σ`, plus an
//! optional gradient `∇f` of a trigonometric polynomial. Disk fields are
//! `u = ∇⊥ψ = (-∂₂ψ, ∂₁ψ)` for the stream function
//! `ψ = (1 - |x|²)·S(x)`, `S = c₀ + Σ a cos(k·x + φ)`, which vanishes on the
//! unit circle. Both are evaluated in closed form together with their
//! Jacobians, so no interpolation error enters downstream solvers.

mod mollify;

pub use mollify::{mollify_and_correct, MollifiedField, Mollifier};

use crate::error::{LabError, Result};
use crate::rng;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Modes drawn per octave by the generators.
pub const MODES_PER_OCTAVE: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Domain {
    /// `[0, 2π)^dim` with periodic wraparound.
    Torus { dim: usize },
    UnitDisk,
}

impl Domain {
    pub fn dim(&self) -> usize {
        match self {
            Domain::Torus { dim } => *dim,
            Domain::UnitDisk => 2,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Domain::Torus { .. } => "torus",
            Domain::UnitDisk => "unit disk",
        }
    }
}

/// One plane wave `amplitude · cos(wavevector·x + phase)`.
///
/// On the torus the wave carries the vector polarization `σ ⊥ k`; on the
/// disk it is a scalar term of the stream function and `polarization` is
/// empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LacunaryMode {
    pub octave: u32,
    /// Unit vector along `wavevector`.
    pub direction: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub polarization: Vec<f64>,
    pub phase: f64,
    pub amplitude: f64,
    pub wavevector: Vec<f64>,
}

/// `Σ coeff · cos(k·x + phase)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrigTerm {
    pub coeff: f64,
    pub wavevector: [f64; 3],
    pub phase: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrigPolynomial {
    pub terms: Vec<TrigTerm>,
}

impl TrigPolynomial {
    /// `sin x₁ sin x₂ = ½cos(x₁ - x₂) - ½cos(x₁ + x₂)`.
    pub fn sin_sin() -> Self {
        TrigPolynomial {
            terms: vec![
                TrigTerm { coeff: 0.5, wavevector: [1.0, -1.0, 0.0], phase: 0.0 },
                TrigTerm { coeff: -0.5, wavevector: [1.0, 1.0, 0.0], phase: 0.0 },
            ],
        }
    }

    fn dot(k: &[f64; 3], x: &[f64]) -> f64 {
        k.iter().zip(x).map(|(a, b)| a * b).sum()
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|t| t.coeff * (Self::dot(&t.wavevector, x) + t.phase).cos())
            .sum()
    }

    pub fn laplacian(&self, x: &[f64]) -> f64 {
        let d = x.len();
        self.terms
            .iter()
            .map(|t| {
                let k2: f64 = t.wavevector[..d].iter().map(|k| k * k).sum();
                -t.coeff * k2 * (Self::dot(&t.wavevector, x) + t.phase).cos()
            })
            .sum()
    }

    /// Adds `∇f` into `out`.
    fn add_gradient(&self, x: &[f64], out: &mut [f64]) {
        let d = x.len();
        for t in &self.terms {
            let s = -t.coeff * (Self::dot(&t.wavevector, x) + t.phase).sin();
            for i in 0..d {
                out[i] += s * t.wavevector[i];
            }
        }
    }

    /// Adds the Hessian of `f` (row-major `d × d`) into `out`.
    fn add_hessian(&self, x: &[f64], out: &mut [f64]) {
        let d = x.len();
        for t in &self.terms {
            let c = -t.coeff * (Self::dot(&t.wavevector, x) + t.phase).cos();
            for i in 0..d {
                for l in 0..d {
                    out[i * d + l] += c * t.wavevector[i] * t.wavevector[l];
                }
            }
        }
    }
}

/// Closed-form description of a synthetic velocity field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VelocityFieldSpec {
    pub theta: f64,
    pub seed: u64,
    /// Disk only: the stream function carries the `(1 - |x|²)` factor.
    #[serde(default)]
    pub envelope: bool,
    /// Disk only: constant term `c₀` of `S`.
    #[serde(default)]
    pub stream_constant: f64,
    pub domain: Domain,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gradient_part: Option<TrigPolynomial>,
    #[serde(default)]
    pub modes: Vec<LacunaryMode>,
}

fn check_theta(theta: f64) -> Result<()> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(LabError::Parameter(format!("theta must lie in (0,1), got {theta}")));
    }
    Ok(())
}

fn unit_orthogonal(e: &[f64], rng: &mut impl Rng) -> Vec<f64> {
    if e.len() == 2 {
        let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
        return vec![-sign * e[1], sign * e[0]];
    }
    loop {
        let v = random_unit(3, rng);
        let proj: f64 = v.iter().zip(e).map(|(a, b)| a * b).sum();
        let w: Vec<f64> = v.iter().zip(e).map(|(a, b)| a - proj * b).collect();
        let n = w.iter().map(|a| a * a).sum::<f64>().sqrt();
        if n > 1e-3 {
            let w: Vec<f64> = w.iter().map(|a| a / n).collect();
            // exact orthogonality after normalization
            let r: f64 = w.iter().zip(e).map(|(a, b)| a * b).sum();
            return w.iter().zip(e).map(|(a, b)| a - r * b).collect();
        }
    }
}

fn random_unit(d: usize, rng: &mut impl Rng) -> Vec<f64> {
    if d == 2 {
        let a = rng.gen::<f64>() * 2.0 * PI;
        return vec![a.cos(), a.sin()];
    }
    let z = rng.gen::<f64>() * 2.0 - 1.0;
    let a = rng.gen::<f64>() * 2.0 * PI;
    let s = (1.0 - z * z).sqrt();
    vec![s * a.cos(), s * a.sin(), z]
}

/// Lacunary divergence-free field on `𝕋^d`.
///
/// Octave `j ∈ 0..=octaves` contributes `modes_per_octave` waves of
/// amplitude `2^{-jθ}` with wavevector `round(2^j e)` for a random unit `e`.
pub fn make_torus_field(
    d: usize,
    theta: f64,
    octaves: u32,
    modes_per_octave: usize,
    seed: u64,
    gradient_part: Option<TrigPolynomial>,
) -> Result<VelocityFieldSpec> {
    if d != 2 && d != 3 {
        return Err(LabError::Parameter(format!("torus dimension must be 2 or 3, got {d}")));
    }
    check_theta(theta)?;
    if modes_per_octave == 0 {
        return Err(LabError::Parameter("modes_per_octave must be positive".into()));
    }
    let mut rng = rng::stream(seed, "torus-field");
    let mut modes = Vec::with_capacity((octaves as usize + 1) * modes_per_octave);
    for j in 0..=octaves {
        let freq = f64::powi(2.0, j as i32);
        for _ in 0..modes_per_octave {
            let e = random_unit(d, &mut rng);
            let k: Vec<f64> = e.iter().map(|c| (c * freq).round()).collect();
            let norm = k.iter().map(|c| c * c).sum::<f64>().sqrt();
            debug_assert!(norm > 0.0);
            let direction: Vec<f64> = k.iter().map(|c| c / norm).collect();
            let polarization = unit_orthogonal(&direction, &mut rng);
            let phase = rng.gen::<f64>() * 2.0 * PI;
            modes.push(LacunaryMode {
                octave: j,
                direction,
                polarization,
                phase,
                amplitude: f64::powf(2.0, -(j as f64) * theta),
                wavevector: k,
            });
        }
    }
    let spec = VelocityFieldSpec {
        theta,
        seed,
        envelope: false,
        stream_constant: 0.0,
        domain: Domain::Torus { dim: d },
        gradient_part,
        modes,
    };
    spec.validate()?;
    Ok(spec)
}

/// Lacunary stream-function field on the unit disk.
///
/// `S = Σ_j Σ_m 2^{-j(1+θ)} cos(2^j e·x + φ)`, so `ψ ∈ C^{1,θ}` and
/// `u = ∇⊥ψ ∈ C^θ`.
pub fn make_disk_field(theta: f64, octaves: u32, seed: u64) -> Result<VelocityFieldSpec> {
    check_theta(theta)?;
    let mut rng = rng::stream(seed, "disk-field");
    let mut modes = Vec::new();
    for j in 0..=octaves {
        let freq = f64::powi(2.0, j as i32);
        for _ in 0..MODES_PER_OCTAVE {
            let e = random_unit(2, &mut rng);
            let phase = rng.gen::<f64>() * 2.0 * PI;
            modes.push(LacunaryMode {
                octave: j,
                wavevector: e.iter().map(|c| c * freq).collect(),
                direction: e,
                polarization: Vec::new(),
                phase,
                amplitude: f64::powf(2.0, -(j as f64) * (1.0 + theta)),
            });
        }
    }
    Ok(VelocityFieldSpec {
        theta,
        seed,
        envelope: true,
        stream_constant: 0.0,
        domain: Domain::UnitDisk,
        gradient_part: None,
        modes,
    })
}

impl VelocityFieldSpec {
    /// Torus field from an explicit mode list.
    pub fn torus_from_modes(
        dim: usize,
        theta: f64,
        modes: Vec<LacunaryMode>,
        gradient_part: Option<TrigPolynomial>,
    ) -> Result<Self> {
        let spec = VelocityFieldSpec {
            theta,
            seed: 0,
            envelope: false,
            stream_constant: 0.0,
            domain: Domain::Torus { dim },
            gradient_part,
            modes,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// `ψ = (1 - |x|²)/2`, i.e. `u = (x₂, -x₁)`.
    pub fn rigid_rotation() -> Self {
        VelocityFieldSpec {
            theta: 0.5,
            seed: 0,
            envelope: true,
            stream_constant: 0.5,
            domain: Domain::UnitDisk,
            gradient_part: None,
            modes: Vec::new(),
        }
    }

    /// The zero field on the disk.
    pub fn disk_zero() -> Self {
        VelocityFieldSpec { stream_constant: 0.0, ..Self::rigid_rotation() }
    }

    /// Same spec with every velocity scaled by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut s = self.clone();
        s.stream_constant *= factor;
        for m in &mut s.modes {
            m.amplitude *= factor;
        }
        if let Some(g) = &mut s.gradient_part {
            for t in &mut g.terms {
                t.coeff *= factor;
            }
        }
        s
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    /// Checks the structural invariants of the spec.
    pub fn validate(&self) -> Result<()> {
        check_theta(self.theta)?;
        let d = self.dim();
        if let Domain::Torus { dim } = self.domain {
            if dim != 2 && dim != 3 {
                return Err(LabError::Parameter(format!("torus dimension must be 2 or 3, got {dim}")));
            }
            if self.envelope {
                return Err(LabError::Parameter("stream envelope is only defined on the disk".into()));
            }
        } else if self.gradient_part.is_some() {
            return Err(LabError::Parameter(
                "a gradient part would break tangency on the disk".into(),
            ));
        }
        for (i, m) in self.modes.iter().enumerate() {
            if m.wavevector.len() != d || m.direction.len() != d {
                return Err(LabError::Parameter(format!("mode {i} has the wrong dimension")));
            }
            if let Domain::Torus { .. } = self.domain {
                if m.polarization.len() != d {
                    return Err(LabError::Parameter(format!("mode {i} lacks a polarization")));
                }
                if m.wavevector.iter().any(|k| k.fract() != 0.0) {
                    return Err(LabError::Parameter(format!("mode {i} is not 2π-periodic")));
                }
                let kn: f64 = m.wavevector.iter().map(|k| k * k).sum::<f64>().sqrt();
                let dot: f64 = m.wavevector.iter().zip(&m.polarization).map(|(a, b)| a * b).sum();
                if dot.abs() > 1e-12 * kn.max(1.0) {
                    return Err(LabError::Parameter(format!(
                        "mode {i}: polarization not orthogonal to the wavevector (k·σ = {dot:e})"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Largest `|k·σ|` over the torus modes; the symbolic divergence of the
    /// lacunary part is `-Σ a (k·σ) sin(k·x + φ)`.
    pub fn max_mode_divergence(&self) -> f64 {
        self.modes
            .iter()
            .filter(|m| !m.polarization.is_empty())
            .map(|m| {
                let dot: f64 = m.wavevector.iter().zip(&m.polarization).map(|(a, b)| a * b).sum();
                (m.amplitude * dot).abs()
            })
            .fold(0.0, f64::max)
    }

    /// Highest wavenumber magnitude present in the velocity.
    pub fn max_wavenumber(&self) -> f64 {
        let modes = self
            .modes
            .iter()
            .map(|m| m.wavevector.iter().map(|k| k * k).sum::<f64>().sqrt());
        let grad = self
            .gradient_part
            .iter()
            .flat_map(|g| g.terms.iter())
            .map(|t| t.wavevector.iter().map(|k| k * k).sum::<f64>().sqrt());
        modes.chain(grad).fold(0.0, f64::max)
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        if x.len() != self.dim() || x.iter().any(|c| !c.is_finite()) {
            return false;
        }
        match self.domain {
            Domain::Torus { .. } => true,
            Domain::UnitDisk => x[0] * x[0] + x[1] * x[1] <= 1.0 + 1e-12,
        }
    }

    /// Velocity at `x` into `out[..d]`. No domain check: disk specs are
    /// globally defined closed forms.
    pub fn velocity(&self, x: &[f64], out: &mut [f64]) {
        match self.domain {
            Domain::Torus { dim } => {
                out[..dim].iter_mut().for_each(|v| *v = 0.0);
                for m in &self.modes {
                    let arg: f64 = m.wavevector.iter().zip(x).map(|(k, y)| k * y).sum::<f64>() + m.phase;
                    let c = m.amplitude * arg.cos();
                    for i in 0..dim {
                        out[i] += c * m.polarization[i];
                    }
                }
                if let Some(g) = &self.gradient_part {
                    g.add_gradient(&x[..dim], out);
                }
            }
            Domain::UnitDisk => {
                let v = self.disk_velocity([x[0], x[1]]);
                out[0] = v[0];
                out[1] = v[1];
            }
        }
    }

    /// Jacobian `J[i·d + l] = ∂_l u_i` at `x`.
    pub fn jacobian(&self, x: &[f64], out: &mut [f64]) {
        match self.domain {
            Domain::Torus { dim } => {
                out[..dim * dim].iter_mut().for_each(|v| *v = 0.0);
                for m in &self.modes {
                    let arg: f64 = m.wavevector.iter().zip(x).map(|(k, y)| k * y).sum::<f64>() + m.phase;
                    let s = -m.amplitude * arg.sin();
                    for i in 0..dim {
                        for l in 0..dim {
                            out[i * dim + l] += s * m.polarization[i] * m.wavevector[l];
                        }
                    }
                }
                if let Some(g) = &self.gradient_part {
                    g.add_hessian(&x[..dim], out);
                }
            }
            Domain::UnitDisk => {
                let j = self.disk_jacobian([x[0], x[1]]);
                out[..4].copy_from_slice(&[j[0][0], j[0][1], j[1][0], j[1][1]]);
            }
        }
    }

    /// `(S, ∇S, ∇²S)` of the disk stream factor.
    fn stream_factor(&self, x: [f64; 2], want_hessian: bool) -> (f64, [f64; 2], [f64; 3]) {
        let mut s = self.stream_constant;
        let mut g = [0.0; 2];
        let mut h = [0.0; 3];
        for m in &self.modes {
            let k = [m.wavevector[0], m.wavevector[1]];
            let arg = k[0] * x[0] + k[1] * x[1] + m.phase;
            let (sn, cs) = arg.sin_cos();
            let a = m.amplitude;
            s += a * cs;
            g[0] -= a * k[0] * sn;
            g[1] -= a * k[1] * sn;
            if want_hessian {
                h[0] -= a * k[0] * k[0] * cs;
                h[1] -= a * k[0] * k[1] * cs;
                h[2] -= a * k[1] * k[1] * cs;
            }
        }
        (s, g, h)
    }

    /// Stream function `ψ` (or `S` when the envelope is disabled).
    pub fn stream_function(&self, x: [f64; 2]) -> f64 {
        let (s, _, _) = self.stream_factor(x, false);
        if self.envelope {
            (1.0 - x[0] * x[0] - x[1] * x[1]) * s
        } else {
            s
        }
    }

    fn stream_gradient(&self, x: [f64; 2]) -> [f64; 2] {
        let (s, g, _) = self.stream_factor(x, false);
        if !self.envelope {
            return g;
        }
        let e = 1.0 - x[0] * x[0] - x[1] * x[1];
        [-2.0 * x[0] * s + e * g[0], -2.0 * x[1] * s + e * g[1]]
    }

    /// `u = ∇⊥ψ = (-∂₂ψ, ∂₁ψ)`.
    pub fn disk_velocity(&self, x: [f64; 2]) -> [f64; 2] {
        let g = self.stream_gradient(x);
        [-g[1], g[0]]
    }

    /// `[[∂₁u₁, ∂₂u₁], [∂₁u₂, ∂₂u₂]]`.
    pub fn disk_jacobian(&self, x: [f64; 2]) -> [[f64; 2]; 2] {
        let (s, g, h) = self.stream_factor(x, true);
        let [h11, h12, h22] = if self.envelope {
            let e = 1.0 - x[0] * x[0] - x[1] * x[1];
            [
                -2.0 * s - 4.0 * x[0] * g[0] + e * h[0],
                -2.0 * x[0] * g[1] - 2.0 * x[1] * g[0] + e * h[1],
                -2.0 * s - 4.0 * x[1] * g[1] + e * h[2],
            ]
        } else {
            h
        };
        [[-h12, -h22], [h11, h12]]
    }

    /// Divergence of the velocity at `x` from the closed-form Jacobian.
    pub fn divergence(&self, x: &[f64]) -> f64 {
        let d = self.dim();
        let mut j = [0.0; 9];
        self.jacobian(x, &mut j);
        (0..d).map(|i| j[i * d + i]).sum()
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| LabError::Format(e.to_string()))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: VelocityFieldSpec = toml::from_str(text).map_err(|e| LabError::Format(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }
}

/// Closed-form evaluation at a flat list of points (`d` coordinates each).
///
/// Order 0 returns `d` velocity components per point; order 1 returns the
/// row-major Jacobian (`d²` entries per point).
pub fn eval_field(spec: &VelocityFieldSpec, points: &[f64], derivative_order: u8) -> Result<Vec<f64>> {
    let d = spec.dim();
    if points.len() % d != 0 {
        return Err(LabError::Shape(format!(
            "{} coordinates do not form {d}-dimensional points",
            points.len()
        )));
    }
    let width = match derivative_order {
        0 => d,
        1 => d * d,
        o => return Err(LabError::Parameter(format!("derivative order {o} not supported"))),
    };
    let mut out = vec![0.0; points.len() / d * width];
    for (x, o) in points.chunks_exact(d).zip(out.chunks_exact_mut(width)) {
        if !spec.contains(x) {
            return Err(LabError::Domain { point: x.to_vec(), domain: spec.domain.name() });
        }
        if derivative_order == 0 {
            spec.velocity(x, o);
        } else {
            spec.jacobian(x, o);
        }
    }
    Ok(out)
}
