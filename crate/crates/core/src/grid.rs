//! Sampled fields on structured grids and their on-disk format.
//!
//! Values are stored component-major: component `c` of node `i` lives at
//! `values[c * n_nodes + i]`. Torus nodes are `x = 2π·(i₀, …, i_{d-1})/N`
//! in row-major order (last axis fastest). Polar nodes are
//! `(r_i, φ_k) = ((i + ½)/N_r, 2πk/N_φ)` with `k` fastest.
//!
//! File format: one ASCII header line
//! `pressure-lab-grid 1 domain=<torus|disk> d=<d> n=<N | NrxNphi> components=<c> zero_average=<0|1>`
//! terminated by `\n`, followed by every value as a little-endian IEEE-754
//! `f64` in the storage order above.

use crate::error::{LabError, Result};
use crate::fields::VelocityFieldSpec;
use std::f64::consts::PI;
use std::io::{Read, Write};

const MAGIC: &str = "pressure-lab-grid";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Geometry {
    Torus { dim: usize, n: usize },
    Polar { nr: usize, nphi: usize },
}

impl Geometry {
    pub fn n_nodes(&self) -> usize {
        match *self {
            Geometry::Torus { dim, n } => n.pow(dim as u32),
            Geometry::Polar { nr, nphi } => nr * nphi,
        }
    }

    pub fn dim(&self) -> usize {
        match *self {
            Geometry::Torus { dim, .. } => dim,
            Geometry::Polar { .. } => 2,
        }
    }

    /// Nominal grid spacing: `2π/N` on the torus, `1/N_r` on the disk.
    pub fn spacing(&self) -> f64 {
        match *self {
            Geometry::Torus { n, .. } => 2.0 * PI / n as f64,
            Geometry::Polar { nr, .. } => 1.0 / nr as f64,
        }
    }

    pub fn is_torus(&self) -> bool {
        matches!(self, Geometry::Torus { .. })
    }

    /// Cartesian coordinates of node `idx` (unused trailing entries are 0).
    pub fn coords(&self, idx: usize) -> [f64; 3] {
        match *self {
            Geometry::Torus { dim, n } => {
                let h = 2.0 * PI / n as f64;
                let mut out = [0.0; 3];
                let mut rest = idx;
                for a in (0..dim).rev() {
                    out[a] = (rest % n) as f64 * h;
                    rest /= n;
                }
                out
            }
            Geometry::Polar { nr, nphi } => {
                let (i, k) = (idx / nphi, idx % nphi);
                let r = (i as f64 + 0.5) / nr as f64;
                let phi = 2.0 * PI * k as f64 / nphi as f64;
                [r * phi.cos(), r * phi.sin(), 0.0]
            }
        }
    }

    /// Radius of every polar ring.
    pub fn radii(&self) -> Vec<f64> {
        match *self {
            Geometry::Polar { nr, .. } => (0..nr).map(|i| (i as f64 + 0.5) / nr as f64).collect(),
            Geometry::Torus { .. } => Vec::new(),
        }
    }

    /// Quadrature weight of node `idx`: cell volume on the torus, the
    /// midpoint polar cell area `r_i Δr Δφ` on the disk.
    pub fn weight(&self, idx: usize) -> f64 {
        match *self {
            Geometry::Torus { dim, n } => (2.0 * PI / n as f64).powi(dim as i32),
            Geometry::Polar { nr, nphi } => {
                let i = idx / nphi;
                let r = (i as f64 + 0.5) / nr as f64;
                r * (1.0 / nr as f64) * (2.0 * PI / nphi as f64)
            }
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            Geometry::Torus { dim, n } => {
                if !(2..=3).contains(&dim) || n < 2 {
                    return Err(LabError::Parameter(format!("invalid torus grid d={dim} N={n}")));
                }
            }
            Geometry::Polar { nr, nphi } => {
                if nr < 2 || nphi < 4 {
                    return Err(LabError::Parameter(format!("invalid polar grid {nr}x{nphi}")));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    pub geometry: Geometry,
    pub components: usize,
    pub values: Vec<f64>,
    pub zero_average: bool,
}

impl GridField {
    pub fn new(geometry: Geometry, components: usize, values: Vec<f64>) -> Result<Self> {
        geometry.validate()?;
        if components == 0 || values.len() != geometry.n_nodes() * components {
            return Err(LabError::Shape(format!(
                "{} values for {} nodes × {components} components",
                values.len(),
                geometry.n_nodes()
            )));
        }
        Ok(GridField { geometry, components, values, zero_average: false })
    }

    pub fn zeros(geometry: Geometry, components: usize) -> Result<Self> {
        Self::new(geometry, components, vec![0.0; geometry.n_nodes() * components])
    }

    /// Samples a scalar function of the node coordinates.
    pub fn from_fn(geometry: Geometry, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let d = geometry.dim();
        let values = (0..geometry.n_nodes()).map(|i| f(&geometry.coords(i)[..d])).collect();
        Self::new(geometry, 1, values)
    }

    /// Samples the velocity of `spec` at every node.
    pub fn sample_velocity(spec: &VelocityFieldSpec, geometry: Geometry) -> Result<Self> {
        let d = spec.dim();
        if geometry.dim() != d || geometry.is_torus() != matches!(spec.domain, crate::Domain::Torus { .. }) {
            return Err(LabError::Shape("grid geometry does not match the field domain".into()));
        }
        let n = geometry.n_nodes();
        let mut values = vec![0.0; n * d];
        let mut v = [0.0; 3];
        for i in 0..n {
            let x = geometry.coords(i);
            spec.velocity(&x[..d], &mut v);
            for c in 0..d {
                values[c * n + i] = v[c];
            }
        }
        Self::new(geometry, d, values)
    }

    pub fn n_nodes(&self) -> usize {
        self.geometry.n_nodes()
    }

    pub fn component(&self, c: usize) -> &[f64] {
        let n = self.n_nodes();
        &self.values[c * n..(c + 1) * n]
    }

    pub fn component_mut(&mut self, c: usize) -> &mut [f64] {
        let n = self.n_nodes();
        &mut self.values[c * n..(c + 1) * n]
    }

    /// Single-component view of component `c`.
    pub fn extract(&self, c: usize) -> GridField {
        GridField {
            geometry: self.geometry,
            components: 1,
            values: self.component(c).to_vec(),
            zero_average: self.zero_average,
        }
    }

    /// Quadrature-weighted mean of component `c`.
    pub fn mean(&self, c: usize) -> f64 {
        let vals = self.component(c);
        let (mut s, mut w) = (0.0, 0.0);
        for (i, v) in vals.iter().enumerate() {
            let wi = self.geometry.weight(i);
            s += wi * v;
            w += wi;
        }
        s / w
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest pointwise Euclidean norm across components.
    pub fn max_norm(&self) -> f64 {
        let n = self.n_nodes();
        (0..n)
            .map(|i| (0..self.components).map(|c| self.values[c * n + i].powi(2)).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    }

    /// Subtracts the weighted mean from every component and sets the flag.
    pub fn remove_mean(&mut self) {
        for c in 0..self.components {
            let m = self.mean(c);
            self.component_mut(c).iter_mut().for_each(|v| *v -= m);
        }
        self.zero_average = true;
    }

    pub fn check_finite(&self) -> Result<()> {
        if let Some(i) = self.values.iter().position(|v| !v.is_finite()) {
            return Err(LabError::Input(format!("non-finite value at storage index {i}")));
        }
        Ok(())
    }

    /// Invariant check for the zero-average flag.
    pub fn satisfies_zero_average(&self) -> bool {
        let scale = self.max_abs();
        (0..self.components).all(|c| self.mean(c).abs() <= 1e-12 * scale.max(f64::MIN_POSITIVE))
    }

    pub fn max_abs_diff(&self, other: &GridField) -> Result<f64> {
        if self.geometry != other.geometry || self.components != other.components {
            return Err(LabError::Shape("fields live on different grids".into()));
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs())))
    }

    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        let (domain, n) = match self.geometry {
            Geometry::Torus { n, .. } => ("torus", n.to_string()),
            Geometry::Polar { nr, nphi } => ("disk", format!("{nr}x{nphi}")),
        };
        writeln!(
            w,
            "{MAGIC} 1 domain={domain} d={} n={n} components={} zero_average={}",
            self.geometry.dim(),
            self.components,
            u8::from(self.zero_average)
        )?;
        let mut buf = Vec::with_capacity(self.values.len() * 8);
        for v in &self.values {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&buf)?;
        Ok(())
    }

    pub fn read_from(mut r: impl Read) -> Result<Self> {
        let mut header = Vec::new();
        let mut byte = [0u8; 1];
        loop {
            r.read_exact(&mut byte)?;
            if byte[0] == b'\n' {
                break;
            }
            header.push(byte[0]);
            if header.len() > 512 {
                return Err(LabError::Format("grid header too long".into()));
            }
        }
        let header = String::from_utf8(header).map_err(|e| LabError::Format(e.to_string()))?;
        let mut parts = header.split_whitespace();
        if parts.next() != Some(MAGIC) || parts.next() != Some("1") {
            return Err(LabError::Format("not a pressure-lab grid file".into()));
        }
        let (mut domain, mut d, mut n, mut comps, mut zero) = (None, None, None, None, None);
        for kv in parts {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| LabError::Format(format!("bad header token `{kv}`")))?;
            match k {
                "domain" => domain = Some(v.to_string()),
                "d" => d = v.parse::<usize>().ok(),
                "n" => n = Some(v.to_string()),
                "components" => comps = v.parse::<usize>().ok(),
                "zero_average" => zero = Some(v == "1"),
                _ => return Err(LabError::Format(format!("unknown header key `{k}`"))),
            }
        }
        let missing = |what: &str| LabError::Format(format!("grid header lacks `{what}`"));
        let d = d.ok_or_else(|| missing("d"))?;
        let n = n.ok_or_else(|| missing("n"))?;
        let geometry = match domain.as_deref() {
            Some("torus") => Geometry::Torus {
                dim: d,
                n: n.parse().map_err(|_| LabError::Format(format!("bad torus size `{n}`")))?,
            },
            Some("disk") => {
                let (a, b) = n.split_once('x').ok_or_else(|| LabError::Format(format!("bad disk size `{n}`")))?;
                let parse = |s: &str| s.parse::<usize>().map_err(|_| LabError::Format(format!("bad disk size `{n}`")));
                if d != 2 {
                    return Err(LabError::Format("disk grids are two-dimensional".into()));
                }
                Geometry::Polar { nr: parse(a)?, nphi: parse(b)? }
            }
            _ => return Err(missing("domain")),
        };
        let comps = comps.ok_or_else(|| missing("components"))?;
        geometry.validate()?;
        let len = geometry.n_nodes() * comps;
        let mut raw = vec![0u8; len * 8];
        r.read_exact(&mut raw)?;
        let values = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
            .collect();
        let mut field = GridField::new(geometry, comps, values)?;
        field.zero_average = zero.unwrap_or(false);
        Ok(field)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polar_weights_sum_to_the_disk_area() {
        let g = Geometry::Polar { nr: 37, nphi: 64 };
        let s: f64 = (0..g.n_nodes()).map(|i| g.weight(i)).sum();
        assert!((s - PI).abs() < 1e-12);
    }

    #[test]
    fn torus_coordinates_are_row_major() {
        let g = Geometry::Torus { dim: 3, n: 4 };
        let c = g.coords(1 * 16 + 2 * 4 + 3);
        let h = PI / 2.0;
        assert_eq!(c, [h, 2.0 * h, 3.0 * h]);
    }

    #[test]
    fn remove_mean_sets_the_invariant() {
        let g = Geometry::Polar { nr: 16, nphi: 32 };
        let mut f = GridField::from_fn(g, |x| 3.0 + x[0] * x[0]).unwrap();
        assert!(!f.satisfies_zero_average());
        f.remove_mean();
        assert!(f.satisfies_zero_average());
    }

    #[test]
    fn file_round_trip_and_header() {
        let f = GridField::from_fn(Geometry::Polar { nr: 3, nphi: 8 }, |x| x[0] - 0.25 * x[1]).unwrap();
        let mut buf = Vec::new();
        f.write_to(&mut buf).unwrap();
        let nl = buf.iter().position(|&b| b == b'\n').unwrap();
        assert_eq!(
            std::str::from_utf8(&buf[..nl]).unwrap(),
            "pressure-lab-grid 1 domain=disk d=2 n=3x8 components=1 zero_average=0"
        );
        assert_eq!(buf.len(), nl + 1 + 24 * 8);
        assert_eq!(&buf[nl + 1..nl + 9], &f.values[0].to_le_bytes());
        let back = GridField::read_from(&buf[..]).unwrap();
        assert_eq!(back, f);
    }

    #[test]
    fn truncated_payload_is_an_error() {
        let f = GridField::zeros(Geometry::Torus { dim: 2, n: 4 }, 2).unwrap();
        let mut buf = Vec::new();
        f.write_to(&mut buf).unwrap();
        buf.truncate(buf.len() - 3);
        assert!(GridField::read_from(&buf[..]).is_err());
        assert!(GridField::read_from(&b"garbage 1 domain=torus\n"[..]).is_err());
    }
}
