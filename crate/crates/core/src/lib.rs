//! Numerical laboratory for the regularity of the incompressible Euler
//! pressure.
//!
//! The pressure `p` associated with a velocity field `u` solves
//! `-Δp = div div(u ⊗ u)`. This crate computes it for synthetic Hölder
//! continuous, divergence-free fields in two settings:
//!
//! * the flat torus `𝕋^d = [0, 2π)^d`, where a dealiased pseudo-spectral
//!   solve is exact up to round-off ([`torus`]);
//! * the unit disk with the no-flow condition `u·n = 0`, where the pressure
//!   is computed both from the Green–Neumann representation formula by
//!   singular quadrature and by an independent polar finite-difference
//!   Neumann solve ([`disk_solver`], backed by [`disk_kernel`]).
//!
//! [`holder`] measures Hölder exponents of sampled fields through
//! multiscale oscillation profiles and [`harness`] turns the regularity
//! claims into named, reproducible experiments.

pub mod disk_kernel;
pub mod disk_solver;
pub mod error;
pub mod fields;
pub mod grid;
pub mod harness;
pub mod holder;
pub mod quadrature;
pub mod rng;
pub mod torus;

pub use error::{LabError, Result};
pub use fields::{Domain, LacunaryMode, TrigPolynomial, TrigTerm, VelocityFieldSpec};
pub use grid::{Geometry, GridField};

/// Artifact version recorded in every report row.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
