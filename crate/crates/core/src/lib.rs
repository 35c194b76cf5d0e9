//! Numerical toolkit for complex ray transforms and complex parallel
//! transport along bicharacteristic leaves `ℝ × γ ≅ ℂ` of product geometries
//! `ℝ × M`.
//!
//! The pieces, bottom up:
//!
//! * [`algebra`] – matrix fields on complex grids, connections, gauge action,
//!   curvature, symmetric tensors and angular Fourier degree;
//! * [`dbar`] – Cauchy operator and the matrix `∂_{z̄}` solvers built on it,
//!   Plemelj–Sokhotski extension and holomorphy tests;
//! * [`geometry`] – simple surfaces, geodesics, parallel transport, leaves and
//!   the null frames `ξ±(t)`;
//! * [`transforms`] – the complex ray transform, its exterior representation,
//!   the transport solution, symmetrised derivatives and the attenuated X-ray
//!   reduction;
//! * [`holonomy`] – complex and real parallel transport, equality checks, the
//!   non-gauge-equivalent counterexample, Stokes moments and gauge gluing;
//! * [`experiment`] – configuration, reproducible sweeps and report files.

pub mod algebra;
pub mod dbar;
pub mod error;
pub mod experiment;
pub mod geometry;
pub mod grid;
pub mod holonomy;
pub mod linalg;
pub mod transforms;

pub use error::{Error, Result};
pub use grid::{ComplexGrid, IndexBox};
