//! Global solution `u(x₁, x, v)` of the complexified transport equation,
//! assembled from leafwise `∂_{z̄}` solves.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use super::ray::{solve_leaf, RaySetup};
use crate::algebra::fourier::{fourier_degree, high_mode_fraction, Degree};
use crate::algebra::tensor::SymmetricTensorField;
use crate::error::{Error, Result};
use crate::geometry::leaf::AmbientConnection;
use crate::geometry::surface::SimpleSurface;
use crate::linalg::{self, CMat};

/// Samples `u(x₁, x, θ)` on `x₁-grid × points × angles`, where `θ` is the
/// Euclidean direction of the unit velocity.
#[derive(Debug, Clone)]
pub struct TransportField {
    pub x1: Vec<f64>,
    pub points: Vec<[f64; 2]>,
    pub angles: Vec<f64>,
    pub rank: usize,
    values: Vec<CMat>,
    /// Largest interpolated transport-equation residual over all samples.
    pub residual: f64,
}

impl TransportField {
    pub fn at(&self, p: usize, a: usize, k: usize) -> &CMat {
        &self.values[(p * self.angles.len() + a) * self.x1.len() + k]
    }

    /// `∫ u dx₁` (the `ξ₁ = 0` Fourier coefficient) at point `p`, entry
    /// `(i, j)`, as a function of the angle.
    pub fn x1_mean(&self, p: usize, i: usize, j: usize) -> Vec<Complex64> {
        let dx = if self.x1.len() > 1 { self.x1[1] - self.x1[0] } else { 1.0 };
        (0..self.angles.len()).map(|a| (0..self.x1.len()).map(|k| self.at(p, a, k)[(i, j)]).sum::<Complex64>() * dx).collect()
    }

    /// Fourier degree in the angle of the `ξ₁ = 0` coefficient at point `p`.
    pub fn degree(&self, p: usize, tol: f64) -> Result<Degree> {
        let mut worst = Degree::Finite(0);
        for i in 0..self.rank {
            for j in 0..self.rank {
                let d = fourier_degree(&self.x1_mean(p, i, j), tol)?;
                worst = match (worst, d) {
                    (Degree::Unbounded, _) | (_, Degree::Unbounded) => Degree::Unbounded,
                    (Degree::Finite(a), Degree::Finite(b)) => Degree::Finite(a.max(b)),
                };
            }
        }
        Ok(worst)
    }

    /// Largest fraction of angular energy in modes `|k| ≥ m` over all points.
    pub fn high_mode_fraction(&self, m: usize) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for p in 0..self.points.len() {
            for i in 0..self.rank {
                for j in 0..self.rank {
                    worst = worst.max(high_mode_fraction(&self.x1_mean(p, i, j), m)?);
                }
            }
        }
        Ok(worst)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(linalg::fro).fold(0.0, f64::max)
    }
}

/// Base point on `∂M` and arc length `t*` of the geodesic through `x` in
/// direction `v`.
pub fn backtrack(surface: &SimpleSurface, x: [f64; 2], v: [f64; 2]) -> Result<([f64; 2], [f64; 2], f64)> {
    let back = surface.geodesic_trace(x, [-v[0], -v[1]])?;
    let e = back.exit();
    Ok((e.x, [-e.v[0], -e.v[1]], back.length))
}

/// Solves one leaf per `(point, angle)` and reads `u` off at `x₁ + it*`.
pub fn global_transport_solution(
    setup: &RaySetup,
    surface: &SimpleSurface,
    f: &SymmetricTensorField,
    a: &AmbientConnection,
    points: &[[f64; 2]],
    n_angles: usize,
    x1: &[f64],
) -> Result<TransportField> {
    if surface.dim != 2 {
        return Err(Error::InvalidArgument("angle sampling needs a two-dimensional surface".into()));
    }
    let angles: Vec<f64> = (0..n_angles).map(|k| 2.0 * PI * k as f64 / n_angles as f64).collect();
    let jobs: Vec<(usize, usize)> = (0..points.len()).flat_map(|p| (0..n_angles).map(move |a| (p, a))).collect();
    let results: Vec<Result<(Vec<CMat>, f64)>> = jobs
        .par_iter()
        .map(|&(p, k)| {
            let x = points[p];
            let s = 1.0 / surface.conformal(x).sqrt();
            let v = [s * angles[k].cos(), s * angles[k].sin()];
            let (x0, v0, t) = backtrack(surface, x, v)?;
            let sol = solve_leaf(setup, surface, f, a, x0, v0)?;
            let res = sol.residual_field()?;
            let mut worst: f64 = 0.0;
            let vals = x1
                .iter()
                .map(|&s| {
                    let z = Complex64::new(s, t);
                    worst = worst.max(linalg::fro(&res.interpolate(z)));
                    sol.u.interpolate(z)
                })
                .collect();
            Ok((vals, worst))
        })
        .collect();
    let mut values = Vec::with_capacity(jobs.len() * x1.len());
    let mut residual: f64 = 0.0;
    for r in results {
        let (v, w) = r?;
        values.extend(v);
        residual = residual.max(w);
    }
    Ok(TransportField { x1: x1.to_vec(), points: points.to_vec(), angles, rank: f.rank(), values, residual })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::surface::ConformalFactor;
    use crate::grid::ComplexGrid;
    use crate::linalg::c;
    use crate::transforms::derivative::sym_derivative;

    fn g(x1: f64, x: &[f64]) -> f64 {
        let r2 = (x1 * x1 + (x[0] - 0.1).powi(2) + x[1] * x[1]) / 0.36;
        if r2 >= 1.0 { 0.0 } else { (1.0 - r2).powi(5) }
    }

    #[test]
    fn manufactured_scalar_solution() {
        let s = SimpleSurface::disk(1.0, ConformalFactor::Cap { kappa: 0.2 }).unwrap();
        let p = SymmetricTensorField::scalar(2, 1, |x1, x| CMat::from_element(1, 1, c(g(x1, x), 0.0)));
        let f = sym_derivative(&p, s.factor);
        let setup = RaySetup::new(ComplexGrid::new(4.0, 1.0 / 64.0).unwrap(), 2.0);
        let pts = [[0.1, 0.05], [-0.2, 0.3]];
        let x1 = [-0.3, 0.0, 0.25];
        let tf = global_transport_solution(&setup, &s, &f, &AmbientConnection::zero(3, 1), &pts, 8, &x1).unwrap();
        for (pi, pt) in pts.iter().enumerate() {
            for a in 0..8 {
                for (k, &s1) in x1.iter().enumerate() {
                    assert!((tf.at(pi, a, k)[(0, 0)] - c(g(s1, pt), 0.0)).norm() < 1e-5);
                }
            }
        }
        assert!(tf.residual < 1e-3, "{}", tf.residual);
        assert!(tf.high_mode_fraction(1).unwrap() < 1e-8);
    }

    #[test]
    fn backtrack_reaches_point() {
        let s = SimpleSurface::disk(1.0, ConformalFactor::Cap { kappa: 0.5 }).unwrap();
        let x = [0.2, -0.3];
        let k = 1.0 / s.conformal(x).sqrt();
        let (x0, v0, t) = backtrack(&s, x, [k * 0.6, k * 0.8]).unwrap();
        let path = s.geodesic_trace(x0, v0).unwrap();
        let (y, _) = path.at(t);
        assert!((y[0] - x[0]).hypot(y[1] - x[1]) < 1e-9);
    }
}
