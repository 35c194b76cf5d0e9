//! The complex ray transform: boundary traces of leafwise `∂_{z̄}` solutions
//! and their exterior Laurent data.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::algebra::field::MatrixField;
use crate::algebra::tensor::SymmetricTensorField;
use crate::dbar::contour::BoundaryContour;
use crate::dbar::solve::{solve_dbar_source, SolveReport, SolverOptions};
use crate::error::{Error, Result};
use crate::geometry::leaf::{build_leaf, AmbientConnection, Leaf};
use crate::geometry::surface::SimpleSurface;
use crate::grid::ComplexGrid;
use crate::linalg::{self, CMat};

/// Grid, window and solver settings shared by every leaf of a transform.
#[derive(Debug, Clone)]
pub struct RaySetup {
    pub grid: ComplexGrid,
    /// Half-width `T` of the `x₁` window.
    pub half_width: f64,
    pub opts: SolverOptions,
    /// Number of exterior Laurent coefficients kept.
    pub laurent_terms: usize,
}

impl RaySetup {
    pub fn new(grid: ComplexGrid, half_width: f64) -> Self {
        Self { grid, half_width, opts: SolverOptions::default(), laurent_terms: 24 }
    }
}

/// Leafwise solution of `∂_{z̄}u + A(∂_{z̄})u = ½ f(⊗^m(∂_s + iγ̇))` on the
/// data window of the leaf through `(x, v)`.
#[derive(Debug, Clone)]
pub struct LeafSolution {
    pub leaf: Leaf,
    pub u: MatrixField,
    pub coupling: MatrixField,
    pub source: MatrixField,
    pub report: SolveReport,
}

impl LeafSolution {
    /// `2(∂_{z̄}u + A(∂_{z̄})u − source)`, the transport-equation residual field.
    pub fn residual_field(&self) -> Result<MatrixField> {
        let a = self.coupling.restrict(self.u.window());
        let s = self.source.restrict(self.u.window());
        Ok(self.u.dzbar().add(&a.mul(&self.u)?)?.sub(&s)?.scale(Complex64::new(2.0, 0.0)))
    }
}

pub fn solve_leaf(
    setup: &RaySetup,
    surface: &SimpleSurface,
    f: &SymmetricTensorField,
    a: &AmbientConnection,
    x: [f64; 2],
    v: [f64; 2],
) -> Result<LeafSolution> {
    let leaf = build_leaf(surface, x, v, setup.half_width)?;
    let window = leaf.data_window(&setup.grid)?;
    let conn = leaf.pull_connection(a, &setup.grid)?;
    let source = leaf.pull_source(f, &setup.grid)?;
    let opts = setup.opts.clone().with_target(window);
    let sol = solve_dbar_source(&conn, &source, &opts)?;
    let coupling = crate::algebra::connection::dzbar_component(&conn)?;
    Ok(LeafSolution { leaf, u: sol.u, coupling, source, report: sol.report })
}

/// `𝒞_m f(x, v)`: samples of the (transport-normalised) solution on the
/// boundary of the leaf window and its exterior Laurent coefficients.
#[derive(Debug, Clone)]
pub struct BoundaryTrace {
    pub degree: usize,
    pub half_width: f64,
    pub base: ([f64; 2], [f64; 2]),
    pub length: f64,
    pub contour: BoundaryContour,
    pub values: Vec<CMat>,
    /// `c_k` with `u(z) = Σ_{k≥1} c_k z^{−k}` outside the contour.
    pub laurent: Vec<CMat>,
    /// Largest `|ζ|` on the contour; the Laurent series converges beyond it.
    pub radius: f64,
    pub report: SolveReport,
}

#[derive(Debug, Clone, Serialize)]
pub struct TraceSummary {
    pub degree: usize,
    pub x: [f64; 2],
    pub v: [f64; 2],
    pub length: f64,
    pub trace_sup: f64,
    pub laurent_sup: f64,
    pub solver_residual: f64,
    pub iterations: usize,
}

impl BoundaryTrace {
    pub fn from_solution(sol: &LeafSolution, degree: usize, terms: usize) -> Result<Self> {
        let contour = BoundaryContour::rectangle(sol.u.grid(), &sol.u.window())?;
        let values = contour.sample(&sol.u);
        let radius = contour.samples().iter().map(|z| z.norm()).fold(0.0, f64::max);
        let laurent = laurent_coefficients(&contour, &values, terms);
        let length = sol.leaf.t_range.1;
        let base = sol.leaf.path().map(|p| (p.start.x, p.start.v)).unwrap_or(([0.0; 2], [0.0; 2]));
        Ok(Self {
            degree,
            half_width: sol.leaf.half_width,
            base,
            length,
            contour,
            values,
            laurent,
            radius,
            report: sol.report.clone(),
        })
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(linalg::fro).fold(0.0, f64::max)
    }

    pub fn laurent_norm(&self) -> f64 {
        self.laurent.iter().map(linalg::fro).fold(0.0, f64::max)
    }

    /// Truncated Laurent series at `z`.
    pub fn laurent_eval(&self, z: Complex64) -> CMat {
        let r = self.values[0].nrows();
        let zi = z.inv();
        let mut p = zi;
        let mut out = CMat::zeros(r, r);
        for c in &self.laurent {
            out += c * p;
            p *= zi;
        }
        out
    }

    /// Exterior Cauchy integral `−(1/2πi)∮ u(ζ)/(ζ − z) dζ`, equal to `u(z)`
    /// for `z` outside the contour.
    pub fn exterior_value(&self, z: Complex64) -> Result<CMat> {
        if self.contour.is_inside(z) {
            return Err(Error::InvalidArgument(format!("{z} lies inside the leaf window")));
        }
        let r = self.values[0].nrows();
        let mut acc = CMat::zeros(r, r);
        for ((zeta, w), v) in self.contour.samples().iter().zip(self.contour.dz_weights()).zip(&self.values) {
            acc += v * (*w / (zeta - z));
        }
        Ok(acc / Complex64::new(0.0, -2.0 * PI))
    }

    pub fn summary(&self) -> TraceSummary {
        TraceSummary {
            degree: self.degree,
            x: self.base.0,
            v: self.base.1,
            length: self.length,
            trace_sup: self.sup_norm(),
            laurent_sup: self.laurent_norm(),
            solver_residual: self.report.residual,
            iterations: self.report.iterations,
        }
    }
}

/// `c_k = (1/2πi)∮ u(ζ) ζ^{k−1} dζ` for `k = 1..=terms`.
pub fn laurent_coefficients(contour: &BoundaryContour, values: &[CMat], terms: usize) -> Vec<CMat> {
    (1..=terms)
        .map(|k| {
            let weighted: Vec<CMat> =
                contour.samples().iter().zip(values).map(|(z, v)| v * z.powu(k as u32 - 1)).collect();
            contour.integrate(&weighted) / Complex64::new(0.0, 2.0 * PI)
        })
        .collect()
}

pub fn complex_ray_transform(
    setup: &RaySetup,
    surface: &SimpleSurface,
    f: &SymmetricTensorField,
    a: &AmbientConnection,
    x: [f64; 2],
    v: [f64; 2],
) -> Result<BoundaryTrace> {
    let sol = solve_leaf(setup, surface, f, a, x, v)?;
    BoundaryTrace::from_solution(&sol, f.degree(), setup.laurent_terms)
}

/// `ũ(w) = u(d/w)` on the punctured unit disk, from the Laurent data.
pub fn exterior_representation(trace: &BoundaryTrace, d: f64, w: &[Complex64]) -> Result<Vec<CMat>> {
    if d <= trace.radius {
        return Err(Error::RadiusTooSmall { d, min: trace.radius });
    }
    w.iter()
        .map(|&w| {
            if w.norm() == 0.0 || w.norm() >= 1.0 {
                return Err(Error::InvalidArgument(format!("{w} is not in the punctured unit disk")));
            }
            Ok(trace.laurent_eval(Complex64::new(d, 0.0) / w))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dbar::cauchy_transform;
    use crate::geometry::surface::ConformalFactor;
    use crate::linalg::c;

    fn bump(x1: f64, x: &[f64], c0: [f64; 3], w: f64) -> f64 {
        let r2 = ((x1 - c0[0]).powi(2) + (x[0] - c0[1]).powi(2) + (x[1] - c0[2]).powi(2)) / (w * w);
        if r2 >= 1.0 { 0.0 } else { (-1.0 / (1.0 - r2)).exp() }
    }

    fn setup(h: f64) -> RaySetup {
        RaySetup::new(ComplexGrid::new(4.0, h).unwrap(), 2.0)
    }

    #[test]
    fn zero_source_gives_zero_trace() {
        let s = SimpleSurface::disk(1.0, ConformalFactor::Flat).unwrap();
        let f = SymmetricTensorField::scalar(2, 1, |_, _| CMat::zeros(1, 1));
        let x = s.boundary_point(0.3);
        let t = complex_ray_transform(&setup(1.0 / 32.0), &s, &f, &AmbientConnection::zero(3, 1), x, s.inward(x, 0.1)).unwrap();
        assert_eq!(t.sup_norm(), 0.0);
        assert_eq!(t.laurent_norm(), 0.0);
    }

    #[test]
    fn scalar_trace_matches_cauchy_transform_of_pulled_source() {
        let s = SimpleSurface::disk(1.0, ConformalFactor::Flat).unwrap();
        let f = SymmetricTensorField::scalar(2, 1, |x1, x| CMat::from_element(1, 1, c(bump(x1, x, [0.1, 0.0, 0.0], 0.6), 0.0)));
        let x = s.boundary_point(PI);
        let st = setup(1.0 / 64.0);
        let sol = solve_leaf(&st, &s, &f, &AmbientConnection::zero(3, 1), x, s.inward(x, 0.0)).unwrap();
        let g = st.grid;
        let direct = MatrixField::from_fn(g, sol.u.window(), 1, |z| {
            let p = sol.leaf.point(z).unwrap_or(vec![9.0; 3]);
            CMat::from_element(1, 1, c(0.5 * bump(p[0], &p[1..], [0.1, 0.0, 0.0], 0.6), 0.0))
        });
        let oracle = cauchy_transform(&direct.with_support(sol.source.support().unwrap()), sol.u.window()).unwrap();
        assert!(sol.u.sub(&oracle).unwrap().sup_norm(None) < 1e-12);
        let res = sol.residual_field().unwrap().sup_norm(None);
        assert!(res < 1e-3, "{res}");
    }

    #[test]
    fn laurent_and_cauchy_paths_agree() {
        let s = SimpleSurface::disk(1.0, ConformalFactor::Cap { kappa: 0.25 }).unwrap();
        let f = SymmetricTensorField::scalar(2, 1, |x1, x| {
            CMat::from_element(1, 1, c(bump(x1, x, [0.3, 0.1, 0.2], 0.5), -bump(x1, x, [-0.4, 0.0, -0.1], 0.4)))
        });
        let x = s.boundary_point(2.0);
        let t = complex_ray_transform(&setup(1.0 / 32.0), &s, &f, &AmbientConnection::zero(3, 1), x, s.inward(x, 0.4)).unwrap();
        assert!(t.sup_norm() > 1e-3);
        let d = 2.0 * t.radius;
        let ws = [c(0.3, 0.1), c(-0.2, 0.4), c(0.05, -0.5)];
        let rep = exterior_representation(&t, d, &ws).unwrap();
        for (w, r) in ws.iter().zip(&rep) {
            let direct = t.exterior_value(d / w).unwrap();
            let gap = (r - &direct).norm();
            assert!(gap < 1e-8, "{gap}");
        }
        assert!(matches!(exterior_representation(&t, 0.5 * t.radius, &ws), Err(Error::RadiusTooSmall { .. })));
    }

    #[test]
    fn inverse_z_pulls_back_to_w_over_d() {
        let g = ComplexGrid::new(2.0, 1.0 / 64.0).unwrap();
        let bx = g.window(-1.0, 1.0, -1.0, 1.0).unwrap();
        let contour = BoundaryContour::rectangle(&g, &bx).unwrap();
        let values: Vec<CMat> = contour.samples().iter().map(|z| CMat::from_element(1, 1, z.inv())).collect();
        let laurent = laurent_coefficients(&contour, &values, 6);
        assert!((laurent[0][(0, 0)] - c(1.0, 0.0)).norm() < 1e-7);
        assert!(laurent[1..].iter().all(|m| m.norm() < 1e-7));
    }
}
