//! Complex parallel transport certificates, the equality test and the real
//! parallel transport along curves.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::algebra::connection::{dzbar_component, Connection, GaugeTransform, SINGULAR_DET};
use crate::algebra::field::MatrixField;
use crate::dbar::contour::{plemelj_extension, BoundaryContour};
use crate::dbar::holomorphy::holomorphy_test;
use crate::dbar::solve::{solve_dbar_invertible, SolveReport, SolverOptions};
use crate::error::Result;
use crate::geometry::leaf::AmbientConnection;
use crate::geometry::surface::GeodesicPath;
use crate::grid::IndexBox;
use crate::linalg::{self, CMat};

/// Nodes added around the leaf window so that exterior behaviour is sampled.
pub const EXTERIOR_PAD: usize = 12;

/// Samples on the circle used for the entirety test.
pub const CIRCLE_SAMPLES: usize = 1024;

/// Decay-normalised solution `U_A` of `∂_{z̄}U + A(∂_{z̄})U = 0` with its
/// restriction to the boundary of the leaf window.
#[derive(Debug, Clone)]
pub struct TransportCertificate {
    pub window: IndexBox,
    pub contour: BoundaryContour,
    pub trace: Vec<CMat>,
    /// `U_A` on the window grown by [`EXTERIOR_PAD`] nodes.
    pub u: MatrixField,
    pub min_det: f64,
    pub report: SolveReport,
}

#[derive(Debug, Clone, Serialize)]
pub struct CertificateSummary {
    pub samples: usize,
    pub min_det: f64,
    pub normalisation_defect: f64,
    pub solver_residual: f64,
}

impl TransportCertificate {
    fn centre(&self) -> Complex64 {
        let pts = self.contour.samples();
        let (lo, hi) = pts.iter().fold((pts[0], pts[0]), |(lo, hi), z| {
            (Complex64::new(lo.re.min(z.re), lo.im.min(z.im)), Complex64::new(hi.re.max(z.re), hi.im.max(z.im)))
        });
        (lo + hi) * 0.5
    }

    /// `U_A(z)` outside the window from the trace by the exterior Cauchy formula.
    pub fn exterior_value(&self, z: Complex64) -> CMat {
        let r = self.trace[0].nrows();
        let id = linalg::identity(r);
        let mut acc = CMat::zeros(r, r);
        for ((zeta, w), v) in self.contour.samples().iter().zip(self.contour.dz_weights()).zip(&self.trace) {
            acc += (v - &id) * (*w / (zeta - z));
        }
        id - acc / Complex64::new(0.0, 2.0 * PI)
    }

    /// `|(1/2πi)∮ U(ζ)/(ζ − c) dζ − id|`: the value at infinity of the
    /// exterior continuation compared with the identity.
    pub fn normalisation_defect(&self) -> f64 {
        let c = self.centre();
        let weighted: Vec<CMat> = self.contour.samples().iter().zip(&self.trace).map(|(z, v)| v / (z - c)).collect();
        let at_inf = self.contour.integrate(&weighted) / Complex64::new(0.0, 2.0 * PI);
        linalg::fro(&(at_inf - linalg::identity(self.trace[0].nrows())))
    }

    /// Largest trace difference to another certificate on the same window.
    pub fn distance(&self, other: &TransportCertificate) -> f64 {
        self.trace.iter().zip(&other.trace).map(|(a, b)| linalg::fro(&(a - b))).fold(0.0, f64::max)
    }

    pub fn summary(&self) -> CertificateSummary {
        CertificateSummary {
            samples: self.trace.len(),
            min_det: self.min_det,
            normalisation_defect: self.normalisation_defect(),
            solver_residual: self.report.residual,
        }
    }
}

/// `𝒫_A` on the leaf window `window`, represented by the solution tending to
/// the identity at infinity.
pub fn complex_parallel_transport(a: &Connection, window: IndexBox, opts: &SolverOptions) -> Result<TransportCertificate> {
    let grid = *a.grid();
    let target = window.grow(EXTERIOR_PAD, &grid);
    let sol = solve_dbar_invertible(a, &opts.clone().with_target(target))?;
    let contour = BoundaryContour::rectangle(&grid, &window)?;
    let trace = contour.sample(&sol.c);
    Ok(TransportCertificate { window, contour, trace, u: sol.c, min_det: sol.min_det, report: sol.report })
}

#[derive(Debug, Clone, Serialize)]
pub struct EqualTransportDiagnostics {
    /// `‖∂_{z̄}W‖` outside the window for `W = U_B⁻¹U_A`.
    pub exterior_holomorphy: f64,
    /// `W` on the window boundary against its Plemelj extension from the circle.
    pub plemelj_mismatch: f64,
    /// Smallest `|det H|` of the entire extension inside the circle.
    pub min_det_h: f64,
    /// Discrete L² residual of `∂_{z̄}G + A(∂_{z̄})G − GB(∂_{z̄})`.
    pub residual: f64,
    /// Largest `|G − id|` outside the window.
    pub exterior_identity: f64,
    pub circle_radius: f64,
}

#[derive(Debug, Clone)]
pub struct EqualTransport {
    pub equal: bool,
    pub gauge: Option<GaugeTransform>,
    pub diagnostics: EqualTransportDiagnostics,
}

/// Decides whether `A` and `B` have equal complex parallel transport on the
/// leaf window, and if so builds `G = U_A H⁻¹ U_B⁻¹`.
pub fn equal_transport_check(a: &Connection, b: &Connection, window: IndexBox, opts: &SolverOptions, tol: f64) -> Result<EqualTransport> {
    let grid = *a.grid();
    let ca = complex_parallel_transport(a, window, opts)?;
    let cb = complex_parallel_transport(b, window, opts)?;
    let target = ca.u.window();
    let ub_inv = cb.u.inverse(SINGULAR_DET)?;
    let w = ub_inv.mul(&ca.u)?;

    let strips = exterior_strips(&target, &window);
    let exterior_holomorphy = strips.iter().map(|s| holomorphy_test(&w, s)).fold(0.0, f64::max);

    let centre = ca.centre();
    let radius = 2.0 * ca.contour.samples().iter().map(|z| (z - centre).norm()).fold(0.0, f64::max);
    let circle = BoundaryContour::circle(centre, radius, CIRCLE_SAMPLES)?;
    let w_circle: Vec<CMat> = circle
        .samples()
        .iter()
        .map(|&z| {
            let inv = linalg::inverse(&cb.exterior_value(z)).unwrap_or_else(|| CMat::from_element(1, 1, Complex64::new(f64::NAN, 0.0)));
            inv * ca.exterior_value(z)
        })
        .collect();
    let h_bd = plemelj_extension(&circle, &w_circle, ca.contour.samples(), 0.0)?;
    let w_bd = ca.contour.sample(&w);
    let plemelj_mismatch = h_bd.iter().zip(&w_bd).map(|(x, y)| linalg::fro(&(x - y))).fold(0.0, f64::max);

    let nodes: Vec<(usize, usize)> = target.nodes().collect();
    let pts: Vec<Complex64> = nodes.iter().map(|&(i, j)| grid.z(i, j)).collect();
    let h_vals = plemelj_extension(&circle, &w_circle, &pts, 0.0)?;
    let mut hf = MatrixField::zeros(grid, target, a.rank());
    for (&(i, j), m) in nodes.iter().zip(&h_vals) {
        hf.set(i, j, m);
    }
    let (min_det_h, _, _) = hf.min_abs_det(&target);

    let mut diagnostics = EqualTransportDiagnostics {
        exterior_holomorphy,
        plemelj_mismatch,
        min_det_h,
        residual: f64::NAN,
        exterior_identity: f64::NAN,
        circle_radius: radius,
    };
    let structural = plemelj_mismatch.is_finite() && plemelj_mismatch <= tol && min_det_h > SINGULAR_DET;
    if !structural {
        return Ok(EqualTransport { equal: false, gauge: None, diagnostics });
    }
    let g = ca.u.mul(&hf.inverse(SINGULAR_DET)?)?.mul(&ub_inv)?;
    diagnostics.residual = g_equation_residual(&g, &dzbar_component(a)?, &dzbar_component(b)?)?;
    let id = linalg::identity(a.rank());
    diagnostics.exterior_identity =
        target.nodes().filter(|&(i, j)| !window.contains(i, j)).map(|(i, j)| linalg::fro(&(g.at(i, j) - &id))).fold(0.0, f64::max);
    let equal = diagnostics.residual <= tol && diagnostics.exterior_identity <= tol && diagnostics.exterior_holomorphy <= tol;
    Ok(EqualTransport { equal, gauge: Some(GaugeTransform::new(g)?), diagnostics })
}

/// Discrete L² norm of `∂_{z̄}G + aG − Gb` over the window of `g`.
pub fn g_equation_residual(g: &MatrixField, a: &MatrixField, b: &MatrixField) -> Result<f64> {
    let w = g.window();
    let res = g.dzbar().add(&a.restrict(w).mul(g)?)?.sub(&g.mul(&b.restrict(w))?)?;
    Ok(res.l2_norm(None))
}

/// Four boxes covering `outer` minus `inner`.
pub fn exterior_strips(outer: &IndexBox, inner: &IndexBox) -> Vec<IndexBox> {
    let mut out = Vec::new();
    let (oi1, oj1) = (outer.i0 + outer.nx, outer.j0 + outer.ny);
    let (ii1, ij1) = (inner.i0 + inner.nx, inner.j0 + inner.ny);
    if inner.j0 > outer.j0 {
        out.push(IndexBox { i0: outer.i0, j0: outer.j0, nx: outer.nx, ny: inner.j0 - outer.j0 });
    }
    if oj1 > ij1 {
        out.push(IndexBox { i0: outer.i0, j0: ij1, nx: outer.nx, ny: oj1 - ij1 });
    }
    if inner.i0 > outer.i0 {
        out.push(IndexBox { i0: outer.i0, j0: inner.j0, nx: inner.i0 - outer.i0, ny: inner.ny });
    }
    if oi1 > ii1 {
        out.push(IndexBox { i0: ii1, j0: inner.j0, nx: oi1 - ii1, ny: inner.ny });
    }
    out
}

/// Solution of `Ṗ + A(t)P = 0`, `P(t₀) = id`, at `t₁` by RK4 with `steps` steps.
pub fn real_parallel_transport<F>(a: F, rank: usize, t0: f64, t1: f64, steps: usize) -> CMat
where
    F: Fn(f64) -> CMat,
{
    let n = steps.max(1);
    let dt = (t1 - t0) / n as f64;
    let mut p = linalg::identity(rank);
    let rhs = |t: f64, p: &CMat| -(a(t) * p);
    for k in 0..n {
        let t = t0 + k as f64 * dt;
        let k1 = rhs(t, &p);
        let k2 = rhs(t + 0.5 * dt, &(&p + &k1 * Complex64::new(0.5 * dt, 0.0)));
        let k3 = rhs(t + 0.5 * dt, &(&p + &k2 * Complex64::new(0.5 * dt, 0.0)));
        let k4 = rhs(t + dt, &(&p + &k3 * Complex64::new(dt, 0.0)));
        p += (k1 + k2 * Complex64::new(2.0, 0.0) + k3 * Complex64::new(2.0, 0.0) + k4) * Complex64::new(dt / 6.0, 0.0);
    }
    p
}

/// Parallel transport of an ambient connection along `x₁ = const`, `γ(t)`.
pub fn real_transport_geodesic(a: &AmbientConnection, x1: f64, path: &GeodesicPath, steps: usize) -> CMat {
    let dim = a.dim() - 1;
    real_parallel_transport(
        |t| {
            let (x, v) = path.at(t);
            let mut p = vec![x1];
            p.extend_from_slice(&x[..dim]);
            let mut w = vec![Complex64::new(0.0, 0.0)];
            w.extend(v[..dim].iter().map(|c| Complex64::new(*c, 0.0)));
            a.apply(&p, &w)
        },
        a.rank(),
        0.0,
        path.length,
        steps,
    )
}

/// Parallel transport of a leaf connection along the horizontal segment
/// `s ↦ s + it` from `s0` to `s1`, reading `A_s` by interpolation.
pub fn real_transport_leaf_line(a: &Connection, t: f64, s0: f64, s1: f64, steps: usize) -> CMat {
    let a_s = a.component(0);
    real_parallel_transport(|s| a_s.interpolate(Complex64::new(s, t)), a.rank(), s0, s1, steps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::connection::Frame;
    use crate::dbar::cauchy_transform;
    use crate::grid::ComplexGrid;
    use crate::linalg::c;

    fn bump(z: Complex64, c0: Complex64, w: f64) -> f64 {
        let r2 = (z - c0).norm_sqr() / (w * w);
        if r2 >= 1.0 { 0.0 } else { (1.0 - r2).powi(6) }
    }

    fn setup() -> (ComplexGrid, IndexBox) {
        let g = ComplexGrid::new(4.0, 1.0 / 32.0).unwrap();
        (g, g.window(-2.0, 2.0, 0.0, 2.0).unwrap())
    }

    #[test]
    fn zero_connection_certificate_is_identity() {
        let (g, w) = setup();
        let cert = complex_parallel_transport(&Connection::zero(g, w, 2, Frame::Leaf), w, &SolverOptions::default()).unwrap();
        assert!(cert.trace.iter().all(|m| linalg::fro(&(m - linalg::identity(2))) == 0.0));
        assert!(cert.normalisation_defect() < 1e-12);
    }

    #[test]
    fn scalar_certificate_is_exponential_of_cauchy_transform() {
        let (g, w) = setup();
        let a = MatrixField::from_scalar_fn(g, w, 1, |z| c(bump(z, c(0.2, 1.0), 0.6), 0.3 * bump(z, c(-0.3, 0.8), 0.5)));
        let a = a.clone().with_support(a.tight_support(0).unwrap());
        let conn = Connection::unitary_from_dzbar(&a).unwrap();
        let cert = complex_parallel_transport(&conn, w, &SolverOptions::default()).unwrap();
        let psi = cauchy_transform(&a, cert.u.window()).unwrap();
        let vals = cert.contour.sample(&psi);
        for (t, p) in cert.trace.iter().zip(&vals) {
            assert!((t[(0, 0)] - (-p[(0, 0)]).exp()).norm() < 1e-6);
        }
        assert!(cert.normalisation_defect() < 1e-8);
    }

    #[test]
    fn equal_check_accepts_identical_and_rejects_independent() {
        let (g, w) = setup();
        let mk = |c0: Complex64, amp: f64| {
            let a = MatrixField::from_fn(g, w, 2, |z| {
                let b = bump(z, c0, 0.7) * amp;
                CMat::from_row_slice(2, 2, &[c(b, 0.0), c(0.0, b), c(0.5 * b, 0.0), c(-b, 0.2 * b)])
            });
            let a = a.clone().with_support(a.tight_support(0).unwrap());
            Connection::unitary_from_dzbar(&a).unwrap()
        };
        let a = mk(c(0.1, 1.0), 0.8);
        let b = mk(c(-0.4, 0.9), 0.6);
        let opts = SolverOptions::default();
        let same = equal_transport_check(&a, &a, w, &opts, 1e-5).unwrap();
        assert!(same.equal, "{:?}", same.diagnostics);
        let id = linalg::identity(2);
        let gf = same.gauge.unwrap();
        assert!(w.nodes().all(|(i, j)| linalg::fro(&(gf.field().at(i, j) - &id)) < 1e-8));
        let diff = equal_transport_check(&a, &b, w, &opts, 1e-5).unwrap();
        assert!(!diff.equal);
        assert!(diff.diagnostics.plemelj_mismatch > 1e-4, "{:?}", diff.diagnostics);
    }

    #[test]
    fn real_transport_scalar_and_self_convergence() {
        let a = |t: f64| CMat::from_element(1, 1, c(t.sin(), 0.5 * t));
        let p = real_parallel_transport(a, 1, 0.0, 2.0, 200);
        let integral = c(1.0 - 2f64.cos(), 1.0);
        assert!((p[(0, 0)] - (-integral).exp()).norm() < 1e-9);
        let m = |t: f64| CMat::from_row_slice(2, 2, &[c(0.0, t), c(1.0, 0.0), c(-1.0, t * t), c(0.3, 0.0)]);
        let p1 = real_parallel_transport(m, 2, 0.0, 1.5, 400);
        let p2 = real_parallel_transport(m, 2, 0.0, 1.5, 800);
        assert!(linalg::fro(&(p1 - p2)) < 1e-8);
        assert_eq!(real_parallel_transport(|_| CMat::zeros(2, 2), 2, 0.0, 1.0, 10), linalg::identity(2));
    }
}
