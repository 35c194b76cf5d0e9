//! Gluing two leaf connections by a gauge: the Stokes moment identity, the
//! Plemelj construction of `G`, its determinant and the frame symmetries.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use super::transport::{g_equation_residual, EXTERIOR_PAD};
use crate::algebra::connection::{dzbar_component, Connection, GaugeTransform, SINGULAR_DET};
use crate::algebra::field::MatrixField;
use crate::dbar::cauchy::cauchy_transform;
use crate::dbar::contour::{plemelj_extension_lattice, simpson_weights, BoundaryContour};
use crate::dbar::holomorphy::{holomorphy_test, holomorphy_threshold};
use crate::dbar::solve::{solve_dbar_invertible, solve_dz_invertible, solve_homogeneous, Coupling, SolverOptions};
use crate::error::{Error, Result};
use crate::geometry::frames::ComplexFrame;
use crate::geometry::leaf::{AmbientConnection, AmbientGauge, Leaf};
use crate::grid::{ComplexGrid, IndexBox};
use crate::linalg::{self, CMat};

/// Number of monomial moments checked before gluing (`k = 0..=K`).
pub const MOMENT_COUNT: usize = 8;

#[derive(Debug, Clone, Serialize)]
pub struct StokesMoment {
    #[serde(serialize_with = "ser_mat")]
    pub lhs: CMat,
    #[serde(serialize_with = "ser_mat")]
    pub rhs: CMat,
    pub gap: f64,
}

fn ser_mat<S: serde::Serializer>(m: &CMat, s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(m.len()))?;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            seq.serialize_element(&[m[(i, j)].re, m[(i, j)].im])?;
        }
    }
    seq.end()
}

/// `−Ã^†` componentwise, the connection whose `∂_z` twin gives `C₂`.
pub fn negated_adjoint(a: &Connection) -> Result<Connection> {
    let comps = a.components().iter().map(|c| c.adjoint().scale(Complex64::new(-1.0, 0.0))).collect();
    Connection::new(a.frame(), comps)
}

/// The amplitudes `C₁`, `C₂` of a connection pair on `target`:
/// `∂_{z̄}C₁ + A₁(∂_{z̄})C₁ = 0` and `∂_zC₂ − A₂(∂_{z̄})^*C₂ = 0`, both → id.
#[derive(Debug, Clone)]
pub struct Amplitudes {
    pub c1: MatrixField,
    pub c2: MatrixField,
    /// `Ã(∂_{z̄}) = (A₂ − A₁)(∂_{z̄})` on `target`.
    pub a_tilde: MatrixField,
}

pub fn amplitudes(a1: &Connection, a2: &Connection, target: IndexBox, opts: &SolverOptions) -> Result<Amplitudes> {
    let o = opts.clone().with_target(target);
    let c1 = solve_dbar_invertible(a1, &o)?.c;
    let c2 = solve_dz_invertible(&negated_adjoint(a2)?, &o)?.c;
    let a_tilde = dzbar_component(a2)?.restrict(target).sub(&dzbar_component(a1)?.restrict(target))?;
    Ok(Amplitudes { c1, c2, a_tilde })
}

/// `((z − centre)/scale)^k` on `window`.
pub fn monomial(grid: ComplexGrid, window: IndexBox, rank: usize, k: u32, centre: Complex64, scale: f64) -> MatrixField {
    MatrixField::from_scalar_fn(grid, window, rank, move |z| ((z - centre) / scale).powu(k))
}

/// `∬_B H C₂^*(2Ã(∂_{z̄}))C₁ dx dy` by 2D composite Simpson against
/// `−i∮_{∂B} H C₂^*C₁ dz` on the rectangle of `window`.
pub fn stokes_moment_check(c1: &MatrixField, c2: &MatrixField, a_tilde: &MatrixField, h: &MatrixField, window: &IndexBox) -> Result<StokesMoment> {
    let threshold = holomorphy_threshold(h, window);
    let defect = holomorphy_test(h, window);
    if defect > threshold {
        return Err(Error::Precondition(format!("test field is not holomorphic (‖∂̄H‖ = {defect:.3e})")));
    }
    let grid = *c1.grid();
    let r = c1.rank();
    let (wx, wy) = (simpson_weights(window.nx - 1), simpson_weights(window.ny - 1));
    let two = Complex64::new(2.0, 0.0);
    let mut lhs = CMat::zeros(r, r);
    for (i, j) in window.nodes() {
        let w = wx[i - window.i0] * wy[j - window.j0];
        if w == 0.0 {
            continue;
        }
        let integrand = h.at(i, j) * c2.at(i, j).adjoint() * a_tilde.at(i, j) * c1.at(i, j) * two;
        lhs += integrand * Complex64::new(w, 0.0);
    }
    lhs *= Complex64::new(grid.h() * grid.h(), 0.0);

    let contour = BoundaryContour::rectangle(&grid, window)?;
    let (hv, v1, v2) = (contour.sample(h), contour.sample(c1), contour.sample(c2));
    let vals: Vec<CMat> = hv.iter().zip(&v1).zip(&v2).map(|((hh, a), b)| hh * b.adjoint() * a).collect();
    let rhs = contour.integrate(&vals) * Complex64::new(0.0, -1.0);
    let gap = linalg::fro(&(&lhs - &rhs));
    Ok(StokesMoment { lhs, rhs, gap })
}

#[derive(Debug, Clone, Serialize)]
pub struct GlueDiagnostics {
    /// `(1/2π)|∮ ((ζ − c)/ρ)^k C₂^*C₁ dζ|`, `k = 0..=K`.
    pub moments: Vec<f64>,
    /// Discrete L² residual of `∂_{z̄}G + A₁(∂_{z̄})G − GA₂(∂_{z̄})`.
    pub residual: f64,
    /// Largest `|G − id|` on the first ring of nodes inside `∂B`.
    pub edge_defect: f64,
    pub min_det: f64,
}

#[derive(Debug, Clone)]
pub struct GlueOutput {
    pub gauge: GaugeTransform,
    pub window: IndexBox,
    pub diagnostics: GlueDiagnostics,
}

impl GlueOutput {
    pub fn value(&self, z: Complex64) -> CMat {
        self.gauge.field().interpolate(z)
    }
}

/// `G = C₁FC₂^*` inside the rectangle of `window` with `F⁻¹` the Plemelj
/// extension of `C₂^*C₁|_{∂B}`, and `G = id` on and outside `∂B`.
///
/// Fails with [`Error::Precondition`] when one of the first
/// [`MOMENT_COUNT`] + 1 moments exceeds `tol`.
pub fn gauge_glue(a1: &Connection, a2: &Connection, window: IndexBox, opts: &SolverOptions, tol: f64) -> Result<GlueOutput> {
    let grid = *a1.grid();
    let target = window.grow(EXTERIOR_PAD, &grid);
    let amp = amplitudes(a1, a2, target, opts)?;
    let p = amp.c2.adjoint().mul(&amp.c1)?;
    let contour = BoundaryContour::rectangle(&grid, &window)?;
    let vals = contour.sample(&p);

    let zs = contour.samples();
    let centre = zs.iter().sum::<Complex64>() / zs.len() as f64;
    let rho = zs.iter().map(|z| (z - centre).norm()).fold(0.0, f64::max);
    let moments: Vec<f64> = (0..=MOMENT_COUNT as u32)
        .map(|k| {
            let weighted: Vec<CMat> = zs.iter().zip(&vals).map(|(z, v)| v * ((z - centre) / rho).powu(k)).collect();
            linalg::fro(&contour.integrate(&weighted)) / (2.0 * PI)
        })
        .collect();
    let worst = moments.iter().cloned().fold(0.0, f64::max);
    if !(worst <= tol) {
        return Err(Error::Precondition(format!("Stokes moments do not vanish (max {worst:.3e})")));
    }

    let inner = IndexBox { i0: window.i0 + 1, j0: window.j0 + 1, nx: window.nx - 2, ny: window.ny - 2 };
    let f_inv = plemelj_extension_lattice(&grid, &window, &vals, &inner)?;
    let mut g = MatrixField::identity(grid, target, a1.rank());
    for (i, j) in inner.nodes() {
        let fi = f_inv.at(i, j);
        let f = linalg::inverse(&fi).filter(|_| linalg::det(&fi).norm() > SINGULAR_DET).ok_or_else(|| Error::NotInvertible {
            min_det: linalg::det(&fi).norm(),
            at: crate::algebra::connection::node_label(&grid, i, j),
        })?;
        g.set(i, j, &(amp.c1.at(i, j) * f * amp.c2.at(i, j).adjoint()));
    }
    let residual = g_equation_residual(&g, &dzbar_component(a1)?, &dzbar_component(a2)?)?;
    let id = linalg::identity(a1.rank());
    let edge_defect = inner
        .nodes()
        .filter(|&(i, j)| i == inner.i0 || j == inner.j0 || i + 1 == inner.i0 + inner.nx || j + 1 == inner.j0 + inner.ny)
        .map(|(i, j)| linalg::fro(&(g.at(i, j) - &id)))
        .fold(0.0, f64::max);
    let gauge = GaugeTransform::with_boundary_identity(g, &inner, tol)?;
    let diagnostics = GlueDiagnostics { moments, residual, edge_defect, min_det: gauge.min_det() };
    Ok(GlueOutput { gauge, window, diagnostics })
}

/// Scalar field `tr M` of a matrix field.
fn trace_field(m: &MatrixField) -> MatrixField {
    (1..m.rank()).fold(m.component(0, 0), |acc, k| acc.add(&m.component(k, k)).expect("same grid"))
}

#[derive(Debug, Clone, Serialize)]
pub struct DetReport {
    /// `sup |det G − d|` with `d` the scalar solution.
    pub gap: f64,
    pub min_det: f64,
    /// `e^{−‖Re Ψ‖∞}`, `Ψ` the Cauchy transform of `tr(A − B)(∂_{z̄})`.
    pub lower_bound: f64,
    pub pass: bool,
}

/// Compares `det G` with the solution of `∂_{z̄}d + tr(A − B)(∂_{z̄})d = 0`,
/// `d → 1`, for a gauge `G` solving `∂_{z̄}G + A(∂_{z̄})G − GB(∂_{z̄}) = 0`.
pub fn det_consistency(a: &Connection, b: &Connection, g: &GaugeTransform, opts: &SolverOptions, tol: f64) -> Result<DetReport> {
    let target = g.field().window();
    let diff = dzbar_component(a)?.restrict(target).sub(&dzbar_component(b)?.restrict(target))?;
    let tau = trace_field(&diff);
    let det = g.field().det();
    let (d, lower_bound) = match tau.tight_support(0) {
        None => (MatrixField::identity(*tau.grid(), target, 1), 1.0),
        Some(s) => {
            let tau = tau.with_support(s);
            let d = solve_homogeneous(&Coupling::left(tau.clone()), 1, &opts.clone().with_target(target))?.c;
            let psi = cauchy_transform(&tau, target)?;
            let max_re = psi.data().iter().map(|z| z.re.abs()).fold(0.0, f64::max);
            (d, (-max_re).exp())
        }
    };
    let gap = det.sub(&d)?.sup_norm(None);
    let min_det = g.min_det();
    let pass = gap <= tol && min_det > 0.0 && min_det >= lower_bound - tol;
    Ok(DetReport { gap, min_det, lower_bound, pass })
}

/// A gauge pair `(A₁, A₂ = G₀^*A₁)` on the flat model `ℝ² × M₀`.
#[derive(Clone)]
pub struct FlatGaugeModel {
    pub a1: AmbientConnection,
    pub a2: AmbientConnection,
    pub g0: AmbientGauge,
}

impl FlatGaugeModel {
    pub fn new(a1: AmbientConnection, g0: AmbientGauge) -> Self {
        let a2 = g0.pullback(&a1);
        Self { a1, a2, g0 }
    }

    /// Glues the pair on the leaf of `frame` over `[−T, T]²`.
    pub fn glue(&self, frame: &ComplexFrame, grid: &ComplexGrid, half_width: f64, opts: &SolverOptions, tol: f64) -> Result<FrameGlue> {
        let leaf = frame.leaf(half_width, (-half_width, half_width))?;
        let l1 = leaf.pull_connection(&self.a1, grid)?;
        let l2 = leaf.pull_connection(&self.a2, grid)?;
        let window = leaf.data_window(grid)?;
        let glue = gauge_glue(&l1, &l2, window, opts, tol)?;
        Ok(FrameGlue { frame: *frame, leaf, glue })
    }
}

#[derive(Debug, Clone)]
pub struct FrameGlue {
    pub frame: ComplexFrame,
    pub leaf: Leaf,
    pub glue: GlueOutput,
}

impl FrameGlue {
    /// `G` at the base point of the frame.
    pub fn at_base(&self) -> CMat {
        self.glue.value(Complex64::new(0.0, 0.0))
    }
}

pub fn negated_frame(f: &ComplexFrame) -> Result<ComplexFrame> {
    let neg = |v: [f64; 2]| [-v[0], -v[1]];
    ComplexFrame::new(f.surface, f.y, f.x, neg(f.mu), neg(f.nu_y), neg(f.nu_x))
}

/// `e^{iθ}(μ + iν)` for a frame spanning the `ℝ²` factor.
pub fn rotated_frame(f: &ComplexFrame, theta: f64) -> Result<ComplexFrame> {
    if f.nu_x != [0.0, 0.0] {
        return Err(Error::Frame("rotation needs span(μ, ν) = ℝ²".into()));
    }
    let (c, s) = (theta.cos(), theta.sin());
    let mu = [c * f.mu[0] - s * f.nu_y[0], c * f.mu[1] - s * f.nu_y[1]];
    let nu = [s * f.mu[0] + c * f.nu_y[0], s * f.mu[1] + c * f.nu_y[1]];
    ComplexFrame::new(f.surface, f.y, f.x, mu, nu, f.nu_x)
}

pub fn conjugate_frame(f: &ComplexFrame) -> Result<ComplexFrame> {
    let neg = |v: [f64; 2]| [-v[0], -v[1]];
    ComplexFrame::new(f.surface, f.y, f.x, f.mu, neg(f.nu_y), neg(f.nu_x))
}

/// Largest `|G'(z') − map(G(z))|` over nodes `z'` of the second glue whose
/// ambient point lies, with a two-node margin, inside the first glue's grid.
pub fn frame_gap<M>(first: &FrameGlue, second: &FrameGlue, map: M) -> f64
where
    M: Fn(CMat) -> CMat,
{
    let f1 = first.glue.gauge.field();
    let f2 = second.glue.gauge.field();
    let grid = f1.grid();
    let w1 = f1.window();
    let margin = 2.0 * grid.h();
    let (x0, y0) = (grid.x(w1.i0) + margin, grid.x(w1.j0) + margin);
    let (x1, y1) = (grid.x(w1.i0 + w1.nx - 1) - margin, grid.x(w1.j0 + w1.ny - 1) - margin);
    f2.window()
        .nodes()
        .filter_map(|(i, j)| {
            let p = second.leaf.point(f2.grid().z(i, j))?;
            let z = first.leaf.to_leaf(&p);
            (z.re > x0 && z.re < x1 && z.im > y0 && z.im < y1).then(|| linalg::fro(&(f2.at(i, j) - map(f1.interpolate(z)))))
        })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Serialize)]
pub struct SymmetryReport {
    pub negation: f64,
    pub rotation: Option<f64>,
    pub conjugation: Option<f64>,
}

impl SymmetryReport {
    pub fn max_gap(&self) -> f64 {
        [Some(self.negation), self.rotation, self.conjugation].into_iter().flatten().fold(0.0, f64::max)
    }
}

/// Compares the glue of `frame` with the glues of `−frame`, `e^{iθ}frame`
/// (when the frame spans `ℝ²`) and, for a unitary pair, the conjugate frame
/// through `G ↦ G^{−*}`.
pub fn symmetry_check<F>(glue: F, frame: &ComplexFrame, theta: f64, unitary: bool) -> Result<SymmetryReport>
where
    F: Fn(&ComplexFrame) -> Result<FrameGlue>,
{
    let base = glue(frame)?;
    let negation = frame_gap(&base, &glue(&negated_frame(frame)?)?, |g| g);
    let rotation = match rotated_frame(frame, theta) {
        Ok(f) => Some(frame_gap(&base, &glue(&f)?, |g| g)),
        Err(_) => None,
    };
    let conjugation = if unitary {
        let conj = glue(&conjugate_frame(frame)?)?;
        Some(frame_gap(&base, &conj, |g| linalg::inverse(&g).map(|x| x.adjoint()).unwrap_or(g * Complex64::new(f64::NAN, 0.0))))
    } else {
        None
    };
    Ok(SymmetryReport { negation, rotation, conjugation })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::connection::gauge_pullback;
    use crate::geometry::surface::SimpleSurface;
    use crate::linalg::c;

    fn bump(z: Complex64, c0: Complex64, w: f64) -> f64 {
        let r2 = (z - c0).norm_sqr() / (w * w);
        if r2 >= 1.0 { 0.0 } else { (1.0 - r2).powi(6) }
    }

    fn grid() -> (ComplexGrid, IndexBox) {
        let g = ComplexGrid::new(4.0, 1.0 / 32.0).unwrap();
        (g, g.window(-2.0, 2.0, -1.5, 1.5).unwrap())
    }

    fn connection(g: ComplexGrid, w: IndexBox, c0: Complex64, amp: f64) -> Connection {
        let a = MatrixField::from_fn(g, w, 2, |z| {
            let b = bump(z, c0, 0.9) * amp;
            CMat::from_row_slice(2, 2, &[c(b, 0.2 * b), c(0.0, b), c(0.5 * b, 0.0), c(-b, 0.0)])
        });
        let a = a.clone().with_support(a.tight_support(0).unwrap());
        Connection::unitary_from_dzbar(&a).unwrap()
    }

    fn gauge(g: ComplexGrid, w: IndexBox) -> GaugeTransform {
        let k = CMat::from_row_slice(2, 2, &[c(0.0, 0.7), c(0.4, 0.3), c(-0.4, 0.3), c(0.0, -0.2)]);
        let f = MatrixField::from_fn(g, w, 2, |z| linalg::expm(&(&k * c(bump(z, c(-0.2, 0.1), 1.0), 0.0))));
        GaugeTransform::new(f).unwrap()
    }

    #[test]
    fn stokes_identity_holds_for_moments() {
        let (g, w) = grid();
        let a1 = connection(g, w, c(0.3, 0.2), 0.8);
        let a2 = connection(g, w, c(-0.4, -0.1), 0.6);
        let target = w.grow(EXTERIOR_PAD, &g);
        let amp = amplitudes(&a1, &a2, target, &SolverOptions::default()).unwrap();
        for k in 0..5 {
            let h = monomial(g, target, 2, k, c(0.0, 0.0), 1.0);
            let m = stokes_moment_check(&amp.c1, &amp.c2, &amp.a_tilde, &h, &w).unwrap();
            assert!(m.gap < 1e-5 * (1.0 + linalg::fro(&m.lhs)), "k = {k}: {m:?}");
            assert!(linalg::fro(&m.lhs) > 1e-3);
        }
        let same = amplitudes(&a1, &a1, target, &SolverOptions::default()).unwrap();
        let m = stokes_moment_check(&same.c1, &same.c2, &same.a_tilde, &monomial(g, target, 2, 0, c(0.0, 0.0), 1.0), &w).unwrap();
        assert_eq!(linalg::fro(&m.lhs), 0.0);
        assert!(linalg::fro(&m.rhs) < 1e-8);
    }

    #[test]
    fn non_holomorphic_weight_is_rejected() {
        let (g, w) = grid();
        let a1 = connection(g, w, c(0.3, 0.2), 0.8);
        let target = w.grow(EXTERIOR_PAD, &g);
        let amp = amplitudes(&a1, &a1, target, &SolverOptions::default()).unwrap();
        let h = MatrixField::from_scalar_fn(g, target, 2, |z| z.conj());
        assert!(matches!(stokes_moment_check(&amp.c1, &amp.c2, &amp.a_tilde, &h, &w), Err(Error::Precondition(_))));
    }

    fn glue_error(h: f64) -> (f64, GlueOutput, Connection, Connection) {
        let g = ComplexGrid::new(4.0, h).unwrap();
        let w = g.window(-2.0, 2.0, -1.5, 1.5).unwrap();
        let a1 = connection(g, w, c(0.3, 0.2), 0.8);
        let g0 = gauge(g, w);
        let a2 = gauge_pullback(&g0, &a1).unwrap();
        let out = gauge_glue(&a1, &a2, w, &SolverOptions::default(), 1e-4).unwrap();
        let err = w.nodes().map(|(i, j)| linalg::fro(&(out.gauge.field().at(i, j) - g0.field().at(i, j)))).fold(0.0, f64::max);
        (err, out, a1, a2)
    }

    #[test]
    fn glue_recovers_manufactured_gauge() {
        let (err, out, a1, a2) = glue_error(1.0 / 32.0);
        assert!(err < 1e-4, "{err:.3e}");
        assert!(out.diagnostics.residual < 1e-4, "{:?}", out.diagnostics);
        let (fine, _, _, _) = glue_error(1.0 / 64.0);
        assert!(fine < err / 8.0, "{err:.3e} -> {fine:.3e}");
        let opts = SolverOptions::default();
        let det = det_consistency(&a1, &a2, &out.gauge, &opts, 1e-4).unwrap();
        assert!(det.pass, "{det:?}");

        let same = gauge_glue(&a1, &a1, out.window, &opts, 1e-5).unwrap();
        let id = linalg::identity(2);
        let dev = out.window.nodes().map(|(i, j)| linalg::fro(&(same.gauge.field().at(i, j) - &id))).fold(0.0, f64::max);
        assert!(dev < 1e-5, "{dev:.3e} {:?}", same.diagnostics);
    }

    #[test]
    fn glue_refuses_unrelated_pair() {
        let (g, w) = grid();
        let a1 = connection(g, w, c(0.3, 0.2), 0.8);
        let a2 = connection(g, w, c(-0.4, -0.1), 0.6);
        assert!(matches!(gauge_glue(&a1, &a2, w, &SolverOptions::default(), 1e-5), Err(Error::Precondition(_))));
    }

    #[test]
    fn scalar_determinant_equation_matches_block_diagonal_pair() {
        let (g, w) = grid();
        let diag = |c0: Complex64, amp: f64, k: usize| {
            let a = MatrixField::from_fn(g, w, 2, |z| {
                let mut m = CMat::zeros(2, 2);
                m[(k, k)] = c(bump(z, c0, 0.8) * amp, 0.1 * amp);
                m * c(bump(z, c0, 0.8), 0.0)
            });
            let a = a.clone().with_support(a.tight_support(0).unwrap());
            Connection::unitary_from_dzbar(&a).unwrap()
        };
        let a = diag(c(0.2, 0.0), 0.9, 0);
        let g0 = gauge(g, w);
        let b = gauge_pullback(&g0, &a).unwrap();
        let opts = SolverOptions::default();
        let out = gauge_glue(&a, &b, w, &opts, 1e-4).unwrap();
        let det = det_consistency(&a, &b, &out.gauge, &opts, 1e-4).unwrap();
        assert!(det.pass, "{det:?}");
        assert!(det.min_det >= det.lower_bound - 1e-4);
    }

    fn flat_model() -> FlatGaugeModel {
        let centre = [0.1, -0.1, 1.0];
        let dist = move |p: &[f64]| p.iter().zip(centre).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
        let env = move |p: &[f64], w: f64| {
            let r2 = dist(p) / (w * w);
            if r2 >= 1.0 { 0.0 } else { (1.0 - r2).powi(6) }
        };
        let skew = [
            CMat::from_row_slice(2, 2, &[c(0.0, 0.5), c(0.3, 0.1), c(-0.3, 0.1), c(0.0, -0.2)]),
            CMat::from_row_slice(2, 2, &[c(0.0, -0.1), c(0.0, 0.4), c(0.0, 0.4), c(0.0, 0.3)]),
            CMat::from_row_slice(2, 2, &[c(0.0, 0.2), c(0.5, 0.0), c(-0.5, 0.0), c(0.0, 0.1)]),
        ];
        let a1 = AmbientConnection::new(3, 2, move |p| skew.iter().map(|s| s * c(env(p, 0.9), 0.0)).collect());
        let k = CMat::from_row_slice(2, 2, &[c(0.0, 0.6), c(0.2, -0.3), c(-0.2, -0.3), c(0.0, 0.1)]);
        let g0 = AmbientGauge::new(3, move |p| linalg::expm(&(&k * c(env(p, 1.0), 0.0))));
        FlatGaugeModel::new(a1, g0)
    }

    #[test]
    fn frame_symmetries_of_flat_gauge_model() {
        let surface = SimpleSurface::interval(2.0).unwrap();
        let model = flat_model();
        let grid = ComplexGrid::new(4.0, 1.0 / 32.0).unwrap();
        let opts = SolverOptions::default();
        let glue = |f: &ComplexFrame| model.glue(f, &grid, 1.5, &opts, 1e-4);
        let planar = ComplexFrame::new(surface, [0.0, 0.0], [1.0, 0.0], [0.8, 0.6], [-0.6, 0.8], [0.0, 0.0]).unwrap();
        let rep = symmetry_check(glue, &planar, 0.7, true).unwrap();
        assert!(rep.max_gap() < 1e-4, "{rep:?}");
        assert!(rep.rotation.is_some() && rep.conjugation.is_some());
        let tilted = ComplexFrame::new(surface, [0.0, 0.0], [1.0, 0.0], [1.0, 0.0], [0.0, 0.6], [0.8, 0.0]).unwrap();
        let rep = symmetry_check(glue, &tilted, 0.7, false).unwrap();
        assert!(rep.rotation.is_none() && rep.conjugation.is_none());
        assert!(rep.negation < 1e-5, "{rep:?}");
        let base = glue(&tilted).unwrap().at_base();
        let g0 = model.g0.eval(&[0.0, 0.0, 1.0]);
        assert!(linalg::fro(&(base - g0)) < 1e-4);
    }
}
