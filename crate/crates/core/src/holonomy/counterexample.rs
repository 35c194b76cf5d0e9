//! Unitary connections with trivial complex parallel transport that are not
//! gauge equivalent to zero.

use num_complex::Complex64;
use serde::Serialize;

use super::transport::real_transport_leaf_line;
use crate::algebra::connection::{curvature, dzbar_component, Connection};
use crate::algebra::field::MatrixField;
use crate::dbar::cauchy::gauss_legendre;
use crate::dbar::solve::{solve_dbar_invertible, SolverOptions};
use crate::error::{Error, Result};
use crate::linalg::{self, CMat};

/// Factor applied to the cutoff radius after a logarithm branch failure.
pub const SHRINK: f64 = 0.5;
pub const MAX_RETRIES: usize = 5;

/// Smooth cutoff equal to 1 on `[0, ½]` and 0 on `[1, ∞)`, with its derivative.
pub fn cutoff(r: f64) -> (f64, f64) {
    if r <= 0.5 {
        return (1.0, 0.0);
    }
    if r >= 1.0 {
        return (0.0, 0.0);
    }
    // x runs from 1 at r = ½ to 0 at r = 1.
    let x = 2.0 - 2.0 * r;
    let f = |x: f64| if x <= 0.0 { 0.0 } else { (-1.0 / x).exp() };
    let df = |x: f64| if x <= 0.0 { 0.0 } else { (-1.0 / x).exp() / (x * x) };
    let (a, b) = (f(x), f(1.0 - x));
    let val = a / (a + b);
    let dval_dx = (df(x) * (a + b) - a * (df(x) - df(1.0 - x))) / ((a + b) * (a + b));
    (val, -2.0 * dval_dx)
}

/// Fréchet derivative of the principal logarithm at `g` in direction `d`,
/// `∫₀¹ (t(g − I) + I)⁻¹ d (t(g − I) + I)⁻¹ dt`.
pub fn log_derivative(g: &CMat, d: &CMat) -> Result<CMat> {
    let r = g.nrows();
    let id = linalg::identity(r);
    let mut acc = CMat::zeros(r, r);
    for (t, w) in gauss_legendre(32) {
        let m = (g - &id) * Complex64::new(t, 0.0) + &id;
        let inv = linalg::inverse(&m).ok_or_else(|| Error::LogBranch("segment to the identity is singular".into()))?;
        acc += &inv * d * &inv * Complex64::new(w, 0.0);
    }
    Ok(acc)
}

/// `(e^ψ, Dexp(ψ)[dψ])` from the exponential of the block matrix
/// `[[ψ, dψ], [0, ψ]]`.
pub fn exp_with_derivative(psi: &CMat, dpsi: &CMat) -> (CMat, CMat) {
    let r = psi.nrows();
    let mut big = CMat::zeros(2 * r, 2 * r);
    big.view_mut((0, 0), (r, r)).copy_from(psi);
    big.view_mut((r, r), (r, r)).copy_from(psi);
    big.view_mut((0, r), (r, r)).copy_from(dpsi);
    let e = linalg::expm(&big);
    (e.view((0, 0), (r, r)).into_owned(), e.view((0, r), (r, r)).into_owned())
}

#[derive(Debug, Clone)]
pub struct Counterexample {
    pub a: Connection,
    /// `G = e^Ψ`, the solution of `∂_{z̄}G + A(∂_{z̄})G = 0`.
    pub g: MatrixField,
    pub z0: Complex64,
    /// Cutoff radius actually used.
    pub rho: f64,
    pub retries: usize,
    pub curvature_sup: f64,
    pub threshold: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CounterexampleSummary {
    pub rho: f64,
    pub retries: usize,
    pub curvature_sup: f64,
    pub threshold: f64,
    pub connection_sup: f64,
}

impl Counterexample {
    /// Curvature exceeds the scale-relative threshold.
    pub fn curvature_witness(&self) -> bool {
        self.curvature_sup > self.threshold
    }

    pub fn summary(&self) -> CounterexampleSummary {
        CounterexampleSummary {
            rho: self.rho,
            retries: self.retries,
            curvature_sup: self.curvature_sup,
            threshold: self.threshold,
            connection_sup: self.a.sup_norm(),
        }
    }
}

/// Builds `A` with `A(∂_{z̄}) = −∂_{z̄}G·G⁻¹`, `A(∂_z) = −A(∂_{z̄})^*`, where
/// `G = e^Ψ` and `Ψ = χ(|z − z₀|/ρ)·log G₀`, `G₀` the solution for `A₀`
/// normalised by `G₀(z₀) = id`. Near `z₀` the result coincides with `A₀`.
pub fn counterexample_generate(a0: &Connection, z0: Complex64, rho: f64, opts: &SolverOptions) -> Result<Counterexample> {
    let grid = *a0.grid();
    let target = a0.window();
    let (i0, j0) = (grid.nearest(z0.re), grid.nearest(z0.im));
    if !target.contains(i0, j0) {
        return Err(Error::InvalidArgument(format!("base point {z0} lies outside the leaf window")));
    }
    let z0 = grid.z(i0, j0);
    let lo = grid.z(target.i0, target.j0);
    let hi = grid.z(target.i0 + target.nx - 1, target.j0 + target.ny - 1);
    let room = (z0.re - lo.re).min(hi.re - z0.re).min(z0.im - lo.im).min(hi.im - z0.im) - 3.0 * grid.h();
    if !(rho > 0.0 && rho <= room) {
        return Err(Error::InvalidArgument(format!("cutoff radius {rho} does not fit in the window (room {room:.3})")));
    }
    let mut g0 = solve_dbar_invertible(a0, &opts.clone().with_target(target))?.c;
    let norm = linalg::inverse(&g0.at(i0, j0)).ok_or_else(|| Error::NotInvertible { min_det: 0.0, at: format!("{z0}") })?;
    g0 = g0.map_blocks(|_, m| m * &norm);
    let a0z = dzbar_component(a0)?;

    let mut last = None;
    for retries in 0..=MAX_RETRIES {
        let r_k = rho * SHRINK.powi(retries as i32);
        match build(&g0, &a0z, z0, r_k) {
            Ok((g, a)) => {
                let support = a.tight_support(0);
                let a = match support {
                    Some(s) => a.with_support(s),
                    None => a,
                };
                let a = Connection::unitary_from_dzbar(&a)?;
                let curvature_sup = curvature(&a)?.sup_norm(None);
                let threshold = 1e-3 * a.sup_norm().powi(2) + 1e-6;
                return Ok(Counterexample { a, g, z0, rho: r_k, retries, curvature_sup, threshold });
            }
            Err(Error::LogBranch(msg)) => last = Some(msg),
            Err(e) => return Err(e),
        }
    }
    Err(Error::LogBranch(format!("no admissible neighbourhood after {MAX_RETRIES} retries: {}", last.unwrap_or_default())))
}

fn build(g0: &MatrixField, a0z: &MatrixField, z0: Complex64, rho: f64) -> Result<(MatrixField, MatrixField)> {
    let grid = *g0.grid();
    let w = g0.window();
    let rank = g0.rank();
    let mut g = MatrixField::identity(grid, w, rank);
    let mut a = MatrixField::zeros(grid, w, rank);
    for (i, j) in w.nodes() {
        let z = grid.z(i, j);
        let dz = z - z0;
        let r = dz.norm() / rho;
        if r >= 1.0 {
            continue;
        }
        let (chi, dchi) = cutoff(r);
        let gz = g0.at(i, j);
        let log = linalg::logm(&gz)?;
        let dlog = log_derivative(&gz, &(-(a0z.at(i, j) * &gz)))?;
        let dbar_r = if dz.norm() > 0.0 { dz / (2.0 * rho * dz.norm()) } else { Complex64::new(0.0, 0.0) };
        let psi = &log * Complex64::new(chi, 0.0);
        let dpsi = &log * (dbar_r * dchi) + dlog * Complex64::new(chi, 0.0);
        let (e, de) = exp_with_derivative(&psi, &dpsi);
        let inv = linalg::inverse(&e).ok_or_else(|| Error::LogBranch("exponential is singular".into()))?;
        a.set(i, j, &(-(de * inv)));
        g.set(i, j, &e);
    }
    Ok((g, a))
}

/// `|P(t) − id|` for real parallel transport of `A_s` along the horizontal
/// lines `s ↦ s + it`, `s ∈ [s0, s1]`, one value per `t`.
pub fn line_transport_deviation(a: &Connection, heights: &[f64], s0: f64, s1: f64, steps: usize) -> Vec<f64> {
    let id = linalg::identity(a.rank());
    heights.iter().map(|&t| linalg::fro(&(real_transport_leaf_line(a, t, s0, s1, steps) - &id))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::connection::Frame;
    use crate::grid::ComplexGrid;
    use crate::holonomy::transport::equal_transport_check;
    use crate::linalg::c;

    #[test]
    fn cutoff_is_smooth_step() {
        assert_eq!(cutoff(0.3), (1.0, 0.0));
        assert_eq!(cutoff(1.2), (0.0, 0.0));
        assert!((cutoff(0.75).0 - 0.5).abs() < 1e-14);
        for r in [0.55, 0.6, 0.7, 0.8, 0.95] {
            let e = 1e-6;
            let fd = (cutoff(r + e).0 - cutoff(r - e).0) / (2.0 * e);
            assert!((fd - cutoff(r).1).abs() < 1e-6, "r = {r}");
        }
    }

    #[test]
    fn matrix_function_derivatives_match_differences() {
        let psi = CMat::from_row_slice(2, 2, &[c(0.1, 0.3), c(0.2, -0.1), c(-0.4, 0.0), c(0.05, 0.2)]);
        let d = CMat::from_row_slice(2, 2, &[c(0.3, 0.0), c(-0.1, 0.2), c(0.0, 0.5), c(0.2, 0.1)]);
        let e = 1e-6;
        let (_, de) = exp_with_derivative(&psi, &d);
        let fd = (linalg::expm(&(&psi + &d * c(e, 0.0))) - linalg::expm(&(&psi - &d * c(e, 0.0)))) / c(2.0 * e, 0.0);
        assert!(linalg::fro(&(de - fd)) < 1e-8);
        let g = linalg::expm(&psi);
        let dl = log_derivative(&g, &d).unwrap();
        let fd = (linalg::logm(&(&g + &d * c(e, 0.0))).unwrap() - linalg::logm(&(&g - &d * c(e, 0.0))).unwrap()) / c(2.0 * e, 0.0);
        assert!(linalg::fro(&(dl - fd)) < 1e-8);
    }

    fn bump(z: Complex64, c0: Complex64, w: f64) -> f64 {
        let r2 = (z - c0).norm_sqr() / (w * w);
        if r2 >= 1.0 { 0.0 } else { (1.0 - r2).powi(6) }
    }

    #[test]
    fn zero_input_gives_zero_connection() {
        let g = ComplexGrid::new(4.0, 1.0 / 16.0).unwrap();
        let w = g.window(-2.0, 2.0, 0.0, 2.0).unwrap();
        let ce = counterexample_generate(&Connection::zero(g, w, 2, Frame::Leaf), c(0.0, 1.0), 0.8, &SolverOptions::default()).unwrap();
        assert_eq!(ce.a.sup_norm(), 0.0);
        assert!(!ce.curvature_witness());
    }

    #[test]
    fn scalar_bump_has_trivial_transport_but_curvature() {
        let g = ComplexGrid::new(4.0, 1.0 / 32.0).unwrap();
        let w = g.window(-2.0, 2.0, -1.5, 1.5).unwrap();
        let z0 = c(0.0, 0.0);
        let a = MatrixField::from_scalar_fn(g, w, 1, |z| c(0.6, 0.9) * bump(z, c(0.1, 0.1), 0.5));
        let a = a.clone().with_support(a.tight_support(0).unwrap());
        let a0 = Connection::unitary_from_dzbar(&a).unwrap();
        let opts = SolverOptions::default();
        let ce = counterexample_generate(&a0, z0, 1.4, &opts).unwrap();
        assert_eq!(ce.retries, 0);
        assert!(ce.curvature_witness(), "{:?}", ce.summary());
        assert!(ce.a.skew_defect() <= 1e-12);
        let near = dzbar_component(&ce.a).unwrap();
        let orig = dzbar_component(&a0).unwrap();
        for (i, j) in w.nodes().filter(|&(i, j)| (g.z(i, j) - ce.z0).norm() < 0.4 * ce.rho) {
            assert!(linalg::fro(&(near.at(i, j) - orig.at(i, j))) < 1e-10);
        }
        let zero = Connection::zero(g, w, 1, Frame::Leaf);
        let eq = equal_transport_check(&ce.a, &zero, w, &opts, 1e-3).unwrap();
        assert!(eq.equal, "{:?}", eq.diagnostics);
        let heights: Vec<f64> = (0..9).map(|k| -1.2 + 0.3 * k as f64).collect();
        let dev = line_transport_deviation(&ce.a, &heights, -1.9, 1.9, 400);
        assert!(dev.iter().cloned().fold(0.0, f64::max) > 1e-3, "{dev:?}");
    }
}
