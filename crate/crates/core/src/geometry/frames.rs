//! Complex null frames `μ + iν` over `ℝ² × M₀` and the `ξ±(t)` family.

use num_complex::Complex64;

use super::leaf::Leaf;
use super::surface::SimpleSurface;
use crate::error::{Error, Result};
use crate::linalg::CMat;

/// Tolerance on the bilinear null condition `⟨μ,μ⟩ − ⟨ν,ν⟩ = ⟨μ,ν⟩ = 0`.
pub const NULL_TOL: f64 = 1e-10;

/// Default step of [`complexified_x_apply`].
pub const X_STEP: f64 = 1e-4;

/// A point `(y, x) ∈ ℝ² × M₀` with `μ ∈ ℝ²` and `ν = (ν_y, ν_x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexFrame {
    pub y: [f64; 2],
    pub x: [f64; 2],
    pub mu: [f64; 2],
    pub nu_y: [f64; 2],
    pub nu_x: [f64; 2],
    pub surface: SimpleSurface,
}

fn dot2(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

impl ComplexFrame {
    pub fn new(surface: SimpleSurface, y: [f64; 2], x: [f64; 2], mu: [f64; 2], nu_y: [f64; 2], nu_x: [f64; 2]) -> Result<Self> {
        let f = Self { y, x, mu, nu_y, nu_x, surface };
        let scale = dot2(mu, mu).max(1.0);
        let q = f.bilinear_square();
        if q.norm() > NULL_TOL * scale {
            return Err(Error::Frame(format!("|μ + iν|² = {q:.3e} is not null")));
        }
        if dot2(mu, mu) == 0.0 {
            return Err(Error::Frame("μ vanishes".into()));
        }
        Ok(f)
    }

    /// `⟨ν_x, ν_x⟩_g` at the base point.
    fn nu_x_sq(&self) -> f64 {
        self.surface.conformal(self.x) * dot2(self.nu_x, self.nu_x)
    }

    /// Bilinear square `⟨μ,μ⟩ − ⟨ν,ν⟩ + 2i⟨μ,ν⟩`.
    pub fn bilinear_square(&self) -> Complex64 {
        let mm = dot2(self.mu, self.mu);
        let nn = dot2(self.nu_y, self.nu_y) + self.nu_x_sq();
        Complex64::new(mm - nn, 2.0 * dot2(self.mu, self.nu_y))
    }

    pub fn mu_norm(&self) -> f64 {
        dot2(self.mu, self.mu).sqrt()
    }

    pub fn ambient_dim(&self) -> usize {
        2 + self.surface.dim
    }

    pub fn point(&self) -> Vec<f64> {
        let mut p = self.y.to_vec();
        p.extend_from_slice(&self.x[..self.surface.dim]);
        p
    }

    /// The complex vector `μ + iν` in ambient coordinates.
    pub fn vector(&self) -> Vec<Complex64> {
        let d = self.surface.dim;
        let mut w = vec![Complex64::new(self.mu[0], self.nu_y[0]), Complex64::new(self.mu[1], self.nu_y[1])];
        w.extend(self.nu_x[..d].iter().map(|v| Complex64::new(0.0, *v)));
        w
    }

    fn ambient_mu(&self) -> Vec<f64> {
        let mut m = self.mu.to_vec();
        m.resize(self.ambient_dim(), 0.0);
        m
    }

    fn ambient_nu(&self) -> Vec<f64> {
        let mut n = self.nu_y.to_vec();
        n.extend_from_slice(&self.nu_x[..self.surface.dim]);
        n
    }

    /// Frame moved by `time` along the geodesic tangent to `ν`, with `μ + iν`
    /// parallel transported.
    pub fn flow_nu(&self, time: f64) -> ComplexFrame {
        let y = [self.y[0] + time * self.nu_y[0], self.y[1] + time * self.nu_y[1]];
        let (x, nu_x) = if dot2(self.nu_x, self.nu_x) == 0.0 {
            (self.x, self.nu_x)
        } else {
            let (x, v, _) = self.surface.flow(self.x, self.nu_x, self.nu_x, time);
            (x, v)
        };
        ComplexFrame { y, x, nu_x, ..*self }
    }

    /// Frame moved by `time` along the straight line tangent to `μ`.
    pub fn flow_mu(&self, time: f64) -> ComplexFrame {
        ComplexFrame { y: [self.y[0] + time * self.mu[0], self.y[1] + time * self.mu[1]], ..*self }
    }

    /// Flat leaf `p + s·μ/|μ| + t·ν/|ν|`, available when `M₀` is Euclidean.
    pub fn leaf(&self, half_width: f64, t_range: (f64, f64)) -> Result<Leaf> {
        if self.surface.dim == 2 && self.surface.factor != super::surface::ConformalFactor::Flat {
            return Err(Error::Frame("affine leaves need a flat transversal factor".into()));
        }
        let (mu, nu) = (self.ambient_mu(), self.ambient_nu());
        let r = self.mu_norm();
        Ok(Leaf::affine(self.point(), mu.iter().map(|a| a / r).collect(), nu.iter().map(|a| a / r).collect(), half_width, t_range))
    }
}

/// `ξ±(t) = μ(t) + iν±(t)` at `(y, x)` with transversal unit vector `v`.
pub fn xi_family(surface: SimpleSurface, y: [f64; 2], x: [f64; 2], v: [f64; 2], t: Complex64, plus: bool) -> Result<ComplexFrame> {
    if t.norm() == 0.0 {
        return Err(Error::InvalidArgument("ξ(t) is undefined at t = 0".into()));
    }
    let speed = surface.norm_g(x, v);
    if (speed - 1.0).abs() > 1e-10 {
        return Err(Error::NonUnitVector(speed));
    }
    let (d, s) = (t - t.inv(), t + t.inv());
    let mu = [-0.5 * d.im, -0.5 * s.re];
    let nu_y = [0.5 * d.re, -0.5 * s.im];
    let sign = if plus { 1.0 } else { -1.0 };
    ComplexFrame::new(surface, y, x, mu, nu_y, [sign * v[0], sign * v[1]])
}

/// `(1 + 1/|t|²)·|t|`, the normaliser under which `ξ±(t)/r` has the stated
/// limits as `t → 0, ∞`. It equals `2|μ(t)|`.
pub fn xi_normaliser(t: Complex64) -> f64 {
    let rho = t.norm();
    (1.0 + 1.0 / (rho * rho)) * rho
}

/// Limit of `ξ±(t)/r(t)` along the ray `arg t = θ` as `|t| → ∞` (or `→ 0`
/// with `at_zero`), as coefficients of `∂₁, ∂₂`.
pub fn xi_limit(theta: f64, at_zero: bool) -> [Complex64; 2] {
    let (y1, y2) = (0.5 * theta.cos(), 0.5 * theta.sin());
    let sg = if at_zero { -1.0 } else { 1.0 };
    [Complex64::new(-y2, sg * y1), Complex64::new(-y1, -sg * y2)]
}

/// `𝕏F` at a frame: `d/dτ F(γ_μ(τ)) + i·d/dτ F(γ_ν(τ))` at `τ = 0`, both by
/// second-order central differences with step `delta`.
pub fn complexified_x_apply<F>(f: F, frame: &ComplexFrame, delta: f64) -> Result<CMat>
where
    F: Fn(&ComplexFrame) -> Result<CMat>,
{
    if !(delta > 0.0) {
        return Err(Error::InvalidArgument(format!("step {delta} must be positive")));
    }
    let dmu = (f(&frame.flow_mu(delta))? - f(&frame.flow_mu(-delta))?) / Complex64::new(2.0 * delta, 0.0);
    let dnu = (f(&frame.flow_nu(delta))? - f(&frame.flow_nu(-delta))?) / Complex64::new(2.0 * delta, 0.0);
    Ok(dmu + dnu * Complex64::i())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::surface::ConformalFactor;
    use crate::linalg::c;
    use rand::{Rng, SeedableRng};

    fn flat() -> SimpleSurface {
        SimpleSurface::disk(10.0, ConformalFactor::Flat).unwrap()
    }

    #[test]
    fn xi_at_one() {
        let f = xi_family(flat(), [0.0; 2], [0.1, 0.2], [0.6, 0.8], c(1.0, 0.0), true).unwrap();
        assert!(f.mu[0].abs() < 1e-15 && (f.mu[1] + 1.0).abs() < 1e-15);
        assert!(f.nu_y[0].abs() < 1e-15 && f.nu_y[1].abs() < 1e-15);
        assert_eq!(f.nu_x, [0.6, 0.8]);
    }

    #[test]
    fn xi_is_null_for_random_t() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let s = SimpleSurface::disk(1.0, ConformalFactor::Cap { kappa: 0.3 }).unwrap();
        for _ in 0..100 {
            let t = c(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
            let x = [rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5)];
            let (phi, k) = (rng.gen_range(0.0..6.3f64), 1.0 / s.conformal(x).sqrt());
            let v = [k * phi.cos(), k * phi.sin()];
            let f = xi_family(s, [0.0; 2], x, v, t, rng.gen()).unwrap();
            assert!(f.bilinear_square().norm() < 1e-12 * f.mu_norm().powi(2).max(1.0));
            assert!((2.0 * f.mu_norm() - xi_normaliser(t)).abs() < 1e-12 * xi_normaliser(t));
        }
    }

    #[test]
    fn normalised_limits() {
        let theta = 0.7;
        for (rho, zero) in [(1e7, false), (1e-7, true)] {
            let t = Complex64::from_polar(rho, theta);
            let f = xi_family(flat(), [0.0; 2], [0.0; 2], [1.0, 0.0], t, true).unwrap();
            let r = xi_normaliser(t);
            let w = f.vector();
            let lim = xi_limit(theta, zero);
            assert!((w[0] / r - lim[0]).norm() < 1e-6 && (w[1] / r - lim[1]).norm() < 1e-6);
        }
    }

    #[test]
    fn x_of_first_coordinate_is_one() {
        let f = ComplexFrame::new(flat(), [0.3, 0.1], [0.0; 2], [1.0, 0.0], [0.0, 1.0], [0.0; 2]).unwrap();
        let val = complexified_x_apply(|fr| Ok(CMat::from_element(1, 1, c(fr.y[0], 0.0))), &f, X_STEP).unwrap();
        assert!((val[(0, 0)] - c(1.0, 0.0)).norm() < 1e-10);
        let zero = complexified_x_apply(|_| Ok(CMat::identity(2, 2)), &f, X_STEP).unwrap();
        assert!(zero.norm() == 0.0);
    }

    #[test]
    fn transported_frame_stays_null() {
        let s = SimpleSurface::disk(1.0, ConformalFactor::Cap { kappa: 0.5 }).unwrap();
        let x = [0.2, -0.1];
        let k = 1.0 / s.conformal(x).sqrt();
        let f = xi_family(s, [0.0; 2], x, [0.6 * k, 0.8 * k], c(0.5, 1.3), false).unwrap();
        let g = f.flow_nu(0.3);
        assert!(g.bilinear_square().norm() < 1e-9);
    }

    #[test]
    fn non_null_rejected() {
        assert!(ComplexFrame::new(flat(), [0.0; 2], [0.0; 2], [1.0, 0.0], [0.5, 0.0], [0.0; 2]).is_err());
        assert!(xi_family(flat(), [0.0; 2], [0.0; 2], [1.0, 0.0], c(0.0, 0.0), true).is_err());
    }
}
