//! The attenuated X-ray transform obtained from the complex ray transform by
//! a Fourier transform in `x₁`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::dbar::contour::simpson_weights;
use crate::error::{Error, Result};
use crate::geometry::surface::{GeodesicPath, SimpleSurface};

/// `∫₀^L e^{ξ₁t} f̂(γ(t)) dt` by composite Simpson with `steps` intervals.
pub fn attenuated_xray<F>(fhat: F, xi1: f64, path: &GeodesicPath, steps: usize) -> Complex64
where
    F: Fn([f64; 2]) -> Complex64,
{
    let n = steps.max(2);
    let dt = path.length / n as f64;
    simpson_weights(n)
        .iter()
        .enumerate()
        .map(|(k, w)| {
            let t = k as f64 * dt;
            fhat(path.at(t).0) * ((xi1 * t).exp() * w * dt)
        })
        .sum()
}

/// `f̂(ξ₁, x) = ∫ e^{−i x₁ ξ₁} f(x₁, x) dx₁` over `[−T, T]` by the trapezoid
/// rule, which is spectrally accurate for compactly supported `f`.
pub fn x1_fourier<F>(f: F, x: [f64; 2], xi1: f64, half_width: f64, n: usize) -> Complex64
where
    F: Fn(f64, [f64; 2]) -> Complex64,
{
    let dx = 2.0 * half_width / n as f64;
    (0..n)
        .map(|j| {
            let x1 = -half_width + j as f64 * dx;
            f(x1, x) * Complex64::from_polar(dx, -x1 * xi1)
        })
        .sum()
}

/// DFT of uniform samples `f(x0 + j·dx)` zero padded by `pad`, returned as
/// `(ξ₁, f̂(ξ₁))` on the induced frequency grid in ascending order.
pub fn x1_spectrum(samples: &[Complex64], x0: f64, dx: f64, pad: usize) -> Vec<(f64, Complex64)> {
    let n = samples.len() * pad.max(1);
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    buf[..samples.len()].copy_from_slice(samples);
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let mut out: Vec<(f64, Complex64)> = buf
        .iter()
        .enumerate()
        .map(|(k, v)| {
            let k = if k > n / 2 { k as f64 - n as f64 } else { k as f64 };
            let xi = 2.0 * PI * k / (n as f64 * dx);
            (xi, v * Complex64::from_polar(dx, -xi * x0))
        })
        .collect();
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out
}

/// A compactly supported radial bump of radius `width` centred at `center`.
pub fn bump2(x: [f64; 2], center: [f64; 2], width: f64) -> f64 {
    let r2 = ((x[0] - center[0]).powi(2) + (x[1] - center[1]).powi(2)) / (width * width);
    if r2 >= 1.0 {
        0.0
    } else {
        (1.0 - r2).powi(4)
    }
}

/// Attenuated transform at fixed `ξ₁` restricted to a finite bump basis and
/// sampled on a fan of geodesics, for least-squares reconstruction.
#[derive(Debug, Clone)]
pub struct AttenuatedSystem {
    pub xi1: f64,
    pub centers: Vec<[f64; 2]>,
    pub width: f64,
    pub paths: Vec<GeodesicPath>,
    pub steps: usize,
    matrix: DMatrix<Complex64>,
}

impl AttenuatedSystem {
    /// Bumps on a square lattice of spacing `width/2` inside radius `reach`;
    /// geodesics from `n_phi` boundary points at `n_alpha` entry angles.
    pub fn new(surface: &SimpleSurface, xi1: f64, reach: f64, width: f64, n_phi: usize, n_alpha: usize, steps: usize) -> Result<Self> {
        if surface.dim != 2 {
            return Err(Error::InvalidArgument("the fan needs a two-dimensional surface".into()));
        }
        let step = width / 2.0;
        let k = (reach / step).floor() as i64;
        let mut centers = Vec::new();
        for i in -k..=k {
            for j in -k..=k {
                let c = [i as f64 * step, j as f64 * step];
                if c[0].hypot(c[1]) + width < surface.size {
                    centers.push(c);
                }
            }
        }
        let mut paths = Vec::with_capacity(n_phi * n_alpha);
        for a in 0..n_phi {
            let x = surface.boundary_point(2.0 * PI * a as f64 / n_phi as f64);
            for b in 0..n_alpha {
                let alpha = -1.4 + 2.8 * (b as f64 + 0.5) / n_alpha as f64;
                paths.push(surface.geodesic_trace(x, surface.inward(x, alpha))?);
            }
        }
        let mut matrix = DMatrix::zeros(paths.len(), centers.len());
        for (l, p) in paths.iter().enumerate() {
            for (b, c) in centers.iter().enumerate() {
                matrix[(l, b)] = attenuated_xray(|x| Complex64::new(bump2(x, *c, width), 0.0), xi1, p, steps);
            }
        }
        Ok(Self { xi1, centers, width, paths, steps, matrix })
    }

    pub fn basis_len(&self) -> usize {
        self.centers.len()
    }

    pub fn eval_basis(&self, coef: &[Complex64], x: [f64; 2]) -> Complex64 {
        self.centers.iter().zip(coef).map(|(c, a)| a * bump2(x, *c, self.width)).sum()
    }

    /// Transform data of a function on every fan geodesic.
    pub fn measure<F>(&self, fhat: F) -> Vec<Complex64>
    where
        F: Fn([f64; 2]) -> Complex64,
    {
        self.paths.iter().map(|p| attenuated_xray(&fhat, self.xi1, p, self.steps)).collect()
    }

    /// Least-squares basis coefficients reproducing `data`.
    pub fn reconstruct(&self, data: &[Complex64]) -> Result<Vec<Complex64>> {
        let b = nalgebra::DVector::from_column_slice(data);
        let svd = self.matrix.clone().svd(true, true);
        let smax = svd.singular_values.max();
        let x = svd.solve(&b, 1e-12 * smax).map_err(|e| Error::Precondition(e.to_string()))?;
        Ok(x.iter().copied().collect())
    }

    /// Ratio of extreme singular values of the sampled transform.
    pub fn condition(&self) -> f64 {
        let s = self.matrix.singular_values();
        s.max() / s.min()
    }
}

/// Gradient of [`bump2`].
pub fn bump2_gradient(x: [f64; 2], center: [f64; 2], width: f64) -> [f64; 2] {
    let d = [x[0] - center[0], x[1] - center[1]];
    let r2 = (d[0] * d[0] + d[1] * d[1]) / (width * width);
    if r2 >= 1.0 {
        return [0.0, 0.0];
    }
    let s = -8.0 * (1.0 - r2).powi(3) / (width * width);
    [s * d[0], s * d[1]]
}

/// Largest `|∫₀^L (Xg)(γ(t), γ̇(t)) dt|` over a fan of `n_phi × n_alpha`
/// geodesics, for `g` a bump centred at `center`. The integrand is the exact
/// derivative of `g` along each geodesic, so every value vanishes up to
/// quadrature error.
pub fn exact_derivative_defect(surface: &SimpleSurface, center: [f64; 2], width: f64, n_phi: usize, n_alpha: usize, steps: usize) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for a in 0..n_phi {
        let x = surface.boundary_point(2.0 * PI * a as f64 / n_phi as f64);
        for b in 0..n_alpha {
            let alpha = -1.4 + 2.8 * (b as f64 + 0.5) / n_alpha as f64;
            let path = surface.geodesic_trace(x, surface.inward(x, alpha))?;
            let xg = |y: [f64; 2]| {
                let (p, v) = path.at(path.locate(y));
                let g = bump2_gradient(p, center, width);
                Complex64::new(g[0] * v[0] + g[1] * v[1], 0.0)
            };
            worst = worst.max(attenuated_xray(xg, 0.0, &path, steps).norm());
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::surface::ConformalFactor;
    use crate::linalg::c;

    #[test]
    fn constant_integrand() {
        let s = SimpleSurface::disk(1.0, ConformalFactor::Flat).unwrap();
        let x = s.boundary_point(0.7);
        let p = s.geodesic_trace(x, s.inward(x, 0.5)).unwrap();
        let fhat = |x: [f64; 2]| x1_fourier(|_, _| c(1.0, 0.0), x, 0.0, 2.0, 400);
        let val = attenuated_xray(fhat, 0.0, &p, 64);
        assert!((val - c(4.0 * p.length, 0.0)).norm() < 1e-10);
    }

    #[test]
    fn exact_derivative_integrates_to_zero() {
        let s = SimpleSurface::disk(1.0, ConformalFactor::Cap { kappa: 0.3 }).unwrap();
        let x = s.boundary_point(1.9);
        let path = s.geodesic_trace(x, s.inward(x, -0.3)).unwrap();
        // g(t) = sin²(πt/L) along the path, so Xg = (π/L) sin(2πt/L)
        let l = path.length;
        let xg = |y: [f64; 2]| {
            let t = path.locate(y);
            c(PI / l * (2.0 * PI * t / l).sin(), 0.0)
        };
        assert!(attenuated_xray(xg, 0.0, &path, 200).norm() < 1e-8);
    }

    #[test]
    fn fan_of_exact_derivatives() {
        let s = SimpleSurface::disk(1.0, ConformalFactor::Cap { kappa: 0.2 }).unwrap();
        let coarse = exact_derivative_defect(&s, [0.1, -0.2], 0.5, 6, 5, 400).unwrap();
        let fine = exact_derivative_defect(&s, [0.1, -0.2], 0.5, 6, 5, 1600).unwrap();
        assert!(fine < 1e-9 && fine < coarse / 16.0, "{coarse:e} {fine:e}");
        let e = 1e-6;
        let x = [0.2, 0.05];
        let g = bump2_gradient(x, [0.1, -0.2], 0.5);
        let fd = (bump2([x[0] + e, x[1]], [0.1, -0.2], 0.5) - bump2([x[0] - e, x[1]], [0.1, -0.2], 0.5)) / (2.0 * e);
        assert!((g[0] - fd).abs() < 1e-8);
    }

    #[test]
    fn simpson_self_convergence() {
        let s = SimpleSurface::disk(1.0, ConformalFactor::Cap { kappa: 0.2 }).unwrap();
        let x = s.boundary_point(0.2);
        let path = s.geodesic_trace(x, s.inward(x, 0.2)).unwrap();
        let f = |y: [f64; 2]| c(bump2(y, [0.1, 0.1], 0.6), 0.0);
        let a = attenuated_xray(f, 0.8, &path, 400);
        let b = attenuated_xray(f, 0.8, &path, 800);
        assert!((a - b).norm() < 1e-8);
    }

    #[test]
    fn spectrum_matches_direct_quadrature() {
        let n = 64;
        let dx = 4.0 / n as f64;
        let f = |x1: f64| c((-(x1 * x1) * 4.0).exp(), 0.0);
        let samples: Vec<Complex64> = (0..n).map(|j| f(-2.0 + j as f64 * dx)).collect();
        for (xi, v) in x1_spectrum(&samples, -2.0, dx, 4).into_iter().step_by(17) {
            let direct = x1_fourier(|x1, _| f(x1), [0.0; 2], xi, 2.0, n);
            assert!((v - direct).norm() < 1e-12);
        }
    }

    #[test]
    fn reconstruction_recovers_basis_function() {
        let s = SimpleSurface::disk(1.0, ConformalFactor::Flat).unwrap();
        let sys = AttenuatedSystem::new(&s, 0.3, 0.5, 0.4, 12, 9, 120).unwrap();
        let coef: Vec<Complex64> = (0..sys.basis_len()).map(|k| c((k as f64 * 0.37).sin(), 0.0)).collect();
        let data = sys.measure(|x| sys.eval_basis(&coef, x));
        let rec = sys.reconstruct(&data).unwrap();
        let err = rec.iter().zip(&coef).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(err < 1e-6, "{err}");
    }
}
