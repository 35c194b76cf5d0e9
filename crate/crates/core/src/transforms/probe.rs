//! Randomised probes of the kernel of `𝒞_{m+1}` with `A = 0`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::derivative::sym_derivative;
use super::ray::{complex_ray_transform, RaySetup};
use super::transport::global_transport_solution;
use super::xray::{x1_fourier, AttenuatedSystem};
use crate::algebra::tensor::{multi_indices, SymmetricTensorField};
use crate::error::{Error, Result};
use crate::geometry::leaf::AmbientConnection;
use crate::geometry::surface::SimpleSurface;
use crate::linalg::CMat;

/// Smooth bump in `(x₁, x)` of radius `w`.
pub fn bump3(x1: f64, x: &[f64], c: [f64; 3], w: f64) -> f64 {
    let r2 = ((x1 - c[0]).powi(2) + (x[0] - c[1]).powi(2) + (x[1] - c[2]).powi(2)) / (w * w);
    if r2 >= 1.0 {
        0.0
    } else {
        (1.0 - r2).powi(6)
    }
}

/// Scalar-valued tensor `Σ_b bump_b · (coefficient tensor)_b`.
pub fn bump_tensor(degree: usize, centers: Vec<[f64; 3]>, width: f64, coef: Vec<Vec<Complex64>>) -> SymmetricTensorField {
    let bounds = (0..3)
        .map(|k| {
            let lo = centers.iter().map(|c| c[k] - width).fold(f64::INFINITY, f64::min);
            let hi = centers.iter().map(|c| c[k] + width).fold(f64::NEG_INFINITY, f64::max);
            (lo, hi)
        })
        .collect();
    let empty = centers.is_empty();
    let field = SymmetricTensorField::new(degree, 2, 1, move |x1, x| {
        let mut out = vec![Complex64::new(0.0, 0.0); coef.first().map_or(0, |c| c.len())];
        for (c, k) in centers.iter().zip(&coef) {
            let b = bump3(x1, x, *c, width);
            if b != 0.0 {
                for (o, a) in out.iter_mut().zip(k) {
                    *o += a * b;
                }
            }
        }
        out.into_iter().map(|v| CMat::from_element(1, 1, v)).collect()
    });
    if empty { field } else { field.with_bounds(bounds) }
}

/// Random compactly supported tensor of the given degree.
pub fn random_tensor(degree: usize, bumps: usize, rng: &mut ChaCha8Rng) -> SymmetricTensorField {
    let n = multi_indices(degree, 3).len();
    let mut centers = Vec::with_capacity(bumps);
    let mut coef = Vec::with_capacity(bumps);
    for _ in 0..bumps {
        let r = rng.gen_range(0.0..0.3f64);
        let phi = rng.gen_range(0.0..std::f64::consts::TAU);
        centers.push([rng.gen_range(-0.6..0.6), r * phi.cos(), r * phi.sin()]);
        coef.push((0..n).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect());
    }
    bump_tensor(degree, centers, 0.55, coef)
}

#[derive(Debug, Clone)]
pub struct ProbeConfig {
    /// Degree of the potential `p`; the transform probed is `𝒞_{m+1}`.
    pub m: usize,
    pub trials: usize,
    pub seed: u64,
    pub bumps: usize,
    /// Boundary leaves `(boundary angle, entry angle)`.
    pub leaves: Vec<(f64, f64)>,
    pub tol: f64,
    /// Bump centres per tensor component in the potential basis.
    pub basis_size: usize,
    /// Points and angles of the degree check; no check when empty.
    pub degree_points: Vec<[f64; 2]>,
    pub degree_angles: usize,
    pub degree_x1: Vec<f64>,
}

impl ProbeConfig {
    pub fn new(m: usize, trials: usize, seed: u64) -> Self {
        Self {
            m,
            trials,
            seed,
            bumps: 3,
            leaves: vec![(0.0, 0.0), (1.3, 0.4), (2.6, -0.5), (4.4, 0.2)],
            tol: 1e-5,
            basis_size: 32,
            degree_points: vec![[0.05, -0.1], [-0.15, 0.2]],
            degree_angles: 16,
            degree_x1: (-24..=24).map(|k| k as f64 / 16.0).collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TrialReport {
    pub kernel_trace: f64,
    pub projection_residual: f64,
    pub nonpotential_trace: f64,
    /// Fraction of angular energy in modes `≥ m + 1` of the transport
    /// solution for `Dp` at `ξ₁ = 0`.
    pub high_mode_fraction: Option<f64>,
    pub transport_residual: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ProbeReport {
    pub m: usize,
    pub seed: u64,
    pub h: f64,
    pub half_width: f64,
    pub tol: f64,
    pub trials: Vec<TrialReport>,
    pub kernel_pass: bool,
    pub nondegenerate_pass: bool,
    pub degree_pass: bool,
}

impl ProbeReport {
    pub fn passed(&self) -> bool {
        self.kernel_pass && self.nondegenerate_pass && self.degree_pass
    }
}

/// Largest trace sup norm of `𝒞(f)` over the configured leaves.
pub fn max_trace(setup: &RaySetup, surface: &SimpleSurface, f: &SymmetricTensorField, leaves: &[(f64, f64)]) -> Result<f64> {
    let zero = AmbientConnection::zero(1 + surface.dim, f.rank());
    let mut worst: f64 = 0.0;
    for &(phi, alpha) in leaves {
        let x = surface.boundary_point(phi);
        let t = complex_ray_transform(setup, surface, f, &zero, x, surface.inward(x, alpha))?;
        worst = worst.max(t.sup_norm());
    }
    Ok(worst)
}

/// Least-squares projection of `f` (degree `m + 1`) away from
/// `{D q : q = bump · e_α}`. Returns the residual tensor and its relative
/// sampled norm.
pub fn project_out_potential(f: &SymmetricTensorField, surface: &SimpleSurface, basis_size: usize, seed: u64) -> Result<(SymmetricTensorField, f64)> {
    let m = f.degree().checked_sub(1).ok_or_else(|| Error::InvalidArgument("projection needs degree ≥ 1".into()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9);
    let idx = multi_indices(m, 3);
    let mut basis = Vec::new();
    for a in 0..idx.len() {
        for _ in 0..basis_size {
            let r = rng.gen_range(0.0..0.35f64);
            let phi = rng.gen_range(0.0..std::f64::consts::TAU);
            let mut e = vec![Complex64::new(0.0, 0.0); idx.len()];
            e[a] = Complex64::new(1.0, 0.0);
            basis.push(([rng.gen_range(-0.7..0.7), r * phi.cos(), r * phi.sin()], e));
        }
    }
    let width = 0.5;
    let dq: Vec<SymmetricTensorField> = basis
        .iter()
        .map(|(c, e)| sym_derivative(&bump_tensor(m, vec![*c], width, vec![e.clone()]), surface.factor))
        .collect();
    let mut samples = Vec::new();
    for _ in 0..600 {
        let r = rng.gen_range(0.0..0.75f64).sqrt() * 0.9;
        let phi = rng.gen_range(0.0..std::f64::consts::TAU);
        samples.push((rng.gen_range(-1.3..1.3), [r * phi.cos(), r * phi.sin()]));
    }
    let ncomp = multi_indices(m + 1, 3).len();
    let rows = samples.len() * ncomp;
    let mut a = DMatrix::<Complex64>::zeros(rows, dq.len());
    let mut b = DVector::<Complex64>::zeros(rows);
    for (s, (x1, x)) in samples.iter().enumerate() {
        for (k, comp) in f.components(*x1, x).iter().enumerate() {
            b[s * ncomp + k] = comp[(0, 0)];
        }
        for (j, d) in dq.iter().enumerate() {
            for (k, comp) in d.components(*x1, x).iter().enumerate() {
                a[(s * ncomp + k, j)] = comp[(0, 0)];
            }
        }
    }
    let svd = a.clone().svd(true, true);
    let tol = 1e-12 * svd.singular_values.max();
    let coef = svd.solve(&b, tol).map_err(|e| Error::Precondition(e.to_string()))?;
    let resid = (&b - &a * &coef).norm() / b.norm().max(f64::MIN_POSITIVE);
    let centers: Vec<[f64; 3]> = basis.iter().map(|(c, _)| *c).collect();
    let coefs: Vec<Vec<Complex64>> = basis.iter().zip(coef.iter()).map(|((_, e), w)| e.iter().map(|v| v * w).collect()).collect();
    let p_star = bump_tensor(m, centers, width, coefs);
    let f_res = f.add(&sym_derivative(&p_star, surface.factor).scale(Complex64::new(-1.0, 0.0)))?;
    Ok((f_res, resid))
}

pub fn kernel_injectivity_probe(setup: &RaySetup, surface: &SimpleSurface, cfg: &ProbeConfig) -> Result<ProbeReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let zero = AmbientConnection::zero(3, 1);
    let mut trials = Vec::with_capacity(cfg.trials);
    for trial in 0..cfg.trials {
        let p = random_tensor(cfg.m, cfg.bumps, &mut rng);
        let dp = sym_derivative(&p, surface.factor);
        let kernel_trace = max_trace(setup, surface, &dp, &cfg.leaves)?;
        let f = random_tensor(cfg.m + 1, cfg.bumps, &mut rng);
        let (f_res, projection_residual) = project_out_potential(&f, surface, cfg.basis_size, cfg.seed.wrapping_add(trial as u64))?;
        let nonpotential_trace = max_trace(setup, surface, &f_res, &cfg.leaves)?;
        let (high_mode_fraction, transport_residual) = if cfg.degree_points.is_empty() {
            (None, None)
        } else {
            let tf = global_transport_solution(setup, surface, &dp, &zero, &cfg.degree_points, cfg.degree_angles, &cfg.degree_x1)?;
            (Some(tf.high_mode_fraction(cfg.m + 1)?), Some(tf.residual))
        };
        trials.push(TrialReport { kernel_trace, projection_residual, nonpotential_trace, high_mode_fraction, transport_residual });
    }
    let kernel_pass = trials.iter().all(|t| t.kernel_trace <= cfg.tol);
    let nondegenerate_pass = trials.iter().all(|t| t.projection_residual > 0.1 && t.nonpotential_trace > 10.0 * cfg.tol);
    let degree_pass = trials.iter().all(|t| t.high_mode_fraction.is_none_or(|f| f <= cfg.tol));
    Ok(ProbeReport {
        m: cfg.m,
        seed: cfg.seed,
        h: setup.grid.h(),
        half_width: setup.half_width,
        tol: cfg.tol,
        trials,
        kernel_pass,
        nondegenerate_pass,
        degree_pass,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SmokeTrial {
    pub seed: u64,
    /// Largest `𝒞₀` trace of the unscaled source.
    pub raw_trace: f64,
    /// Factor bringing the largest trace down to the tolerance.
    pub scale: f64,
    /// `(ξ₁, ‖f̂(ξ₁, ·)‖_{L²})` of the least-squares reconstruction.
    pub reconstructed: Vec<(f64, f64)>,
    pub max_norm: f64,
}

/// L² norm over the disk of radius `radius`, sampled on a 61×61 lattice.
fn disk_norm<F: Fn([f64; 2]) -> Complex64>(f: F, radius: f64) -> f64 {
    let n = 61;
    let h = 2.0 * radius / (n - 1) as f64;
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            let x = [-radius + i as f64 * h, -radius + j as f64 * h];
            if x[0].hypot(x[1]) < radius {
                acc += f(x).norm_sqr() * h * h;
            }
        }
    }
    acc.sqrt()
}

/// Scalar source whose complex ray transform is brought down to `tol` by
/// scaling; `f̂(ξ₁, ·)` is then reconstructed by least squares from its
/// attenuated X-ray data on a geodesic fan, for each `ξ₁` in `xi_values`.
pub fn attenuated_smoke_test(setup: &RaySetup, surface: &SimpleSurface, seed: u64, tol: f64, xi_values: &[f64], leaves: &[(f64, f64)]) -> Result<SmokeTrial> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let f = random_tensor(0, 3, &mut rng);
    let raw_trace = max_trace(setup, surface, &f, leaves)?;
    if !(raw_trace > 0.0) {
        return Err(Error::Precondition("source has a vanishing transform".into()));
    }
    let scale = tol / raw_trace;
    let value = |x1: f64, x: [f64; 2]| f.components(x1, &x)[0][(0, 0)] * scale;
    let mut reconstructed = Vec::with_capacity(xi_values.len());
    for &xi1 in xi_values {
        let system = AttenuatedSystem::new(surface, xi1, 0.6, 0.4, 12, 9, 160)?;
        let data = system.measure(|x| x1_fourier(value, x, xi1, setup.half_width, 256));
        let coef = system.reconstruct(&data)?;
        reconstructed.push((xi1, disk_norm(|x| system.eval_basis(&coef, x), surface.size)));
    }
    let max_norm = reconstructed.iter().map(|r| r.1).fold(0.0, f64::max);
    Ok(SmokeTrial { seed, raw_trace, scale, reconstructed, max_norm })
}
