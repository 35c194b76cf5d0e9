//! Angular Fourier analysis of functions on a circle fiber `S_xM ≅ S¹`.

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Fewest angular samples accepted by the degree estimators.
pub const MIN_SAMPLES: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Degree {
    Finite(usize),
    /// Energy above tolerance persists up to the truncation limit.
    Unbounded,
}

/// Fourier coefficients `c_k = (1/N) Σ_j u(θ_j) e^{−ikθ_j}` for `θ_j = 2πj/N`,
/// indexed as `k = 0, 1, …, N/2, −(N/2 − 1), …, −1` in FFT order.
pub fn fourier_coefficients(u: &[Complex64]) -> Result<Vec<Complex64>> {
    let n = u.len();
    if n < MIN_SAMPLES {
        return Err(Error::Nyquist { samples: n });
    }
    let mut buf = u.to_vec();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let s = 1.0 / n as f64;
    Ok(buf.into_iter().map(|c| c * s).collect())
}

/// Energy `|c_k|² + |c_{−k}|²` of each mode `|k| = 0..=N/2`.
pub fn mode_energies(u: &[Complex64]) -> Result<Vec<f64>> {
    let c = fourier_coefficients(u)?;
    let n = c.len();
    let mut e = vec![0.0; n / 2 + 1];
    for (idx, ck) in c.iter().enumerate() {
        let k = if idx <= n / 2 { idx } else { n - idx };
        e[k] += ck.norm_sqr();
    }
    Ok(e)
}

/// Fraction of the total energy carried by modes with `|k| ≥ m`.
pub fn high_mode_fraction(u: &[Complex64], m: usize) -> Result<f64> {
    let e = mode_energies(u)?;
    let total: f64 = e.iter().sum();
    if total == 0.0 {
        return Ok(0.0);
    }
    Ok(e.iter().skip(m).sum::<f64>() / total)
}

/// Largest `|k|` whose coefficient magnitude exceeds `tol`, up to the
/// truncation limit `N/2 − 1`.
pub fn fourier_degree(u: &[Complex64], tol: f64) -> Result<Degree> {
    let c = fourier_coefficients(u)?;
    let n = c.len();
    let limit = n / 2 - 1;
    let mag = |k: usize| c[k].norm().max(c[(n - k) % n].norm());
    if mag(n / 2) > tol || mag(limit) > tol {
        return Ok(Degree::Unbounded);
    }
    Ok(Degree::Finite((0..limit).rev().find(|&k| mag(k) > tol).unwrap_or(0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn sample(n: usize, f: impl Fn(f64) -> Complex64) -> Vec<Complex64> {
        (0..n).map(|j| f(2.0 * PI * j as f64 / n as f64)).collect()
    }

    #[test]
    fn constants_and_cosines() {
        assert_eq!(fourier_degree(&sample(32, |_| Complex64::new(1.0, 0.0)), 1e-12).unwrap(), Degree::Finite(0));
        assert_eq!(fourier_degree(&sample(32, |t| Complex64::new(t.cos(), 0.0)), 1e-12).unwrap(), Degree::Finite(1));
        assert_eq!(
            fourier_degree(&sample(32, |t| Complex64::new(0.0, (5.0 * t).sin())), 1e-12).unwrap(),
            Degree::Finite(5)
        );
    }

    #[test]
    fn rough_functions_are_unbounded() {
        let u = sample(32, |t| Complex64::new(if t < PI { 1.0 } else { 0.0 }, 0.0));
        assert_eq!(fourier_degree(&u, 1e-6).unwrap(), Degree::Unbounded);
    }

    #[test]
    fn too_few_samples() {
        assert!(matches!(fourier_degree(&[Complex64::new(1.0, 0.0); 4], 1e-9), Err(Error::Nyquist { samples: 4 })));
    }

    #[test]
    fn energy_fraction() {
        let u = sample(64, |t| Complex64::new(1.0 + 0.1 * (3.0 * t).cos(), 0.0));
        let f = high_mode_fraction(&u, 1).unwrap();
        let expected = 0.005 / (1.0 + 0.005);
        assert!((f - expected).abs() < 1e-14);
        assert!(high_mode_fraction(&u, 4).unwrap() < 1e-28);
    }
}
