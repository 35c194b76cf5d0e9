//! Small dense complex matrix helpers shared by every module.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMat = DMatrix<Complex64>;

pub const I: Complex64 = Complex64::new(0.0, 1.0);

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn identity(r: usize) -> CMat {
    CMat::identity(r, r)
}

pub fn zeros(r: usize) -> CMat {
    CMat::zeros(r, r)
}

pub fn scalar(r: usize, v: Complex64) -> CMat {
    CMat::from_diagonal_element(r, r, v)
}

/// Frobenius norm, the pointwise norm used throughout the crate.
pub fn fro(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn commutator(a: &CMat, b: &CMat) -> CMat {
    a * b - b * a
}

pub fn adjoint(m: &CMat) -> CMat {
    m.adjoint()
}

pub fn det(m: &CMat) -> Complex64 {
    match m.nrows() {
        1 => m[(0, 0)],
        2 => m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)],
        _ => m.clone().determinant(),
    }
}

pub fn inverse(m: &CMat) -> Option<CMat> {
    match m.nrows() {
        1 => {
            let v = m[(0, 0)];
            (v.norm() > 0.0).then(|| CMat::from_element(1, 1, 1.0 / v))
        }
        2 => {
            let d = det(m);
            if d.norm() == 0.0 {
                return None;
            }
            Some(CMat::from_row_slice(
                2,
                2,
                &[m[(1, 1)] / d, -m[(0, 1)] / d, -m[(1, 0)] / d, m[(0, 0)] / d],
            ))
        }
        _ => m.clone().try_inverse(),
    }
}

pub fn expm(m: &CMat) -> CMat {
    m.clone().exp()
}

/// Eigenvalues through the complex Schur form.
pub fn eigenvalues(m: &CMat) -> Vec<Complex64> {
    if m.nrows() == 1 {
        return vec![m[(0, 0)]];
    }
    let t = nalgebra::Schur::new(m.clone()).unpack().1;
    (0..t.nrows()).map(|k| t[(k, k)]).collect()
}

/// Principal square root by the Denman–Beavers iteration.
fn sqrtm(m: &CMat) -> CMat {
    let r = m.nrows();
    let mut y = m.clone();
    let mut z = identity(r);
    for _ in 0..100 {
        let yi = inverse(&y).expect("sqrtm iterate singular");
        let zi = inverse(&z).expect("sqrtm iterate singular");
        let yn = (&y + &zi) * c(0.5, 0.0);
        let zn = (&z + &yi) * c(0.5, 0.0);
        let delta = fro(&(&yn - &y));
        y = yn;
        z = zn;
        if delta <= 1e-15 * fro(&y).max(1.0) {
            break;
        }
    }
    y
}

/// Principal matrix logarithm (inverse scaling and squaring).
///
/// Fails when an eigenvalue sits on (or numerically near) the closed negative
/// real axis, where the principal branch is undefined.
pub fn logm(m: &CMat) -> Result<CMat> {
    for ev in eigenvalues(m) {
        if ev.norm() < 1e-14 || (ev.re <= 0.0 && ev.im.abs() <= 1e-10 * ev.norm().max(1.0)) {
            return Err(Error::LogBranch(format!("{ev}")));
        }
    }
    let r = m.nrows();
    let id = identity(r);
    let mut x = m.clone();
    let mut k = 0u32;
    while fro(&(&x - &id)) > 0.1 && k < 60 {
        x = sqrtm(&x);
        k += 1;
    }
    // log(I + E) by its Taylor series; |E| <= 0.1 so 40 terms reach rounding.
    let e = &x - &id;
    let mut term = e.clone();
    let mut acc = zeros(r);
    for n in 1..=40 {
        let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
        acc += &term * c(sign / n as f64, 0.0);
        term = &term * &e;
    }
    Ok(acc * c(2f64.powi(k as i32), 0.0))
}

/// Matrix product of two r×r blocks stored row-major in slices.
#[inline]
pub fn mul_into(r: usize, a: &[Complex64], b: &[Complex64], out: &mut [Complex64]) {
    for i in 0..r {
        for j in 0..r {
            let mut s = Complex64::new(0.0, 0.0);
            for k in 0..r {
                s += a[i * r + k] * b[k * r + j];
            }
            out[i * r + j] = s;
        }
    }
}

pub fn to_row_major(m: &CMat) -> Vec<Complex64> {
    let r = m.nrows();
    let mut v = Vec::with_capacity(r * r);
    for i in 0..r {
        for j in 0..r {
            v.push(m[(i, j)]);
        }
    }
    v
}

pub fn from_row_major(r: usize, v: &[Complex64]) -> CMat {
    CMat::from_row_slice(r, r, v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn logm_inverts_expm() {
        let m = CMat::from_row_slice(2, 2, &[c(0.3, 0.1), c(-0.2, 0.4), c(0.5, 0.0), c(-0.1, -0.3)]);
        let l = logm(&expm(&m)).unwrap();
        assert!(fro(&(&l - &m)) < 1e-12);
    }

    #[test]
    fn logm_rejects_negative_axis() {
        let m = scalar(2, c(-1.0, 0.0));
        assert!(matches!(logm(&m), Err(Error::LogBranch(_))));
    }

    #[test]
    fn small_inverse_and_det() {
        let m = CMat::from_row_slice(2, 2, &[c(1.0, 1.0), c(2.0, 0.0), c(0.0, 1.0), c(3.0, -1.0)]);
        let mi = inverse(&m).unwrap();
        assert!(fro(&(&m * &mi - identity(2))) < 1e-14);
        assert!((det(&m) - m.clone().determinant()).norm() < 1e-14);
    }
}
