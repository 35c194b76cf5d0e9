//! The Cauchy operator `u(z) = (1/π) ∬ f(τ) / (z − τ) dA(τ)`, the decaying
//! inverse of `∂_{z̄}`.
//!
//! Node values of `f` are extended to the plane by tensor-product cubic
//! Lagrange interpolation, and the singular kernel is integrated exactly
//! against each interpolation basis function. The resulting weights depend on
//! the node offset only, so the operator is a discrete convolution evaluated
//! by FFT. Accuracy is fourth order in `h` for smooth compactly supported `f`,
//! and the operator is exact for data that is a bicubic interpolant.

use std::f64::consts::PI;
use std::sync::{Arc, OnceLock};

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::algebra::field::MatrixField;
use crate::error::{Error, Result};
use crate::grid::IndexBox;

/// Offsets with `max(|dx|, |dy|) <= NEAR` use tabulated weights.
const NEAR: i64 = 16;

/// Cardinal cubic Lagrange interpolation kernel on unit spacing.
pub(crate) fn psi(x: f64) -> f64 {
    let a = x.abs();
    if a <= 1.0 {
        (a + 1.0) * (a - 1.0) * (a - 2.0) / 2.0
    } else if a <= 2.0 {
        -(a - 1.0) * (a - 2.0) * (a - 3.0) / 6.0
    } else {
        0.0
    }
}

/// Gauss–Legendre nodes and weights on `[0, 1]`.
pub(crate) fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for k in 1..=n {
        let mut x = (PI * (k as f64 - 0.25) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for m in 2..=n {
                let p2 = ((2 * m - 1) as f64 * x * p1 - (m - 1) as f64 * p0) / m as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        out.push((0.5 * (x + 1.0), 0.5 * w));
    }
    out
}

/// Moments `∫ x^k ψ(x) dx` for even `k` up to 8 (odd moments vanish).
fn psi_moments() -> [f64; 5] {
    let gl = gauss_legendre(12);
    let mut m = [0.0; 5];
    for (k, mk) in m.iter_mut().enumerate() {
        for cell in -2..2 {
            for &(x, w) in &gl {
                let s = cell as f64 + x;
                *mk += w * s.powi(2 * k as i32) * psi(s);
            }
        }
    }
    m
}

struct WeightTable {
    near: Vec<Complex64>,
    /// Coefficients of `d^{-5}` and `d^{-9}` in the far-field expansion.
    far4: f64,
    far8: f64,
}

fn table() -> &'static WeightTable {
    static TABLE: OnceLock<WeightTable> = OnceLock::new();
    TABLE.get_or_init(|| {
        let side = (2 * NEAR + 1) as usize;
        let idx: Vec<(i64, i64)> =
            (-NEAR..=NEAR).flat_map(|dy| (-NEAR..=NEAR).map(move |dx| (dx, dy))).collect();
        let near: Vec<Complex64> = idx.par_iter().map(|&(dx, dy)| near_weight(dx, dy)).collect();
        debug_assert_eq!(near.len(), side * side);
        let m = psi_moments();
        let far4 = 2.0 * m[2] - 6.0 * m[1] * m[1];
        let far8 = 2.0 * m[4] - 56.0 * m[1] * m[3] + 70.0 * m[2] * m[2];
        WeightTable { near, far4, far8 }
    })
}

/// `∬ ψ(s_x) ψ(s_y) / (d − s) ds` for a lattice offset `d` (unit spacing).
fn near_weight(dx: i64, dy: i64) -> Complex64 {
    let gl = gauss_legendre(20);
    let d = Complex64::new(dx as f64, dy as f64);
    let mut acc = Complex64::new(0.0, 0.0);
    for a in -2..2i64 {
        for b in -2..2i64 {
            let corners = [(a, b), (a + 1, b), (a + 1, b + 1), (a, b + 1)];
            if let Some(k) = corners.iter().position(|&c| c == (dx, dy)) {
                // Duffy: two triangles with apex at the singular corner.
                let p = Complex64::new(corners[k].0 as f64, corners[k].1 as f64);
                let q = |m: usize| {
                    let c = corners[(k + m) % 4];
                    Complex64::new(c.0 as f64, c.1 as f64)
                };
                for (q1, q2) in [(q(1), q(2)), (q(2), q(3))] {
                    let e1 = q1 - p;
                    let e2 = q2 - q1;
                    let jac = (e1.re * e2.im - e1.im * e2.re).abs();
                    for &(u, wu) in &gl {
                        for &(v, wv) in &gl {
                            let dir = e1 + v * e2;
                            let s = p + u * dir;
                            // u·jac / (d − s) with d − s = −u·dir
                            acc += wu * wv * psi(s.re) * psi(s.im) * jac / (-dir);
                        }
                    }
                }
            } else {
                for &(x, wx) in &gl {
                    for &(y, wy) in &gl {
                        let s = Complex64::new(a as f64 + x, b as f64 + y);
                        acc += wx * wy * psi(s.re) * psi(s.im) / (d - s);
                    }
                }
            }
        }
    }
    acc
}

/// Unit-spacing weight for lattice offset `(dx, dy)`.
pub(crate) fn unit_weight(dx: i64, dy: i64) -> Complex64 {
    let t = table();
    if dx.abs() <= NEAR && dy.abs() <= NEAR {
        let side = 2 * NEAR + 1;
        return t.near[((dy + NEAR) * side + dx + NEAR) as usize];
    }
    let d = Complex64::new(dx as f64, dy as f64);
    let inv = 1.0 / d;
    let inv4 = inv.powi(4);
    inv + t.far4 * inv * inv4 + t.far8 * inv * inv4 * inv4
}

fn good_size(n: usize) -> usize {
    let mut m = n.max(1);
    loop {
        let mut k = m;
        for p in [2, 3, 5, 7] {
            while k.is_multiple_of(p) {
                k /= p;
            }
        }
        if k == 1 {
            return m;
        }
        m += 1;
    }
}

/// Cauchy operator from fields on `source` nodes to values on `target` nodes.
///
/// Holds the FFT plans and the kernel spectrum so repeated applications (in
/// the iterative solvers) only pay for two transforms per matrix entry.
pub struct CauchyOperator {
    source: IndexBox,
    target: IndexBox,
    h: f64,
    px: usize,
    py: usize,
    kernel_hat: Vec<Complex64>,
    fx: Arc<dyn Fft<f64>>,
    fy: Arc<dyn Fft<f64>>,
    ix: Arc<dyn Fft<f64>>,
    iy: Arc<dyn Fft<f64>>,
}

impl CauchyOperator {
    pub fn new(h: f64, source: IndexBox, target: IndexBox) -> Self {
        Self::with_kernel(h, source, target, |dx, dy| unit_weight(dx, dy) * (h / PI))
    }

    /// Convolution `out(t) = Σ_s f(s) K(t − s)` from `source` to `target`
    /// nodes for an arbitrary lattice kernel `K(dx, dy)`.
    pub fn with_kernel<K>(h: f64, source: IndexBox, target: IndexBox, kernel_fn: K) -> Self
    where
        K: Fn(i64, i64) -> Complex64 + Sync,
    {
        let lx = source.nx + target.nx - 1;
        let ly = source.ny + target.ny - 1;
        let px = good_size(lx);
        let py = good_size(ly);
        let mut planner = FftPlanner::new();
        let fx = planner.plan_fft_forward(px);
        let fy = planner.plan_fft_forward(py);
        let ix = planner.plan_fft_inverse(px);
        let iy = planner.plan_fft_inverse(py);
        let dx0 = target.i0 as i64 - (source.i0 + source.nx - 1) as i64;
        let dy0 = target.j0 as i64 - (source.j0 + source.ny - 1) as i64;
        let scale = 1.0 / (px * py) as f64;
        let mut kernel = vec![Complex64::new(0.0, 0.0); px * py];
        kernel.par_chunks_mut(px).enumerate().take(ly).for_each(|(b, row)| {
            for (a, v) in row.iter_mut().enumerate().take(lx) {
                *v = kernel_fn(dx0 + a as i64, dy0 + b as i64) * scale;
            }
        });
        let mut op = Self { source, target, h, px, py, kernel_hat: Vec::new(), fx, fy, ix, iy };
        op.fft2(&mut kernel, false);
        op.kernel_hat = kernel;
        op
    }

    pub fn source(&self) -> IndexBox {
        self.source
    }

    pub fn target(&self) -> IndexBox {
        self.target
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    fn fft2(&self, data: &mut [Complex64], inverse: bool) {
        let (px, py) = (self.px, self.py);
        let (fx, fy) = if inverse { (&self.ix, &self.iy) } else { (&self.fx, &self.fy) };
        data.par_chunks_mut(px).for_each(|row| fx.process(row));
        let mut t = vec![Complex64::new(0.0, 0.0); px * py];
        t.par_chunks_mut(py).enumerate().for_each(|(a, col)| {
            for (b, v) in col.iter_mut().enumerate() {
                *v = data[b * px + a];
            }
            fy.process(col);
        });
        data.par_chunks_mut(px).enumerate().for_each(|(b, row)| {
            for (a, v) in row.iter_mut().enumerate() {
                *v = t[a * py + b];
            }
        });
    }

    /// Apply to one scalar plane laid out on `source` (row-major, `nx` fastest).
    pub fn apply_plane(&self, plane: &[Complex64]) -> Vec<Complex64> {
        let s = self.source;
        let t = self.target;
        let mut buf = vec![Complex64::new(0.0, 0.0); self.px * self.py];
        for row in 0..s.ny {
            buf[row * self.px..row * self.px + s.nx].copy_from_slice(&plane[row * s.nx..(row + 1) * s.nx]);
        }
        self.fft2(&mut buf, false);
        buf.par_iter_mut().zip(self.kernel_hat.par_iter()).for_each(|(a, k)| *a *= k);
        self.fft2(&mut buf, true);
        let mut out = vec![Complex64::new(0.0, 0.0); t.len()];
        for row in 0..t.ny {
            let src = (row + s.ny - 1) * self.px + s.nx - 1;
            out[row * t.nx..(row + 1) * t.nx].copy_from_slice(&buf[src..src + t.nx]);
        }
        out
    }

    /// Entrywise application to a matrix field. Values of `f` outside
    /// `source` are ignored, so the caller must make sure `f` vanishes there.
    pub fn apply(&self, f: &MatrixField) -> MatrixField {
        let r = f.rank();
        let rr = r * r;
        let src = f.restrict(self.source);
        let planes: Vec<Vec<Complex64>> = (0..rr)
            .into_par_iter()
            .map(|e| {
                let plane: Vec<Complex64> = src.data().chunks(rr).map(|blk| blk[e]).collect();
                self.apply_plane(&plane)
            })
            .collect();
        let mut out = MatrixField::zeros(*f.grid(), self.target, r);
        for (node, blk) in out.data_mut().chunks_mut(rr).enumerate() {
            for e in 0..rr {
                blk[e] = planes[e][node];
            }
        }
        out
    }
}

/// One-shot Cauchy transform of a compactly supported field onto `target`.
///
/// The field's declared support (or its window, when none is declared) is the
/// source region; it must satisfy the grid's margin rule.
pub fn cauchy_transform(f: &MatrixField, target: IndexBox) -> Result<MatrixField> {
    let source = f.support().unwrap_or(f.window());
    f.grid().check_margin("cauchy source", &source)?;
    let leak = f.leakage();
    if leak > 1e-12 * f.sup_norm(None).max(1e-300) {
        return Err(Error::SupportMargin {
            what: "cauchy source".into(),
            detail: format!("field leaks {leak:.3e} outside its declared support"),
        });
    }
    Ok(CauchyOperator::new(f.grid().h(), source, target).apply(f))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn psi_reproduces_cubics() {
        for &x in &[0.0, 0.3, 0.5, 0.77] {
            for p in 0..4 {
                let s: f64 = (-3..=3).map(|k| (k as f64).powi(p) * psi(x - k as f64)).sum();
                assert!((s - x.powi(p)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn far_expansion_matches_table_at_boundary() {
        // Just inside the table the asymptotic form must already agree.
        let d = (NEAR, 3);
        let tab = unit_weight(d.0, d.1);
        let t = table();
        let z = Complex64::new(d.0 as f64, d.1 as f64);
        let far = 1.0 / z + t.far4 / z.powi(5) + t.far8 / z.powi(9);
        assert!((tab - far).norm() < 1e-9, "{tab} vs {far}");
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let gl = gauss_legendre(6);
        let s: f64 = gl.iter().map(|&(x, w)| w * x.powi(11)).sum();
        assert!((s - 1.0 / 12.0).abs() < 1e-14);
    }
}
