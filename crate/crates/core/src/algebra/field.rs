//! Matrix-valued fields sampled on a window of a [`ComplexGrid`].

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{ComplexGrid, IndexBox};
use crate::linalg::{self, CMat};

/// Finite-difference direction on the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    /// Real part, `s` on a leaf.
    X,
    /// Imaginary part, `t` on a leaf.
    Y,
}

/// Complex `r×r` matrix per node of `window`. Node-major storage: the block of
/// node `(i, j)` is the row-major matrix at `offset(i, j) * r²`.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixField {
    grid: ComplexGrid,
    window: IndexBox,
    rank: usize,
    data: Vec<Complex64>,
    support: Option<IndexBox>,
}

impl MatrixField {
    pub fn zeros(grid: ComplexGrid, window: IndexBox, rank: usize) -> Self {
        assert!(rank >= 1, "rank must be positive");
        Self { grid, window, rank, data: vec![Complex64::new(0.0, 0.0); window.len() * rank * rank], support: None }
    }

    pub fn identity(grid: ComplexGrid, window: IndexBox, rank: usize) -> Self {
        Self::constant(grid, window, &linalg::identity(rank))
    }

    pub fn constant(grid: ComplexGrid, window: IndexBox, m: &CMat) -> Self {
        let block = linalg::to_row_major(m);
        let data = block.iter().copied().cycle().take(window.len() * block.len()).collect();
        Self { grid, window, rank: m.nrows(), data, support: None }
    }

    /// Samples `f(z)` at every window node.
    pub fn from_fn<F>(grid: ComplexGrid, window: IndexBox, rank: usize, f: F) -> Self
    where
        F: Fn(Complex64) -> CMat + Sync,
    {
        let rr = rank * rank;
        let mut data = vec![Complex64::new(0.0, 0.0); window.len() * rr];
        data.par_chunks_mut(window.nx * rr).enumerate().for_each(|(row, chunk)| {
            let j = window.j0 + row;
            for k in 0..window.nx {
                let m = f(grid.z(window.i0 + k, j));
                debug_assert_eq!(m.nrows(), rank);
                for a in 0..rank {
                    for b in 0..rank {
                        chunk[k * rr + a * rank + b] = m[(a, b)];
                    }
                }
            }
        });
        Self { grid, window, rank, data, support: None }
    }

    /// Scalar field embedded as `φ(z)·id`.
    pub fn from_scalar_fn<F>(grid: ComplexGrid, window: IndexBox, rank: usize, f: F) -> Self
    where
        F: Fn(Complex64) -> Complex64 + Sync,
    {
        Self::from_fn(grid, window, rank, |z| linalg::scalar(rank, f(z)))
    }

    pub fn from_raw(grid: ComplexGrid, window: IndexBox, rank: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != window.len() * rank * rank {
            return Err(Error::InvalidArgument(format!(
                "payload length {} does not match window {}x{} and rank {rank}",
                data.len(),
                window.nx,
                window.ny
            )));
        }
        Ok(Self { grid, window, rank, data, support: None })
    }

    /// Declares the box outside of which the field vanishes.
    pub fn with_support(mut self, support: IndexBox) -> Self {
        self.support = Some(support);
        self
    }

    pub fn grid(&self) -> &ComplexGrid {
        &self.grid
    }

    pub fn window(&self) -> IndexBox {
        self.window
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn support(&self) -> Option<IndexBox> {
        self.support
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    #[inline]
    pub fn block(&self, i: usize, j: usize) -> &[Complex64] {
        let rr = self.rank * self.rank;
        let o = self.window.offset(i, j) * rr;
        &self.data[o..o + rr]
    }

    #[inline]
    pub fn block_mut(&mut self, i: usize, j: usize) -> &mut [Complex64] {
        let rr = self.rank * self.rank;
        let o = self.window.offset(i, j) * rr;
        &mut self.data[o..o + rr]
    }

    pub fn at(&self, i: usize, j: usize) -> CMat {
        linalg::from_row_major(self.rank, self.block(i, j))
    }

    /// Entry `(a, b)` at a node.
    #[inline]
    pub fn entry(&self, i: usize, j: usize, a: usize, b: usize) -> Complex64 {
        self.block(i, j)[a * self.rank + b]
    }

    pub fn set(&mut self, i: usize, j: usize, m: &CMat) {
        let r = self.rank;
        let blk = self.block_mut(i, j);
        for a in 0..r {
            for b in 0..r {
                blk[a * r + b] = m[(a, b)];
            }
        }
    }

    fn check_compatible(&self, o: &MatrixField) -> Result<()> {
        if self.grid != o.grid || self.window != o.window {
            return Err(Error::GridMismatch(format!("windows {:?} vs {:?}", self.window, o.window)));
        }
        if self.rank != o.rank {
            return Err(Error::RankMismatch { expected: self.rank, got: o.rank });
        }
        Ok(())
    }

    /// Copy onto another window; nodes outside `self.window` read as zero.
    pub fn restrict(&self, window: IndexBox) -> MatrixField {
        let rr = self.rank * self.rank;
        let mut out = MatrixField::zeros(self.grid, window, self.rank);
        if let Some(common) = self.window.intersect(&window) {
            for j in common.j0..common.j0 + common.ny {
                let src = self.window.offset(common.i0, j) * rr;
                let dst = window.offset(common.i0, j) * rr;
                out.data[dst..dst + common.nx * rr].copy_from_slice(&self.data[src..src + common.nx * rr]);
            }
        }
        out.support = self.support.and_then(|s| s.intersect(&window));
        out
    }

    pub fn map_blocks<F>(&self, f: F) -> MatrixField
    where
        F: Fn(Complex64, &CMat) -> CMat + Sync,
    {
        let grid = self.grid;
        MatrixField::from_fn(grid, self.window, self.rank, |z| {
            let i = grid.nearest(z.re);
            let j = grid.nearest(z.im);
            f(z, &self.at(i, j))
        })
    }

    pub fn add(&self, o: &MatrixField) -> Result<MatrixField> {
        self.check_compatible(o)?;
        let data = self.data.iter().zip(&o.data).map(|(a, b)| a + b).collect();
        Ok(MatrixField { data, support: None, ..self.clone_shape() })
    }

    pub fn sub(&self, o: &MatrixField) -> Result<MatrixField> {
        self.check_compatible(o)?;
        let data = self.data.iter().zip(&o.data).map(|(a, b)| a - b).collect();
        Ok(MatrixField { data, support: None, ..self.clone_shape() })
    }

    pub fn scale(&self, s: Complex64) -> MatrixField {
        MatrixField { data: self.data.iter().map(|a| a * s).collect(), ..self.clone_shape_with_support() }
    }

    /// Pointwise matrix product `self · o`.
    pub fn mul(&self, o: &MatrixField) -> Result<MatrixField> {
        self.check_compatible(o)?;
        let r = self.rank;
        let rr = r * r;
        let mut data = vec![Complex64::new(0.0, 0.0); self.data.len()];
        data.par_chunks_mut(rr)
            .zip(self.data.par_chunks(rr).zip(o.data.par_chunks(rr)))
            .for_each(|(out, (a, b))| linalg::mul_into(r, a, b, out));
        Ok(MatrixField { data, support: None, ..self.clone_shape() })
    }

    /// Pointwise commutator `[self, o]`.
    pub fn commutator(&self, o: &MatrixField) -> Result<MatrixField> {
        self.mul(o)?.sub(&o.mul(self)?)
    }

    pub fn adjoint(&self) -> MatrixField {
        let r = self.rank;
        let mut out = self.clone();
        for (dst, src) in out.data.chunks_mut(r * r).zip(self.data.chunks(r * r)) {
            for a in 0..r {
                for b in 0..r {
                    dst[a * r + b] = src[b * r + a].conj();
                }
            }
        }
        out
    }

    /// Entrywise complex conjugate.
    pub fn conj(&self) -> MatrixField {
        MatrixField { data: self.data.iter().map(|z| z.conj()).collect(), ..self.clone_shape_with_support() }
    }

    pub fn transpose(&self) -> MatrixField {
        let r = self.rank;
        let mut out = self.clone();
        for (dst, src) in out.data.chunks_mut(r * r).zip(self.data.chunks(r * r)) {
            for a in 0..r {
                for b in 0..r {
                    dst[a * r + b] = src[b * r + a];
                }
            }
        }
        out
    }

    /// Pointwise inverse; fails at the first node where `|det| < threshold`.
    pub fn inverse(&self, threshold: f64) -> Result<MatrixField> {
        let mut out = self.clone();
        for (i, j) in self.window.nodes() {
            let m = self.at(i, j);
            let d = linalg::det(&m).norm();
            if d < threshold {
                return Err(Error::SingularGauge { min_det: d, i, j });
            }
            out.set(i, j, &linalg::inverse(&m).expect("checked determinant"));
        }
        out.support = None;
        Ok(out)
    }

    /// Scalar determinant field (rank 1).
    pub fn det(&self) -> MatrixField {
        let mut out = MatrixField::zeros(self.grid, self.window, 1);
        for (i, j) in self.window.nodes() {
            out.block_mut(i, j)[0] = linalg::det(&self.at(i, j));
        }
        out
    }

    /// Minimum of `|det|` over `region` with its location.
    pub fn min_abs_det(&self, region: &IndexBox) -> (f64, usize, usize) {
        region
            .nodes()
            .filter(|&(i, j)| self.window.contains(i, j))
            .map(|(i, j)| (linalg::det(&self.at(i, j)).norm(), i, j))
            .fold((f64::INFINITY, 0, 0), |acc, x| if x.0 < acc.0 { x } else { acc })
    }

    /// Extract entry `(a, b)` as a rank-1 field.
    pub fn component(&self, a: usize, b: usize) -> MatrixField {
        let r = self.rank;
        let data = self.data.chunks(r * r).map(|blk| blk[a * r + b]).collect();
        MatrixField { grid: self.grid, window: self.window, rank: 1, data, support: self.support }
    }

    /// Fourth-order finite-difference partial derivative (centered in the
    /// interior, one-sided in the two outermost nodes).
    pub fn partial(&self, axis: Axis) -> MatrixField {
        let rr = self.rank * self.rank;
        let w = self.window;
        let inv = 1.0 / (12.0 * self.grid.h());
        let mut out = MatrixField::zeros(self.grid, w, self.rank);
        let (len, stride_nodes) = match axis {
            Axis::X => (w.nx, 1usize),
            Axis::Y => (w.ny, w.nx),
        };
        if len < 5 {
            return out;
        }
        let data = &self.data;
        let lines: Vec<usize> = match axis {
            Axis::X => (0..w.ny).map(|r| r * w.nx).collect(),
            Axis::Y => (0..w.nx).collect(),
        };
        let results: Vec<(usize, Vec<Complex64>)> = lines
            .par_iter()
            .map(|&start| {
                let at = |k: usize, e: usize| data[(start + k * stride_nodes) * rr + e];
                let mut line = vec![Complex64::new(0.0, 0.0); len * rr];
                for e in 0..rr {
                    for k in 0..len {
                        let d = if k >= 2 && k + 2 < len {
                            -at(k + 2, e) + 8.0 * at(k + 1, e) - 8.0 * at(k - 1, e) + at(k - 2, e)
                        } else if k == 0 {
                            -25.0 * at(0, e) + 48.0 * at(1, e) - 36.0 * at(2, e) + 16.0 * at(3, e) - 3.0 * at(4, e)
                        } else if k == 1 {
                            -3.0 * at(0, e) - 10.0 * at(1, e) + 18.0 * at(2, e) - 6.0 * at(3, e) + at(4, e)
                        } else if k == len - 1 {
                            25.0 * at(k, e) - 48.0 * at(k - 1, e) + 36.0 * at(k - 2, e) - 16.0 * at(k - 3, e)
                                + 3.0 * at(k - 4, e)
                        } else {
                            3.0 * at(k + 1, e) + 10.0 * at(k, e) - 18.0 * at(k - 1, e) + 6.0 * at(k - 2, e)
                                - at(k - 3, e)
                        };
                        line[k * rr + e] = d * inv;
                    }
                }
                (start, line)
            })
            .collect();
        for (start, line) in results {
            for k in 0..len {
                let node = start + k * stride_nodes;
                out.data[node * rr..(node + 1) * rr].copy_from_slice(&line[k * rr..(k + 1) * rr]);
            }
        }
        out
    }

    /// `∂_{z̄} = ½(∂_x + i∂_y)` by finite differences.
    pub fn dzbar(&self) -> MatrixField {
        let dx = self.partial(Axis::X);
        let dy = self.partial(Axis::Y);
        let data = dx.data.iter().zip(&dy.data).map(|(a, b)| 0.5 * (a + linalg::I * b)).collect();
        MatrixField { data, ..dx }
    }

    /// `∂_z = ½(∂_x − i∂_y)` by finite differences.
    pub fn dz(&self) -> MatrixField {
        let dx = self.partial(Axis::X);
        let dy = self.partial(Axis::Y);
        let data = dx.data.iter().zip(&dy.data).map(|(a, b)| 0.5 * (a - linalg::I * b)).collect();
        MatrixField { data, ..dx }
    }

    /// Discrete L² norm `(h² Σ |M|_F²)^{1/2}` over `region` (whole window if `None`).
    pub fn l2_norm(&self, region: Option<&IndexBox>) -> f64 {
        let h2 = self.grid.h().powi(2);
        let rr = self.rank * self.rank;
        let s: f64 = match region {
            None => self.data.iter().map(|z| z.norm_sqr()).sum(),
            Some(reg) => reg
                .nodes()
                .filter(|&(i, j)| self.window.contains(i, j))
                .map(|(i, j)| {
                    let o = self.window.offset(i, j) * rr;
                    self.data[o..o + rr].iter().map(|z| z.norm_sqr()).sum::<f64>()
                })
                .sum(),
        };
        (h2 * s).sqrt()
    }

    /// Maximum pointwise Frobenius norm over `region`.
    pub fn sup_norm(&self, region: Option<&IndexBox>) -> f64 {
        let rr = self.rank * self.rank;
        let blk = |o: usize| self.data[o * rr..(o + 1) * rr].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        match region {
            None => (0..self.window.len()).map(blk).fold(0.0, f64::max),
            Some(reg) => reg
                .nodes()
                .filter(|&(i, j)| self.window.contains(i, j))
                .map(|(i, j)| blk(self.window.offset(i, j)))
                .fold(0.0, f64::max),
        }
    }

    /// Bounding box of the nodes carrying a nonzero entry, grown by `pad`
    /// nodes and clipped to the window. `None` for the zero field.
    pub fn tight_support(&self, pad: usize) -> Option<IndexBox> {
        let rr = self.rank * self.rank;
        let w = self.window;
        let (mut i0, mut i1, mut j0, mut j1) = (usize::MAX, 0, usize::MAX, 0);
        for (k, blk) in self.data.chunks(rr).enumerate() {
            if blk.iter().any(|z| z.norm_sqr() > 0.0) {
                let (i, j) = (w.i0 + k % w.nx, w.j0 + k / w.nx);
                i0 = i0.min(i);
                i1 = i1.max(i);
                j0 = j0.min(j);
                j1 = j1.max(j);
            }
        }
        if i0 == usize::MAX {
            return None;
        }
        let bx = IndexBox { i0, j0, nx: i1 - i0 + 1, ny: j1 - j0 + 1 };
        bx.grow(pad, &self.grid).intersect(&w)
    }

    /// Largest entry magnitude outside the declared support box.
    pub fn leakage(&self) -> f64 {
        let Some(s) = self.support else { return 0.0 };
        let rr = self.rank * self.rank;
        self.window
            .nodes()
            .filter(|&(i, j)| !s.contains(i, j))
            .map(|(i, j)| {
                let o = self.window.offset(i, j) * rr;
                self.data[o..o + rr].iter().map(|z| z.norm()).fold(0.0, f64::max)
            })
            .fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Value at an off-grid point by 4×4 tensor Lagrange interpolation.
    pub fn interpolate(&self, z: Complex64) -> CMat {
        let g = &self.grid;
        let h = g.h();
        let w = self.window;
        let fx = (z.re + g.half_width()) / h;
        let fy = (z.im + g.half_width()) / h;
        let base = |f: f64, lo: usize, n: usize| -> usize {
            let b = f.floor() as isize - 1;
            b.clamp(lo as isize, (lo + n) as isize - 4) as usize
        };
        let bi = base(fx, w.i0, w.nx);
        let bj = base(fy, w.j0, w.ny);
        let wx = lagrange4(fx - bi as f64);
        let wy = lagrange4(fy - bj as f64);
        let r = self.rank;
        let mut out = CMat::zeros(r, r);
        for (q, wyq) in wy.iter().enumerate() {
            for (p, wxp) in wx.iter().enumerate() {
                let blk = self.block(bi + p, bj + q);
                let wgt = wxp * wyq;
                for a in 0..r {
                    for b in 0..r {
                        out[(a, b)] += blk[a * r + b] * wgt;
                    }
                }
            }
        }
        out
    }

    fn clone_shape(&self) -> MatrixField {
        MatrixField { grid: self.grid, window: self.window, rank: self.rank, data: Vec::new(), support: None }
    }

    fn clone_shape_with_support(&self) -> MatrixField {
        MatrixField { support: self.support, ..self.clone_shape() }
    }
}

/// Cubic Lagrange weights for nodes 0..4 evaluated at local coordinate `x`.
fn lagrange4(x: f64) -> [f64; 4] {
    let nodes = [0.0, 1.0, 2.0, 3.0];
    let mut w = [1.0; 4];
    for (k, wk) in w.iter_mut().enumerate() {
        for (m, &xm) in nodes.iter().enumerate() {
            if m != k {
                *wk *= (x - xm) / (nodes[k] - xm);
            }
        }
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;

    fn grid() -> ComplexGrid {
        ComplexGrid::new(1.0, 1.0 / 64.0).unwrap()
    }

    #[test]
    fn dzbar_of_polynomials() {
        let g = grid();
        let w = g.full();
        let zsq = MatrixField::from_scalar_fn(g, w, 1, |z| z * z * z);
        assert!(zsq.dzbar().sup_norm(None) < 1e-10);
        let zbar = MatrixField::from_scalar_fn(g, w, 1, |z| z.conj() * z.conj());
        let d = zbar.dzbar();
        let err = MatrixField::from_scalar_fn(g, w, 1, |z| 2.0 * z.conj()).sub(&d).unwrap();
        assert!(err.sup_norm(None) < 1e-10);
    }

    #[test]
    fn fourth_order_derivative_converges() {
        let err = |h: f64| {
            let g = ComplexGrid::new(1.0, h).unwrap();
            let f = MatrixField::from_scalar_fn(g, g.full(), 1, |z| (z.re * 3.0).sin() * c(1.0, 0.0));
            let exact = MatrixField::from_scalar_fn(g, g.full(), 1, |z| 3.0 * (z.re * 3.0).cos() * c(1.0, 0.0));
            f.partial(Axis::X).sub(&exact).unwrap().sup_norm(None)
        };
        let slope = (err(1.0 / 16.0) / err(1.0 / 32.0)).log2();
        assert!(slope > 3.5, "slope {slope}");
    }

    #[test]
    fn interpolation_is_exact_for_cubics() {
        let g = grid();
        let f = MatrixField::from_scalar_fn(g, g.full(), 1, |z| z * z * z + z.conj());
        let p = c(0.1234, -0.377);
        let v = f.interpolate(p)[(0, 0)];
        assert!((v - (p * p * p + p.conj())).norm() < 1e-12);
    }

    #[test]
    fn inverse_reports_singular_node() {
        let g = ComplexGrid::new(1.0, 0.5).unwrap();
        let f = MatrixField::from_scalar_fn(g, g.full(), 1, |z| z);
        assert!(matches!(f.inverse(1e-12), Err(Error::SingularGauge { i: 2, j: 2, .. })));
    }
}
