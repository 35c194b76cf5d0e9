//! The square complex grid `[-S, S]²` and rectangular index windows on it.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform node grid on `[-S, S]²` with spacing `h`; node `(i, j)` sits at
/// `z = (-S + i h) + i (-S + j h)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexGrid {
    half_width: f64,
    h: f64,
    n: usize,
    margin_factor: f64,
}

impl ComplexGrid {
    pub fn new(half_width: f64, h: f64) -> Result<Self> {
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::InvalidArgument(format!("grid spacing h must be positive, got {h}")));
        }
        if !(half_width > 0.0) {
            return Err(Error::InvalidArgument(format!("half width must be positive, got {half_width}")));
        }
        let cells = 2.0 * half_width / h;
        if (cells - cells.round()).abs() > 1e-9 * cells.max(1.0) {
            return Err(Error::InvalidArgument(format!("S/h must be integral (S = {half_width}, h = {h})")));
        }
        Ok(Self { half_width, h, n: cells.round() as usize + 1, margin_factor: 2.0 })
    }

    pub fn with_margin_factor(mut self, factor: f64) -> Self {
        self.margin_factor = factor;
        self
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    /// Nodes per side.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn margin_factor(&self) -> f64 {
        self.margin_factor
    }

    pub fn x(&self, i: usize) -> f64 {
        -self.half_width + i as f64 * self.h
    }

    pub fn z(&self, i: usize, j: usize) -> Complex64 {
        Complex64::new(self.x(i), self.x(j))
    }

    /// Index of the node nearest to coordinate `x` (clamped to the grid).
    pub fn nearest(&self, x: f64) -> usize {
        let k = ((x + self.half_width) / self.h).round();
        k.clamp(0.0, (self.n - 1) as f64) as usize
    }

    pub fn full(&self) -> IndexBox {
        IndexBox { i0: 0, j0: 0, nx: self.n, ny: self.n }
    }

    /// Smallest index window containing the coordinate rectangle
    /// `[x0, x1] × [y0, y1]`.
    pub fn window(&self, x0: f64, x1: f64, y0: f64, y1: f64) -> Result<IndexBox> {
        let lo = |x: f64| ((x + self.half_width) / self.h + 1e-9).floor();
        let hi = |x: f64| ((x + self.half_width) / self.h - 1e-9).ceil();
        let (i0, i1, j0, j1) = (lo(x0), hi(x1), lo(y0), hi(y1));
        let max = (self.n - 1) as f64;
        if i0 < 0.0 || j0 < 0.0 || i1 > max || j1 > max || i1 < i0 || j1 < j0 {
            return Err(Error::SupportMargin {
                what: "window".into(),
                detail: format!("[{x0}, {x1}] x [{y0}, {y1}] outside [-{0}, {0}]^2", self.half_width),
            });
        }
        Ok(IndexBox { i0: i0 as usize, j0: j0 as usize, nx: (i1 - i0) as usize + 1, ny: (j1 - j0) as usize + 1 })
    }

    /// Check that a coordinate box sits well inside the grid: its distance to
    /// the grid edge must be at least `(margin_factor - 1)` times its own
    /// half-extent.
    pub fn check_margin(&self, what: &str, bx: &IndexBox) -> Result<()> {
        let hx = (bx.nx - 1) as f64 * self.h / 2.0;
        let hy = (bx.ny - 1) as f64 * self.h / 2.0;
        let need = (self.margin_factor - 1.0) * hx.max(hy);
        let gap = [
            bx.i0 as f64 * self.h,
            bx.j0 as f64 * self.h,
            (self.n - bx.i0 - bx.nx) as f64 * self.h,
            (self.n - bx.j0 - bx.ny) as f64 * self.h,
        ]
        .into_iter()
        .fold(f64::INFINITY, f64::min);
        if gap + 1e-12 < need {
            return Err(Error::SupportMargin {
                what: what.into(),
                detail: format!("edge gap {gap:.4} < required {need:.4} (factor {})", self.margin_factor),
            });
        }
        Ok(())
    }
}

/// Rectangle of grid nodes `[i0, i0 + nx) × [j0, j0 + ny)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct IndexBox {
    pub i0: usize,
    pub j0: usize,
    pub nx: usize,
    pub ny: usize,
}

impl IndexBox {
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        i >= self.i0 && j >= self.j0 && i < self.i0 + self.nx && j < self.j0 + self.ny
    }

    pub fn contains_box(&self, other: &IndexBox) -> bool {
        other.i0 >= self.i0
            && other.j0 >= self.j0
            && other.i0 + other.nx <= self.i0 + self.nx
            && other.j0 + other.ny <= self.j0 + self.ny
    }

    /// Local linear offset of a global node.
    #[inline]
    pub fn offset(&self, i: usize, j: usize) -> usize {
        (j - self.j0) * self.nx + (i - self.i0)
    }

    pub fn grow(&self, k: usize, grid: &ComplexGrid) -> IndexBox {
        let i0 = self.i0.saturating_sub(k);
        let j0 = self.j0.saturating_sub(k);
        let i1 = (self.i0 + self.nx - 1 + k).min(grid.n() - 1);
        let j1 = (self.j0 + self.ny - 1 + k).min(grid.n() - 1);
        IndexBox { i0, j0, nx: i1 - i0 + 1, ny: j1 - j0 + 1 }
    }

    pub fn union(&self, o: &IndexBox) -> IndexBox {
        let i0 = self.i0.min(o.i0);
        let j0 = self.j0.min(o.j0);
        let i1 = (self.i0 + self.nx).max(o.i0 + o.nx);
        let j1 = (self.j0 + self.ny).max(o.j0 + o.ny);
        IndexBox { i0, j0, nx: i1 - i0, ny: j1 - j0 }
    }

    pub fn intersect(&self, o: &IndexBox) -> Option<IndexBox> {
        let i0 = self.i0.max(o.i0);
        let j0 = self.j0.max(o.j0);
        let i1 = (self.i0 + self.nx).min(o.i0 + o.nx);
        let j1 = (self.j0 + self.ny).min(o.j0 + o.ny);
        (i1 > i0 && j1 > j0).then_some(IndexBox { i0, j0, nx: i1 - i0, ny: j1 - j0 })
    }

    pub fn nodes(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (self.j0..self.j0 + self.ny).flat_map(move |j| (self.i0..self.i0 + self.nx).map(move |i| (i, j)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_integral_ratio() {
        assert!(ComplexGrid::new(1.0, 0.3).is_err());
        assert!(ComplexGrid::new(1.0, -0.1).is_err());
        let g = ComplexGrid::new(4.0, 1.0 / 128.0).unwrap();
        assert_eq!(g.n(), 1025);
        assert_eq!(g.z(512, 512), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn window_covers_rectangle() {
        let g = ComplexGrid::new(4.0, 0.25).unwrap();
        let w = g.window(-2.0, 2.0, 0.0, 2.0).unwrap();
        assert_eq!(g.x(w.i0), -2.0);
        assert_eq!(g.x(w.i0 + w.nx - 1), 2.0);
        assert_eq!(g.x(w.j0), 0.0);
        assert!(g.check_margin("box", &w).is_ok());
        let big = g.window(-3.5, 3.5, -3.5, 3.5).unwrap();
        assert!(g.check_margin("box", &big).is_err());
    }
}
