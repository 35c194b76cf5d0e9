//! Closed contours with quadrature weights, and the Plemelj–Sokhotski
//! (Cauchy integral) extension of boundary values into the interior.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cauchy::CauchyOperator;
use crate::algebra::field::MatrixField;
use crate::error::{Error, Result};
use crate::grid::{ComplexGrid, IndexBox};
use crate::linalg::{self, CMat};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ContourShape {
    Rectangle { x0: f64, x1: f64, y0: f64, y1: f64 },
    Circle { center: Complex64, radius: f64 },
}

/// Counterclockwise closed curve sampled at `points`, with complex weights
/// `dz_weights` such that `∮ g dz ≈ Σ_k w_k g(z_k)`. The sample list is
/// closed: the last point repeats the first and carries no weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryContour {
    shape: ContourShape,
    points: Vec<Complex64>,
    dz_weights: Vec<Complex64>,
    arc_weights: Vec<f64>,
}

/// Composite Simpson weights for `n` equal intervals of unit length (a
/// trailing 3/8 panel absorbs an odd interval count).
pub fn simpson_weights(n: usize) -> Vec<f64> {
    let mut w = vec![0.0; n + 1];
    match n {
        0 => {}
        1 => {
            w[0] = 0.5;
            w[1] = 0.5;
        }
        2 => {
            w[0] = 1.0 / 3.0;
            w[1] = 4.0 / 3.0;
            w[2] = 1.0 / 3.0;
        }
        _ => {
            let simpson_n = if n.is_multiple_of(2) { n } else { n - 3 };
            for k in (0..simpson_n).step_by(2) {
                w[k] += 1.0 / 3.0;
                w[k + 1] += 4.0 / 3.0;
                w[k + 2] += 1.0 / 3.0;
            }
            if simpson_n < n {
                let b = simpson_n;
                w[b] += 3.0 / 8.0;
                w[b + 1] += 9.0 / 8.0;
                w[b + 2] += 9.0 / 8.0;
                w[b + 3] += 3.0 / 8.0;
            }
        }
    }
    w
}

impl BoundaryContour {
    /// Grid-aligned rectangle through the nodes of `bx`, traversed
    /// counterclockwise with composite Simpson weights on each edge.
    pub fn rectangle(grid: &ComplexGrid, bx: &IndexBox) -> Result<Self> {
        if bx.nx < 3 || bx.ny < 3 {
            return Err(Error::BadContour(format!("rectangle {bx:?} too small")));
        }
        let h = grid.h();
        let (i1, j1) = (bx.i0 + bx.nx - 1, bx.j0 + bx.ny - 1);
        let edges: [(usize, usize, isize, isize, usize); 4] = [
            (bx.i0, bx.j0, 1, 0, bx.nx - 1),
            (i1, bx.j0, 0, 1, bx.ny - 1),
            (i1, j1, -1, 0, bx.nx - 1),
            (bx.i0, j1, 0, -1, bx.ny - 1),
        ];
        let mut points = Vec::new();
        let mut dz = Vec::new();
        let mut arc = Vec::new();
        for (k, &(si, sj, di, dj, n)) in edges.iter().enumerate() {
            let w = simpson_weights(n);
            let dir = Complex64::new(di as f64, dj as f64) * h;
            for (m, wm) in w.iter().enumerate() {
                let i = (si as isize + di * m as isize) as usize;
                let j = (sj as isize + dj * m as isize) as usize;
                let z = grid.z(i, j);
                if m == 0 && k > 0 {
                    // shared corner with the previous edge
                    let last = dz.len() - 1;
                    dz[last] += dir * *wm;
                    arc[last] += h * wm;
                    continue;
                }
                points.push(z);
                dz.push(dir * *wm);
                arc.push(h * wm);
            }
        }
        // the final corner coincides with the first point
        let last = points.len() - 1;
        let (wl, al) = (dz[last], arc[last]);
        dz[0] += wl;
        arc[0] += al;
        dz[last] = Complex64::new(0.0, 0.0);
        arc[last] = 0.0;
        let shape = ContourShape::Rectangle { x0: grid.x(bx.i0), x1: grid.x(i1), y0: grid.x(bx.j0), y1: grid.x(j1) };
        let c = Self { shape, points, dz_weights: dz, arc_weights: arc };
        c.validate()?;
        Ok(c)
    }

    /// Circle with `n` equispaced samples and trapezoidal weights.
    pub fn circle(center: Complex64, radius: f64, n: usize) -> Result<Self> {
        if n < 16 || !(radius > 0.0) {
            return Err(Error::BadContour(format!("circle needs >= 16 samples and positive radius (n = {n})")));
        }
        let mut points = Vec::with_capacity(n + 1);
        let mut dz = Vec::with_capacity(n + 1);
        for k in 0..n {
            let e = Complex64::from_polar(1.0, 2.0 * PI * k as f64 / n as f64);
            points.push(center + radius * e);
            dz.push(linalg::I * radius * e * (2.0 * PI / n as f64));
        }
        points.push(points[0]);
        dz.push(Complex64::new(0.0, 0.0));
        let arc = dz.iter().map(|w| w.norm()).collect();
        let c = Self { shape: ContourShape::Circle { center, radius }, points, dz_weights: dz, arc_weights: arc };
        c.validate()?;
        Ok(c)
    }

    fn validate(&self) -> Result<()> {
        let n = self.points.len();
        if (self.points[0] - self.points[n - 1]).norm() > 1e-12 {
            return Err(Error::BadContour("first and last sample differ".into()));
        }
        // enclosed area by the shoelace formula must be positive
        let area: f64 = self.points.windows(2).map(|p| p[0].re * p[1].im - p[1].re * p[0].im).sum::<f64>() / 2.0;
        if area <= 0.0 {
            return Err(Error::BadContour(format!("orientation not counterclockwise (area {area})")));
        }
        Ok(())
    }

    pub fn shape(&self) -> ContourShape {
        self.shape
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    /// Samples without the repeated closing point.
    pub fn samples(&self) -> &[Complex64] {
        &self.points[..self.points.len() - 1]
    }

    pub fn dz_weights(&self) -> &[Complex64] {
        &self.dz_weights[..self.points.len() - 1]
    }

    pub fn arc_weights(&self) -> &[f64] {
        &self.arc_weights[..self.points.len() - 1]
    }

    pub fn length(&self) -> f64 {
        self.arc_weights().iter().sum()
    }

    /// Largest distance from the contour to the origin.
    pub fn circumradius(&self) -> f64 {
        self.points.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn is_inside(&self, z: Complex64) -> bool {
        match self.shape {
            ContourShape::Rectangle { x0, x1, y0, y1 } => z.re > x0 && z.re < x1 && z.im > y0 && z.im < y1,
            ContourShape::Circle { center, radius } => (z - center).norm() < radius,
        }
    }

    pub fn distance(&self, z: Complex64) -> f64 {
        match self.shape {
            ContourShape::Rectangle { x0, x1, y0, y1 } => {
                let dx = (x0 - z.re).max(z.re - x1).max(0.0);
                let dy = (y0 - z.im).max(z.im - y1).max(0.0);
                if dx > 0.0 || dy > 0.0 {
                    dx.hypot(dy)
                } else {
                    (z.re - x0).min(x1 - z.re).min(z.im - y0).min(y1 - z.im)
                }
            }
            ContourShape::Circle { center, radius } => ((z - center).norm() - radius).abs(),
        }
    }

    /// Sample a field at the contour points (interpolating off-node samples).
    pub fn sample(&self, field: &MatrixField) -> Vec<CMat> {
        let g = field.grid();
        self.samples()
            .iter()
            .map(|&z| {
                let i = g.nearest(z.re);
                let j = g.nearest(z.im);
                if (g.z(i, j) - z).norm() < 1e-12 * g.h() && field.window().contains(i, j) {
                    field.at(i, j)
                } else {
                    field.interpolate(z)
                }
            })
            .collect()
    }

    /// `∮ values dz` by the contour quadrature.
    pub fn integrate(&self, values: &[CMat]) -> CMat {
        let r = values[0].nrows();
        self.dz_weights().iter().zip(values).fold(linalg::zeros(r), |acc, (w, v)| acc + v * *w)
    }
}

/// Cauchy integral `(1/2πi) ∮ V(ζ) / (ζ − z) dζ` at each point of `at`.
///
/// Points must be at distance `> min_distance` from the contour. The
/// integrand is regularised by subtracting `V(ζ*)` at the nearest sample
/// `ζ*`, which keeps the quadrature accurate near the curve.
pub fn plemelj_extension(
    contour: &BoundaryContour,
    values: &[CMat],
    at: &[Complex64],
    min_distance: f64,
) -> Result<Vec<CMat>> {
    let zs = contour.samples();
    let ws = contour.dz_weights();
    if values.len() != zs.len() {
        return Err(Error::InvalidArgument(format!("{} values for {} contour samples", values.len(), zs.len())));
    }
    for &z in at {
        let d = contour.distance(z);
        if d <= min_distance {
            return Err(Error::TooCloseToContour { distance: d, limit: min_distance });
        }
    }
    let r = values[0].nrows();
    let rr = r * r;
    let flat: Vec<Complex64> = values.iter().flat_map(|v| v.iter().copied()).collect();
    Ok(at
        .par_iter()
        .map(|&z| {
            let near = zs
                .iter()
                .enumerate()
                .min_by(|a, b| (a.1 - z).norm_sqr().total_cmp(&(b.1 - z).norm_sqr()))
                .map(|(k, _)| k)
                .unwrap_or(0);
            let anchor = &flat[near * rr..(near + 1) * rr];
            let mut acc = vec![Complex64::new(0.0, 0.0); rr];
            for ((zeta, w), v) in zs.iter().zip(ws).zip(flat.chunks_exact(rr)) {
                let kernel = *w / (zeta - z);
                for ((a, x), y) in acc.iter_mut().zip(v).zip(anchor) {
                    *a += (x - y) * kernel;
                }
            }
            let scale = Complex64::new(0.0, 2.0 * PI).inv();
            let mut out = CMat::from_iterator(r, r, acc.into_iter().map(|a| a * scale));
            if contour.is_inside(z) {
                out += &values[near];
            }
            out
        })
        .collect())
}

/// [`plemelj_extension`] for a contour through the nodes of `bx` evaluated at
/// every node of `inner` (strictly inside `bx`). The kernel then depends only
/// on lattice offsets, so the sums are FFT convolutions.
pub fn plemelj_extension_lattice(grid: &ComplexGrid, bx: &IndexBox, values: &[CMat], inner: &IndexBox) -> Result<MatrixField> {
    let contour = BoundaryContour::rectangle(grid, bx)?;
    let zs = contour.samples();
    if values.len() != zs.len() {
        return Err(Error::InvalidArgument(format!("{} values for {} contour samples", values.len(), zs.len())));
    }
    let (i1, j1) = (bx.i0 + bx.nx - 1, bx.j0 + bx.ny - 1);
    if inner.i0 <= bx.i0 || inner.j0 <= bx.j0 || inner.i0 + inner.nx > i1 || inner.j0 + inner.ny > j1 {
        return Err(Error::TooCloseToContour { distance: 0.0, limit: grid.h() });
    }
    let r = values[0].nrows();
    let rr = r * r;
    let h = grid.h();
    let local = |z: Complex64| {
        let i = ((z.re - grid.x(0)) / h).round() as usize;
        let j = ((z.im - grid.x(0)) / h).round() as usize;
        (j - bx.j0) * bx.nx + (i - bx.i0)
    };
    // planes 0..rr carry w·v entrywise, plane rr carries w alone
    let mut weighted = vec![vec![Complex64::new(0.0, 0.0); bx.len()]; rr + 1];
    let mut boundary = vec![Complex64::new(0.0, 0.0); bx.len() * rr];
    for ((z, w), v) in zs.iter().zip(contour.dz_weights()).zip(values) {
        let k = local(*z);
        for (e, x) in v.transpose().iter().enumerate() {
            weighted[e][k] += w * x;
            boundary[k * rr + e] = *x;
        }
        weighted[rr][k] += w;
    }
    let scale = Complex64::new(0.0, 2.0 * PI).inv();
    let op = CauchyOperator::with_kernel(h, *bx, *inner, |dx, dy| {
        if dx == 0 && dy == 0 { Complex64::new(0.0, 0.0) } else { -scale / (h * Complex64::new(dx as f64, dy as f64)) }
    });
    let sums: Vec<Vec<Complex64>> = weighted.iter().map(|p| op.apply_plane(p)).collect();
    let mut data = vec![Complex64::new(0.0, 0.0); inner.len() * rr];
    for (n, (i, j)) in inner.nodes().enumerate() {
        // ties go to the earlier edge in contour order
        let near = [(j - bx.j0, (i, bx.j0)), (i1 - i, (i1, j)), (j1 - j, (i, j1)), (i - bx.i0, (bx.i0, j))]
            .into_iter()
            .min_by_key(|&(d, _)| d)
            .map(|(_, (a, b))| (b - bx.j0) * bx.nx + (a - bx.i0))
            .unwrap_or(0);
        let anchor = &boundary[near * rr..(near + 1) * rr];
        for e in 0..rr {
            data[n * rr + e] = sums[e][n] - anchor[e] * sums[rr][n] + anchor[e];
        }
    }
    MatrixField::from_raw(*grid, *inner, r, data)
}
