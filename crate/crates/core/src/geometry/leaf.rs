//! Bicharacteristic leaves identified with `ℂ` and pullbacks of ambient data.
//!
//! Ambient coordinates are `(y, x)` with `y ∈ ℝ^k` Euclidean (`k = 1` for
//! `ℝ × M`, `k = 2` for `ℝ² × M₀`) followed by the transversal coordinates.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use super::surface::{GeodesicPath, SimpleSurface};
use crate::algebra::connection::{Connection, Frame};
use crate::algebra::field::MatrixField;
use crate::algebra::tensor::SymmetricTensorField;
use crate::error::{Error, Result};
use crate::grid::{ComplexGrid, IndexBox};
use crate::linalg::{self, CMat};

type ComponentFn = Arc<dyn Fn(&[f64]) -> Vec<CMat> + Send + Sync>;
type GaugeFn = Arc<dyn Fn(&[f64]) -> CMat + Send + Sync>;
type JetFn = Arc<dyn Fn(&[f64]) -> (CMat, Vec<CMat>) + Send + Sync>;

/// Matrix-valued 1-form on the ambient space, one component per coordinate.
#[derive(Clone)]
pub struct AmbientConnection {
    dim: usize,
    rank: usize,
    comps: ComponentFn,
    zero: bool,
}

impl fmt::Debug for AmbientConnection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "AmbientConnection(dim {}, rank {})", self.dim, self.rank)
    }
}

impl AmbientConnection {
    pub fn new<F>(dim: usize, rank: usize, comps: F) -> Self
    where
        F: Fn(&[f64]) -> Vec<CMat> + Send + Sync + 'static,
    {
        Self { dim, rank, comps: Arc::new(comps), zero: false }
    }

    pub fn zero(dim: usize, rank: usize) -> Self {
        Self { zero: true, ..Self::new(dim, rank, move |_| vec![CMat::zeros(rank, rank); dim]) }
    }

    /// True for connections built by [`AmbientConnection::zero`].
    pub fn is_zero(&self) -> bool {
        self.zero
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn eval(&self, p: &[f64]) -> Vec<CMat> {
        (self.comps)(p)
    }

    /// `A(w) = Σ_a w^a A_a` for a complex tangent vector `w`.
    pub fn apply(&self, p: &[f64], w: &[Complex64]) -> CMat {
        self.eval(p).iter().zip(w).fold(CMat::zeros(self.rank, self.rank), |acc, (a, wa)| acc + a * *wa)
    }

    pub fn add(&self, o: &AmbientConnection) -> AmbientConnection {
        let (a, b) = (self.comps.clone(), o.comps.clone());
        Self { comps: Arc::new(move |p| a(p).into_iter().zip(b(p)).map(|(x, y)| x + y).collect()), zero: self.zero && o.zero, ..self.clone() }
    }
}

/// Ambient gauge transformation `G(y, x)`.
#[derive(Clone)]
pub struct AmbientGauge {
    dim: usize,
    g: GaugeFn,
    jet: Option<JetFn>,
}

impl fmt::Debug for AmbientGauge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "AmbientGauge(dim {})", self.dim)
    }
}

/// Eighth-order central difference weights for the first derivative.
const D8: [f64; 4] = [4.0 / 5.0, -1.0 / 5.0, 4.0 / 105.0, -1.0 / 280.0];
const D8_STEP: f64 = 2e-3;

impl AmbientGauge {
    pub fn new<F>(dim: usize, g: F) -> Self
    where
        F: Fn(&[f64]) -> CMat + Send + Sync + 'static,
    {
        Self { dim, g: Arc::new(g), jet: None }
    }

    /// Gauge with closed-form first derivatives: `jet(p)` returns `G(p)`
    /// and `[∂_1G, …, ∂_nG](p)`.
    pub fn with_jet<F>(dim: usize, jet: F) -> Self
    where
        F: Fn(&[f64]) -> (CMat, Vec<CMat>) + Send + Sync + 'static,
    {
        let jet: JetFn = Arc::new(jet);
        let value = jet.clone();
        Self { dim, g: Arc::new(move |p| value(p).0), jet: Some(jet) }
    }

    pub fn eval(&self, p: &[f64]) -> CMat {
        (self.g)(p)
    }

    /// `G(p)` and all first partials.
    pub fn jet(&self, p: &[f64]) -> (CMat, Vec<CMat>) {
        match &self.jet {
            Some(j) => j(p),
            None => (self.eval(p), (0..self.dim).map(|a| self.partial(p, a)).collect()),
        }
    }

    /// `∂_a G`, by an eighth-order central difference unless the gauge
    /// carries closed-form derivatives.
    pub fn partial(&self, p: &[f64], a: usize) -> CMat {
        if let Some(j) = &self.jet {
            return j(p).1.swap_remove(a);
        }
        let mut q = p.to_vec();
        let mut acc = CMat::zeros(0, 0);
        for (k, w) in D8.iter().enumerate() {
            let d = (k + 1) as f64 * D8_STEP;
            q[a] = p[a] + d;
            let plus = self.eval(&q);
            q[a] = p[a] - d;
            let minus = self.eval(&q);
            let term = (plus - minus) * Complex64::new(*w / D8_STEP, 0.0);
            acc = if acc.nrows() == 0 { term } else { acc + term };
        }
        acc
    }

    /// `G*A = G⁻¹dG + G⁻¹AG` as an ambient connection.
    pub fn pullback(&self, a: &AmbientConnection) -> AmbientConnection {
        let g = self.clone();
        let a = a.clone();
        let dim = a.dim;
        AmbientConnection::new(dim, a.rank, move |p| {
            let (gm, dg) = g.jet(p);
            let ginv = linalg::inverse(&gm).expect("ambient gauge must be invertible");
            a.eval(p).iter().zip(dg).map(|(ak, dk)| &ginv * (dk + ak * &gm)).collect()
        })
    }
}

fn centre_node(w: &IndexBox) -> IndexBox {
    IndexBox { i0: w.i0 + w.nx / 2, j0: w.j0 + w.ny / 2, nx: 1, ny: 1 }
}

#[derive(Debug, Clone)]
pub enum LeafChart {
    /// `z = s + it ↦ (s, γ(t))` on `ℝ × M`.
    Product { surface: SimpleSurface, path: GeodesicPath },
    /// Flat leaf `z ↦ origin + s·e_s + t·e_t`.
    Affine { origin: Vec<f64>, es: Vec<f64>, et: Vec<f64> },
}

#[derive(Debug, Clone)]
pub struct Leaf {
    pub chart: LeafChart,
    /// Half-width `T` of the data window in `s`.
    pub half_width: f64,
    /// Range of `t` that meets the data.
    pub t_range: (f64, f64),
}

/// Leaf `ℝ × γ` through the inward boundary vector `(x, v)` of `surface`.
pub fn build_leaf(surface: &SimpleSurface, x: [f64; 2], v: [f64; 2], half_width: f64) -> Result<Leaf> {
    let path = surface.geodesic_trace(x, v)?;
    let l = path.length;
    Ok(Leaf { chart: LeafChart::Product { surface: *surface, path }, half_width, t_range: (0.0, l) })
}

impl Leaf {
    pub fn affine(origin: Vec<f64>, es: Vec<f64>, et: Vec<f64>, half_width: f64, t_range: (f64, f64)) -> Self {
        Self { chart: LeafChart::Affine { origin, es, et }, half_width, t_range }
    }

    pub fn ambient_dim(&self) -> usize {
        match &self.chart {
            LeafChart::Product { surface, .. } => 1 + surface.dim,
            LeafChart::Affine { origin, .. } => origin.len(),
        }
    }

    pub fn path(&self) -> Option<&GeodesicPath> {
        match &self.chart {
            LeafChart::Product { path, .. } => Some(path),
            LeafChart::Affine { .. } => None,
        }
    }

    /// Ambient point of `z`, or `None` where the leaf has left the manifold.
    pub fn point(&self, z: Complex64) -> Option<Vec<f64>> {
        match &self.chart {
            LeafChart::Product { surface, path } => {
                if z.im < 0.0 || z.im > path.length {
                    return None;
                }
                let (x, _) = path.at(z.im);
                let mut p = vec![z.re];
                p.extend_from_slice(&x[..surface.dim]);
                Some(p)
            }
            LeafChart::Affine { origin, es, et } => {
                Some(origin.iter().zip(es).zip(et).map(|((o, a), b)| o + z.re * a + z.im * b).collect())
            }
        }
    }

    /// Push-forwards of `∂_s` and `∂_t` at height `t`.
    pub fn tangents(&self, t: f64) -> (Vec<f64>, Vec<f64>) {
        match &self.chart {
            LeafChart::Product { surface, path } => {
                let (_, v) = path.at(t);
                let mut es = vec![0.0; 1 + surface.dim];
                es[0] = 1.0;
                let mut et = vec![0.0];
                et.extend_from_slice(&v[..surface.dim]);
                (es, et)
            }
            LeafChart::Affine { es, et, .. } => (es.clone(), et.clone()),
        }
    }

    /// Leaf coordinate of an ambient point lying on the leaf.
    pub fn to_leaf(&self, p: &[f64]) -> Complex64 {
        match &self.chart {
            LeafChart::Product { surface, path } => {
                let mut x = [0.0; 2];
                x[..surface.dim].copy_from_slice(&p[1..1 + surface.dim]);
                Complex64::new(p[0], path.locate(x))
            }
            LeafChart::Affine { origin, es, et } => {
                let d: Vec<f64> = p.iter().zip(origin).map(|(a, b)| a - b).collect();
                let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
                let (ss, st, tt) = (dot(es, es), dot(es, et), dot(et, et));
                let (ds, dt) = (dot(&d, es), dot(&d, et));
                let det = ss * tt - st * st;
                Complex64::new((ds * tt - dt * st) / det, (dt * ss - ds * st) / det)
            }
        }
    }

    /// Grid window covering `[−T, T] × t_range`.
    pub fn data_window(&self, grid: &ComplexGrid) -> Result<IndexBox> {
        grid.window(-self.half_width, self.half_width, self.t_range.0, self.t_range.1)
    }

    fn sample<F>(&self, grid: &ComplexGrid, rank: usize, what: &str, f: F) -> Result<MatrixField>
    where
        F: Fn(&[f64], f64) -> CMat + Sync,
    {
        let mut out = self.sample_many(grid, rank, 1, what, |p, t| vec![f(p, t)])?;
        Ok(out.remove(0))
    }

    /// Samples `count` fields at once, each checked to vanish on the window
    /// edge and trimmed to its support.
    fn sample_many<F>(&self, grid: &ComplexGrid, rank: usize, count: usize, what: &str, f: F) -> Result<Vec<MatrixField>>
    where
        F: Fn(&[f64], f64) -> Vec<CMat> + Sync,
    {
        let window = self.data_window(grid)?;
        let rr = rank * rank;
        let rows: Vec<Vec<Vec<Complex64>>> = (0..window.ny)
            .into_par_iter()
            .map(|row| {
                let mut bufs = vec![Vec::with_capacity(window.nx * rr); count];
                for k in 0..window.nx {
                    let z = grid.z(window.i0 + k, window.j0 + row);
                    match self.point(z) {
                        Some(p) => {
                            for (buf, m) in bufs.iter_mut().zip(f(&p, z.im)) {
                                buf.extend(m.transpose().iter());
                            }
                        }
                        None => bufs.iter_mut().for_each(|b| b.extend(std::iter::repeat_n(Complex64::new(0.0, 0.0), rr))),
                    }
                }
                bufs
            })
            .collect();
        let edge = |i: usize, j: usize| i == window.i0 || j == window.j0 || i + 1 == window.i0 + window.nx || j + 1 == window.j0 + window.ny;
        (0..count)
            .map(|c| {
                let data = rows.iter().flat_map(|r| r[c].iter().copied()).collect();
                let field = MatrixField::from_raw(*grid, window, rank, data)?;
                let peak = field.sup_norm(None);
                let ring = window
                    .nodes()
                    .filter(|&(i, j)| edge(i, j))
                    .map(|(i, j)| linalg::fro(&field.at(i, j)))
                    .fold(0.0, f64::max);
                if ring > 1e-12 * peak.max(1e-300) {
                    return Err(Error::SupportMargin {
                        what: what.into(),
                        detail: format!("data reaches the leaf window edge (|value| = {ring:.3e})"),
                    });
                }
                Ok(match field.tight_support(0) {
                    Some(s) => field.with_support(s),
                    None => field.with_support(centre_node(&window)),
                })
            })
            .collect()
    }

    /// Leaf components `A_s = A(∂_s)`, `A_t = A(∂_t)` on the data window.
    pub fn pull_connection(&self, a: &AmbientConnection, grid: &ComplexGrid) -> Result<Connection> {
        if a.dim() != self.ambient_dim() {
            return Err(Error::Frame(format!("connection has {} components, leaf lives in dimension {}", a.dim(), self.ambient_dim())));
        }
        if a.is_zero() {
            let window = self.data_window(grid)?;
            let z = MatrixField::zeros(*grid, window, a.rank()).with_support(centre_node(&window));
            return Connection::new(Frame::Leaf, vec![z.clone(), z])?.into_unitary();
        }
        let comps = self.sample_many(grid, a.rank(), 2, "connection", |p, t| {
            let (es, et) = self.tangents(t);
            let ak = a.eval(p);
            [es, et]
                .iter()
                .map(|e| ak.iter().zip(e).fold(CMat::zeros(a.rank(), a.rank()), |acc, (m, w)| acc + m * Complex64::new(*w, 0.0)))
                .collect()
        })?;
        let conn = Connection::new(Frame::Leaf, comps)?;
        Ok(if conn.skew_defect() <= crate::algebra::connection::UNITARY_TOL { conn.into_unitary()? } else { conn })
    }

    /// Transport-normalised source `½ f(⊗^m(∂_s + i∂_t))` of a tensor on `ℝ × M`.
    pub fn pull_source(&self, f: &SymmetricTensorField, grid: &ComplexGrid) -> Result<MatrixField> {
        if f.dim() + 1 != self.ambient_dim() {
            return Err(Error::Frame("tensor and leaf dimensions differ".into()));
        }
        self.sample(grid, f.rank(), "source", |p, t| {
            if f.vanishes_at(p[0], &p[1..]) {
                return CMat::zeros(f.rank(), f.rank());
            }
            let (es, et) = self.tangents(t);
            let w: Vec<Complex64> = es.iter().zip(&et).map(|(a, b)| Complex64::new(*a, *b)).collect();
            f.eval(p[0], &p[1..], &w) * Complex64::new(0.5, 0.0)
        })
    }

    /// Ambient scalar/matrix function sampled on the data window.
    pub fn pull_function<F>(&self, grid: &ComplexGrid, rank: usize, f: F) -> Result<MatrixField>
    where
        F: Fn(&[f64]) -> CMat + Sync,
    {
        self.sample(grid, rank, "function", |p, _| f(p))
    }
}
