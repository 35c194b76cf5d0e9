//! Matrix-valued connections on the plane or on a leaf, the gauge action
//! `G*A = G⁻¹dG + G⁻¹AG`, and curvature.

use num_complex::Complex64;

use super::field::{Axis, MatrixField};
use crate::error::{Error, Result};
use crate::grid::{ComplexGrid, IndexBox};
use crate::linalg;

/// Absolute per-entry tolerance for skew-Hermitian and unitary checks.
pub const UNITARY_TOL: f64 = 1e-10;

/// Threshold below which `|det G|` is treated as singular.
pub const SINGULAR_DET: f64 = 1e-12;

/// Coordinate frame of a connection's components.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Frame {
    /// Leaf coordinates `z = s + it`: components `(A_s, A_t)`.
    Leaf,
    /// Two ambient coordinates `(x, y)`.
    Planar,
    /// Ambient frame with the given number of active coordinates.
    Ambient(usize),
}

impl Frame {
    fn arity(self) -> usize {
        match self {
            Frame::Leaf | Frame::Planar => 2,
            Frame::Ambient(n) => n,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Connection {
    frame: Frame,
    components: Vec<MatrixField>,
    unitary: bool,
}

fn max_skew_defect(f: &MatrixField) -> f64 {
    let r = f.rank();
    f.data()
        .chunks(r * r)
        .map(|b| {
            let mut worst = 0.0f64;
            for a in 0..r {
                for c in 0..r {
                    worst = worst.max((b[a * r + c] + b[c * r + a].conj()).norm());
                }
            }
            worst
        })
        .fold(0.0, f64::max)
}

impl Connection {
    pub fn new(frame: Frame, components: Vec<MatrixField>) -> Result<Self> {
        if components.len() != frame.arity() {
            return Err(Error::Frame(format!("{frame:?} needs {} components, got {}", frame.arity(), components.len())));
        }
        let first = &components[0];
        for c in &components[1..] {
            if c.grid() != first.grid() || c.window() != first.window() {
                return Err(Error::GridMismatch("connection components live on different windows".into()));
            }
            if c.rank() != first.rank() {
                return Err(Error::RankMismatch { expected: first.rank(), got: c.rank() });
            }
        }
        Ok(Self { frame, components, unitary: false })
    }

    pub fn leaf(a_s: MatrixField, a_t: MatrixField) -> Result<Self> {
        Self::new(Frame::Leaf, vec![a_s, a_t])
    }

    pub fn zero(grid: ComplexGrid, window: IndexBox, rank: usize, frame: Frame) -> Self {
        let components = (0..frame.arity()).map(|_| MatrixField::zeros(grid, window, rank)).collect();
        Self { frame, components, unitary: true }
    }

    /// Leaf connection with prescribed `A(∂_{z̄}) = a` and `A(∂_z) = −a*`,
    /// which makes both `A_s` and `A_t` skew-Hermitian.
    pub fn unitary_from_dzbar(a: &MatrixField) -> Result<Self> {
        let astar = a.adjoint();
        let a_s = a.sub(&astar)?;
        let a_t = a.add(&astar)?.scale(Complex64::new(0.0, -1.0));
        let support = a.support();
        let fix = |f: MatrixField| match support {
            Some(s) => f.with_support(s),
            None => f,
        };
        Self::leaf(fix(a_s), fix(a_t))?.into_unitary()
    }

    /// Declares the connection unitary after checking every component.
    pub fn into_unitary(mut self) -> Result<Self> {
        let worst = self.skew_defect();
        if worst > UNITARY_TOL {
            return Err(Error::Precondition(format!("components not skew-Hermitian (defect {worst:.3e})")));
        }
        self.unitary = true;
        Ok(self)
    }

    /// Largest `|A + A*|` entry over all components and nodes.
    pub fn skew_defect(&self) -> f64 {
        self.components.iter().map(max_skew_defect).fold(0.0, f64::max)
    }

    pub fn frame(&self) -> Frame {
        self.frame
    }

    pub fn is_unitary(&self) -> bool {
        self.unitary
    }

    pub fn components(&self) -> &[MatrixField] {
        &self.components
    }

    pub fn component(&self, k: usize) -> &MatrixField {
        &self.components[k]
    }

    pub fn rank(&self) -> usize {
        self.components[0].rank()
    }

    pub fn grid(&self) -> &ComplexGrid {
        self.components[0].grid()
    }

    pub fn window(&self) -> IndexBox {
        self.components[0].window()
    }

    /// Union of the declared component supports, if all are declared.
    pub fn support(&self) -> Option<IndexBox> {
        let mut it = self.components.iter().map(|c| c.support());
        let first = it.next()??;
        it.try_fold(first, |acc, s| s.map(|s| acc.union(&s)))
    }

    pub fn sup_norm(&self) -> f64 {
        self.components.iter().map(|c| c.sup_norm(None)).fold(0.0, f64::max)
    }

    pub fn restrict(&self, window: IndexBox) -> Connection {
        Connection {
            frame: self.frame,
            components: self.components.iter().map(|c| c.restrict(window)).collect(),
            unitary: self.unitary,
        }
    }

    pub fn add(&self, o: &Connection) -> Result<Connection> {
        if self.frame != o.frame {
            return Err(Error::Frame(format!("{:?} + {:?}", self.frame, o.frame)));
        }
        let components = self.components.iter().zip(&o.components).map(|(a, b)| a.add(b)).collect::<Result<_>>()?;
        Ok(Connection { frame: self.frame, components, unitary: self.unitary && o.unitary })
    }

    pub fn sub(&self, o: &Connection) -> Result<Connection> {
        if self.frame != o.frame {
            return Err(Error::Frame(format!("{:?} - {:?}", self.frame, o.frame)));
        }
        let components = self.components.iter().zip(&o.components).map(|(a, b)| a.sub(b)).collect::<Result<_>>()?;
        Ok(Connection { frame: self.frame, components, unitary: self.unitary && o.unitary })
    }

    fn two(&self) -> Result<(&MatrixField, &MatrixField)> {
        match self.frame {
            Frame::Leaf | Frame::Planar => Ok((&self.components[0], &self.components[1])),
            Frame::Ambient(2) => Ok((&self.components[0], &self.components[1])),
            f => Err(Error::Frame(format!("{f:?} has more than two active coordinates"))),
        }
    }
}

/// An invertible matrix field with its determinant certificate.
#[derive(Debug, Clone, PartialEq)]
pub struct GaugeTransform {
    field: MatrixField,
    min_det: f64,
    min_det_at: (usize, usize),
    boundary_identity: bool,
}

impl GaugeTransform {
    pub fn new(field: MatrixField) -> Result<Self> {
        let (min_det, i, j) = field.min_abs_det(&field.window());
        if !(min_det > SINGULAR_DET) {
            return Err(Error::SingularGauge { min_det, i, j });
        }
        Ok(Self { field, min_det, min_det_at: (i, j), boundary_identity: false })
    }

    /// Like [`GaugeTransform::new`] and additionally certifies `G = id` (to
    /// `tol`) on every window node outside `interior`.
    pub fn with_boundary_identity(field: MatrixField, interior: &IndexBox, tol: f64) -> Result<Self> {
        let mut g = Self::new(field)?;
        let r = g.field.rank();
        let id = linalg::identity(r);
        let w = g.field.window();
        let worst = w
            .nodes()
            .filter(|&(i, j)| !interior.contains(i, j))
            .map(|(i, j)| linalg::fro(&(g.field.at(i, j) - &id)))
            .fold(0.0, f64::max);
        if worst > tol {
            return Err(Error::Precondition(format!("gauge differs from identity by {worst:.3e} near the boundary")));
        }
        g.boundary_identity = true;
        Ok(g)
    }

    pub fn field(&self) -> &MatrixField {
        &self.field
    }

    pub fn min_det(&self) -> f64 {
        self.min_det
    }

    pub fn min_det_at(&self) -> (usize, usize) {
        self.min_det_at
    }

    pub fn boundary_identity(&self) -> bool {
        self.boundary_identity
    }

    /// Largest `|G*G − id|` entry.
    pub fn unitarity_defect(&self) -> f64 {
        let r = self.field.rank();
        let id = linalg::identity(r);
        self.field
            .window()
            .nodes()
            .map(|(i, j)| {
                let g = self.field.at(i, j);
                (g.adjoint() * &g - &id).iter().map(|z| z.norm()).fold(0.0, f64::max)
            })
            .fold(0.0, f64::max)
    }

    pub fn is_unitary(&self) -> bool {
        self.unitarity_defect() <= UNITARY_TOL
    }
}

/// `G*A = G⁻¹dG + G⁻¹AG`, componentwise with finite-difference `dG`.
pub fn gauge_pullback(g: &GaugeTransform, a: &Connection) -> Result<Connection> {
    let gf = g.field();
    if gf.grid() != a.grid() || gf.window() != a.window() {
        return Err(Error::GridMismatch("gauge and connection windows differ".into()));
    }
    if gf.rank() != a.rank() {
        return Err(Error::RankMismatch { expected: a.rank(), got: gf.rank() });
    }
    let (a0, a1) = a.two()?;
    let ginv = gf.inverse(SINGULAR_DET)?;
    let unitary = a.is_unitary() && g.is_unitary();
    let pull = |ak: &MatrixField, axis: Axis| -> Result<MatrixField> {
        let mc = ginv.mul(&gf.partial(axis))?;
        let out = mc.add(&ginv.mul(ak)?.mul(gf)?)?;
        Ok(if unitary { out.sub(&out.adjoint())?.scale(Complex64::new(0.5, 0.0)) } else { out })
    };
    let components = vec![pull(a0, Axis::X)?, pull(a1, Axis::Y)?];
    Ok(Connection { frame: a.frame, components, unitary })
}

/// `F = ∂_s A_t − ∂_t A_s + [A_s, A_t]`.
pub fn curvature(a: &Connection) -> Result<MatrixField> {
    let (a_s, a_t) = a.two()?;
    a_t.partial(Axis::X).sub(&a_s.partial(Axis::Y))?.add(&a_s.commutator(a_t)?)
}

/// `A(∂_{z̄}) = ½(A_s + iA_t)` on a leaf.
pub fn dzbar_component(a: &Connection) -> Result<MatrixField> {
    leaf_pair(a, 1.0)
}

/// `A(∂_z) = ½(A_s − iA_t)` on a leaf.
pub fn dz_component(a: &Connection) -> Result<MatrixField> {
    leaf_pair(a, -1.0)
}

fn leaf_pair(a: &Connection, sign: f64) -> Result<MatrixField> {
    if a.frame != Frame::Leaf {
        return Err(Error::Frame(format!("expected leaf frame, got {:?}", a.frame)));
    }
    let out = a.components[0].add(&a.components[1].scale(Complex64::new(0.0, sign)))?.scale(Complex64::new(0.5, 0.0));
    Ok(match a.support() {
        Some(s) => out.with_support(s),
        None => out,
    })
}

/// Smallest `|det|` location as a complex coordinate, for error reports.
pub fn node_label(grid: &ComplexGrid, i: usize, j: usize) -> String {
    let z = grid.z(i, j);
    format!("{:.4}{:+.4}i", z.re, z.im)
}

/// Pointwise conjugation `G⁻¹ M G` of a constant-shape field.
pub fn conjugate(g: &MatrixField, m: &MatrixField) -> Result<MatrixField> {
    g.inverse(SINGULAR_DET)?.mul(m)?.mul(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, CMat};

    fn constant_pair(grid: ComplexGrid, w: IndexBox, x: &CMat, y: &CMat) -> Connection {
        Connection::leaf(MatrixField::constant(grid, w, x), MatrixField::constant(grid, w, y)).unwrap()
    }

    fn setup() -> (ComplexGrid, IndexBox) {
        let g = ComplexGrid::new(1.0, 1.0 / 64.0).unwrap();
        (g, g.window(-0.5, 0.5, -0.5, 0.5).unwrap())
    }

    #[test]
    fn dzbar_component_of_ds_and_dt() {
        let (g, w) = setup();
        let m = CMat::from_row_slice(2, 2, &[c(1.0, 0.0), c(2.0, 1.0), c(0.0, -1.0), c(3.0, 0.0)]);
        let zero = CMat::zeros(2, 2);
        let a = constant_pair(g, w, &m, &zero);
        let d = dzbar_component(&a).unwrap();
        assert!(linalg::fro(&(d.at(40, 40) - &m * c(0.5, 0.0))) < 1e-15);
        let b = constant_pair(g, w, &zero, &m);
        let d = dzbar_component(&b).unwrap();
        assert!(linalg::fro(&(d.at(40, 40) - &m * c(0.0, 0.5))) < 1e-15);
        let p = Connection::new(Frame::Planar, vec![MatrixField::zeros(g, w, 1), MatrixField::zeros(g, w, 1)]).unwrap();
        assert!(matches!(dzbar_component(&p), Err(Error::Frame(_))));
    }

    #[test]
    fn constant_curvature_is_commutator() {
        let (g, w) = setup();
        let x = CMat::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        let y = CMat::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]);
        let f = curvature(&constant_pair(g, w, &x, &y)).unwrap();
        let expected = linalg::commutator(&x, &y);
        assert!(linalg::fro(&(f.at(40, 50) - expected)) < 1e-14);
    }

    #[test]
    fn scalar_pullback_is_dpsi() {
        let (g, w) = setup();
        let psi = |z: Complex64| c(z.re * z.re - 0.5 * z.im, z.re * z.im * z.im);
        let gf = MatrixField::from_scalar_fn(g, w, 1, |z| psi(z).exp());
        let a = Connection::zero(g, w, 1, Frame::Planar);
        let out = gauge_pullback(&GaugeTransform::new(gf).unwrap(), &a).unwrap();
        for &(i, j) in &[(40usize, 40usize), (70, 55), (33, 90)] {
            let z = g.z(i, j);
            let dx = c(2.0 * z.re, z.im * z.im);
            let dy = c(-0.5, 2.0 * z.re * z.im);
            assert!((out.component(0).entry(i, j, 0, 0) - dx).norm() < 1e-6);
            assert!((out.component(1).entry(i, j, 0, 0) - dy).norm() < 1e-6);
        }
    }

    #[test]
    fn unitary_from_dzbar_round_trip() {
        let (g, w) = setup();
        let a = MatrixField::from_fn(g, w, 2, |z| {
            CMat::from_row_slice(2, 2, &[z, c(0.3, 0.0), z * z, c(0.0, 1.0)])
        });
        let conn = Connection::unitary_from_dzbar(&a).unwrap();
        assert!(conn.is_unitary());
        let back = dzbar_component(&conn).unwrap();
        assert!(back.sub(&a).unwrap().sup_norm(None) < 1e-14);
        let abar = dz_component(&conn).unwrap();
        assert!(abar.add(&a.adjoint()).unwrap().sup_norm(None) < 1e-14);
    }

    #[test]
    fn singular_gauge_rejected() {
        let (g, w) = setup();
        let f = MatrixField::from_scalar_fn(g, w, 1, |z| z);
        assert!(matches!(GaugeTransform::new(f), Err(Error::SingularGauge { .. })));
    }
}
