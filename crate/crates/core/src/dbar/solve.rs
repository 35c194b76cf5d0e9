//! Matrix `∂_{z̄}` solvers built on the Cauchy operator.
//!
//! Every solver reduces to the integral equation `u = T(f) − T(L u)` where `T`
//! is the Cauchy operator and `L u = a·u − u·b` is the zeroth-order
//! coupling. Only the values of `u` on the support of the coupling enter the
//! right-hand side, so the iteration runs on that box and the solution is
//! evaluated on the requested target window once at the end.

use num_complex::Complex64;
use serde::Serialize;

use super::cauchy::CauchyOperator;
use super::contour::{plemelj_extension, BoundaryContour};
use crate::algebra::connection::{dz_component, dzbar_component, node_label, Connection, SINGULAR_DET};
use crate::algebra::field::MatrixField;
use crate::error::{Error, Result};
use crate::grid::IndexBox;
use crate::linalg;

#[derive(Debug, Clone)]
pub struct SolverOptions {
    /// Relative residual of the fixed-point equation on the coupling box.
    pub tol: f64,
    /// Damped Neumann iterations before switching to GMRES.
    pub max_iter: usize,
    pub gmres_restart: usize,
    pub gmres_max_iter: usize,
    /// Output window; the whole grid when `None`.
    pub target: Option<IndexBox>,
    /// Starting iterate for the unknown on the coupling box.
    pub initial: Option<MatrixField>,
    /// Smallest acceptable `|det|` for invertible solutions.
    pub det_threshold: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-13,
            max_iter: 200,
            gmres_restart: 40,
            gmres_max_iter: 800,
            target: None,
            initial: None,
            det_threshold: 1e-8,
        }
    }
}

impl SolverOptions {
    pub fn with_target(mut self, target: IndexBox) -> Self {
        self.target = Some(target);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Method {
    Direct,
    Neumann,
    Gmres,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    pub method: Method,
    pub iterations: usize,
    pub residual: f64,
    pub damping: f64,
}

#[derive(Debug, Clone)]
pub struct DbarSolution {
    pub u: MatrixField,
    pub report: SolveReport,
}

/// Zeroth-order term `L u = left·u − u·right`.
#[derive(Debug, Clone, Default)]
pub struct Coupling {
    pub left: Option<MatrixField>,
    pub right: Option<MatrixField>,
}

impl Coupling {
    pub fn left(a: MatrixField) -> Self {
        Self { left: Some(a), right: None }
    }

    pub fn commutator(a: MatrixField) -> Self {
        Self { left: Some(a.clone()), right: Some(a) }
    }

    fn fields(&self) -> impl Iterator<Item = &MatrixField> {
        self.left.iter().chain(self.right.iter())
    }

    /// Box outside of which the coupling vanishes.
    pub fn support(&self) -> Option<IndexBox> {
        self.fields().map(|f| f.support().unwrap_or(f.window())).reduce(|a, b| a.union(&b))
    }

    fn restrict(&self, w: IndexBox) -> Coupling {
        Coupling { left: self.left.as_ref().map(|f| f.restrict(w)), right: self.right.as_ref().map(|f| f.restrict(w)) }
    }

    /// `L u` on the window of `u` (the coupling must share it).
    pub fn apply(&self, u: &MatrixField) -> Result<MatrixField> {
        let mut out = MatrixField::zeros(*u.grid(), u.window(), u.rank());
        if let Some(a) = &self.left {
            out = out.add(&a.mul(u)?)?;
        }
        if let Some(b) = &self.right {
            out = out.sub(&u.mul(b)?)?;
        }
        Ok(out)
    }
}

fn support_of(f: &MatrixField) -> IndexBox {
    f.support().unwrap_or(f.window())
}

fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Restarted GMRES for `M x = b`. Returns the iterate, the number of matrix
/// applications and the final relative residual.
pub fn gmres<F>(apply: F, b: &[Complex64], x0: Vec<Complex64>, tol: f64, restart: usize, max_iter: usize) -> (Vec<Complex64>, usize, f64)
where
    F: Fn(&[Complex64]) -> Vec<Complex64>,
{
    let bnorm = norm(b).max(f64::MIN_POSITIVE);
    let mut x = x0;
    let mut used = 0;
    loop {
        let mx = apply(&x);
        used += 1;
        let r: Vec<Complex64> = b.iter().zip(&mx).map(|(p, q)| p - q).collect();
        let beta = norm(&r);
        if beta / bnorm <= tol || used >= max_iter {
            return (x, used, beta / bnorm);
        }
        let mut basis = vec![r.into_iter().map(|z| z / beta).collect::<Vec<_>>()];
        let mut hess: Vec<Vec<Complex64>> = Vec::new();
        let mut cs: Vec<(Complex64, Complex64)> = Vec::new();
        let mut g = vec![Complex64::new(beta, 0.0)];
        let mut k = 0;
        while k < restart && used < max_iter {
            let mut w = apply(&basis[k]);
            used += 1;
            let mut col = vec![Complex64::new(0.0, 0.0); k + 2];
            for (j, q) in basis.iter().enumerate() {
                let hj = dot(q, &w);
                for (wi, qi) in w.iter_mut().zip(q) {
                    *wi -= hj * qi;
                }
                col[j] = hj;
            }
            let wn = norm(&w);
            col[k + 1] = Complex64::new(wn, 0.0);
            for (j, &(c, s)) in cs.iter().enumerate() {
                let (a, bb) = (col[j], col[j + 1]);
                col[j] = c.conj() * a + s.conj() * bb;
                col[j + 1] = -s * a + c * bb;
            }
            let (a, bb) = (col[k], col[k + 1]);
            let den = (a.norm_sqr() + bb.norm_sqr()).sqrt();
            let (c, s) = if den == 0.0 { (Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)) } else { (a / den, bb / den) };
            col[k] = Complex64::new(den, 0.0);
            col[k + 1] = Complex64::new(0.0, 0.0);
            cs.push((c, s));
            let gk = g[k];
            g[k] = c.conj() * gk;
            g.push(-s * gk);
            hess.push(col);
            k += 1;
            let converged = g[k].norm() / bnorm <= tol;
            if wn > 0.0 && !converged {
                basis.push(w.into_iter().map(|z| z / wn).collect());
            }
            if converged || wn == 0.0 {
                break;
            }
        }
        // back substitution on the triangular factor
        let mut y = vec![Complex64::new(0.0, 0.0); k];
        for i in (0..k).rev() {
            let mut s = g[i];
            for j in i + 1..k {
                s -= hess[j][i] * y[j];
            }
            y[i] = s / hess[i][i];
        }
        for (j, yj) in y.iter().enumerate() {
            for (xi, qi) in x.iter_mut().zip(&basis[j]) {
                *xi += yj * qi;
            }
        }
    }
}

/// Solves `∂_{z̄}u + L u = f` with `u → 0` at infinity.
pub fn solve_coupled(coupling: &Coupling, f: &MatrixField, opts: &SolverOptions) -> Result<DbarSolution> {
    let grid = *f.grid();
    let h = grid.h();
    let r = f.rank();
    let target = opts.target.unwrap_or(grid.full());
    let sf = support_of(f);
    grid.check_margin("source", &sf)?;
    for c in coupling.fields() {
        if c.grid() != f.grid() {
            return Err(Error::GridMismatch("coupling and source use different grids".into()));
        }
        if c.rank() != r {
            return Err(Error::RankMismatch { expected: r, got: c.rank() });
        }
    }
    let tf = CauchyOperator::new(h, sf, target).apply(&f.restrict(sf));
    let Some(wc) = coupling.support() else {
        return Ok(DbarSolution { u: tf, report: SolveReport { method: Method::Direct, iterations: 0, residual: 0.0, damping: 1.0 } });
    };
    grid.check_margin("coupling", &wc)?;
    let cw = coupling.restrict(wc);
    let b = CauchyOperator::new(h, sf, wc).apply(&f.restrict(sf));
    let kop = CauchyOperator::new(h, wc, wc);
    let apply_k = |v: &MatrixField| -> MatrixField { kop.apply(&cw.apply(v).expect("shared window")) };

    let bnorm = norm(b.data());
    let mut v = match &opts.initial {
        Some(init) => init.restrict(wc),
        None => MatrixField::zeros(grid, wc, r),
    };
    let mut report = SolveReport { method: Method::Neumann, iterations: 0, residual: 0.0, damping: 1.0 };
    if bnorm == 0.0 && norm(v.data()) == 0.0 {
        return Ok(DbarSolution { u: MatrixField::zeros(grid, target, r), report });
    }
    let scale = bnorm.max(f64::MIN_POSITIVE);
    let fixed_point_residual = |v: &MatrixField, kv: &MatrixField| -> (MatrixField, f64) {
        let g = b.sub(kv).expect("shared window");
        let res = g.data().iter().zip(v.data()).map(|(p, q)| (p - q).norm_sqr()).sum::<f64>().sqrt() / scale;
        (g, res)
    };
    let kv = apply_k(&v);
    let (mut g, mut res) = fixed_point_residual(&v, &kv);
    let mut omega = 1.0;
    let mut converged = res <= opts.tol;
    while !converged && report.iterations < opts.max_iter {
        let next_data: Vec<Complex64> = v.data().iter().zip(g.data()).map(|(p, q)| (1.0 - omega) * p + omega * q).collect();
        let next = MatrixField::from_raw(grid, wc, r, next_data)?;
        let next_kv = apply_k(&next);
        let (next_g, next_res) = fixed_point_residual(&next, &next_kv);
        report.iterations += 1;
        if next_res > res {
            if omega <= 0.125 {
                break;
            }
            omega *= 0.5;
            continue;
        }
        v = next;
        g = next_g;
        res = next_res;
        converged = res <= opts.tol;
    }
    report.damping = omega;
    report.residual = res;
    if !converged {
        let apply_m = |x: &[Complex64]| -> Vec<Complex64> {
            let xf = MatrixField::from_raw(grid, wc, r, x.to_vec()).expect("shape");
            let k = apply_k(&xf);
            x.iter().zip(k.data()).map(|(p, q)| p + q).collect()
        };
        let (x, used, rel) = gmres(apply_m, b.data(), v.data().to_vec(), opts.tol, opts.gmres_restart, opts.gmres_max_iter);
        report.method = Method::Gmres;
        report.iterations += used;
        report.residual = rel * bnorm / scale;
        if rel > opts.tol.max(1e-10) {
            return Err(Error::NonConvergence { residual: rel, iterations: report.iterations });
        }
        v = MatrixField::from_raw(grid, wc, r, x)?;
    }
    let correction = CauchyOperator::new(h, wc, target).apply(&cw.apply(&v)?);
    Ok(DbarSolution { u: tf.sub(&correction)?, report })
}

/// `∂_{z̄}u + A(∂_{z̄})u = f` on a leaf, `u → 0` at infinity.
pub fn solve_dbar_source(a: &Connection, f: &MatrixField, opts: &SolverOptions) -> Result<DbarSolution> {
    solve_dbar_potential(&dzbar_component(a)?, f, opts)
}

/// Same as [`solve_dbar_source`] with the coefficient `a = A(∂_{z̄})` given.
pub fn solve_dbar_potential(a: &MatrixField, f: &MatrixField, opts: &SolverOptions) -> Result<DbarSolution> {
    solve_coupled(&Coupling::left(a.clone()), f, opts)
}

/// `∂_z u + b u = f` through conjugation: `w = ū` solves `∂_{z̄}w + b̄ w = f̄`.
pub fn solve_dz_potential(b: &MatrixField, f: &MatrixField, opts: &SolverOptions) -> Result<DbarSolution> {
    let mut o = opts.clone();
    o.initial = opts.initial.as_ref().map(|x| x.conj());
    let sol = solve_coupled(&Coupling::left(b.conj()), &f.conj(), &o)?;
    Ok(DbarSolution { u: sol.u.conj(), report: sol.report })
}

/// An invertible solution with its determinant certificate.
#[derive(Debug, Clone)]
pub struct InvertibleSolution {
    pub c: MatrixField,
    pub min_det: f64,
    pub min_det_at: (usize, usize),
    pub report: SolveReport,
}

/// `∂_{z̄}C + L C = 0` with `C → id`, as `C = id + W`.
pub fn solve_homogeneous(coupling: &Coupling, rank: usize, opts: &SolverOptions) -> Result<InvertibleSolution> {
    let first = coupling.fields().next().ok_or_else(|| Error::InvalidArgument("empty coupling".into()))?;
    let grid = *first.grid();
    let target = opts.target.unwrap_or(grid.full());
    let id_target = MatrixField::identity(grid, target, rank);
    let sol = match coupling.support() {
        None => DbarSolution {
            u: MatrixField::zeros(grid, target, rank),
            report: SolveReport { method: Method::Direct, iterations: 0, residual: 0.0, damping: 1.0 },
        },
        Some(wc) => {
            let id = MatrixField::identity(grid, wc, rank);
            let src = coupling.restrict(wc).apply(&id)?.scale(Complex64::new(-1.0, 0.0)).with_support(wc);
            solve_coupled(coupling, &src, opts)?
        }
    };
    let c = id_target.add(&sol.u)?;
    let (min_det, i, j) = c.min_abs_det(&target);
    if !(min_det > opts.det_threshold) {
        return Err(Error::NotInvertible { min_det, at: node_label(&grid, i, j) });
    }
    Ok(InvertibleSolution { c, min_det, min_det_at: (i, j), report: sol.report })
}

/// `∂_{z̄}C + A(∂_{z̄})C = 0`, `C → id`, with a determinant certificate.
pub fn solve_dbar_invertible(a: &Connection, opts: &SolverOptions) -> Result<InvertibleSolution> {
    let coef = dzbar_component(a)?;
    solve_homogeneous(&Coupling::left(coef.clone()), coef.rank(), opts)
}

/// `∂_z D + A(∂_z)D = 0`, `D → id`: the twin equation on the same leaf.
pub fn solve_dz_invertible(a: &Connection, opts: &SolverOptions) -> Result<InvertibleSolution> {
    let coef = dz_component(a)?.conj();
    let mut sol = solve_homogeneous(&Coupling::left(coef.clone()), coef.rank(), opts)?;
    sol.c = sol.c.conj();
    Ok(sol)
}

#[derive(Debug, Clone)]
pub struct CommutatorSolution {
    pub f: MatrixField,
    /// Interior holomorphic part removed from `E`.
    pub e0_sup: f64,
    pub contour: BoundaryContour,
    pub report: SolveReport,
}

/// `∂_{z̄}F + [A(∂_{z̄}), F] = Q` via `F = C(E − E₀)C⁻¹` with `C` the invertible
/// solution, `E` the Cauchy transform of `C⁻¹QC` and `E₀` the Plemelj
/// extension of `E` from an enclosing rectangle (zero outside it).
pub fn solve_dbar_commutator(a: &Connection, q: &MatrixField, opts: &SolverOptions) -> Result<CommutatorSolution> {
    let grid = *q.grid();
    let r = q.rank();
    let target = opts.target.unwrap_or(grid.full());
    let coef = dzbar_component(a)?;
    let sq = support_of(q);
    let data_box = match coef.support() {
        Some(s) => sq.union(&s),
        None => sq,
    };
    let rect = data_box.grow(8, &grid);
    let work = target.union(&rect);
    let inv = solve_dbar_invertible(a, &SolverOptions { target: Some(work), ..opts.clone() })?;
    let cinv = inv.c.inverse(SINGULAR_DET)?;
    let qw = q.restrict(work);
    let g = cinv.mul(&qw)?.mul(&inv.c)?.restrict(sq).with_support(sq);
    let e = CauchyOperator::new(grid.h(), sq, work).apply(&g);
    let contour = BoundaryContour::rectangle(&grid, &rect)?;
    let values = contour.sample(&e);
    let h = grid.h();
    let inner: Vec<(usize, usize)> = work
        .nodes()
        .filter(|&(i, j)| {
            let z = grid.z(i, j);
            contour.is_inside(z) && contour.distance(z) > 2.0 * h
        })
        .collect();
    let pts: Vec<Complex64> = inner.iter().map(|&(i, j)| grid.z(i, j)).collect();
    let e0_vals = plemelj_extension(&contour, &values, &pts, 2.0 * h)?;
    let mut e0 = MatrixField::zeros(grid, work, r);
    let mut e0_sup = 0.0f64;
    for (&(i, j), m) in inner.iter().zip(&e0_vals) {
        e0_sup = e0_sup.max(linalg::fro(m));
        e0.set(i, j, m);
    }
    let f = inv.c.mul(&e.sub(&e0)?)?.mul(&cinv)?.restrict(target);
    Ok(CommutatorSolution { f, e0_sup, contour, report: inv.report })
}

/// Discrete L² norm of `∂_{z̄}u + L u − f` over `region` (finite differences).
pub fn residual(coupling: &Coupling, u: &MatrixField, f: &MatrixField, region: &IndexBox) -> Result<f64> {
    let w = u.window();
    let lu = coupling.restrict(w).apply(u)?;
    let res = u.dzbar().add(&lu)?.sub(&f.restrict(w))?;
    Ok(res.l2_norm(Some(region)))
}
