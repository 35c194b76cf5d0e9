//! Symmetric tensors on `ℝ × M` with coordinates `(x₁, x)`: coordinate 0 is
//! `x₁`, coordinates `1..=n` are transversal. Components are matrix valued.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{self, CMat};

/// Tolerance on `|v|_g − 1` accepted by [`pullback_pi_m`].
pub const UNIT_TOL: f64 = 1e-10;

type CoeffFn = Arc<dyn Fn(f64, &[f64]) -> Vec<CMat> + Send + Sync>;

/// Nondecreasing index sequences of length `m` over `0..dim`, in
/// lexicographic order.
pub fn multi_indices(m: usize, dim: usize) -> Vec<Vec<usize>> {
    fn rec(m: usize, dim: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == m {
            out.push(cur.clone());
            return;
        }
        for k in start..dim {
            cur.push(k);
            rec(m, dim, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(m, dim, 0, &mut Vec::with_capacity(m), &mut out);
    out
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

pub fn binomial(n: usize, k: usize) -> f64 {
    factorial(n) / (factorial(k) * factorial(n - k))
}

/// Number of distinct orderings of a sorted multi-index.
fn multiplicity(alpha: &[usize]) -> f64 {
    let mut denom = 1.0;
    let mut run = 1;
    for w in alpha.windows(2) {
        if w[0] == w[1] {
            run += 1;
        } else {
            denom *= factorial(run);
            run = 1;
        }
    }
    if !alpha.is_empty() {
        denom *= factorial(run);
    }
    factorial(alpha.len()) / denom
}

#[derive(Clone)]
pub struct SymmetricTensorField {
    degree: usize,
    dim: usize,
    rank: usize,
    indices: Arc<Vec<Vec<usize>>>,
    coeffs: CoeffFn,
    bounds: Option<Vec<(f64, f64)>>,
}

impl fmt::Debug for SymmetricTensorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SymmetricTensorField")
            .field("degree", &self.degree)
            .field("transversal_dim", &self.dim)
            .field("rank", &self.rank)
            .finish()
    }
}

impl SymmetricTensorField {
    /// `coeffs(x₁, x)` returns one matrix per sorted multi-index, in the order
    /// of [`multi_indices`]`(degree, dim + 1)`.
    pub fn new<F>(degree: usize, dim: usize, rank: usize, coeffs: F) -> Self
    where
        F: Fn(f64, &[f64]) -> Vec<CMat> + Send + Sync + 'static,
    {
        let indices = Arc::new(multi_indices(degree, dim + 1));
        Self { degree, dim, rank, indices, coeffs: Arc::new(coeffs), bounds: None }
    }

    /// Declares that the field vanishes outside the coordinate box
    /// `[lo₀, hi₀] × … × [lo_n, hi_n]` in `(x₁, x)`.
    pub fn with_bounds(mut self, bounds: Vec<(f64, f64)>) -> Self {
        assert_eq!(bounds.len(), self.dim + 1, "bounds need one interval per coordinate");
        self.bounds = Some(bounds);
        self
    }

    pub fn bounds(&self) -> Option<&[(f64, f64)]> {
        self.bounds.as_deref()
    }

    /// True when `(x₁, x)` lies outside the declared box, where the field is
    /// known to vanish.
    pub fn vanishes_at(&self, x1: f64, x: &[f64]) -> bool {
        self.bounds.as_ref().is_some_and(|b| std::iter::once(&x1).chain(x).zip(b).any(|(v, (lo, hi))| v < lo || v > hi))
    }

    /// Builds a field from all `(dim+1)^degree` components (row-major over
    /// the index tuple), rejecting inputs that are not symmetric at `probes`.
    pub fn from_full<F>(degree: usize, dim: usize, rank: usize, full: F, probes: &[(f64, Vec<f64>)]) -> Result<Self>
    where
        F: Fn(f64, &[f64]) -> Vec<CMat> + Send + Sync + 'static,
    {
        let d = dim + 1;
        let flat = |idx: &[usize]| idx.iter().fold(0, |acc, &k| acc * d + k);
        for (x1, x) in probes {
            let comps = full(*x1, x);
            let mut worst = 0.0f64;
            for tuple in 0..d.pow(degree as u32) {
                let mut idx: Vec<usize> = (0..degree).map(|p| (tuple / d.pow((degree - 1 - p) as u32)) % d).collect();
                let v = &comps[tuple];
                idx.sort_unstable();
                worst = worst.max(linalg::fro(&(v - &comps[flat(&idx)])));
            }
            if worst > 1e-12 {
                return Err(Error::NonSymmetric(worst));
            }
        }
        let sorted = multi_indices(degree, d);
        let positions: Vec<usize> = sorted.iter().map(|a| flat(a)).collect();
        Ok(Self::new(degree, dim, rank, move |x1, x| {
            let comps = full(x1, x);
            positions.iter().map(|&p| comps[p].clone()).collect()
        }))
    }

    /// Scalar (`degree = 0`) field.
    pub fn scalar<F>(dim: usize, rank: usize, f: F) -> Self
    where
        F: Fn(f64, &[f64]) -> CMat + Send + Sync + 'static,
    {
        Self::new(0, dim, rank, move |x1, x| vec![f(x1, x)])
    }

    /// `profile(x₁, x) · Sym(dx_{a₁} ⊗ … ⊗ dx_{a_m})`.
    pub fn sym_monomial<F>(factors: &[usize], dim: usize, rank: usize, profile: F) -> Self
    where
        F: Fn(f64, &[f64]) -> CMat + Send + Sync + 'static,
    {
        let mut key = factors.to_vec();
        key.sort_unstable();
        let indices = multi_indices(key.len(), dim + 1);
        let pos = indices.iter().position(|a| *a == key).expect("factor index out of range");
        let w = 1.0 / multiplicity(&key);
        Self::new(key.len(), dim, rank, move |x1, x| {
            let mut out = vec![CMat::zeros(rank, rank); indices.len()];
            out[pos] = profile(x1, x) * Complex64::new(w, 0.0);
            out
        })
    }

    /// `profile · (dx₁ + i dx₂)^m` on the first two transversal coordinates: a
    /// trace-free tensor with `T(⊗^m v) = profile · (v₁ + i v₂)^m`.
    pub fn null_power<F>(m: usize, dim: usize, rank: usize, profile: F) -> Self
    where
        F: Fn(f64, &[f64]) -> CMat + Send + Sync + 'static,
    {
        assert!(dim >= 2, "null powers need two transversal coordinates");
        let indices = multi_indices(m, dim + 1);
        let weights: Vec<Complex64> = indices
            .iter()
            .map(|a| {
                if a.iter().all(|&k| k == 1 || k == 2) {
                    linalg::I.powu(a.iter().filter(|&&k| k == 2).count() as u32)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
            .collect();
        Self::new(m, dim, rank, move |x1, x| {
            let p = profile(x1, x);
            weights.iter().map(|w| &p * *w).collect()
        })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Transversal dimension `n`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn indices(&self) -> &[Vec<usize>] {
        &self.indices
    }

    pub fn components(&self, x1: f64, x: &[f64]) -> Vec<CMat> {
        (self.coeffs)(x1, x)
    }

    /// Component at an arbitrary (unsorted) index tuple.
    pub fn component(&self, x1: f64, x: &[f64], idx: &[usize]) -> CMat {
        let mut key = idx.to_vec();
        key.sort_unstable();
        let pos = self.indices.binary_search(&key).expect("index tuple out of range");
        self.components(x1, x).swap_remove(pos)
    }

    /// `T_{(x₁,x)}(⊗^m w)` for a complex vector `w = (w₀, w₁, …, w_n)`.
    pub fn eval(&self, x1: f64, x: &[f64], w: &[Complex64]) -> CMat {
        assert_eq!(w.len(), self.dim + 1, "vector has wrong dimension");
        let comps = self.components(x1, x);
        let mut out = CMat::zeros(self.rank, self.rank);
        for (alpha, t) in self.indices.iter().zip(&comps) {
            let mono: Complex64 = alpha.iter().map(|&k| w[k]).product();
            out += t * (mono * multiplicity(alpha));
        }
        out
    }

    pub fn add(&self, o: &SymmetricTensorField) -> Result<SymmetricTensorField> {
        if (self.degree, self.dim, self.rank) != (o.degree, o.dim, o.rank) {
            return Err(Error::InvalidArgument("tensor shapes differ".into()));
        }
        let (a, b) = (self.coeffs.clone(), o.coeffs.clone());
        let bounds = match (&self.bounds, &o.bounds) {
            (Some(p), Some(q)) => Some(p.iter().zip(q).map(|(u, v)| (u.0.min(v.0), u.1.max(v.1))).collect()),
            _ => None,
        };
        Ok(Self {
            coeffs: Arc::new(move |x1, x| a(x1, x).into_iter().zip(b(x1, x)).map(|(p, q)| p + q).collect()),
            bounds,
            ..self.clone()
        })
    }

    pub fn scale(&self, s: Complex64) -> SymmetricTensorField {
        let a = self.coeffs.clone();
        Self { coeffs: Arc::new(move |x1, x| a(x1, x).into_iter().map(|p| p * s).collect()), ..self.clone() }
    }

    /// Frobenius norm of the Euclidean transversal trace `Σ_k T(e_k, e_k, …)`.
    pub fn trace_norm(&self, x1: f64, x: &[f64]) -> f64 {
        if self.degree < 2 {
            return 0.0;
        }
        let comps = self.components(x1, x);
        let mut total = 0.0;
        for gamma in multi_indices(self.degree - 2, self.dim + 1) {
            let mut tr = CMat::zeros(self.rank, self.rank);
            for k in 1..=self.dim {
                let mut key = gamma.clone();
                key.extend([k, k]);
                key.sort_unstable();
                tr += &comps[self.indices.binary_search(&key).unwrap()];
            }
            total += tr.iter().map(|z| z.norm_sqr()).sum::<f64>() * multiplicity(&gamma);
        }
        total.sqrt()
    }

    /// Largest component with an `x₁` index; zero for fields independent of `dx₁`.
    pub fn x1_content(&self, x1: f64, x: &[f64]) -> f64 {
        self.indices
            .iter()
            .zip(self.components(x1, x))
            .filter(|(a, _)| a.first() == Some(&0))
            .map(|(_, t)| linalg::fro(&t))
            .fold(0.0, f64::max)
    }
}

/// Parts `[T_m, T_{m−1}, …, T_0]` with `T = Σ_j Sym(⊗^j dx₁ ⊗ T_{m−j})`;
/// part `j` is independent of `dx₁` and has degree `m − j`.
pub fn tensor_decompose(t: &SymmetricTensorField) -> Vec<SymmetricTensorField> {
    let m = t.degree;
    let d = t.dim + 1;
    (0..=m)
        .map(|j| {
            let own = multi_indices(m - j, d);
            let parent = t.indices.clone();
            let lookup: Vec<Option<usize>> = own
                .iter()
                .map(|beta| {
                    if beta.first() == Some(&0) {
                        return None;
                    }
                    let mut key = vec![0; j];
                    key.extend(beta);
                    parent.binary_search(&key).ok()
                })
                .collect();
            let scale = Complex64::new(binomial(m, j), 0.0);
            let rank = t.rank;
            let src = t.coeffs.clone();
            SymmetricTensorField::new(m - j, t.dim, rank, move |x1, x| {
                let comps = src(x1, x);
                lookup.iter().map(|p| p.map_or_else(|| CMat::zeros(rank, rank), |p| &comps[p] * scale)).collect()
            })
        })
        .collect()
}

/// Inverse of [`tensor_decompose`].
pub fn tensor_recompose(parts: &[SymmetricTensorField]) -> Result<SymmetricTensorField> {
    let m = parts.len().checked_sub(1).ok_or_else(|| Error::InvalidArgument("no parts".into()))?;
    let (dim, rank) = (parts[0].dim, parts[0].rank);
    for (j, p) in parts.iter().enumerate() {
        if p.degree != m - j || p.dim != dim || p.rank != rank {
            return Err(Error::InvalidArgument(format!("part {j} has the wrong shape")));
        }
    }
    let indices = multi_indices(m, dim + 1);
    let plan: Vec<(usize, usize, f64)> = indices
        .iter()
        .map(|alpha| {
            let j = alpha.iter().take_while(|&&k| k == 0).count();
            let pos = parts[j].indices.binary_search(&alpha[j..].to_vec()).unwrap();
            (j, pos, 1.0 / binomial(m, j))
        })
        .collect();
    let srcs: Vec<CoeffFn> = parts.iter().map(|p| p.coeffs.clone()).collect();
    Ok(SymmetricTensorField::new(m, dim, rank, move |x1, x| {
        let comps: Vec<Vec<CMat>> = srcs.iter().map(|f| f(x1, x)).collect();
        plan.iter().map(|&(j, pos, w)| &comps[j][pos] * Complex64::new(w, 0.0)).collect()
    }))
}

/// `π_m^*T (x₁, x, v) = T_{(x₁,x)}(⊗^m v)` for a transversal vector `v` that is
/// unit for the metric `c(x)·e`.
pub fn pullback_pi_m(t: &SymmetricTensorField, x1: f64, x: &[f64], v: &[f64], conformal: f64) -> Result<CMat> {
    let norm = (conformal * v.iter().map(|a| a * a).sum::<f64>()).sqrt();
    if (norm - 1.0).abs() > UNIT_TOL {
        return Err(Error::NonUnitVector(norm));
    }
    let mut w = vec![Complex64::new(0.0, 0.0)];
    w.extend(v.iter().map(|&a| Complex64::new(a, 0.0)));
    Ok(t.eval(x1, x, &w))
}
