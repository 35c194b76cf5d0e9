//! Symmetrised covariant derivative on `(ℝ × M, e ⊕ c·e)`.

use num_complex::Complex64;

use crate::algebra::tensor::{multi_indices, SymmetricTensorField};
use crate::geometry::surface::ConformalFactor;
use crate::linalg::CMat;

/// Step of the fourth-order central differences.
pub const FD_STEP: f64 = 1e-3;

/// Christoffel symbols `Γ^c_{ab}` of `e ⊕ e^{2φ}·e` in coordinates
/// `(x₁, x)`; only transversal indices are nonzero.
fn christoffel(factor: &ConformalFactor, x: &[f64], dim: usize) -> Vec<f64> {
    let d = dim + 1;
    let mut xx = [0.0; 2];
    xx[..dim].copy_from_slice(&x[..dim]);
    let g = if dim == 2 { factor.grad_phi(xx) } else { [0.0; 2] };
    let dphi = |k: usize| if k == 0 { 0.0 } else { g[k - 1] };
    let mut out = vec![0.0; d * d * d];
    for c in 1..d {
        for a in 1..d {
            for b in 1..d {
                let mut v = 0.0;
                if c == a {
                    v += dphi(b);
                }
                if c == b {
                    v += dphi(a);
                }
                if a == b {
                    v -= dphi(c);
                }
                out[(c * d + a) * d + b] = v;
            }
        }
    }
    out
}

/// `D p = Sym ∇p` for the product metric with transversal factor `factor`.
pub fn sym_derivative(p: &SymmetricTensorField, factor: ConformalFactor) -> SymmetricTensorField {
    let (m, dim, rank) = (p.degree(), p.dim(), p.rank());
    let d = dim + 1;
    let src_idx = multi_indices(m, d);
    let out_idx = multi_indices(m + 1, d);
    let bounds = p.bounds().map(|b| b.iter().map(|(lo, hi)| (lo - 2.0 * FD_STEP, hi + 2.0 * FD_STEP)).collect());
    let p = p.clone();
    let pos = move |beta: &[usize]| -> usize {
        let mut key = beta.to_vec();
        key.sort_unstable();
        src_idx.binary_search(&key).expect("index in range")
    };
    let d = SymmetricTensorField::new(m + 1, dim, rank, move |x1, x| {
        let comps = p.components(x1, x);
        let mut grads: Vec<Vec<CMat>> = Vec::with_capacity(d);
        for a in 0..d {
            let eval = |delta: f64| {
                if a == 0 {
                    p.components(x1 + delta, x)
                } else {
                    let mut y = x.to_vec();
                    y[a - 1] += delta;
                    p.components(x1, &y)
                }
            };
            let (p1, m1, p2, m2) = (eval(FD_STEP), eval(-FD_STEP), eval(2.0 * FD_STEP), eval(-2.0 * FD_STEP));
            let k = Complex64::new(1.0 / (12.0 * FD_STEP), 0.0);
            grads.push((0..comps.len()).map(|i| (&m2[i] - &p2[i] + (&p1[i] - &m1[i]) * Complex64::new(8.0, 0.0)) * k).collect());
        }
        let gamma = christoffel(&factor, x, dim);
        // (∇p)_{a; β} = ∂_a p_β − Σ_k Γ^c_{a β_k} p_{β with β_k → c}
        let nabla = |a: usize, beta: &[usize]| -> CMat {
            let mut out = grads[a][pos(beta)].clone();
            for k in 0..beta.len() {
                for c in 1..d {
                    let g = gamma[(c * d + a) * d + beta[k]];
                    if g != 0.0 {
                        let mut b2 = beta.to_vec();
                        b2[k] = c;
                        out -= &comps[pos(&b2)] * Complex64::new(g, 0.0);
                    }
                }
            }
            out
        };
        out_idx
            .iter()
            .map(|alpha| {
                let mut acc = CMat::zeros(rank, rank);
                for k in 0..alpha.len() {
                    let mut beta = alpha.clone();
                    let a = beta.remove(k);
                    acc += nabla(a, &beta);
                }
                acc / Complex64::new(alpha.len() as f64, 0.0)
            })
            .collect()
    });
    match bounds {
        Some(b) => d.with_bounds(b),
        None => d,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::tensor::pullback_pi_m;
    use crate::geometry::surface::SimpleSurface;
    use crate::linalg::c;
    use rand::{Rng, SeedableRng};

    fn smooth(x1: f64, x: &[f64]) -> f64 {
        (0.7 * x1 + x[0]).sin() * (1.3 * x[1] - 0.2 * x1).cos()
    }

    #[test]
    fn gradient_of_scalar() {
        let p = SymmetricTensorField::scalar(2, 1, |x1, x| CMat::from_element(1, 1, c(smooth(x1, x), 0.0)));
        let dp = sym_derivative(&p, ConformalFactor::Cap { kappa: 0.3 });
        let (x1, x) = (0.2, [0.1, -0.3]);
        let comps = dp.components(x1, &x);
        let exact = [
            0.7 * (0.7 * x1 + x[0]).cos() * (1.3 * x[1] - 0.2 * x1).cos() + 0.2 * (0.7 * x1 + x[0]).sin() * (1.3 * x[1] - 0.2 * x1).sin(),
            (0.7 * x1 + x[0]).cos() * (1.3 * x[1] - 0.2 * x1).cos(),
            -1.3 * (0.7 * x1 + x[0]).sin() * (1.3 * x[1] - 0.2 * x1).sin(),
        ];
        for k in 0..3 {
            assert!((comps[k][(0, 0)] - c(exact[k], 0.0)).norm() < 1e-10);
        }
    }

    #[test]
    fn constant_tensor_on_flat_factor_has_zero_derivative() {
        let p = SymmetricTensorField::new(2, 2, 1, |_, _| (0..6).map(|k| CMat::from_element(1, 1, c(k as f64, 1.0))).collect());
        let dp = sym_derivative(&p, ConformalFactor::Flat);
        assert!(dp.components(0.1, &[0.2, 0.3]).iter().all(|m| m.norm() < 1e-10));
    }

    #[test]
    fn fundamental_relation_on_cap() {
        let factor = ConformalFactor::Cap { kappa: 0.4 };
        let s = SimpleSurface::disk(1.0, factor).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let coef: Vec<f64> = (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let p = SymmetricTensorField::new(2, 2, 1, move |_, x| {
            (0..6).map(|k| CMat::from_element(1, 1, c(coef[k] * (1.0 + x[0] * x[1] + (k as f64) * x[0].powi(2)), 0.0))).collect()
        });
        let p = crate::algebra::tensor::tensor_decompose(&p).remove(0);
        let dp = sym_derivative(&p, factor);
        for _ in 0..5 {
            let x = [rng.gen_range(-0.4..0.4), rng.gen_range(-0.4..0.4)];
            let th: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            let k = 1.0 / s.conformal(x).sqrt();
            let v = [k * th.cos(), k * th.sin()];
            let along = |t: f64| {
                let (y, w, _) = s.flow(x, v, v, t);
                let cf = s.conformal(y);
                pullback_pi_m(&p, 0.0, &y, &w, cf).unwrap()[(0, 0)]
            };
            let e = 1e-3;
            let xp = (along(-2.0 * e) - along(2.0 * e) + (along(e) - along(-e)) * 8.0) / (12.0 * e);
            let rhs = pullback_pi_m(&dp, 0.0, &x, &v, s.conformal(x)).unwrap()[(0, 0)];
            assert!((xp - rhs).norm() < 1e-8, "{}", (xp - rhs).norm());
        }
    }
}
