//! Solves `∂_{z̄}u + a u = f` for a manufactured rank-2 solution and applies
//! the Cauchy transform to the indicator of the unit disk, whose exact
//! transform is `z̄` inside and `1/z` outside.

use leafray::algebra::MatrixField;
use leafray::dbar::solve::{residual, solve_dbar_potential, Coupling};
use leafray::dbar::{cauchy_transform, SolverOptions};
use leafray::linalg::{c, CMat};
use leafray::ComplexGrid;
use num_complex::Complex64;

/// `(1 − |z − z0|²/w²)⁶` and its `∂_{z̄}` derivative.
fn bump(z: Complex64, z0: Complex64, w: f64) -> (f64, Complex64) {
    let r2 = (z - z0).norm_sqr() / (w * w);
    if r2 >= 1.0 {
        return (0.0, c(0.0, 0.0));
    }
    ((1.0 - r2).powi(6), -6.0 * (1.0 - r2).powi(5) * (z - z0) / (w * w))
}

/// Fraction of the cell of side `h` centred at `z` that lies in the unit disk.
fn coverage(z: Complex64, h: f64) -> f64 {
    let n = 16;
    let inside = (0..n * n)
        .filter(|k| {
            let (p, q) = ((k % n) as f64 + 0.5, (k / n) as f64 + 0.5);
            (z + c((p / n as f64 - 0.5) * h, (q / n as f64 - 0.5) * h)).norm_sqr() < 1.0
        })
        .count();
    inside as f64 / (n * n) as f64
}

fn main() -> leafray::Result<()> {
    let h = 1.0 / 32.0;
    let grid = ComplexGrid::new(4.0, h)?;
    let support = grid.window(-1.2, 1.2, -1.2, 1.2)?;
    let target = grid.window(-2.0, 2.0, -2.0, 2.0)?;

    let m = CMat::from_row_slice(2, 2, &[c(1.0, 0.2), c(0.0, -0.5), c(0.3, 0.0), c(-0.4, 0.7)]);
    let k = CMat::from_row_slice(2, 2, &[c(0.8, 0.1), c(0.5, 0.0), c(-0.2, 0.6), c(0.0, -0.9)]);
    let (zu, za) = (c(0.1, -0.1), c(-0.2, 0.15));
    let exact = MatrixField::from_fn(grid, target, 2, |z| &m * c(bump(z, zu, 1.0).0, 0.0));
    let a = MatrixField::from_fn(grid, support, 2, |z| &k * c(bump(z, za, 0.9).0, 0.0)).with_support(support);
    let f = MatrixField::from_fn(grid, support, 2, |z| {
        let (b, db) = bump(z, zu, 1.0);
        &m * db + &k * &m * c(bump(z, za, 0.9).0 * b, 0.0)
    })
    .with_support(support);

    let sol = solve_dbar_potential(&a, &f, &SolverOptions::default().with_target(target))?;
    let inner = grid.window(-1.5, 1.5, -1.5, 1.5)?;
    let res = residual(&Coupling::left(a), &sol.u, &f, &inner)?;
    let err = sol.u.sub(&exact)?.sup_norm(None);
    println!("manufactured rank 2: residual {res:.3e}, sup error {err:.3e}, {:?}", sol.report);

    let disk = MatrixField::from_scalar_fn(grid, support, 1, |z| c(coverage(z, h), 0.0)).with_support(support);
    let u = cauchy_transform(&disk, target)?;
    let away = target.nodes().filter(|&(i, j)| (grid.z(i, j).norm() - 1.0).abs() > 0.1);
    let worst = away
        .map(|(i, j)| {
            let z = grid.z(i, j);
            let truth = if z.norm() < 1.0 { z.conj() } else { z.inv() };
            (u.at(i, j)[(0, 0)] - truth).norm()
        })
        .fold(0.0, f64::max);
    println!("unit disk indicator: sup error away from the circle {worst:.3e}");
    Ok(())
}
