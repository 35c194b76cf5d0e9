//! Builds a curved unitary connection whose complex parallel transport is
//! trivial, then shows that real parallel transport along horizontal lines
//! still sees the curvature.

use leafray::algebra::{Connection, Frame, MatrixField};
use leafray::dbar::SolverOptions;
use leafray::holonomy::{counterexample_generate, equal_transport_check, line_transport_deviation};
use leafray::linalg::{c, CMat};
use leafray::ComplexGrid;

fn main() -> leafray::Result<()> {
    let grid = ComplexGrid::new(4.0, 1.0 / 32.0)?;
    let window = grid.window(-2.0, 2.0, -1.5, 1.5)?;
    let k = CMat::from_row_slice(2, 2, &[c(0.4, 0.2), c(0.3, -0.1), c(-0.2, 0.0), c(0.1, 0.5)]);
    let a = MatrixField::from_fn(grid, window, 2, |z| {
        let r2 = (z - c(0.05, 0.05)).norm_sqr() / 0.25;
        &k * c(if r2 < 1.0 { (1.0 - r2).powi(6) } else { 0.0 }, 0.0)
    });
    let a0 = Connection::unitary_from_dzbar(&a.clone().with_support(a.tight_support(0).unwrap()))?;
    let opts = SolverOptions::default();
    let ce = counterexample_generate(&a0, c(0.0, 0.0), 1.4, &opts)?;
    println!("{:#?}", ce.summary());
    let zero = Connection::zero(grid, window, 2, Frame::Leaf);
    let eq = equal_transport_check(&ce.a, &zero, window, &opts, 1e-3)?;
    println!("equal complex transport to the trivial connection: {}", eq.equal);
    println!("{:#?}", eq.diagnostics);
    let heights: Vec<f64> = (0..7).map(|j| -0.9 + 0.3 * j as f64).collect();
    for (t, d) in heights.iter().zip(line_transport_deviation(&ce.a, &heights, -1.9, 1.9, 400)) {
        println!("line t = {t:+.1}: |P - id| = {d:.3e}");
    }
    Ok(())
}
