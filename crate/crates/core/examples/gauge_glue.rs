//! Recovers a compactly supported gauge `G₀` from the pair `(A, G₀*A)` by
//! gluing the two ∂̄-amplitudes across the leaf window.

use leafray::algebra::gauge_pullback;
use leafray::dbar::SolverOptions;
use leafray::experiment::config::GeneratorSpec;
use leafray::experiment::generators::{random_connection, random_gauge};
use leafray::holonomy::{det_consistency, gauge_glue};
use leafray::linalg::fro;
use leafray::ComplexGrid;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> leafray::Result<()> {
    let opts = SolverOptions::default();
    let spec = GeneratorSpec::default();
    for h in [1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0] {
        let grid = ComplexGrid::new(4.0, h)?;
        let window = grid.window(-2.0, 2.0, -1.5, 1.5)?;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a1 = random_connection(&mut rng, grid, window, &spec)?;
        let g0 = random_gauge(&mut rng, grid, window, &spec)?;
        let a2 = gauge_pullback(&g0, &a1)?;
        let out = gauge_glue(&a1, &a2, window, &opts, 1e-2)?;
        let err = out.window.nodes().map(|(i, j)| fro(&(out.gauge.field().at(i, j) - g0.field().at(i, j)))).fold(0.0, f64::max);
        let det = det_consistency(&a1, &a2, &out.gauge, &opts, 1e-3)?;
        println!("h = 1/{:<3} sup|G - G0| = {err:.3e}  det gap = {:.3e}  min|det G| = {:.3}", (1.0 / h) as u32, det.gap, det.min_det);
    }
    Ok(())
}
