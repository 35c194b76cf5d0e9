//! Checks the area/contour moment identity for two random unitary connections
//! on a leaf window, weighting with `H = zᵏ`.

use leafray::experiment::generators::random_connection;
use leafray::experiment::config::GeneratorSpec;
use leafray::dbar::SolverOptions;
use leafray::holonomy::transport::EXTERIOR_PAD;
use leafray::holonomy::{amplitudes, monomial, stokes_moment_check};
use leafray::linalg::{c, fro};
use leafray::ComplexGrid;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> leafray::Result<()> {
    let grid = ComplexGrid::new(4.0, 1.0 / 32.0)?;
    let window = grid.window(-2.0, 2.0, -1.5, 1.5)?;
    let spec = GeneratorSpec::default();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let a1 = random_connection(&mut rng, grid, window, &spec)?;
    let a2 = random_connection(&mut rng, grid, window, &spec)?;
    let target = window.grow(EXTERIOR_PAD, &grid);
    let amp = amplitudes(&a1, &a2, target, &SolverOptions::default())?;
    println!("{:>3} {:>12} {:>12}", "k", "|area|", "gap");
    for k in 0..=4 {
        let h = monomial(grid, target, 2, k, c(0.0, 0.0), 1.0);
        let m = stokes_moment_check(&amp.c1, &amp.c2, &amp.a_tilde, &h, &window)?;
        println!("{k:>3} {:>12.4e} {:>12.3e}", fro(&m.lhs), m.gap);
    }
    Ok(())
}
