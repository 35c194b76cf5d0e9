//! Glues a flat-model gauge pair over several complex null frames and
//! compares the results under negation, rotation and conjugation of the
//! frame; also samples the `ξ±(t)` family.

use leafray::dbar::SolverOptions;
use leafray::experiment::config::GeneratorSpec;
use leafray::experiment::generators::{frame_plan, random_flat_model};
use leafray::geometry::{xi_family, xi_normaliser, ComplexFrame, ConformalFactor, SimpleSurface};
use leafray::holonomy::symmetry_check;
use leafray::linalg::c;
use leafray::ComplexGrid;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> leafray::Result<()> {
    let surface = SimpleSurface::interval(2.0)?;
    let spec = GeneratorSpec { amplitude: 0.6, support: [-0.1, 0.1, -0.1, 0.1], ..GeneratorSpec::default() };
    let model = random_flat_model(&mut ChaCha8Rng::seed_from_u64(5), &surface, &spec);
    let grid = ComplexGrid::new(4.0, 1.0 / 32.0)?;
    let opts = SolverOptions::default();
    let glue = |f: &ComplexFrame| model.glue(f, &grid, 1.5, &opts, 1e-3);
    for (k, frame) in frame_plan(&surface, 4, 0.6)?.iter().enumerate() {
        let rep = symmetry_check(glue, frame, 0.7, true)?;
        let show = |g: Option<f64>| g.map_or("n/a".to_string(), |v| format!("{v:.2e}"));
        println!("frame {k}: negation {:.2e} rotation {} conjugation {}", rep.negation, show(rep.rotation), show(rep.conjugation));
    }

    let disk = SimpleSurface::disk(1.0, ConformalFactor::Flat)?;
    for t in [c(0.5, 0.3), c(-1.2, 0.8), c(2.0, -0.1)] {
        let xi = xi_family(disk, [0.0, 0.0], [0.1, 0.2], [0.6, 0.8], t, true)?;
        println!("t = {t}: |ξ|² = {:.1e}, |μ| = {:.6}, r(t) = {:.6}", xi.bilinear_square().norm(), xi.mu_norm(), xi_normaliser(t));
    }
    Ok(())
}
