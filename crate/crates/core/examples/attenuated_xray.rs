//! Attenuated X-ray transform on a spherical cap: exact derivatives integrate
//! to zero at `ξ₁ = 0`, and a source whose complex ray transform is tiny
//! reconstructs to a tiny `f̂(ξ₁, ·)`.

use leafray::geometry::{ConformalFactor, SimpleSurface};
use leafray::transforms::{attenuated_smoke_test, exact_derivative_defect, ProbeConfig, RaySetup};
use leafray::ComplexGrid;

fn main() -> leafray::Result<()> {
    let surface = SimpleSurface::disk(1.0, ConformalFactor::Cap { kappa: 0.2 })?;
    for steps in [100, 400, 1600] {
        let d = exact_derivative_defect(&surface, [0.1, -0.2], 0.5, 6, 5, steps)?;
        println!("Simpson steps {steps:>5}: largest transform of an exact derivative {d:.3e}");
    }
    let setup = RaySetup::new(ComplexGrid::new(4.0, 1.0 / 32.0)?, 2.0);
    let leaves = ProbeConfig::new(0, 1, 0).leaves;
    let trial = attenuated_smoke_test(&setup, &surface, 4, 1e-5, &[0.0, 0.1, 0.2], &leaves)?;
    for (xi, n) in &trial.reconstructed {
        println!("ξ₁ = {xi:.1}: |f̂| = {n:.3e}");
    }
    Ok(())
}
