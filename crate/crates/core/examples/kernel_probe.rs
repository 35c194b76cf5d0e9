//! Applies the complex ray transform to symmetrised derivatives `Dp` of
//! random compact tensors (which it must annihilate) and to generic tensors
//! with the potential part projected out (which it must not).

use leafray::geometry::{ConformalFactor, SimpleSurface};
use leafray::transforms::{kernel_injectivity_probe, ProbeConfig, RaySetup};
use leafray::ComplexGrid;

fn main() -> leafray::Result<()> {
    let surface = SimpleSurface::disk(1.0, ConformalFactor::Cap { kappa: 0.2 })?;
    let setup = RaySetup::new(ComplexGrid::new(4.0, 1.0 / 32.0)?, 2.0);
    for m in 0..2 {
        let report = kernel_injectivity_probe(&setup, &surface, &ProbeConfig::new(m, 2, 9))?;
        for (k, t) in report.trials.iter().enumerate() {
            println!(
                "m = {m} trial {k}: |C(Dp)| = {:.2e}, |C(f)| = {:.2e}, high-mode fraction {:.2e}",
                t.kernel_trace,
                t.nonpotential_trace,
                t.high_mode_fraction.unwrap_or(f64::NAN)
            );
        }
    }
    Ok(())
}
