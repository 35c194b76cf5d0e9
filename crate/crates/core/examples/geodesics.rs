//! Traces geodesic chords of a spherical cap and parallel transports a
//! connection along one of them.

use leafray::geometry::{AmbientConnection, ConformalFactor, SimpleSurface};
use leafray::holonomy::real_transport_geodesic;
use leafray::linalg::{c, CMat};

fn main() -> leafray::Result<()> {
    let surface = SimpleSurface::disk(1.0, ConformalFactor::Cap { kappa: 0.3 })?;
    for alpha in [-1.0, -0.5, 0.0, 0.5, 1.0] {
        let x = surface.boundary_point(0.3);
        let path = surface.geodesic_trace(x, surface.inward(x, alpha))?;
        let end = path.samples.last().unwrap();
        println!("entry angle {alpha:+.1}: length {:.6}, exit ({:+.4}, {:+.4})", path.length, end.x[0], end.x[1]);
    }
    let k = CMat::from_row_slice(2, 2, &[c(0.0, 0.4), c(0.3, 0.1), c(-0.3, 0.1), c(0.0, -0.2)]);
    let a = AmbientConnection::new(3, 2, move |p| {
        let r2 = p[1] * p[1] + p[2] * p[2];
        let env = if r2 < 0.64 { (1.0 - r2 / 0.64).powi(4) } else { 0.0 };
        vec![&k * c(env, 0.0), CMat::zeros(2, 2), &k * c(0.5 * env, 0.0)]
    });
    let x = surface.boundary_point(0.0);
    let path = surface.geodesic_trace(x, surface.inward(x, 0.2))?;
    let p = real_transport_geodesic(&a, 0.0, &path, 800);
    println!("parallel transport along the chord:\n{p:.5}");
    Ok(())
}
