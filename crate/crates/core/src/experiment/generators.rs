//! Seeded random connections, gauges, flat gauge models and frame plans.

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::config::{ExperimentConfig, Family, GeneratorSpec};
use crate::algebra::{Connection, Frame, GaugeTransform, MatrixField};
use crate::error::Result;
use crate::geometry::{AmbientConnection, AmbientGauge, ComplexFrame, SimpleSurface};
use crate::grid::{ComplexGrid, IndexBox};
use crate::holonomy::FlatGaugeModel;
use crate::linalg::{self, c, CMat};

/// `(1 − r²)⁶` on the unit ball, zero outside.
pub fn bump(r2: f64) -> f64 {
    if r2 >= 1.0 { 0.0 } else { (1.0 - r2).powi(6) }
}

fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    if hi > lo { rng.gen_range(lo..hi) } else { lo }
}

/// Matrix with entries uniform in the unit complex square, times `scale`.
pub fn random_matrix(rng: &mut ChaCha8Rng, rank: usize, scale: f64) -> CMat {
    CMat::from_fn(rank, rank, |_, _| c(uniform(rng, -1.0, 1.0), uniform(rng, -1.0, 1.0)) * scale)
}

pub fn skew_part(m: &CMat) -> CMat {
    (m - m.adjoint()) * c(0.5, 0.0)
}

fn centre(rng: &mut ChaCha8Rng, spec: &GeneratorSpec) -> Complex64 {
    let [x0, x1, y0, y1] = spec.support;
    c(uniform(rng, x0, x1), uniform(rng, y0, y1))
}

/// Grid and leaf window `[−T, T] × [−H, H]` of a configuration.
pub fn leaf_domain(cfg: &ExperimentConfig) -> Result<(ComplexGrid, IndexBox)> {
    let grid = cfg.complex_grid()?;
    let (t, h) = (cfg.grid.leaf_half_width, cfg.grid.leaf_half_height);
    let window = grid.window(-t, t, -h, h)?;
    Ok((grid, window))
}

/// Unitary leaf connection whose `∂_{z̄}` part is one bump times a random
/// matrix.
pub fn random_connection(rng: &mut ChaCha8Rng, grid: ComplexGrid, window: IndexBox, spec: &GeneratorSpec) -> Result<Connection> {
    if spec.family == Family::Zero {
        return Ok(Connection::zero(grid, window, spec.rank, Frame::Leaf));
    }
    let z0 = centre(rng, spec);
    let coef = random_matrix(rng, spec.rank, spec.amplitude);
    let w2 = spec.width * spec.width;
    let a = MatrixField::from_fn(grid, window, spec.rank, |z| &coef * c(bump((z - z0).norm_sqr() / w2), 0.0));
    match a.tight_support(0) {
        Some(s) => Connection::unitary_from_dzbar(&a.with_support(s)),
        None => Ok(Connection::zero(grid, window, spec.rank, Frame::Leaf)),
    }
}

/// `G = exp(bump · K)`, identity away from one bump; unitary when `K` is
/// skew-Hermitian.
pub fn random_gauge(rng: &mut ChaCha8Rng, grid: ComplexGrid, window: IndexBox, spec: &GeneratorSpec) -> Result<GaugeTransform> {
    if spec.family == Family::Zero {
        return GaugeTransform::new(MatrixField::identity(grid, window, spec.rank));
    }
    let z0 = centre(rng, spec);
    let mut k = random_matrix(rng, spec.rank, spec.amplitude);
    if spec.unitary {
        k = skew_part(&k);
    }
    let w2 = spec.width * spec.width;
    let field = MatrixField::from_fn(grid, window, spec.rank, |z| linalg::expm(&(&k * c(bump((z - z0).norm_sqr() / w2), 0.0))));
    let interior = IndexBox { i0: window.i0 + 1, j0: window.j0 + 1, nx: window.nx - 2, ny: window.ny - 2 };
    GaugeTransform::with_boundary_identity(field, &interior, 0.0)
}

/// Base point of frames: the origin of `ℝ²` over the middle of `M₀`.
pub fn base_point(surface: &SimpleSurface) -> [f64; 2] {
    if surface.dim == 1 { [0.5 * surface.size, 0.0] } else { [0.0, 0.0] }
}

/// Gauge pair on `ℝ² × M₀` with skew-Hermitian components supported in a
/// ball around a random point over the base point.
pub fn random_flat_model(rng: &mut ChaCha8Rng, surface: &SimpleSurface, spec: &GeneratorSpec) -> FlatGaugeModel {
    let dim = 2 + surface.dim;
    let rank = spec.rank;
    if spec.family == Family::Zero {
        return FlatGaugeModel::new(AmbientConnection::zero(dim, rank), AmbientGauge::new(dim, move |_| linalg::identity(rank)));
    }
    let y = centre(rng, spec);
    let mut centre_pt = vec![y.re, y.im];
    centre_pt.extend_from_slice(&base_point(surface)[..surface.dim]);
    let comps: Vec<CMat> = (0..dim).map(|_| skew_part(&random_matrix(rng, rank, spec.amplitude))).collect();
    let mut k = random_matrix(rng, rank, spec.amplitude);
    if spec.unitary {
        k = skew_part(&k);
    }
    let width = spec.width;
    let gauge_centre = centre_pt.clone();
    let env = move |p: &[f64], ctr: &[f64], w: f64| bump(p.iter().zip(ctr).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / (w * w));
    let a1 = AmbientConnection::new(dim, rank, move |p| comps.iter().map(|s| s * c(env(p, &centre_pt, width), 0.0)).collect());
    let g0 = AmbientGauge::with_jet(dim, move |p| {
        let d: Vec<f64> = p.iter().zip(&gauge_centre).map(|(a, b)| (a - b) / (width * width)).collect();
        let r2 = d.iter().map(|x| x * x).sum::<f64>() * width * width;
        let g = linalg::expm(&(&k * c(bump(r2), 0.0)));
        // ∂_a exp(e K) = (∂_a e) K exp(e K)
        let kg = &k * &g;
        let slope = if r2 < 1.0 { -12.0 * (1.0 - r2).powi(5) } else { 0.0 };
        let dg = d.iter().map(|x| &kg * c(slope * x, 0.0)).collect();
        (g, dg)
    });
    FlatGaugeModel::new(a1, g0)
}

/// `count` null frames at the base point with `μ` at equally spaced angles.
/// Even frames span the `ℝ²` factor; odd frames tilt `ν` into `M₀` with
/// `ℝ²`-weight `tilt`.
pub fn frame_plan(surface: &SimpleSurface, count: usize, tilt: f64) -> Result<Vec<ComplexFrame>> {
    let x = base_point(surface);
    let scale = surface.conformal(x).sqrt();
    (0..count)
        .map(|k| {
            let phi = std::f64::consts::TAU * k as f64 / count as f64;
            let (cs, sn) = (phi.cos(), phi.sin());
            let mu = [cs, sn];
            if k % 2 == 0 {
                ComplexFrame::new(*surface, [0.0, 0.0], x, mu, [-sn, cs], [0.0, 0.0])
            } else {
                let out = (1.0 - tilt * tilt).sqrt() / scale;
                let nu_x = if surface.dim == 1 { [out, 0.0] } else { [out * cs, out * sn] };
                ComplexFrame::new(*surface, [0.0, 0.0], x, mu, [-tilt * sn, tilt * cs], nu_x)
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn generators_are_reproducible() {
        let grid = ComplexGrid::new(4.0, 1.0 / 8.0).unwrap();
        let w = grid.window(-2.0, 2.0, -1.5, 1.5).unwrap();
        let spec = GeneratorSpec::default();
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            random_connection(&mut rng, grid, w, &spec).unwrap().component(0).data().to_vec()
        };
        assert_eq!(draw(5), draw(5));
        assert_ne!(draw(5), draw(6));
    }

    #[test]
    fn unitary_gauges_are_unitary() {
        let grid = ComplexGrid::new(4.0, 1.0 / 8.0).unwrap();
        let w = grid.window(-2.0, 2.0, -1.5, 1.5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let g = random_gauge(&mut rng, grid, w, &GeneratorSpec::default()).unwrap();
        assert!(g.unitarity_defect() < 1e-12);
        assert!(g.boundary_identity());
    }

    #[test]
    fn frame_plan_alternates_planar_and_tilted() {
        let s = SimpleSurface::interval(2.0).unwrap();
        let frames = frame_plan(&s, 4, 0.6).unwrap();
        assert_eq!(frames.len(), 4);
        assert_eq!(frames[0].nu_x, [0.0, 0.0]);
        assert!(frames[1].nu_x[0] > 0.0);
        let disk = SimpleSurface::disk(1.0, crate::geometry::ConformalFactor::Flat).unwrap();
        assert!(frame_plan(&disk, 3, 0.6).is_ok());
    }
}
