use crate::algebra::field::MatrixField;
use crate::grid::IndexBox;

/// Discrete L² norm of the finite-difference `∂_{z̄} u` over `region`.
pub fn holomorphy_test(u: &MatrixField, region: &IndexBox) -> f64 {
    let w = region.grow(3, u.grid()).intersect(&u.window()).unwrap_or(u.window());
    u.restrict(w).dzbar().l2_norm(Some(region))
}

/// Residual threshold below which a field counts as holomorphic on `region`.
pub fn holomorphy_threshold(u: &MatrixField, region: &IndexBox) -> f64 {
    let h = u.grid().h();
    let area = region.len() as f64 * h * h;
    1e-6 * area.sqrt() * (h * 128.0).powi(4)
}
