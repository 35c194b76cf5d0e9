//! Cauchy operator, matrix ∂̄-solvers, Plemelj–Sokhotski extension and
//! holomorphy testing on a [`ComplexGrid`](crate::grid::ComplexGrid).

pub mod cauchy;
pub mod contour;
pub mod holomorphy;
pub mod solve;

pub use cauchy::{cauchy_transform, CauchyOperator};
pub use contour::{plemelj_extension, BoundaryContour};
pub use holomorphy::holomorphy_test;
pub use solve::{solve_dbar_commutator, solve_dbar_invertible, solve_dbar_source, SolverOptions};
