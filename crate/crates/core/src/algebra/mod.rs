//! Complex matrix fields, connections, gauge action, curvature, symmetric
//! tensors and fiberwise Fourier analysis.

pub mod connection;
pub mod field;
pub mod fourier;
pub mod io;
pub mod tensor;

pub use connection::{curvature, dzbar_component, gauge_pullback, Connection, Frame, GaugeTransform};
pub use field::{Axis, MatrixField};
pub use fourier::{fourier_degree, Degree};
pub use tensor::{pullback_pi_m, tensor_decompose, SymmetricTensorField};
