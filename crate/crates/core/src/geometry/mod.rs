//! Simple surfaces, geodesics, bicharacteristic leaves and complex frames.

pub mod frames;
pub mod leaf;
pub mod surface;

pub use frames::{complexified_x_apply, xi_family, xi_limit, xi_normaliser, ComplexFrame};
pub use leaf::{build_leaf, AmbientConnection, AmbientGauge, Leaf, LeafChart};
pub use surface::{ConformalFactor, GeodesicPath, PathSample, SimpleSurface};
