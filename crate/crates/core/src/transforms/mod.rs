//! Complex ray transform, transport solutions, symmetric derivatives and the
//! attenuated X-ray reduction.

pub mod derivative;
pub mod probe;
pub mod ray;
pub mod transport;
pub mod xray;

pub use derivative::sym_derivative;
pub use probe::{attenuated_smoke_test, kernel_injectivity_probe, ProbeConfig, ProbeReport, SmokeTrial};
pub use ray::{complex_ray_transform, exterior_representation, BoundaryTrace, RaySetup};
pub use transport::{global_transport_solution, TransportField};
pub use xray::{attenuated_xray, exact_derivative_defect, x1_fourier, x1_spectrum, AttenuatedSystem};
