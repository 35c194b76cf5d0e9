//! Complex parallel transport, gauge gluing along leaves and the
//! non-uniqueness counterexample.

pub mod counterexample;
pub mod glue;
pub mod transport;

pub use counterexample::{counterexample_generate, line_transport_deviation, Counterexample};
pub use glue::{
    amplitudes, det_consistency, gauge_glue, monomial, stokes_moment_check, symmetry_check, DetReport, FlatGaugeModel, FrameGlue,
    GlueOutput, StokesMoment, SymmetryReport,
};
pub use transport::{
    complex_parallel_transport, equal_transport_check, real_parallel_transport, real_transport_geodesic,
    real_transport_leaf_line, EqualTransport, TransportCertificate,
};
