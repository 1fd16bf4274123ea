//! Fault and slip identification from surface displacements.
//!
//! Candidate faults are graphs of piecewise-linear functions in a rotated
//! frame. Every candidate is meshed conformingly, the slip is expanded in a
//! sine basis along the fault, and data are displacements sampled at a fixed
//! set of points on the measured boundary patch Ξ.

mod dense;
mod experiment;
mod forward;
mod geometry;
mod optimize;

pub use dense::lstsq;
pub use experiment::{default_two_fault_cases, distinguishability_experiment, GapReport};
pub use forward::{forward_map, mode_value, FaultRealization, InverseContext, SlipParam, SurfaceData, XiSampling};
pub use geometry::{realize_fault, Domain, FaultParam};
pub use optimize::{
    fd_gradient, misfit, reconstruct, second_difference, FdGradient, Reconstruction, ReconstructOptions,
    TraceEntry,
};

/// Facet and region tags used by generated inverse meshes.
pub mod tags {
    pub const SIGMA: i32 = 1;
    pub const RIGHT: i32 = 2;
    pub const TOP: i32 = 3;
    pub const LEFT: i32 = 4;
    pub const XI: i32 = 5;
    pub const FAULT: i32 = 10;
    pub const OUTER: i32 = 1;
    pub const OMEGA_MINUS: i32 = 2;
}
