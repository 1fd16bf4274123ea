//! Forward and inverse solvers for elastostatic dislocations in bounded,
//! layered, isotropic 2D bodies.
//!
//! The forward problem prescribes a displacement jump (slip) across a buried
//! fault. Two independent discretizations are provided: an interface-equation
//! solver that couples a Neumann problem inside a closed extension of the
//! fault with a mixed problem outside it, and a split-node solver that
//! duplicates fault nodes and eliminates the jump constraint.

pub mod dislocation;
pub mod error;
pub mod fem;
pub mod inverse;
pub mod io;
pub mod material;
pub mod mesh;
pub mod par;

pub use error::{Error, Result};
pub use par::Execution;
