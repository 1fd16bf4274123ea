//! P1 finite-element machinery for plane-strain elasticity.

pub mod assembly;
pub mod cg;
pub mod cholesky;
pub mod dofmap;
pub mod norms;
pub mod quadrature;
pub mod rigid;
pub mod slip;
pub mod sparse;
pub mod traction;

pub use assembly::{
    apply_stiffness, assemble_load, assemble_stiffness, assemble_system, element_stiffness,
    nodal_load, LinearSystem, Loads,
};
pub use cg::{solve_spd, CgOptions, CgSolution};
pub use cholesky::SkylineCholesky;
pub use dofmap::DofMap;
pub use rigid::{lumped_mass, rigid_motion_basis, FloatingSolver, RigidBasis};
pub use slip::{weighted_slip_norm, SlipField};
pub use sparse::CsrMatrix;
pub use traction::recover_traction;

use crate::mesh::{BoundaryRoles, Mesh};

/// Per node: does it lie on a clamped (Σ) facet?
pub fn sigma_nodes(mesh: &Mesh, roles: &BoundaryRoles) -> Vec<bool> {
    let mut on = vec![false; mesh.nodes.len()];
    for f in &mesh.facets {
        if roles.sigma_tags.contains(&f.tag) {
            on[f.vertices[0]] = true;
            on[f.vertices[1]] = true;
        }
    }
    on
}

/// Linear-system solver choice for the direct (single global system) path.
#[derive(Debug, Clone, Copy, PartialEq)]
#[derive(Default)]
pub enum LinearSolver {
    #[default]
    Cholesky,
    Cg(CgOptions),
}


impl LinearSolver {
    pub fn solve(&self, system: &LinearSystem) -> crate::error::Result<Vec<f64>> {
        match self {
            LinearSolver::Cholesky => Ok(SkylineCholesky::factor(&system.matrix)?.solve(&system.rhs)),
            LinearSolver::Cg(opts) => Ok(solve_spd(&system.matrix, &system.rhs, *opts)?.x),
        }
    }
}
