//! Forward dislocation solvers.
//!
//! [`InterfaceOperator`] realizes the constructive route: Neumann-to-Dirichlet
//! maps of the inner subdomain Ω⁻ (bounded by the closed extension Γ of the
//! fault) and the outer subdomain Ω⁺ are coupled through an interface
//! equation for the traction on Γ. [`solve_split_node`] is the independent
//! route through duplicated fault nodes. Both write their result on the same
//! split mesh so they can be compared node by node.

mod interface;
pub mod manufactured;
mod neumann;
mod split_node;
mod transmission;

pub use interface::{extend_slip, split_load, InterfaceOperator, InterfaceSolution, OperatorProbe};
pub use manufactured::{manufactured_case, ManufacturedCase, ManufacturedKind};
pub use neumann::{solve_neumann_variant, NeumannSolution};
pub use split_node::merge_load;
pub use split_node::{solve_continuous, solve_split_node};
pub use transmission::{verify_transmission, TransmissionReport};

use crate::error::{Error, Result};
use crate::fem::{self, Loads};
use crate::mesh::{
    build_fault_topology, split_fault_nodes, validate_roles, BoundaryRoles, FaultTopology, Mesh,
    SplitMesh,
};

/// Validated geometry of one dislocation problem.
#[derive(Debug, Clone)]
pub struct Setup {
    pub mesh: Mesh,
    pub roles: BoundaryRoles,
    pub ft: FaultTopology,
    pub split: SplitMesh,
    /// Per split-mesh node: clamped on Σ?
    pub sigma: Vec<bool>,
}

impl Setup {
    pub fn new(mesh: Mesh, roles: BoundaryRoles) -> Result<Self> {
        mesh.validate()?;
        validate_roles(&mesh, &roles)?;
        let ft = build_fault_topology(&mesh, &roles)?;
        let split = split_fault_nodes(&mesh, &ft)?;
        let mut sigma = fem::sigma_nodes(&mesh, &roles);
        sigma.resize(split.mesh.nodes.len(), false);
        Ok(Setup { mesh, roles, ft, split, sigma })
    }

    pub fn n_split_nodes(&self) -> usize {
        self.split.mesh.nodes.len()
    }

    pub fn all_elements(&self) -> Vec<usize> {
        (0..self.mesh.elements.len()).collect()
    }

    /// Nodal load functional on the split mesh from body forces and
    /// boundary tractions.
    pub fn nodal_load(&self, loads: &Loads<'_>) -> Result<Vec<f64>> {
        fem::nodal_load(&self.split.mesh, &self.all_elements(), loads)
    }

    /// Prescribed split-node offsets: value g at every plus-side duplicate.
    pub fn slip_lift(&self, slip: &fem::SlipField) -> Vec<f64> {
        let mut lift = vec![0.0; 2 * self.n_split_nodes()];
        for (&orig, &dup) in &self.split.split_map {
            let g = slip.get(orig);
            lift[2 * dup] = g[0];
            lift[2 * dup + 1] = g[1];
        }
        lift
    }

    pub fn require_clamped(&self) -> Result<()> {
        if self.sigma.iter().any(|&s| s) {
            Ok(())
        } else {
            Err(Error::Config {
                section: Some("roles".into()),
                key: Some("sigma_tags".into()),
                line: None,
                msg: "the clamped boundary Σ is empty".into(),
            })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Interface,
    SplitNode,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::Interface => "interface",
            Method::SplitNode => "split",
        })
    }
}

/// A displacement field on the split mesh produced by one of the solvers.
#[derive(Debug, Clone)]
pub struct DirectSolution {
    pub method: Method,
    /// Nodal values on the split mesh (length 2·N_split).
    pub field: Vec<f64>,
    /// Two-sided values at Γ nodes (in `ft.gamma_nodes` order) as
    /// (minus, plus); equal for split-node solutions at unsplit nodes.
    pub gamma_sides: Vec<([f64; 2], [f64; 2])>,
    pub report: TransmissionReport,
}
