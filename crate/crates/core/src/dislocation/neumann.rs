use super::split_node::gamma_sides;
use super::{verify_transmission, DirectSolution, Method, Setup};
use crate::error::{Error, Result};
use crate::fem::sparse::norm;
use crate::fem::{assemble_system, rigid_motion_basis, DofMap, FloatingSolver, RigidBasis, SlipField};
use crate::material::ElasticModel;
use crate::par::{self, Execution};

/// Pure-traction problem u_N = ů + w.
#[derive(Debug, Clone)]
pub struct NeumannSolution {
    /// Combined solve with slip and boundary traction.
    pub combined: DirectSolution,
    /// Slip only, traction-free.
    pub slip_part: Vec<f64>,
    /// Traction only, no slip.
    pub traction_part: Vec<f64>,
    /// ‖combined − (ů + w)‖ / ‖combined‖ (absolute when the combined field is 0).
    pub superposition_defect: f64,
}

struct NeumannSystem<'a> {
    setup: &'a Setup,
    model: &'a ElasticModel,
    dofmap: DofMap,
    basis: RigidBasis,
    solver: FloatingSolver,
    exec: Execution,
}

impl NeumannSystem<'_> {
    /// Rigid-motion-free field for a compatible load and a slip lift.
    fn solve(&self, slip: &SlipField, load: &[f64]) -> Result<Vec<f64>> {
        let mesh = &self.setup.split.mesh;
        let lift = self.setup.slip_lift(slip);
        let elements = self.setup.all_elements();
        let sys = assemble_system(mesh, self.model, &elements, &self.dofmap, Some(&lift), Some(load), self.exec)?;
        let (x, _) = self.solver.solve(&sys.rhs, [0.0; 3]);
        let mut u = self.dofmap.expand(&x, Some(&lift));
        self.basis.project_out(&mut u);
        Ok(u)
    }

    /// Removes the rigid-motion resultants from a nodal load.
    fn compatible(&self, load: &[f64]) -> Vec<f64> {
        let mut out = load.to_vec();
        for r in &self.basis.vectors {
            let c: f64 = r.iter().zip(load).map(|(a, b)| a * b).sum();
            for (i, o) in out.iter_mut().enumerate() {
                *o -= c * self.basis.mass[i / 2] * r[i];
            }
        }
        out
    }
}

/// Solves the fault problem with tractions on the whole boundary. The
/// traction load is projected onto the compatible loads and every field is
/// normalized against global rigid motions; the combined solve is compared
/// with the sum of the slip-only and traction-only solves.
pub fn solve_neumann_variant(
    setup: &Setup,
    model: &ElasticModel,
    slip: &SlipField,
    traction_load: Option<&[f64]>,
    exec: Execution,
) -> Result<NeumannSolution> {
    if setup.sigma.iter().any(|&s| s) {
        return Err(Error::Config {
            section: Some("roles".into()),
            key: Some("sigma_tags".into()),
            line: None,
            msg: "the Neumann variant needs a fully traction-loaded boundary (Σ must be empty)".into(),
        });
    }
    slip.validate(&setup.ft)?;
    let mesh = &setup.split.mesh;
    let elements = setup.all_elements();
    let dofmap = DofMap::with_alias(mesh, &elements, &setup.sigma, &setup.split.merge);
    let k = assemble_system(mesh, model, &elements, &dofmap, None, None, exec)?.matrix;
    let basis = rigid_motion_basis(mesh, &elements);
    let solver = FloatingSolver::new(mesh, &dofmap, &k, &basis)?;
    let sys = NeumannSystem { setup, model, dofmap, basis, solver, exec };

    let zero = vec![0.0; 2 * mesh.nodes.len()];
    let load = sys.compatible(traction_load.unwrap_or(&zero));
    let no_slip = SlipField::zero(&setup.ft);
    let (combined, (slip_part, traction_part)) = par::join(
        exec,
        || sys.solve(slip, &load),
        || par::join(exec, || sys.solve(slip, &zero), || sys.solve(&no_slip, &load)),
    );
    let (combined, slip_part, traction_part) = (combined?, slip_part?, traction_part?);
    let diff: Vec<f64> = (0..combined.len())
        .map(|i| combined[i] - slip_part[i] - traction_part[i])
        .collect();
    let scale = norm(&combined);
    let defect = if scale > 0.0 { norm(&diff) / scale } else { norm(&diff) };

    let mut sol = DirectSolution {
        method: Method::SplitNode,
        gamma_sides: gamma_sides(setup, &combined),
        field: combined,
        report: Default::default(),
    };
    sol.report = verify_transmission(setup, model, &sol, slip, &load, exec)?;
    Ok(NeumannSolution { combined: sol, slip_part, traction_part, superposition_defect: defect })
}
