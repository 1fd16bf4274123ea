use super::{verify_transmission, DirectSolution, Method, Setup};
use crate::error::Result;
use crate::fem::{assemble_system, DofMap, LinearSolver, SlipField};
use crate::material::ElasticModel;
use crate::par::Execution;

/// Split-node solve: one global system on the split mesh where each
/// plus-side duplicate is replaced by its minus-side partner plus the known
/// slip, u⁺ = u⁻ + g, and the known part moved to the right-hand side.
///
/// `load` is a nodal functional on the split mesh (zero when `None`).
pub fn solve_split_node(
    setup: &Setup,
    model: &ElasticModel,
    slip: &SlipField,
    load: Option<&[f64]>,
    solver: LinearSolver,
    exec: Execution,
) -> Result<DirectSolution> {
    setup.require_clamped()?;
    slip.validate(&setup.ft)?;
    let mesh = &setup.split.mesh;
    let elements = setup.all_elements();
    let dofmap = DofMap::with_alias(mesh, &elements, &setup.sigma, &setup.split.merge);
    let lift = setup.slip_lift(slip);
    let system = assemble_system(mesh, model, &elements, &dofmap, Some(&lift), load, exec)?;
    let x = solver.solve(&system)?;
    let field = dofmap.expand(&x, Some(&lift));
    let zero;
    let load = match load {
        Some(l) => l,
        None => {
            zero = vec![0.0; field.len()];
            &zero
        }
    };
    let gamma_sides = gamma_sides(setup, &field);
    let mut sol = DirectSolution {
        method: Method::SplitNode,
        field,
        gamma_sides,
        report: Default::default(),
    };
    sol.report = verify_transmission(setup, model, &sol, slip, load, exec)?;
    Ok(sol)
}

/// Continuous solve on the original (unsplit) mesh; nodal field of length 2N.
pub fn solve_continuous(
    setup: &Setup,
    model: &ElasticModel,
    load: Option<&[f64]>,
    solver: LinearSolver,
    exec: Execution,
) -> Result<Vec<f64>> {
    setup.require_clamped()?;
    let mesh = &setup.mesh;
    let elements = setup.all_elements();
    let n = mesh.nodes.len();
    let dofmap = DofMap::new(mesh, &elements, &setup.sigma[..n]);
    let system = assemble_system(mesh, model, &elements, &dofmap, None, load, exec)?;
    let x = solver.solve(&system)?;
    Ok(dofmap.expand(&x, None))
}

/// (minus, plus) values at Γ nodes read from a split-mesh field.
pub(super) fn gamma_sides(setup: &Setup, field: &[f64]) -> Vec<([f64; 2], [f64; 2])> {
    setup
        .ft
        .gamma_nodes
        .iter()
        .map(|&v| {
            let minus = [field[2 * v], field[2 * v + 1]];
            let p = setup.split.split_map.get(&v).copied().unwrap_or(v);
            (minus, [field[2 * p], field[2 * p + 1]])
        })
        .collect()
}

/// Folds a nodal load on the split mesh onto the original nodes.
pub fn merge_load(setup: &Setup, load: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; 2 * setup.mesh.nodes.len()];
    for (v, &m) in setup.split.merge.iter().enumerate() {
        out[2 * m] += load[2 * v];
        out[2 * m + 1] += load[2 * v + 1];
    }
    out
}
