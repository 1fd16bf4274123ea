use std::collections::BTreeMap;

use super::{DirectSolution, Setup};
use crate::error::{Error, Result};
use crate::fem::apply_stiffness;
use crate::fem::assembly::element_strain;
use crate::fem::SlipField;
use crate::material::{stress, ElasticModel};
use crate::par::Execution;

/// Discrete transmission checks of a dislocation solution.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TransmissionReport {
    /// max |[u] − g| over interior fault nodes.
    pub slip_error: f64,
    /// max |[u]| over Γ nodes off the closed fault.
    pub continuity_error: f64,
    /// Dual norm of the folded consistent residual on S̄ nodes.
    pub traction_residual_fault: f64,
    /// Same on Γ nodes off S̄.
    pub traction_residual_gamma: f64,
    /// Dual norm of the element-stress jump ∫[σ]n·φ_i on S̄ nodes.
    pub stress_jump_fault: f64,
    /// Same on Γ nodes off S̄.
    pub stress_jump_gamma: f64,
    /// Euclidean norm of K u − l at free nodes away from Γ.
    pub interior_residual: f64,
    /// Reference magnitude for the residuals (‖K u‖ + ‖l‖ on free nodes).
    pub residual_scale: f64,
}

impl TransmissionReport {
    /// Largest residual relative to `residual_scale`.
    pub fn relative_residual(&self) -> f64 {
        let worst = self
            .traction_residual_fault
            .max(self.traction_residual_gamma)
            .max(self.interior_residual);
        worst / self.residual_scale.max(f64::MIN_POSITIVE)
    }
}

fn dual_norm(values: &BTreeMap<usize, [f64; 2]>, mass: &BTreeMap<usize, f64>, pick: impl Fn(usize) -> bool) -> f64 {
    values
        .iter()
        .filter(|(v, _)| pick(**v))
        .map(|(v, r)| (r[0] * r[0] + r[1] * r[1]) / mass[v])
        .sum::<f64>()
        .sqrt()
}

/// Evaluates the jump, continuity and traction-balance conditions of `sol`
/// against `slip`. `load` is the nodal load on the split mesh.
pub fn verify_transmission(
    setup: &Setup,
    model: &ElasticModel,
    sol: &DirectSolution,
    slip: &SlipField,
    load: &[f64],
    exec: Execution,
) -> Result<TransmissionReport> {
    let mesh = &setup.split.mesh;
    let ft = &setup.ft;
    let n = mesh.nodes.len();
    if sol.field.len() != 2 * n || load.len() != 2 * n {
        return Err(Error::Dimension(format!(
            "field/load sizes {}/{} do not match the split mesh (2·{n})",
            sol.field.len(),
            load.len()
        )));
    }
    if sol.gamma_sides.len() != ft.gamma_nodes.len() {
        return Err(Error::Dimension("gamma_sides does not match Γ".into()));
    }
    let on_fault = |v: usize| ft.s_nodes.binary_search(&v).is_ok();

    let mut report = TransmissionReport::default();
    for (&v, (minus, plus)) in ft.gamma_nodes.iter().zip(&sol.gamma_sides) {
        let jump = [plus[0] - minus[0], plus[1] - minus[1]];
        if ft.split_map.contains_key(&v) {
            let g = slip.get(v);
            let e = (jump[0] - g[0]).hypot(jump[1] - g[1]);
            report.slip_error = report.slip_error.max(e);
        } else if !on_fault(v) {
            report.continuity_error = report.continuity_error.max(jump[0].hypot(jump[1]));
        }
    }

    let mut mass: BTreeMap<usize, f64> = ft.gamma_nodes.iter().map(|&v| (v, 0.0)).collect();
    for f in &ft.gamma_facets {
        let [a, b] = f.vertices;
        let (pa, pb) = (setup.mesh.nodes[a], setup.mesh.nodes[b]);
        let half = 0.5 * (pb[0] - pa[0]).hypot(pb[1] - pa[1]);
        *mass.get_mut(&a).unwrap() += half;
        *mass.get_mut(&b).unwrap() += half;
    }

    let elements = setup.all_elements();
    let ku = apply_stiffness(mesh, model, &elements, &sol.field, exec)?;
    let r: Vec<f64> = ku.iter().zip(load).map(|(a, b)| a - b).collect();
    let folded: BTreeMap<usize, [f64; 2]> = ft
        .gamma_nodes
        .iter()
        .map(|&v| {
            let mut rv = [r[2 * v], r[2 * v + 1]];
            if let Some(&d) = ft.split_map.get(&v) {
                rv[0] += r[2 * d];
                rv[1] += r[2 * d + 1];
            }
            (v, rv)
        })
        .collect();
    report.traction_residual_fault = dual_norm(&folded, &mass, on_fault);
    report.traction_residual_gamma = dual_norm(&folded, &mass, |v| !on_fault(v));

    let mut jumps: BTreeMap<usize, [f64; 2]> = ft.gamma_nodes.iter().map(|&v| (v, [0.0; 2])).collect();
    let elem_stress = |e: usize| -> Result<[f64; 3]> {
        let el = &mesh.elements[e];
        let (l, m) = model.lame_at(el.region, mesh.centroid(e))?;
        Ok(stress(l, m, element_strain(mesh, e, &sol.field)?))
    };
    for f in &ft.gamma_facets {
        let sm = elem_stress(f.minus_element)?;
        let sp = elem_stress(f.plus_element)?;
        let ds = [sp[0] - sm[0], sp[1] - sm[1], sp[2] - sm[2]];
        let nv = f.normal;
        let t = [ds[0] * nv[0] + ds[2] * nv[1], ds[2] * nv[0] + ds[1] * nv[1]];
        let [a, b] = f.vertices;
        let (pa, pb) = (setup.mesh.nodes[a], setup.mesh.nodes[b]);
        let half = 0.5 * (pb[0] - pa[0]).hypot(pb[1] - pa[1]);
        for v in [a, b] {
            let j = jumps.get_mut(&v).unwrap();
            j[0] += half * t[0];
            j[1] += half * t[1];
        }
    }
    report.stress_jump_fault = dual_norm(&jumps, &mass, on_fault);
    report.stress_jump_gamma = dual_norm(&jumps, &mass, |v| !on_fault(v));

    let mut on_gamma = vec![false; n];
    for &v in &ft.gamma_nodes {
        on_gamma[v] = true;
        if let Some(&d) = ft.split_map.get(&v) {
            on_gamma[d] = true;
        }
    }
    let (mut interior, mut ku2, mut l2) = (0.0, 0.0, 0.0);
    for v in 0..n {
        if setup.sigma[v] {
            continue;
        }
        for c in 0..2 {
            let i = 2 * v + c;
            ku2 += ku[i] * ku[i];
            l2 += load[i] * load[i];
            if !on_gamma[v] {
                interior += r[i] * r[i];
            }
        }
    }
    report.interior_residual = interior.sqrt();
    report.residual_scale = ku2.sqrt() + l2.sqrt();
    Ok(report)
}
