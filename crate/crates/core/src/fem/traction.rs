use std::collections::{BTreeMap, BTreeSet};

use super::assembly::apply_stiffness;
use crate::error::{Error, Result};
use crate::material::ElasticModel;
use crate::mesh::{edge_key, Mesh};
use crate::par::Execution;

/// Consistent boundary flux of `u` on a subdomain: t(φ_i) = a(u, φ_i) − l(φ_i)
/// for the hat functions of the nodes of `facets`, which must lie on the
/// boundary of the element subset. `load` is the subdomain's nodal load
/// functional (length 2N).
pub fn recover_traction(
    mesh: &Mesh,
    model: &ElasticModel,
    elements: &[usize],
    u: &[f64],
    load: &[f64],
    facets: &[[usize; 2]],
    exec: Execution,
) -> Result<BTreeMap<usize, [f64; 2]>> {
    let mut count: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for &e in elements {
        let v = mesh.elements[e].vertices;
        for k in 0..3 {
            *count.entry(edge_key(v[k], v[(k + 1) % 3])).or_default() += 1;
        }
    }
    let mut nodes = BTreeSet::new();
    for f in facets {
        if count.get(&edge_key(f[0], f[1])) != Some(&1) {
            return Err(Error::Domain(format!(
                "facet {f:?} is not on the boundary of the subdomain"
            )));
        }
        nodes.extend(f.iter().copied());
    }
    let ku = apply_stiffness(mesh, model, elements, u, exec)?;
    Ok(nodes
        .into_iter()
        .map(|v| (v, [ku[2 * v] - load[2 * v], ku[2 * v + 1] - load[2 * v + 1]]))
        .collect())
}
