//! P1 stiffness and load assembly.

use super::dofmap::DofMap;
use super::quadrature::{gauss_segment, triangle_deg5};
use super::sparse::CsrMatrix;
use crate::error::{Error, Result};
use crate::material::{ElasticModel, Sym2};
use crate::mesh::{signed_area, Mesh, Point};
use crate::par::{self, Execution};

pub type ElementMatrix = [[f64; 6]; 6];

/// Gradients of the barycentric hat functions and the element area.
pub fn hat_gradients(p: [Point; 3]) -> Result<([[f64; 2]; 3], f64)> {
    let area = signed_area(p[0], p[1], p[2]);
    let scale = (p[1][0] - p[0][0]).abs().max((p[2][1] - p[0][1]).abs()).max(1e-300);
    if !(area > 1e-14 * scale * scale) {
        return Err(Error::Assembly(format!("degenerate element (area {area:e})")));
    }
    let mut g = [[0.0; 2]; 3];
    for i in 0..3 {
        let j = (i + 1) % 3;
        let k = (i + 2) % 3;
        g[i] = [(p[j][1] - p[k][1]) / (2.0 * area), (p[k][0] - p[j][0]) / (2.0 * area)];
    }
    Ok((g, area))
}

/// Plane-strain element matrix ∫ C ε(φ_b) : ε(φ_a) with Lamé values taken at
/// the centroid (exact for affine coefficients and constant strains).
pub fn element_stiffness(p: [Point; 3], lambda: f64, mu: f64) -> Result<ElementMatrix> {
    let (g, area) = hat_gradients(p)?;
    let mut k = [[0.0; 6]; 6];
    for a in 0..3 {
        for b in 0..3 {
            let gg = g[a][0] * g[b][0] + g[a][1] * g[b][1];
            for i in 0..2 {
                for j in 0..2 {
                    let delta = if i == j { gg } else { 0.0 };
                    k[2 * a + i][2 * b + j] =
                        area * (lambda * g[a][i] * g[b][j] + mu * (delta + g[a][j] * g[b][i]));
                }
            }
        }
    }
    Ok(k)
}

pub fn element_matrix(mesh: &Mesh, model: &ElasticModel, e: usize) -> Result<ElementMatrix> {
    let c = mesh.centroid(e);
    let (l, m) = model.lame_at(mesh.elements[e].region, c)?;
    element_stiffness(mesh.element_points(e), l, m).map_err(|err| match err {
        Error::Assembly(msg) => Error::Assembly(format!("element {e}: {msg}")),
        other => other,
    })
}

fn element_matrices(mesh: &Mesh, model: &ElasticModel, elements: &[usize], exec: Execution) -> Result<Vec<ElementMatrix>> {
    par::try_map_range(exec, elements.len(), |i| element_matrix(mesh, model, elements[i]))
}

/// Symmetric system on the free dofs of a [`DofMap`].
#[derive(Debug, Clone)]
pub struct LinearSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
}

/// Assembles K on the free dofs. Constrained and inactive components are
/// eliminated (rows and columns dropped).
pub fn assemble_stiffness(mesh: &Mesh, model: &ElasticModel, elements: &[usize], dofmap: &DofMap, exec: Execution) -> Result<CsrMatrix> {
    Ok(assemble_system(mesh, model, elements, dofmap, None, None, exec)?.matrix)
}

/// Assembles the reduced system for u = T x + lift:
/// Tᵀ K T x = Tᵀ (l − K lift). The lift carries Dirichlet values and
/// prescribed split-node jumps.
pub fn assemble_system(
    mesh: &Mesh,
    model: &ElasticModel,
    elements: &[usize],
    dofmap: &DofMap,
    lift: Option<&[f64]>,
    nodal_load: Option<&[f64]>,
    exec: Execution,
) -> Result<LinearSystem> {
    let mats = element_matrices(mesh, model, elements, exec)?;
    let n = dofmap.n_free();
    let mut rhs = match nodal_load {
        Some(l) => dofmap.reduce(l),
        None => vec![0.0; n],
    };
    let mut trip = Vec::with_capacity(36 * elements.len());
    for (ke, &e) in mats.iter().zip(elements) {
        let v = mesh.elements[e].vertices;
        let mut idx = [None; 6];
        let mut lv = [0.0; 6];
        for a in 0..3 {
            for c in 0..2 {
                idx[2 * a + c] = dofmap.dof(v[a], c);
                if let Some(l) = lift {
                    lv[2 * a + c] = l[2 * v[a] + c];
                }
            }
        }
        for r in 0..6 {
            let Some(i) = idx[r] else { continue };
            for s in 0..6 {
                if let Some(j) = idx[s] {
                    trip.push((i, j, ke[r][s]));
                }
                if lv[s] != 0.0 {
                    rhs[i] -= ke[r][s] * lv[s];
                }
            }
        }
    }
    Ok(LinearSystem { matrix: CsrMatrix::from_triplets(n, trip), rhs })
}

/// Nodal residual-style product K u over a subset of elements, for a nodal
/// field u of length 2N (any mesh, split or not).
pub fn apply_stiffness(mesh: &Mesh, model: &ElasticModel, elements: &[usize], u: &[f64], exec: Execution) -> Result<Vec<f64>> {
    let mats = element_matrices(mesh, model, elements, exec)?;
    let mut out = vec![0.0; 2 * mesh.nodes.len()];
    for (ke, &e) in mats.iter().zip(elements) {
        let v = mesh.elements[e].vertices;
        let mut ue = [0.0; 6];
        for a in 0..3 {
            ue[2 * a] = u[2 * v[a]];
            ue[2 * a + 1] = u[2 * v[a] + 1];
        }
        for a in 0..3 {
            for c in 0..2 {
                let r = 2 * a + c;
                out[2 * v[a] + c] += (0..6).map(|s| ke[r][s] * ue[s]).sum::<f64>();
            }
        }
    }
    Ok(out)
}

/// Energy a(u, u) over a subset of elements.
pub fn strain_energy(mesh: &Mesh, model: &ElasticModel, elements: &[usize], u: &[f64], exec: Execution) -> Result<f64> {
    let ku = apply_stiffness(mesh, model, elements, u, exec)?;
    Ok(ku.iter().zip(u).map(|(a, b)| a * b).sum())
}

/// Constant strain of a P1 element for a nodal field u.
pub fn element_strain(mesh: &Mesh, e: usize, u: &[f64]) -> Result<Sym2> {
    let (g, _) = hat_gradients(mesh.element_points(e))?;
    let v = mesh.elements[e].vertices;
    let mut du = [[0.0; 2]; 2];
    for a in 0..3 {
        for i in 0..2 {
            for j in 0..2 {
                du[i][j] += u[2 * v[a] + i] * g[a][j];
            }
        }
    }
    Ok([du[0][0], du[1][1], 0.5 * (du[0][1] + du[1][0])])
}

pub type VectorField<'a> = &'a (dyn Fn(Point) -> [f64; 2] + Sync);
pub type RegionField<'a> = &'a (dyn Fn(i32, Point) -> [f64; 2] + Sync);

/// Volume and boundary loads.
#[derive(Clone, Default)]
pub struct Loads<'a> {
    /// Body force by region and position.
    pub body: Option<RegionField<'a>>,
    /// Surface traction per facet tag.
    pub traction: Vec<(i32, VectorField<'a>)>,
}

/// Adds ∫_T f·φ_a over one element, degree-5 quadrature.
pub fn add_element_load(nodal: &mut [f64], mesh: &Mesh, e: usize, f: &dyn Fn(Point) -> [f64; 2]) {
    let p = mesh.element_points(e);
    let area = mesh.element_area(e);
    let v = mesh.elements[e].vertices;
    for (l, w) in triangle_deg5() {
        let x = [
            l[0] * p[0][0] + l[1] * p[1][0] + l[2] * p[2][0],
            l[0] * p[0][1] + l[1] * p[1][1] + l[2] * p[2][1],
        ];
        let fx = f(x);
        for a in 0..3 {
            nodal[2 * v[a]] += area * w * fx[0] * l[a];
            nodal[2 * v[a] + 1] += area * w * fx[1] * l[a];
        }
    }
}

/// Adds ∫_edge t·φ over the segment between nodes `na` and `nb`, with the
/// field evaluated at geometric positions `pa`, `pb` (3-point Gauss).
pub fn add_edge_load(nodal: &mut [f64], na: usize, nb: usize, pa: Point, pb: Point, t: &dyn Fn(Point) -> [f64; 2]) {
    let len = ((pb[0] - pa[0]).powi(2) + (pb[1] - pa[1]).powi(2)).sqrt();
    for (s, w) in gauss_segment(3) {
        let x = [pa[0] + s * (pb[0] - pa[0]), pa[1] + s * (pb[1] - pa[1])];
        let tx = t(x);
        for (node, phi) in [(na, 1.0 - s), (nb, s)] {
            nodal[2 * node] += len * w * tx[0] * phi;
            nodal[2 * node + 1] += len * w * tx[1] * phi;
        }
    }
}

/// Nodal load functional (length 2N) for body forces on `elements` and
/// tractions on tagged facets.
pub fn nodal_load(mesh: &Mesh, elements: &[usize], loads: &Loads<'_>) -> Result<Vec<f64>> {
    let mut nodal = vec![0.0; 2 * mesh.nodes.len()];
    if let Some(body) = loads.body {
        for &e in elements {
            let region = mesh.elements[e].region;
            add_element_load(&mut nodal, mesh, e, &|x| body(region, x));
        }
    }
    for (tag, h) in &loads.traction {
        let mut found = false;
        for f in mesh.facets.iter().filter(|f| f.tag == *tag) {
            found = true;
            let [a, b] = f.vertices;
            add_edge_load(&mut nodal, a, b, mesh.nodes[a], mesh.nodes[b], *h);
        }
        if !found {
            return Err(Error::Config {
                section: None,
                key: None,
                line: None,
                msg: format!("traction given on unknown facet tag {tag}"),
            });
        }
    }
    Ok(nodal)
}

pub fn assemble_load(mesh: &Mesh, elements: &[usize], loads: &Loads<'_>, dofmap: &DofMap) -> Result<Vec<f64>> {
    Ok(dofmap.reduce(&nodal_load(mesh, elements, loads)?))
}
