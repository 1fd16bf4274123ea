use std::collections::BTreeMap;

use super::quadrature::gauss_segment;
use crate::error::{Error, Result};
use crate::mesh::{FaultTopology, Mesh, Point};

/// Nodal slip on the closed fault S̄, vanishing at ∂S.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SlipField {
    pub values: BTreeMap<usize, [f64; 2]>,
}

impl SlipField {
    pub fn zero(ft: &FaultTopology) -> Self {
        SlipField { values: ft.s_nodes.iter().map(|&v| (v, [0.0, 0.0])).collect() }
    }

    /// Samples `g` at the fault nodes; ∂S nodes receive exactly zero only if
    /// `g` vanishes there, which [`SlipField::validate`] checks.
    pub fn from_fn(mesh: &Mesh, ft: &FaultTopology, g: impl Fn(Point) -> [f64; 2]) -> Self {
        SlipField { values: ft.s_nodes.iter().map(|&v| (v, g(mesh.nodes[v]))).collect() }
    }

    pub fn get(&self, node: usize) -> [f64; 2] {
        self.values.get(&node).copied().unwrap_or([0.0, 0.0])
    }

    pub fn scaled(&self, s: f64) -> Self {
        SlipField { values: self.values.iter().map(|(&k, v)| (k, [s * v[0], s * v[1]])).collect() }
    }

    pub fn validate(&self, ft: &FaultTopology) -> Result<()> {
        for (&v, g) in &self.values {
            if !g[0].is_finite() || !g[1].is_finite() {
                return Err(Error::Invariant(format!("non-finite slip at node {v}")));
            }
            if ft.s_nodes.binary_search(&v).is_err() {
                return Err(Error::Invariant(format!("slip given at node {v}, which is not on the fault")));
            }
        }
        for &v in &ft.s_boundary_nodes {
            let g = self.get(v);
            if g != [0.0, 0.0] {
                return Err(Error::Invariant(format!(
                    "slip must vanish on ∂S, but node {v} carries {g:?}"
                )));
            }
        }
        Ok(())
    }
}

/// Surrogate of the H^{1/2}_{00}(S) norm:
/// (∫_S |g|²)^{1/2} + (∫_S ρ⁻¹ |g|²)^{1/2}, 2-point Gauss per fault facet.
pub fn weighted_slip_norm(slip: &SlipField, ft: &FaultTopology) -> Result<f64> {
    slip.validate(ft)?;
    let mut plain = 0.0;
    let mut weighted = 0.0;
    for (f, seg) in ft.s_facets.iter().zip(&ft.s_segments) {
        let [a, b] = f.vertices;
        let (ga, gb) = (slip.get(a), slip.get(b));
        let len = (seg[1][0] - seg[0][0]).hypot(seg[1][1] - seg[0][1]);
        for (s, w) in gauss_segment(2) {
            let x = [seg[0][0] + s * (seg[1][0] - seg[0][0]), seg[0][1] + s * (seg[1][1] - seg[0][1])];
            let g = [(1.0 - s) * ga[0] + s * gb[0], (1.0 - s) * ga[1] + s * gb[1]];
            let g2 = g[0] * g[0] + g[1] * g[1];
            let rho = ft
                .s_boundary_points
                .iter()
                .map(|q| (x[0] - q[0]).hypot(x[1] - q[1]))
                .fold(f64::INFINITY, f64::min);
            plain += len * w * g2;
            if rho.is_finite() {
                weighted += len * w * g2 / rho;
            }
        }
    }
    Ok(plain.sqrt() + weighted.sqrt())
}
