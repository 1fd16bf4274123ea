//! Simplicial meshes with region and facet tags, the derived fault topology,
//! and the split-node mesh used by the direct solvers.

mod dmesh;
pub mod generate;
mod topology;

use std::collections::BTreeMap;

use crate::error::{Error, Result};

pub use dmesh::{parse_mesh, write_mesh};
pub use topology::{
    build_fault_topology, split_fault_nodes, validate_roles, weight_function, BoundaryRoles,
    FaultTopology, OrientedFacet, SplitMesh,
};

pub type Point = [f64; 2];

#[derive(Debug, Clone, PartialEq)]
pub struct Element {
    pub region: i32,
    /// Counter-clockwise vertex ids.
    pub vertices: [usize; 3],
}

#[derive(Debug, Clone, PartialEq)]
pub struct Facet {
    pub tag: i32,
    pub vertices: [usize; 2],
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pub dim: usize,
    pub nodes: Vec<Point>,
    pub elements: Vec<Element>,
    pub facets: Vec<Facet>,
}

/// Elements adjacent to each undirected edge, keyed by sorted vertex pair.
pub type EdgeMap = BTreeMap<(usize, usize), Vec<usize>>;

pub(crate) fn edge_key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

pub fn signed_area(a: Point, b: Point, c: Point) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

impl Mesh {
    pub fn element_points(&self, e: usize) -> [Point; 3] {
        let v = self.elements[e].vertices;
        [self.nodes[v[0]], self.nodes[v[1]], self.nodes[v[2]]]
    }

    pub fn element_area(&self, e: usize) -> f64 {
        let [a, b, c] = self.element_points(e);
        signed_area(a, b, c)
    }

    pub fn centroid(&self, e: usize) -> Point {
        let [a, b, c] = self.element_points(e);
        [(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0]
    }

    pub fn total_area(&self) -> f64 {
        (0..self.elements.len()).map(|e| self.element_area(e)).sum()
    }

    pub fn regions(&self) -> Vec<i32> {
        let mut r: Vec<i32> = self.elements.iter().map(|e| e.region).collect();
        r.sort_unstable();
        r.dedup();
        r
    }

    pub fn edge_map(&self) -> EdgeMap {
        let mut map: EdgeMap = BTreeMap::new();
        for (e, el) in self.elements.iter().enumerate() {
            let v = el.vertices;
            for k in 0..3 {
                map.entry(edge_key(v[k], v[(k + 1) % 3])).or_default().push(e);
            }
        }
        map
    }

    /// Edges with exactly one adjacent element.
    pub fn boundary_edges(&self) -> Vec<(usize, usize)> {
        self.edge_map()
            .into_iter()
            .filter(|(_, adj)| adj.len() == 1)
            .map(|(k, _)| k)
            .collect()
    }

    pub fn boundary_nodes(&self) -> Vec<bool> {
        let mut on = vec![false; self.nodes.len()];
        for (a, b) in self.boundary_edges() {
            on[a] = true;
            on[b] = true;
        }
        on
    }

    pub fn diameter(&self) -> f64 {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for p in &self.nodes {
            for k in 0..2 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        ((hi[0] - lo[0]).powi(2) + (hi[1] - lo[1]).powi(2)).sqrt()
    }

    /// Smallest interior angle over all elements, in degrees.
    pub fn min_angle_deg(&self) -> f64 {
        let mut worst = 180.0f64;
        for e in 0..self.elements.len() {
            let p = self.element_points(e);
            for k in 0..3 {
                let a = p[k];
                let b = p[(k + 1) % 3];
                let c = p[(k + 2) % 3];
                let u = [b[0] - a[0], b[1] - a[1]];
                let v = [c[0] - a[0], c[1] - a[1]];
                let cos = (u[0] * v[0] + u[1] * v[1])
                    / ((u[0] * u[0] + u[1] * u[1]).sqrt() * (v[0] * v[0] + v[1] * v[1]).sqrt());
                worst = worst.min(cos.clamp(-1.0, 1.0).acos().to_degrees());
            }
        }
        worst
    }

    /// Checks the structural invariants: vertex references, orientation,
    /// conformity, and connectivity.
    pub fn validate(&self) -> Result<()> {
        if self.dim != 2 {
            return Err(Error::Topology(format!(
                "dimension {} is not supported (only 2)",
                self.dim
            )));
        }
        let n = self.nodes.len();
        for (e, el) in self.elements.iter().enumerate() {
            for &v in &el.vertices {
                if v >= n {
                    return Err(Error::Topology(format!(
                        "element {e} references missing node {v}"
                    )));
                }
            }
            let [a, b, c] = el.vertices;
            if a == b || b == c || a == c {
                return Err(Error::Topology(format!("element {e} has repeated vertices")));
            }
            let area = self.element_area(e);
            if !(area > 0.0) {
                return Err(Error::Topology(format!(
                    "element {e} is inverted or degenerate (signed area {area:e})"
                )));
            }
        }
        for (f, fc) in self.facets.iter().enumerate() {
            for &v in &fc.vertices {
                if v >= n {
                    return Err(Error::Topology(format!(
                        "facet {f} references missing node {v}"
                    )));
                }
            }
        }
        let edges = self.edge_map();
        for (k, adj) in &edges {
            if adj.len() > 2 {
                return Err(Error::Topology(format!(
                    "edge {k:?} shared by {} elements",
                    adj.len()
                )));
            }
            if adj.len() == 2 {
                // Same orientation in both neighbours means they overlap.
                let dir = |e: usize| {
                    let v = self.elements[e].vertices;
                    (0..3).any(|i| v[i] == k.0 && v[(i + 1) % 3] == k.1)
                };
                if dir(adj[0]) == dir(adj[1]) {
                    return Err(Error::Topology(format!(
                        "elements {} and {} overlap across edge {k:?}",
                        adj[0], adj[1]
                    )));
                }
            }
        }
        // Hanging nodes: a vertex strictly inside a boundary edge.
        let used = self.used_nodes();
        let scale = self.diameter();
        for (k, adj) in &edges {
            if adj.len() != 1 {
                continue;
            }
            let a = self.nodes[k.0];
            let b = self.nodes[k.1];
            let len2 = (b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2);
            for (v, p) in self.nodes.iter().enumerate() {
                if !used[v] || v == k.0 || v == k.1 {
                    continue;
                }
                let t = ((p[0] - a[0]) * (b[0] - a[0]) + (p[1] - a[1]) * (b[1] - a[1])) / len2;
                if t <= 0.0 || t >= 1.0 {
                    continue;
                }
                let q = [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
                let d = ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt();
                if d <= 1e-12 * scale {
                    return Err(Error::Topology(format!(
                        "non-conforming: node {v} lies inside edge {k:?}"
                    )));
                }
            }
        }
        if !self.elements.is_empty() && !self.is_connected(&edges) {
            return Err(Error::Topology("element set is not connected".into()));
        }
        Ok(())
    }

    fn used_nodes(&self) -> Vec<bool> {
        let mut used = vec![false; self.nodes.len()];
        for el in &self.elements {
            for &v in &el.vertices {
                used[v] = true;
            }
        }
        used
    }

    fn is_connected(&self, edges: &EdgeMap) -> bool {
        let m = self.elements.len();
        let mut nbrs = vec![Vec::new(); m];
        for adj in edges.values() {
            if adj.len() == 2 {
                nbrs[adj[0]].push(adj[1]);
                nbrs[adj[1]].push(adj[0]);
            }
        }
        let mut seen = vec![false; m];
        let mut stack = vec![0];
        seen[0] = true;
        let mut count = 1;
        while let Some(e) = stack.pop() {
            for &o in &nbrs[e] {
                if !seen[o] {
                    seen[o] = true;
                    count += 1;
                    stack.push(o);
                }
            }
        }
        count == m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> Mesh {
        Mesh {
            dim: 2,
            nodes: vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
            elements: vec![
                Element { region: 1, vertices: [0, 1, 2] },
                Element { region: 2, vertices: [0, 2, 3] },
            ],
            facets: vec![],
        }
    }

    #[test]
    fn inverted_element_rejected() {
        let mut m = square();
        m.elements[0].vertices = [0, 2, 1];
        assert!(matches!(m.validate(), Err(Error::Topology(_))));
    }

    #[test]
    fn disconnected_rejected() {
        let mut m = square();
        m.nodes.extend([[5.0, 5.0], [6.0, 5.0], [5.0, 6.0]]);
        m.elements.push(Element { region: 1, vertices: [4, 5, 6] });
        assert!(m.validate().is_err());
    }

    #[test]
    fn hanging_node_rejected() {
        // Node 4 sits on the diagonal-free bottom edge of a split square.
        let m = Mesh {
            dim: 2,
            nodes: vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0], [0.5, 0.0], [0.5, -1.0]],
            elements: vec![
                Element { region: 1, vertices: [0, 1, 2] },
                Element { region: 1, vertices: [0, 2, 3] },
                Element { region: 1, vertices: [0, 5, 4] },
            ],
            facets: vec![],
        };
        assert!(m.validate().is_err());
    }

    #[test]
    fn min_angle_right_triangle() {
        assert!((square().min_angle_deg() - 45.0).abs() < 1e-12);
    }
}
