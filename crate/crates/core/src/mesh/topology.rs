use std::collections::{BTreeMap, BTreeSet};

use super::{edge_key, EdgeMap, Mesh, Point};
use crate::error::{Error, Result};

/// Which facet tags and regions play which role in the boundary-value problem.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BoundaryRoles {
    /// Clamped, buried part of the boundary.
    pub sigma_tags: BTreeSet<i32>,
    /// Traction-free part of the boundary.
    pub free_tags: BTreeSet<i32>,
    /// Measurement patch, a subset of the free boundary.
    pub xi_tags: BTreeSet<i32>,
    pub fault_tags: BTreeSet<i32>,
    /// Regions whose union is the interior subdomain bounded by the closed
    /// extension of the fault.
    pub omega_minus_regions: BTreeSet<i32>,
}

/// A facet of the closed extension oriented from the minus side.
#[derive(Debug, Clone, PartialEq)]
pub struct OrientedFacet {
    /// Vertices in the counter-clockwise order of `minus_element`.
    pub vertices: [usize; 2],
    pub minus_element: usize,
    pub plus_element: usize,
    /// Unit normal pointing out of the minus subdomain.
    pub normal: Point,
    pub on_fault: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FaultTopology {
    pub s_facets: Vec<OrientedFacet>,
    pub gamma_facets: Vec<OrientedFacet>,
    /// Sorted node ids of the closed extension.
    pub gamma_nodes: Vec<usize>,
    /// Sorted node ids of the closed fault (interior plus boundary).
    pub s_nodes: Vec<usize>,
    pub s_boundary_nodes: Vec<usize>,
    /// Interior fault node -> id of its plus-side duplicate.
    pub split_map: BTreeMap<usize, usize>,
    /// Per element: does it belong to the minus subdomain?
    pub minus_elements: Vec<bool>,
    pub s_boundary_points: Vec<Point>,
    pub s_segments: Vec<[Point; 2]>,
    pub domain_diameter: f64,
}

impl FaultTopology {
    pub fn is_empty(&self) -> bool {
        self.s_facets.is_empty()
    }

    pub fn minus_element_ids(&self) -> Vec<usize> {
        (0..self.minus_elements.len()).filter(|&e| self.minus_elements[e]).collect()
    }

    pub fn plus_element_ids(&self) -> Vec<usize> {
        (0..self.minus_elements.len()).filter(|&e| !self.minus_elements[e]).collect()
    }

    pub fn s_interior_nodes(&self) -> Vec<usize> {
        self.split_map.keys().copied().collect()
    }

    pub fn total_fault_length(&self) -> f64 {
        self.s_segments.iter().map(|[a, b]| dist(*a, *b)).sum()
    }
}

pub(crate) fn dist(a: Point, b: Point) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

/// Checks boundary roles against a mesh: Σ and the free boundary must be
/// disjoint and tile ∂Ω exactly once, and Ξ must lie in the free boundary.
pub fn validate_roles(mesh: &Mesh, roles: &BoundaryRoles) -> Result<()> {
    if let Some(t) = roles.sigma_tags.intersection(&roles.free_tags).next() {
        return Err(Error::Topology(format!("tag {t} is both clamped and free")));
    }
    if let Some(t) = roles.xi_tags.difference(&roles.free_tags).next() {
        return Err(Error::Topology(format!(
            "measurement tag {t} is not part of the free boundary"
        )));
    }
    let present: BTreeSet<i32> = mesh.facets.iter().map(|f| f.tag).collect();
    for t in roles
        .sigma_tags
        .iter()
        .chain(&roles.free_tags)
        .chain(&roles.fault_tags)
    {
        if !present.contains(t) {
            return Err(Error::Topology(format!("facet tag {t} not present in mesh")));
        }
    }
    let regions: BTreeSet<i32> = mesh.regions().into_iter().collect();
    for r in &roles.omega_minus_regions {
        if !regions.contains(r) {
            return Err(Error::Topology(format!("region tag {r} not present in mesh")));
        }
    }
    let edges = mesh.edge_map();
    let mut covered: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for f in &mesh.facets {
        let in_sigma = roles.sigma_tags.contains(&f.tag);
        let in_free = roles.free_tags.contains(&f.tag);
        if !(in_sigma || in_free) {
            continue;
        }
        let key = edge_key(f.vertices[0], f.vertices[1]);
        match edges.get(&key) {
            Some(adj) if adj.len() == 1 => {}
            _ => {
                return Err(Error::Topology(format!(
                    "boundary-role facet {key:?} (tag {}) is not on the boundary",
                    f.tag
                )))
            }
        }
        *covered.entry(key).or_default() += 1;
    }
    for (key, adj) in &edges {
        if adj.len() != 1 {
            continue;
        }
        match covered.get(key).copied().unwrap_or(0) {
            1 => {}
            0 => {
                return Err(Error::Topology(format!(
                    "boundary edge {key:?} has no clamped/free role"
                )))
            }
            n => {
                return Err(Error::Topology(format!(
                    "boundary edge {key:?} carries {n} roles"
                )))
            }
        }
    }
    Ok(())
}

fn orient(mesh: &Mesh, key: (usize, usize), minus: usize, plus: usize, on_fault: bool) -> OrientedFacet {
    let v = mesh.elements[minus].vertices;
    let (a, b) = if (0..3).any(|i| v[i] == key.0 && v[(i + 1) % 3] == key.1) {
        key
    } else {
        (key.1, key.0)
    };
    let pa = mesh.nodes[a];
    let pb = mesh.nodes[b];
    let len = dist(pa, pb);
    OrientedFacet {
        vertices: [a, b],
        minus_element: minus,
        plus_element: plus,
        normal: [(pb[1] - pa[1]) / len, -(pb[0] - pa[0]) / len],
        on_fault,
    }
}

/// Derives the closed extension Γ = ∂Ω⁻ from the region partition and checks
/// that the tagged fault lies on it, strictly inside the body.
pub fn build_fault_topology(mesh: &Mesh, roles: &BoundaryRoles) -> Result<FaultTopology> {
    let edges: EdgeMap = mesh.edge_map();
    let minus_elements: Vec<bool> = mesh
        .elements
        .iter()
        .map(|e| roles.omega_minus_regions.contains(&e.region))
        .collect();
    let on_boundary = mesh.boundary_nodes();

    let fault_keys: BTreeSet<(usize, usize)> = mesh
        .facets
        .iter()
        .filter(|f| roles.fault_tags.contains(&f.tag))
        .map(|f| edge_key(f.vertices[0], f.vertices[1]))
        .collect();
    for key in &fault_keys {
        match edges.get(key) {
            Some(adj) if adj.len() == 2 => {}
            Some(_) => {
                return Err(Error::Geometry(format!(
                    "fault facet {key:?} lies on the exterior boundary; the fault must be interior"
                )))
            }
            None => {
                return Err(Error::Geometry(format!(
                    "fault facet {key:?} is not an edge of the mesh"
                )))
            }
        }
        if on_boundary[key.0] || on_boundary[key.1] {
            return Err(Error::Geometry(format!("fault facet {key:?} reaches ∂Ω")));
        }
    }

    for (e, el) in mesh.elements.iter().enumerate() {
        if minus_elements[e] && el.vertices.iter().any(|&v| on_boundary[v]) {
            return Err(Error::Geometry(format!(
                "Γ touches ∂Ω: minus-side element {e} has a vertex on the boundary"
            )));
        }
    }

    let mut gamma_facets = Vec::new();
    let mut s_facets = Vec::new();
    for (key, adj) in &edges {
        if adj.len() != 2 || minus_elements[adj[0]] == minus_elements[adj[1]] {
            continue;
        }
        let (minus, plus) = if minus_elements[adj[0]] {
            (adj[0], adj[1])
        } else {
            (adj[1], adj[0])
        };
        let on_fault = fault_keys.contains(key);
        let of = orient(mesh, *key, minus, plus, on_fault);
        if on_fault {
            s_facets.push(of.clone());
        }
        gamma_facets.push(of);
    }
    if s_facets.len() != fault_keys.len() {
        let on_gamma: BTreeSet<_> = s_facets
            .iter()
            .map(|f| edge_key(f.vertices[0], f.vertices[1]))
            .collect();
        let stray = fault_keys.difference(&on_gamma).next().unwrap();
        return Err(Error::Geometry(format!(
            "fault facet {stray:?} does not separate Ω⁻ from Ω⁺"
        )));
    }

    // Closedness and manifoldness: every Γ node has exactly two Γ facets.
    let mut gamma_degree: BTreeMap<usize, usize> = BTreeMap::new();
    let mut s_degree: BTreeMap<usize, usize> = BTreeMap::new();
    for f in &gamma_facets {
        for &v in &f.vertices {
            *gamma_degree.entry(v).or_default() += 1;
            if f.on_fault {
                *s_degree.entry(v).or_default() += 1;
            }
        }
    }
    for (&v, &d) in &gamma_degree {
        if d != 2 {
            return Err(Error::Geometry(format!(
                "Γ is not a closed manifold curve: node {v} has {d} incident Γ facets"
            )));
        }
    }

    let gamma_nodes: Vec<usize> = gamma_degree.keys().copied().collect();
    let s_nodes: Vec<usize> = s_degree.keys().copied().collect();
    let s_boundary_nodes: Vec<usize> = s_degree
        .iter()
        .filter(|(_, &d)| d == 1)
        .map(|(&v, _)| v)
        .collect();
    let mut split_map = BTreeMap::new();
    let mut next = mesh.nodes.len();
    for (&v, &d) in &s_degree {
        if d == 2 {
            split_map.insert(v, next);
            next += 1;
        }
    }

    Ok(FaultTopology {
        s_boundary_points: s_boundary_nodes.iter().map(|&v| mesh.nodes[v]).collect(),
        s_segments: s_facets
            .iter()
            .map(|f| [mesh.nodes[f.vertices[0]], mesh.nodes[f.vertices[1]]])
            .collect(),
        s_facets,
        gamma_facets,
        gamma_nodes,
        s_nodes,
        s_boundary_nodes,
        split_map,
        minus_elements,
        domain_diameter: mesh.diameter(),
    })
}

/// The split-node mesh: interior fault nodes duplicated, plus-side elements
/// rebound to the duplicates.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitMesh {
    pub mesh: Mesh,
    /// Interior fault node -> plus-side duplicate.
    pub split_map: BTreeMap<usize, usize>,
    /// Split node id -> original node id.
    pub merge: Vec<usize>,
    pub original_node_count: usize,
}

impl SplitMesh {
    pub fn is_duplicate(&self, node: usize) -> bool {
        node >= self.original_node_count
    }

    /// Undoes the split: every duplicate folded back onto its original.
    pub fn merged(&self) -> Mesh {
        let mut m = self.mesh.clone();
        m.nodes.truncate(self.original_node_count);
        for el in &mut m.elements {
            for v in &mut el.vertices {
                *v = self.merge[*v];
            }
        }
        m
    }
}

pub fn split_fault_nodes(mesh: &Mesh, ft: &FaultTopology) -> Result<SplitMesh> {
    let n = mesh.nodes.len();
    let mut s_degree: BTreeMap<usize, usize> = BTreeMap::new();
    for f in &ft.s_facets {
        for &v in &f.vertices {
            *s_degree.entry(v).or_default() += 1;
        }
    }
    if let Some((v, d)) = s_degree.iter().find(|(_, &d)| d > 2) {
        return Err(Error::Geometry(format!(
            "ambiguous side assignment at non-manifold fault node {v} ({d} fault facets)"
        )));
    }
    let mut out = mesh.clone();
    let mut merge: Vec<usize> = (0..n).collect();
    for (&orig, &dup) in &ft.split_map {
        debug_assert_eq!(dup, merge.len());
        out.nodes.push(mesh.nodes[orig]);
        merge.push(orig);
    }
    for (e, el) in out.elements.iter_mut().enumerate() {
        if ft.minus_elements[e] {
            continue;
        }
        for v in &mut el.vertices {
            if let Some(&dup) = ft.split_map.get(v) {
                *v = dup;
            }
        }
    }
    Ok(SplitMesh {
        mesh: out,
        split_map: ft.split_map.clone(),
        merge,
        original_node_count: n,
    })
}

fn point_segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let d = [b[0] - a[0], b[1] - a[1]];
    let len2 = d[0] * d[0] + d[1] * d[1];
    let t = (((p[0] - a[0]) * d[0] + (p[1] - a[1]) * d[1]) / len2).clamp(0.0, 1.0);
    dist(p, [a[0] + t * d[0], a[1] + t * d[1]])
}

/// Discrete weight ρ(x): distance from a fault point to ∂S. Infinite for a
/// fault without boundary (S = Γ).
pub fn weight_function(ft: &FaultTopology, x: Point) -> Result<f64> {
    let tol = 1e-12 * ft.domain_diameter;
    let on_s = ft
        .s_segments
        .iter()
        .any(|[a, b]| point_segment_distance(x, *a, *b) <= tol);
    if !on_s {
        return Err(Error::Domain(format!("point {x:?} is not on the fault")));
    }
    Ok(ft
        .s_boundary_points
        .iter()
        .map(|&q| dist(x, q))
        .fold(f64::INFINITY, f64::min))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::generate::{triangulate, ColumnGrid, Side, Tagging};
    use proptest::prelude::*;

    const FAULT: i32 = 10;

    fn inside(c: Point, b: [[f64; 2]; 2]) -> bool {
        c[0] > b[0][0] && c[0] < b[0][1] && c[1] > b[1][0] && c[1] < b[1][1]
    }

    /// Structured mesh with region 2 inside `minus` and the fault on every
    /// interior edge accepted by `fault`.
    fn case(n: [usize; 2], x: [f64; 2], y: [f64; 2], minus: [[f64; 2]; 2], fault: &dyn Fn(Point, Point) -> bool) -> (Mesh, BoundaryRoles) {
        let grid = ColumnGrid::rect(n[0], n[1], x, y);
        let region = |c: Point| if inside(c, minus) { 2 } else { 1 };
        let boundary = |s: Side, _: Point| if s == Side::Bottom { 1 } else { 2 };
        let interior = |a: Point, b: Point| fault(a, b).then_some(FAULT);
        let mesh = triangulate(&grid, &Tagging { region: &region, boundary: &boundary, interior: &interior });
        let roles = BoundaryRoles {
            sigma_tags: [1].into(),
            free_tags: [2].into(),
            xi_tags: BTreeSet::new(),
            fault_tags: [FAULT].into(),
            omega_minus_regions: [2].into(),
        };
        (mesh, roles)
    }

    fn horizontal(y0: f64, x0: f64, x1: f64) -> impl Fn(Point, Point) -> bool {
        move |a: Point, b: Point| {
            let on = |p: Point| (p[1] - y0).abs() < 1e-12 && p[0] > x0 - 1e-12 && p[0] < x1 + 1e-12;
            on(a) && on(b)
        }
    }

    fn topology(mesh: &Mesh, roles: &BoundaryRoles) -> Result<FaultTopology> {
        validate_roles(mesh, roles)?;
        build_fault_topology(mesh, roles)
    }

    #[test]
    fn gamma_matches_brute_force_adjacency() {
        let left = |a: Point, b: Point| {
            let on = |p: Point| (p[0] - 0.25).abs() < 1e-12 && p[1] > 0.25 - 1e-12 && p[1] < 0.75 + 1e-12;
            on(a) && on(b)
        };
        let (mesh, roles) = case([8, 8], [0.0, 1.0], [0.0, 1.0], [[0.25, 0.75], [0.25, 0.75]], &left);
        let ft = topology(&mesh, &roles).unwrap();

        let mut brute = 0;
        for (_, els) in mesh.edge_map() {
            if els.len() == 2 && (mesh.elements[els[0]].region == 2) != (mesh.elements[els[1]].region == 2) {
                brute += 1;
            }
        }
        assert_eq!(brute, 16);
        assert_eq!(ft.gamma_facets.len(), brute);
        assert_eq!(ft.gamma_nodes.len(), 16);
        assert_eq!(ft.s_facets.len(), 4);
        assert_eq!(ft.s_boundary_nodes.len(), 2);
        assert_eq!(ft.split_map.len(), 3);
        for f in &ft.gamma_facets {
            let c = mesh.centroid(f.minus_element);
            let a = mesh.nodes[f.vertices[0]];
            let d = [c[0] - a[0], c[1] - a[1]];
            assert!(d[0] * f.normal[0] + d[1] * f.normal[1] < 0.0, "normal must leave Ω⁻");
        }
    }

    #[test]
    fn fault_on_exterior_boundary_is_rejected() {
        let (mut mesh, roles) = case([8, 8], [0.0, 1.0], [0.0, 1.0], [[0.25, 0.75], [0.25, 0.5]], &horizontal(0.5, 0.25, 0.75));
        let first_top = mesh.facets.iter().position(|f| f.tag == 2).unwrap();
        mesh.facets[first_top].tag = FAULT;
        assert!(matches!(validate_roles(&mesh, &roles), Err(Error::Topology(_))));
        assert!(matches!(build_fault_topology(&mesh, &roles), Err(Error::Geometry(_))));
    }

    #[test]
    fn omega_minus_touching_the_boundary_is_rejected() {
        let (mesh, roles) = case([8, 8], [0.0, 1.0], [0.0, 1.0], [[0.0, 0.75], [0.25, 0.5]], &horizontal(0.5, 0.25, 0.75));
        match topology(&mesh, &roles) {
            Err(Error::Geometry(msg)) => assert!(msg.contains("∂Ω") || msg.contains("boundary"), "{msg}"),
            other => panic!("expected a geometry error, got {other:?}"),
        }
    }

    #[test]
    fn split_counts_on_an_eight_by_eight_grid() {
        let (mesh, roles) = case([8, 8], [0.0, 1.0], [0.0, 1.0], [[0.25, 0.75], [0.25, 0.5]], &horizontal(0.5, 0.25, 0.75));
        let ft = topology(&mesh, &roles).unwrap();
        let interior: BTreeSet<usize> = mesh
            .facets
            .iter()
            .filter(|f| f.tag == FAULT)
            .flat_map(|f| f.vertices)
            .filter(|&v| mesh.facets.iter().filter(|f| f.tag == FAULT && f.vertices.contains(&v)).count() == 2)
            .collect();
        assert_eq!(interior.len(), 3);
        let split = split_fault_nodes(&mesh, &ft).unwrap();
        assert_eq!(split.mesh.nodes.len(), mesh.nodes.len() + 3);
        assert_eq!(split.mesh.elements.len(), mesh.elements.len());
        assert_eq!(split.split_map.keys().copied().collect::<BTreeSet<_>>(), interior);
        assert_eq!(split.merged(), mesh);
    }

    #[test]
    fn empty_fault_leaves_the_mesh_unchanged() {
        let (mesh, mut roles) = case([8, 8], [0.0, 1.0], [0.0, 1.0], [[0.25, 0.75], [0.25, 0.5]], &|_, _| false);
        roles.fault_tags.clear();
        let ft = topology(&mesh, &roles).unwrap();
        let split = split_fault_nodes(&mesh, &ft).unwrap();
        assert!(split.split_map.is_empty());
        assert_eq!(split.mesh, mesh);
    }

    fn unit_segment() -> FaultTopology {
        let (mesh, roles) = case([6, 4], [-1.0, 2.0], [-1.0, 1.0], [[0.0, 1.0], [-0.5, 0.0]], &horizontal(0.0, 0.0, 1.0));
        topology(&mesh, &roles).unwrap()
    }

    #[test]
    fn weight_on_the_unit_segment() {
        let ft = unit_segment();
        assert_eq!(weight_function(&ft, [0.0, 0.0]).unwrap(), 0.0);
        assert_eq!(weight_function(&ft, [1.0, 0.0]).unwrap(), 0.0);
        assert!((weight_function(&ft, [0.5, 0.0]).unwrap() - 0.5).abs() < 1e-15);
        assert!((weight_function(&ft, [0.2, 0.0]).unwrap() - 0.2).abs() < 1e-15);
        assert!(matches!(weight_function(&ft, [0.5, 0.3]), Err(Error::Domain(_))));
    }

    proptest! {
        #[test]
        fn weight_is_one_lipschitz_and_positive_inside(s in 0.0f64..=1.0, t in 0.0f64..=1.0) {
            let ft = unit_segment();
            let (ws, wt) = (weight_function(&ft, [s, 0.0]).unwrap(), weight_function(&ft, [t, 0.0]).unwrap());
            prop_assert!((ws - wt).abs() <= (s - t).abs() + 1e-15);
            if s > 0.0 && s < 1.0 {
                prop_assert!(ws > 0.0);
            }
        }
    }
}
