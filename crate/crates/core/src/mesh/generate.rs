//! Structured triangulations of rectangles, optionally with warped columns.

use super::{edge_key, Element, Facet, Mesh, Point};

/// Side of a rectangular domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Bottom,
    Right,
    Top,
    Left,
}

/// A grid of `xs.len()` columns, each holding the same number of node
/// heights, strictly increasing bottom to top. Every cell is split into two
/// counter-clockwise triangles along its lower-left to upper-right diagonal.
#[derive(Debug, Clone)]
pub struct ColumnGrid {
    pub xs: Vec<f64>,
    pub heights: Vec<Vec<f64>>,
}

impl ColumnGrid {
    pub fn rect(nx: usize, ny: usize, x: [f64; 2], y: [f64; 2]) -> Self {
        let xs = (0..=nx)
            .map(|i| x[0] + (x[1] - x[0]) * i as f64 / nx as f64)
            .collect();
        let col: Vec<f64> = (0..=ny)
            .map(|j| y[0] + (y[1] - y[0]) * j as f64 / ny as f64)
            .collect();
        ColumnGrid { xs, heights: vec![col; nx + 1] }
    }

    pub fn node_id(&self, i: usize, j: usize) -> usize {
        j * self.xs.len() + i
    }

    fn rows(&self) -> usize {
        self.heights[0].len()
    }
}

/// Tagging callbacks for [`triangulate`].
pub struct Tagging<'a> {
    /// Region tag from an element centroid.
    pub region: &'a dyn Fn(Point) -> i32,
    /// Facet tag for a boundary edge from its side and midpoint.
    pub boundary: &'a dyn Fn(Side, Point) -> i32,
    /// Optional tag for an interior edge from its endpoints.
    pub interior: &'a dyn Fn(Point, Point) -> Option<i32>,
}

pub fn triangulate(grid: &ColumnGrid, tags: &Tagging<'_>) -> Mesh {
    let nc = grid.xs.len();
    let nr = grid.rows();
    let mut nodes = Vec::with_capacity(nc * nr);
    for j in 0..nr {
        for i in 0..nc {
            nodes.push([grid.xs[i], grid.heights[i][j]]);
        }
    }
    let mut elements = Vec::with_capacity(2 * (nc - 1) * (nr - 1));
    let mut interior_edges = Vec::new();
    for j in 0..nr - 1 {
        for i in 0..nc - 1 {
            let p00 = grid.node_id(i, j);
            let p10 = grid.node_id(i + 1, j);
            let p01 = grid.node_id(i, j + 1);
            let p11 = grid.node_id(i + 1, j + 1);
            for tri in [[p00, p10, p11], [p00, p11, p01]] {
                let c = [
                    (nodes[tri[0]][0] + nodes[tri[1]][0] + nodes[tri[2]][0]) / 3.0,
                    (nodes[tri[0]][1] + nodes[tri[1]][1] + nodes[tri[2]][1]) / 3.0,
                ];
                elements.push(Element { region: (tags.region)(c), vertices: tri });
            }
            // Edges owned by this cell: bottom, left, diagonal (top/right
            // edges belong to neighbours or the boundary pass).
            if j > 0 {
                interior_edges.push((p00, p10));
            }
            if i > 0 {
                interior_edges.push((p00, p01));
            }
            interior_edges.push((p00, p11));
        }
    }

    let mut facets = Vec::new();
    let mid = |a: usize, b: usize| {
        [(nodes[a][0] + nodes[b][0]) / 2.0, (nodes[a][1] + nodes[b][1]) / 2.0]
    };
    for i in 0..nc - 1 {
        let (a, b) = (grid.node_id(i, 0), grid.node_id(i + 1, 0));
        facets.push(Facet { tag: (tags.boundary)(Side::Bottom, mid(a, b)), vertices: [a, b] });
    }
    for j in 0..nr - 1 {
        let (a, b) = (grid.node_id(nc - 1, j), grid.node_id(nc - 1, j + 1));
        facets.push(Facet { tag: (tags.boundary)(Side::Right, mid(a, b)), vertices: [a, b] });
    }
    for i in (0..nc - 1).rev() {
        let (a, b) = (grid.node_id(i + 1, nr - 1), grid.node_id(i, nr - 1));
        facets.push(Facet { tag: (tags.boundary)(Side::Top, mid(a, b)), vertices: [a, b] });
    }
    for j in (0..nr - 1).rev() {
        let (a, b) = (grid.node_id(0, j + 1), grid.node_id(0, j));
        facets.push(Facet { tag: (tags.boundary)(Side::Left, mid(a, b)), vertices: [a, b] });
    }
    interior_edges.sort_by_key(|&(a, b)| edge_key(a, b));
    for (a, b) in interior_edges {
        if let Some(tag) = (tags.interior)(nodes[a], nodes[b]) {
            facets.push(Facet { tag, vertices: [a, b] });
        }
    }
    Mesh { dim: 2, nodes, elements, facets }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_square_counts_and_area() {
        let g = ColumnGrid::rect(4, 3, [0.0, 1.0], [0.0, 1.0]);
        let m = triangulate(
            &g,
            &Tagging {
                region: &|_| 1,
                boundary: &|s, _| s as i32 + 1,
                interior: &|_, _| None,
            },
        );
        m.validate().unwrap();
        assert_eq!(m.nodes.len(), 20);
        assert_eq!(m.elements.len(), 24);
        assert_eq!(m.facets.len(), 14);
        assert!((m.total_area() - 1.0).abs() < 1e-14);
        assert_eq!(m.boundary_edges().len(), 14);
    }
}
