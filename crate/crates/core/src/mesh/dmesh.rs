//! The `dmesh v1` ASCII mesh format.

use std::collections::HashMap;
use std::fmt::Write;

use super::{Element, Facet, Mesh};
use crate::error::{Error, Result};

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        Lines { inner: text.lines().enumerate(), last: 0 }
    }

    /// Next non-empty, non-comment line as (1-based line number, tokens).
    fn next_tokens(&mut self) -> Option<(usize, Vec<&'a str>)> {
        for (i, raw) in self.inner.by_ref() {
            self.last = i + 1;
            let body = match raw.find('#') {
                Some(p) => &raw[..p],
                None => raw,
            };
            let toks: Vec<&str> = body.split_whitespace().collect();
            if !toks.is_empty() {
                return Some((i + 1, toks));
            }
        }
        None
    }

    fn expect(&mut self, what: &str) -> Result<(usize, Vec<&'a str>)> {
        self.next_tokens().ok_or_else(|| Error::Syntax {
            line: self.last + 1,
            msg: format!("unexpected end of input, expected {what}"),
        })
    }
}

fn syntax(line: usize, msg: impl Into<String>) -> Error {
    Error::Syntax { line, msg: msg.into() }
}

fn parse_num<T: std::str::FromStr>(tok: &str, line: usize, what: &str) -> Result<T> {
    tok.parse::<T>()
        .map_err(|_| syntax(line, format!("invalid {what} `{tok}`")))
}

fn header<'a>(lines: &mut Lines<'a>, key: &str) -> Result<usize> {
    let (line, toks) = lines.expect(key)?;
    if toks.len() != 2 || toks[0] != key {
        return Err(syntax(line, format!("expected `{key} <count>`")));
    }
    parse_num(toks[1], line, "count")
}

/// Parses a `dmesh 1` document and validates the resulting mesh.
///
/// Node and element ids are re-indexed densely from 0 in input order.
pub fn parse_mesh(text: &str) -> Result<Mesh> {
    let mut lines = Lines::new(text);
    let (line, toks) = lines.expect("`dmesh 1`")?;
    if toks != ["dmesh", "1"] {
        return Err(syntax(line, "expected header `dmesh 1`"));
    }
    let dim = header(&mut lines, "dim")?;
    if dim != 2 {
        return Err(syntax(lines.last, format!("dim {dim} is not supported")));
    }

    let n_nodes = header(&mut lines, "nodes")?;
    let mut node_index: HashMap<i64, usize> = HashMap::with_capacity(n_nodes);
    let mut nodes = Vec::with_capacity(n_nodes);
    for _ in 0..n_nodes {
        let (line, toks) = lines.expect("node line")?;
        if toks.len() != 1 + dim {
            return Err(syntax(line, format!("node line needs {} fields", 1 + dim)));
        }
        let id: i64 = parse_num(toks[0], line, "node id")?;
        let x: f64 = parse_num(toks[1], line, "coordinate")?;
        let y: f64 = parse_num(toks[2], line, "coordinate")?;
        if !x.is_finite() || !y.is_finite() {
            return Err(syntax(line, "non-finite coordinate"));
        }
        if node_index.insert(id, nodes.len()).is_some() {
            return Err(syntax(line, format!("duplicate node id {id}")));
        }
        nodes.push([x, y]);
    }

    let lookup = |id: i64, line: usize, owner: &str| -> Result<usize> {
        node_index.get(&id).copied().ok_or_else(|| {
            Error::Topology(format!("{owner} at line {line} references missing node {id}"))
        })
    };

    let n_elems = header(&mut lines, "elements")?;
    let mut seen = HashMap::new();
    let mut elements = Vec::with_capacity(n_elems);
    for _ in 0..n_elems {
        let (line, toks) = lines.expect("element line")?;
        if toks.len() != 2 + dim + 1 {
            return Err(syntax(line, "element line needs `<id> <region> <v0> <v1> <v2>`"));
        }
        let id: i64 = parse_num(toks[0], line, "element id")?;
        if seen.insert(id, ()).is_some() {
            return Err(syntax(line, format!("duplicate element id {id}")));
        }
        let region: i32 = parse_num(toks[1], line, "region tag")?;
        let mut v = [0usize; 3];
        for k in 0..3 {
            let raw: i64 = parse_num(toks[2 + k], line, "vertex id")?;
            v[k] = lookup(raw, line, "element")?;
        }
        elements.push(Element { region, vertices: v });
    }

    let n_facets = header(&mut lines, "facets")?;
    let mut seen = HashMap::new();
    let mut facets = Vec::with_capacity(n_facets);
    for _ in 0..n_facets {
        let (line, toks) = lines.expect("facet line")?;
        if toks.len() != 2 + dim {
            return Err(syntax(line, "facet line needs `<id> <tag> <v0> <v1>`"));
        }
        let id: i64 = parse_num(toks[0], line, "facet id")?;
        if seen.insert(id, ()).is_some() {
            return Err(syntax(line, format!("duplicate facet id {id}")));
        }
        let tag: i32 = parse_num(toks[1], line, "facet tag")?;
        let a = lookup(parse_num(toks[2], line, "vertex id")?, line, "facet")?;
        let b = lookup(parse_num(toks[3], line, "vertex id")?, line, "facet")?;
        facets.push(Facet { tag, vertices: [a, b] });
    }
    if let Some((line, _)) = lines.next_tokens() {
        return Err(syntax(line, "trailing content after facets block"));
    }

    let mesh = Mesh { dim, nodes, elements, facets };
    mesh.validate()?;
    Ok(mesh)
}

/// Serializes a mesh as `dmesh 1`. Coordinates use the shortest
/// round-trip decimal representation, so output is reproducible.
pub fn write_mesh(mesh: &Mesh) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "dmesh 1");
    let _ = writeln!(s, "dim {}", mesh.dim);
    let _ = writeln!(s, "nodes {}", mesh.nodes.len());
    for (i, p) in mesh.nodes.iter().enumerate() {
        let _ = writeln!(s, "{i} {:?} {:?}", p[0], p[1]);
    }
    let _ = writeln!(s, "elements {}", mesh.elements.len());
    for (i, e) in mesh.elements.iter().enumerate() {
        let v = e.vertices;
        let _ = writeln!(s, "{i} {} {} {} {}", e.region, v[0], v[1], v[2]);
    }
    let _ = writeln!(s, "facets {}", mesh.facets.len());
    for (i, f) in mesh.facets.iter().enumerate() {
        let _ = writeln!(s, "{i} {} {} {}", f.tag, f.vertices[0], f.vertices[1]);
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    const TRIANGLE: &str = "dmesh 1\ndim 2\nnodes 3\n0 0 0\n1 1 0\n2 0 1\nelements 1\n0 1 0 1 2\nfacets 0\n";

    #[test]
    fn smallest_mesh() {
        let m = parse_mesh(TRIANGLE).unwrap();
        assert_eq!(m.dim, 2);
        assert_eq!(m.nodes.len(), 3);
        assert_eq!(m.elements.len(), 1);
    }

    #[test]
    fn dangling_vertex() {
        let text = "dmesh 1\ndim 2\nnodes 4\n0 0 0\n1 1 0\n2 0 1\n3 1 1\nelements 1\n0 1 0 1 99\nfacets 0\n";
        assert!(matches!(parse_mesh(text), Err(Error::Topology(_))));
    }

    #[test]
    fn comments_and_sparse_ids() {
        let text = "# header comment\ndmesh 1\ndim 2\nnodes 3\n10 0.0 0.0  # origin\n20 1.0 0.0\n30 0.0 1.0\n\nelements 1\n7 4 10 20 30\nfacets 1\n5 3 10 20\n";
        let m = parse_mesh(text).unwrap();
        assert_eq!(m.elements[0].vertices, [0, 1, 2]);
        assert_eq!(m.facets[0].tag, 3);
        assert_eq!(m.elements[0].region, 4);
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let text = "dmesh 1\ndim 2\nnodes 3\n0 0 0\n1 1.0.0 0\n2 0 1\nelements 0\nfacets 0\n";
        match parse_mesh(text) {
            Err(Error::Syntax { line, .. }) => assert_eq!(line, 5),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn inverted_element_is_topology_error() {
        let text = "dmesh 1\ndim 2\nnodes 3\n0 0 0\n1 1 0\n2 0 1\nelements 1\n0 1 0 2 1\nfacets 0\n";
        assert!(matches!(parse_mesh(text), Err(Error::Topology(_))));
    }

    #[test]
    fn write_then_parse_is_identity() {
        let m = parse_mesh(TRIANGLE).unwrap();
        let again = parse_mesh(&write_mesh(&m)).unwrap();
        assert_eq!(m, again);
        assert_eq!(write_mesh(&m), write_mesh(&again));
    }
}
