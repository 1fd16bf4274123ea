use crate::mesh::Mesh;

/// Numbering of free displacement components.
///
/// Nodes used by the selected elements get two components each unless
/// constrained; an optional alias map lets several nodes share the dofs of a
/// representative node (split-node elimination).
#[derive(Debug, Clone, PartialEq)]
pub struct DofMap {
    dofs: Vec<[Option<usize>; 2]>,
    active: Vec<bool>,
    constrained: Vec<bool>,
    n_free: usize,
}

impl DofMap {
    pub fn new(mesh: &Mesh, elements: &[usize], constrained: &[bool]) -> Self {
        let ident: Vec<usize> = (0..mesh.nodes.len()).collect();
        Self::with_alias(mesh, elements, constrained, &ident)
    }

    /// `alias[v]` is the node whose dofs `v` shares (itself when not aliased);
    /// representatives must not be aliased further.
    pub fn with_alias(mesh: &Mesh, elements: &[usize], constrained: &[bool], alias: &[usize]) -> Self {
        let n = mesh.nodes.len();
        let mut active = vec![false; n];
        for &e in elements {
            for &v in &mesh.elements[e].vertices {
                active[v] = true;
            }
        }
        let mut dofs = vec![[None, None]; n];
        let mut next = 0;
        for v in 0..n {
            if active[v] && alias[v] == v && !constrained[v] {
                dofs[v] = [Some(next), Some(next + 1)];
                next += 2;
            }
        }
        for v in 0..n {
            if active[v] && alias[v] != v {
                dofs[v] = dofs[alias[v]];
            }
        }
        DofMap { dofs, active, constrained: constrained.to_vec(), n_free: next }
    }

    #[inline]
    pub fn dof(&self, node: usize, comp: usize) -> Option<usize> {
        self.dofs[node][comp]
    }

    pub fn n_free(&self) -> usize {
        self.n_free
    }

    pub fn n_nodes(&self) -> usize {
        self.dofs.len()
    }

    pub fn is_active(&self, node: usize) -> bool {
        self.active[node]
    }

    pub fn is_constrained(&self, node: usize) -> bool {
        self.constrained[node]
    }

    /// Sums a nodal functional (length 2N) into free dofs.
    pub fn reduce(&self, nodal: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_free];
        for (v, d) in self.dofs.iter().enumerate() {
            for c in 0..2 {
                if let Some(i) = d[c] {
                    out[i] += nodal[2 * v + c];
                }
            }
        }
        out
    }

    /// Nodal field T·x + lift over active nodes; inactive nodes stay zero.
    pub fn expand(&self, x: &[f64], lift: Option<&[f64]>) -> Vec<f64> {
        let mut out = vec![0.0; 2 * self.dofs.len()];
        for (v, d) in self.dofs.iter().enumerate() {
            if !self.active[v] {
                continue;
            }
            for c in 0..2 {
                let base = d[c].map_or(0.0, |i| x[i]);
                out[2 * v + c] = base + lift.map_or(0.0, |l| l[2 * v + c]);
            }
        }
        out
    }

    /// Nodal vector restricted to free dofs (no summation over aliases).
    pub fn gather(&self, nodal: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_free];
        for (v, d) in self.dofs.iter().enumerate() {
            for c in 0..2 {
                if let Some(i) = d[c] {
                    out[i] = nodal[2 * v + c];
                }
            }
        }
        out
    }
}
