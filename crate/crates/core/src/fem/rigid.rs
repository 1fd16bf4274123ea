//! Infinitesimal rigid motions and the bordered (rigid-motion-normalized)
//! solve for floating subdomains.

use super::cholesky::SkylineCholesky;
use super::dofmap::DofMap;
use super::sparse::CsrMatrix;
use crate::error::{Error, Result};
use crate::mesh::Mesh;

/// Row-sum lumped mass per node over a subset of elements.
pub fn lumped_mass(mesh: &Mesh, elements: &[usize]) -> Vec<f64> {
    let mut m = vec![0.0; mesh.nodes.len()];
    for &e in elements {
        let a = mesh.element_area(e) / 3.0;
        for &v in &mesh.elements[e].vertices {
            m[v] += a;
        }
    }
    m
}

/// Lumped-mass inner product of nodal vector fields (length 2N).
pub fn mass_inner(mass: &[f64], u: &[f64], v: &[f64]) -> f64 {
    mass.iter()
        .enumerate()
        .map(|(i, m)| m * (u[2 * i] * v[2 * i] + u[2 * i + 1] * v[2 * i + 1]))
        .sum()
}

/// Lumped-mass-orthonormal basis of the rigid motions on an element subset.
#[derive(Debug, Clone)]
pub struct RigidBasis {
    /// Three nodal fields (length 2N): two translations and a rotation.
    pub vectors: Vec<Vec<f64>>,
    pub mass: Vec<f64>,
}

impl RigidBasis {
    pub fn inner(&self, u: &[f64], v: &[f64]) -> f64 {
        mass_inner(&self.mass, u, v)
    }

    /// Coefficients ∫ u·r_k.
    pub fn moments(&self, u: &[f64]) -> [f64; 3] {
        [0, 1, 2].map(|k| self.inner(u, &self.vectors[k]))
    }

    /// Removes the rigid component: u − Σ ⟨u, r_k⟩ r_k.
    pub fn project_out(&self, u: &mut [f64]) {
        let c = self.moments(u);
        for (k, ck) in c.iter().enumerate() {
            for (ui, ri) in u.iter_mut().zip(&self.vectors[k]) {
                *ui -= ck * ri;
            }
        }
    }

    /// Rigid field Σ c_k r_k.
    pub fn combine(&self, c: [f64; 3]) -> Vec<f64> {
        let mut out = vec![0.0; self.vectors[0].len()];
        for k in 0..3 {
            for (o, r) in out.iter_mut().zip(&self.vectors[k]) {
                *o += c[k] * r;
            }
        }
        out
    }
}

pub fn rigid_motion_basis(mesh: &Mesh, elements: &[usize]) -> RigidBasis {
    let mass = lumped_mass(mesh, elements);
    let total: f64 = mass.iter().sum();
    let mut centre = [0.0; 2];
    for (i, m) in mass.iter().enumerate() {
        centre[0] += m * mesh.nodes[i][0];
        centre[1] += m * mesh.nodes[i][1];
    }
    if total > 0.0 {
        centre = [centre[0] / total, centre[1] / total];
    }
    let n = mesh.nodes.len();
    let mut raw = vec![vec![0.0; 2 * n], vec![0.0; 2 * n], vec![0.0; 2 * n]];
    for i in 0..n {
        if mass[i] == 0.0 {
            continue;
        }
        let p = mesh.nodes[i];
        raw[0][2 * i] = 1.0;
        raw[1][2 * i + 1] = 1.0;
        raw[2][2 * i] = -(p[1] - centre[1]);
        raw[2][2 * i + 1] = p[0] - centre[0];
    }
    let mut vectors: Vec<Vec<f64>> = Vec::with_capacity(3);
    for mut v in raw {
        for q in &vectors {
            let c = mass_inner(&mass, &v, q);
            for (vi, qi) in v.iter_mut().zip(q) {
                *vi -= c * qi;
            }
        }
        let nrm = mass_inner(&mass, &v, &v).sqrt();
        for vi in &mut v {
            *vi /= nrm;
        }
        vectors.push(v);
    }
    RigidBasis { vectors, mass }
}

/// Solver for K x + Bᵀλ = f, B x = c with K singular (kernel = rigid
/// motions) and B = Rᵀ W the lumped-mass moment operator.
///
/// The multipliers follow from the kernel rows (λ = Rᵀ f for W-orthonormal
/// R); a particular solution comes from a Cholesky factor of K with three
/// rigid-motion-fixing dofs removed, and the moments are then set exactly.
#[derive(Debug, Clone)]
pub struct FloatingSolver {
    factor: SkylineCholesky,
    keep: Vec<usize>,
    /// Rigid basis restricted to free dofs (W-orthonormal).
    kernel: Vec<Vec<f64>>,
    weight: Vec<f64>,
    n: usize,
}

impl FloatingSolver {
    pub fn new(mesh: &Mesh, dofmap: &DofMap, k: &CsrMatrix, basis: &RigidBasis) -> Result<Self> {
        let n = dofmap.n_free();
        let weight = {
            let mut nodal = vec![0.0; 2 * mesh.nodes.len()];
            for (i, m) in basis.mass.iter().enumerate() {
                nodal[2 * i] = *m;
                nodal[2 * i + 1] = *m;
            }
            dofmap.reduce(&nodal)
        };
        let kernel: Vec<Vec<f64>> = basis.vectors.iter().map(|r| dofmap.gather(r)).collect();

        let reps: Vec<usize> = (0..mesh.nodes.len())
            .filter(|&v| dofmap.dof(v, 0).is_some())
            .collect();
        let &a = reps.first().ok_or_else(|| Error::Solve("empty floating subdomain".into()))?;
        let pa = mesh.nodes[a];
        let b = *reps
            .iter()
            .max_by(|&&i, &&j| {
                let d = |v: usize| (mesh.nodes[v][0] - pa[0]).hypot(mesh.nodes[v][1] - pa[1]);
                d(i).total_cmp(&d(j)).then(j.cmp(&i))
            })
            .unwrap();
        let dx = (mesh.nodes[b][0] - pa[0]).abs();
        let dy = (mesh.nodes[b][1] - pa[1]).abs();
        let comp_b = if dx >= dy { 1 } else { 0 };
        let mut pinned = [
            dofmap.dof(a, 0).unwrap(),
            dofmap.dof(a, 1).unwrap(),
            dofmap.dof(b, comp_b).unwrap(),
        ];
        pinned.sort_unstable();
        let keep: Vec<usize> = (0..n).filter(|i| !pinned.contains(i)).collect();
        let factor = SkylineCholesky::factor(&k.submatrix(&keep))?;
        Ok(FloatingSolver { factor, keep, kernel, weight, n })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Solves with moments B x = `moments`; returns (x, λ).
    pub fn solve(&self, f: &[f64], moments: [f64; 3]) -> (Vec<f64>, [f64; 3]) {
        let lambda = [0, 1, 2].map(|k| self.kernel[k].iter().zip(f).map(|(r, fi)| r * fi).sum::<f64>());
        let mut fc = f.to_vec();
        for k in 0..3 {
            for i in 0..self.n {
                fc[i] -= self.weight[i] * self.kernel[k][i] * lambda[k];
            }
        }
        let sub: Vec<f64> = self.keep.iter().map(|&i| fc[i]).collect();
        let y = self.factor.solve(&sub);
        let mut x = vec![0.0; self.n];
        for (&i, yi) in self.keep.iter().zip(y) {
            x[i] = yi;
        }
        for k in 0..3 {
            let m: f64 = (0..self.n).map(|i| self.weight[i] * self.kernel[k][i] * x[i]).sum();
            let shift = m - moments[k];
            for i in 0..self.n {
                x[i] -= shift * self.kernel[k][i];
            }
        }
        (x, lambda)
    }
}
