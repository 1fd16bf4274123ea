use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{verify_transmission, DirectSolution, Method, Setup};
use crate::error::{Error, Result};
use crate::fem::cg::pcg;
use crate::fem::sparse::{dot, CsrMatrix};
use crate::fem::{
    assemble_stiffness, rigid_motion_basis, DofMap, FloatingSolver, RigidBasis, SkylineCholesky,
    SlipField,
};
use crate::material::ElasticModel;
use crate::mesh::FaultTopology;
use crate::par::{self, Execution};

/// Zero extension of the slip to all Γ nodes, as a vector of length 2·|Γ|
/// in `ft.gamma_nodes` order.
pub fn extend_slip(slip: &SlipField, ft: &FaultTopology) -> Vec<f64> {
    let mut out = vec![0.0; 2 * ft.gamma_nodes.len()];
    for (k, v) in ft.gamma_nodes.iter().enumerate() {
        if ft.split_map.contains_key(v) {
            let g = slip.get(*v);
            out[2 * k] = g[0];
            out[2 * k + 1] = g[1];
        }
    }
    out
}

struct PlusSide {
    elements: Vec<usize>,
    dofmap: DofMap,
    factor: SkylineCholesky,
}

struct MinusSide {
    elements: Vec<usize>,
    dofmap: DofMap,
    solver: FloatingSolver,
    basis: RigidBasis,
}

/// Discrete Neumann-to-Dirichlet maps N⁺, N⁻ on Γ with factorized subdomain
/// systems. Traction and trace vectors live on Γ nodes (2 per node) and are
/// paired through the consistent Γ mass matrix.
pub struct InterfaceOperator {
    minus_nodes: Vec<usize>,
    plus_nodes: Vec<usize>,
    mass: CsrMatrix,
    lumped: Vec<f64>,
    /// Preconditioner diagonal: lumped mass² times the mean two-sided compliance 1/μ⁺ + 1/μ⁻.
    precond: Vec<f64>,
    plus: PlusSide,
    minus: MinusSide,
    /// Rigid basis of Ω⁻ restricted to Γ (3 vectors of length 2·|Γ|).
    rigid_gamma: Vec<Vec<f64>>,
    n_split: usize,
    exec: Execution,
}

/// Symmetry and positivity of the Galerkin matrix A of −N⁺ + N⁻ on random
/// trace vectors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatorProbe {
    pub samples: usize,
    /// max |ψᵀAφ − φᵀAψ| / (‖Aφ‖‖ψ‖ + ‖Aψ‖‖φ‖).
    pub symmetry_defect: f64,
    /// min φᵀAφ / φᵀMφ.
    pub min_rayleigh: f64,
}

/// Result of the interface equation.
#[derive(Debug, Clone)]
pub struct InterfaceSolution {
    /// Traction on Γ (nodal, 2·|Γ|).
    pub phi: Vec<f64>,
    /// Rigid motion of Ω⁻ (coefficients in the Ω⁻ rigid basis) closing the
    /// jump: N⁺φ − N⁻φ − Qr = g̃.
    pub rigid: [f64; 3],
    pub iterations: usize,
    /// ‖(N⁺−N⁻)φ − Qr − g̃‖_M / ‖g̃‖_M after re-applying the operators.
    pub relative_residual: f64,
}

fn solve3(a: [[f64; 3]; 3], b: [f64; 3]) -> [f64; 3] {
    let mut m = [[0.0; 4]; 3];
    for i in 0..3 {
        m[i][..3].copy_from_slice(&a[i]);
        m[i][3] = b[i];
    }
    for c in 0..3 {
        let p = (c..3).max_by(|&i, &j| m[i][c].abs().total_cmp(&m[j][c].abs())).unwrap();
        m.swap(c, p);
        for r in c + 1..3 {
            let f = m[r][c] / m[c][c];
            for k in c..4 {
                m[r][k] -= f * m[c][k];
            }
        }
    }
    let mut x = [0.0; 3];
    for i in (0..3).rev() {
        let s: f64 = (i + 1..3).map(|k| m[i][k] * x[k]).sum();
        x[i] = (m[i][3] - s) / m[i][i];
    }
    x
}

impl InterfaceOperator {
    pub fn build(setup: &Setup, model: &ElasticModel, exec: Execution) -> Result<Self> {
        setup.require_clamped()?;
        let ft = &setup.ft;
        if ft.gamma_nodes.is_empty() {
            return Err(Error::Geometry("no closed extension Γ: omega_minus_regions is empty".into()));
        }
        let mesh = &setup.split.mesh;
        let index: BTreeMap<usize, usize> =
            ft.gamma_nodes.iter().enumerate().map(|(k, &v)| (v, k)).collect();
        let minus_nodes = ft.gamma_nodes.clone();
        let plus_nodes: Vec<usize> = ft
            .gamma_nodes
            .iter()
            .map(|v| ft.split_map.get(v).copied().unwrap_or(*v))
            .collect();

        let ng = ft.gamma_nodes.len();
        let mut trip = Vec::new();
        let mut lumped = vec![0.0; 2 * ng];
        let mut compliance = vec![0.0; 2 * ng];
        for f in &ft.gamma_facets {
            let [a, b] = f.vertices;
            let (pa, pb) = (setup.mesh.nodes[a], setup.mesh.nodes[b]);
            let len = (pb[0] - pa[0]).hypot(pb[1] - pa[1]);
            let mid = [(pa[0] + pb[0]) / 2.0, (pa[1] + pb[1]) / 2.0];
            let mu = |e: usize| model.lame_at(setup.mesh.elements[e].region, mid).map(|l| l.1);
            let flex = 1.0 / mu(f.minus_element)? + 1.0 / mu(f.plus_element)?;
            let (ia, ib) = (index[&a], index[&b]);
            for c in 0..2 {
                let (ra, rb) = (2 * ia + c, 2 * ib + c);
                trip.push((ra, ra, len / 3.0));
                trip.push((rb, rb, len / 3.0));
                trip.push((ra, rb, len / 6.0));
                trip.push((rb, ra, len / 6.0));
                lumped[ra] += len / 2.0;
                lumped[rb] += len / 2.0;
                compliance[ra] += flex * len / 2.0;
                compliance[rb] += flex * len / 2.0;
            }
        }
        let precond: Vec<f64> = lumped.iter().zip(&compliance).map(|(m, c)| m * c).collect();
        let mass = CsrMatrix::from_triplets(2 * ng, trip);

        let plus_elements = ft.plus_element_ids();
        let minus_elements = ft.minus_element_ids();
        let (plus, minus) = par::join(
            exec,
            || -> Result<PlusSide> {
                let dofmap = DofMap::new(mesh, &plus_elements, &setup.sigma);
                let k = assemble_stiffness(mesh, model, &plus_elements, &dofmap, exec)?;
                let factor = SkylineCholesky::factor(&k)?;
                Ok(PlusSide { elements: plus_elements.clone(), dofmap, factor })
            },
            || -> Result<MinusSide> {
                let free = vec![false; mesh.nodes.len()];
                let dofmap = DofMap::new(mesh, &minus_elements, &free);
                let k = assemble_stiffness(mesh, model, &minus_elements, &dofmap, exec)?;
                let basis = rigid_motion_basis(mesh, &minus_elements);
                let solver = FloatingSolver::new(mesh, &dofmap, &k, &basis)?;
                Ok(MinusSide { elements: minus_elements.clone(), dofmap, solver, basis })
            },
        );
        let (plus, minus) = (plus?, minus?);
        let rigid_gamma = minus
            .basis
            .vectors
            .iter()
            .map(|r| {
                let mut q = vec![0.0; 2 * ng];
                for (k, &v) in minus_nodes.iter().enumerate() {
                    q[2 * k] = r[2 * v];
                    q[2 * k + 1] = r[2 * v + 1];
                }
                q
            })
            .collect();
        Ok(InterfaceOperator {
            minus_nodes,
            plus_nodes,
            mass,
            lumped,
            precond,
            plus,
            minus,
            rigid_gamma,
            n_split: mesh.nodes.len(),
            exec,
        })
    }

    /// Number of Γ unknowns (2 per Γ node).
    pub fn dim(&self) -> usize {
        self.mass.n
    }

    pub fn mass(&self) -> &CsrMatrix {
        &self.mass
    }

    pub fn lumped_mass(&self) -> &[f64] {
        &self.lumped
    }

    pub fn minus_elements(&self) -> &[usize] {
        &self.minus.elements
    }

    pub fn plus_elements(&self) -> &[usize] {
        &self.plus.elements
    }

    pub fn minus_basis(&self) -> &RigidBasis {
        &self.minus.basis
    }

    /// Duality pairing ⟨ψ, v⟩_Γ = ψᵀ M v.
    pub fn pairing(&self, psi: &[f64], v: &[f64]) -> f64 {
        dot(psi, &self.mass.mul_vec(v))
    }

    fn scatter(&self, nodes: &[usize], gamma: &[f64], scale: f64, nodal: &mut [f64]) {
        for (k, &v) in nodes.iter().enumerate() {
            nodal[2 * v] += scale * gamma[2 * k];
            nodal[2 * v + 1] += scale * gamma[2 * k + 1];
        }
    }

    fn trace(nodes: &[usize], nodal: &[f64]) -> Vec<f64> {
        nodes.iter().flat_map(|&v| [nodal[2 * v], nodal[2 * v + 1]]).collect()
    }

    /// Ω⁺ mixed problem for a nodal load on the split mesh; nodal u⁺.
    pub fn solve_plus(&self, load: &[f64]) -> Vec<f64> {
        let rhs = self.plus.dofmap.reduce(load);
        let x = self.plus.factor.solve(&rhs);
        self.plus.dofmap.expand(&x, None)
    }

    /// Ω⁻ Neumann problem in the rigid-motion-free space for a nodal load;
    /// incompatible load components are absorbed by the multipliers.
    pub fn solve_minus(&self, load: &[f64]) -> Vec<f64> {
        let rhs = self.minus.dofmap.reduce(load);
        let (x, _) = self.minus.solver.solve(&rhs, [0.0; 3]);
        self.minus.dofmap.expand(&x, None)
    }

    fn traction_load(&self, nodes: &[usize], phi: &[f64], sign: f64) -> Vec<f64> {
        let mphi = self.mass.mul_vec(phi);
        let mut load = vec![0.0; 2 * self.n_split];
        self.scatter(nodes, &mphi, sign, &mut load);
        load
    }

    /// N⁺φ: trace on Γ of the Ω⁺ solution with Neumann datum φ on Γ. The
    /// normal points into Ω⁺, so the datum enters the load as −⟨φ, v⟩.
    pub fn apply_nd_plus(&self, phi: &[f64]) -> Vec<f64> {
        let u = self.solve_plus(&self.traction_load(&self.plus_nodes, phi, -1.0));
        Self::trace(&self.plus_nodes, &u)
    }

    /// N⁻φ: trace on Γ of the normalized Ω⁻ Neumann solution.
    pub fn apply_nd_minus(&self, phi: &[f64]) -> Vec<f64> {
        let u = self.solve_minus(&self.traction_load(&self.minus_nodes, phi, 1.0));
        Self::trace(&self.minus_nodes, &u)
    }

    /// Galerkin form of −N⁺ + N⁻: returns M(−N⁺φ + N⁻φ), so that
    /// ψᵀ·(result) = ⟨ψ, (−N⁺+N⁻)φ⟩_Γ.
    pub fn galerkin_apply(&self, phi: &[f64]) -> Vec<f64> {
        let (np, nm) = par::join(self.exec, || self.apply_nd_plus(phi), || self.apply_nd_minus(phi));
        let d: Vec<f64> = nm.iter().zip(&np).map(|(m, p)| m - p).collect();
        self.mass.mul_vec(&d)
    }

    /// Solves the interface equation for the traction φ on Γ.
    ///
    /// φ is sought among self-equilibrated tractions on Γ (moments against
    /// the rigid motions of Ω⁻ fixed by the Ω⁻ loads), together with a rigid
    /// motion r of Ω⁻, such that (N⁺ − N⁻)φ − Qr = g̃ in the M-weighted
    /// Galerkin sense. `loads` are optional nodal loads (minus, plus) on the
    /// split mesh; the homogeneous problem uses `None`.
    pub fn solve_interface_equation(&self, g_ext: &[f64], loads: Option<(&[f64], &[f64])>) -> Result<InterfaceSolution> {
        let n = self.dim();
        if g_ext.len() != n {
            return Err(Error::Dimension(format!("g̃ has {} entries, Γ has {n}", g_ext.len())));
        }
        // Affine parts from the subdomain loads.
        let (d_plus, d_minus, moments) = match loads {
            Some((lm, lp)) => {
                let (up, um) = par::join(self.exec, || self.solve_plus(lp), || self.solve_minus(lm));
                let mom = self.minus.basis.vectors.iter().map(|r| -dot(r, lm)).collect::<Vec<_>>();
                (
                    Self::trace(&self.plus_nodes, &up),
                    Self::trace(&self.minus_nodes, &um),
                    [mom[0], mom[1], mom[2]],
                )
            }
            None => (vec![0.0; n], vec![0.0; n], [0.0; 3]),
        };
        let target: Vec<f64> = (0..n).map(|i| g_ext[i] - d_plus[i] + d_minus[i]).collect();
        let b: Vec<f64> = self.mass.mul_vec(&target).iter().map(|v| -v).collect();

        let c: Vec<Vec<f64>> = self.rigid_gamma.iter().map(|q| self.mass.mul_vec(q)).collect();
        let gram = |w: &dyn Fn(usize) -> f64| {
            let mut g = [[0.0; 3]; 3];
            for i in 0..3 {
                for j in 0..3 {
                    g[i][j] = (0..n).map(|k| c[i][k] * c[j][k] * w(k)).sum();
                }
            }
            g
        };
        let ctc = gram(&|_| 1.0);
        let project = |v: &[f64]| -> Vec<f64> {
            let rhs = [0, 1, 2].map(|i| dot(&c[i], v));
            let y = solve3(ctc, rhs);
            (0..n).map(|k| v[k] - (0..3).map(|i| c[i][k] * y[i]).sum::<f64>()).collect()
        };
        let y0 = solve3(ctc, moments);
        let phi0: Vec<f64> = (0..n).map(|k| (0..3).map(|i| c[i][k] * y0[i]).sum()).collect();

        let a_phi0 = self.galerkin_apply(&phi0);
        let rhs = project(&b.iter().zip(&a_phi0).map(|(x, y)| x - y).collect::<Vec<_>>());
        let diag = &self.precond;
        let max_iter = 2 * n;
        let sol = pcg(
            n,
            |p| Ok(project(&self.galerkin_apply(&project(p)))),
            |r| project(&project(r).iter().zip(diag.iter()).map(|(x, d)| x / d).collect::<Vec<_>>()),
            &rhs,
            1e-10,
            max_iter,
        )
        .map_err(|e| match e {
            Error::Solve(msg) => Error::Solve(format!("interface CG: {msg} (coercivity lost?)")),
            other => other,
        })?;
        let phi: Vec<f64> = phi0.iter().zip(&sol.x).map(|(a, b)| a + b).collect();

        let a_phi = self.galerkin_apply(&phi);
        let resid: Vec<f64> = b.iter().zip(&a_phi).map(|(x, y)| x - y).collect();
        let rigid = solve3(ctc, [0, 1, 2].map(|i| dot(&c[i], &resid)));

        // Residual of the jump equation in the M-norm.
        let (np, nm) = par::join(self.exec, || self.apply_nd_plus(&phi), || self.apply_nd_minus(&phi));
        let jump_err: Vec<f64> = (0..n)
            .map(|i| {
                let q: f64 = (0..3).map(|k| rigid[k] * self.rigid_gamma[k][i]).sum();
                np[i] - nm[i] - q - target[i]
            })
            .collect();
        let tn = self.pairing(&target, &target).sqrt();
        let en = self.pairing(&jump_err, &jump_err).sqrt();
        Ok(InterfaceSolution {
            phi,
            rigid,
            iterations: sol.iterations,
            relative_residual: if tn > 0.0 { en / tn } else { en },
        })
    }

    /// Builds u = u⁻χ_{Ω⁻} + u⁺χ_{Ω⁺} on the split mesh from an interface
    /// solution; Γ nodes outside the fault take the mean of both sides.
    pub fn assemble_dislocation_solution(
        &self,
        setup: &Setup,
        model: &ElasticModel,
        sol: &InterfaceSolution,
        slip: &SlipField,
        load: Option<&[f64]>,
    ) -> Result<DirectSolution> {
        let zero = vec![0.0; 2 * self.n_split];
        let total = load.unwrap_or(&zero);
        let (lm, lp) = split_load(setup, total);
        let mut load_plus = self.traction_load(&self.plus_nodes, &sol.phi, -1.0);
        let mut load_minus = self.traction_load(&self.minus_nodes, &sol.phi, 1.0);
        for i in 0..load_plus.len() {
            load_plus[i] += lp[i];
            load_minus[i] += lm[i];
        }
        let (up, mut um) = par::join(self.exec, || self.solve_plus(&load_plus), || self.solve_minus(&load_minus));
        let rigid = self.minus.basis.combine(sol.rigid);
        for (u, r) in um.iter_mut().zip(&rigid) {
            *u += r;
        }
        let mesh = &setup.split.mesh;
        let mut in_minus = vec![false; mesh.nodes.len()];
        let mut in_plus = vec![false; mesh.nodes.len()];
        for (e, el) in mesh.elements.iter().enumerate() {
            for &v in &el.vertices {
                if setup.ft.minus_elements[e] {
                    in_minus[v] = true;
                } else {
                    in_plus[v] = true;
                }
            }
        }
        let mut field = vec![0.0; 2 * mesh.nodes.len()];
        for v in 0..mesh.nodes.len() {
            for c in 0..2 {
                let i = 2 * v + c;
                field[i] = match (in_minus[v], in_plus[v]) {
                    (true, true) => 0.5 * (um[i] + up[i]),
                    (true, false) => um[i],
                    _ => up[i],
                };
            }
        }
        let gamma_sides = self
            .minus_nodes
            .iter()
            .zip(&self.plus_nodes)
            .map(|(&m, &p)| ([um[2 * m], um[2 * m + 1]], [up[2 * p], up[2 * p + 1]]))
            .collect();
        let mut out = DirectSolution {
            method: Method::Interface,
            field,
            gamma_sides,
            report: Default::default(),
        };
        out.report = verify_transmission(setup, model, &out, slip, total, self.exec)?;
        Ok(out)
    }

    /// Applies A to `samples` pairs of uniform random vectors in [−1, 1].
    pub fn probe(&self, samples: usize, seed: u64) -> OperatorProbe {
        let n = self.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut pairs = Vec::with_capacity(samples);
        for _ in 0..samples {
            let phi: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let psi: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            pairs.push((phi, psi));
        }
        let results = par::map_range(self.exec, samples, |k| {
            let (phi, psi) = &pairs[k];
            let (a_phi, a_psi) = (self.galerkin_apply(phi), self.galerkin_apply(psi));
            let nrm = |v: &[f64]| dot(v, v).sqrt();
            let defect = (dot(psi, &a_phi) - dot(phi, &a_psi)).abs()
                / (nrm(&a_phi) * nrm(psi) + nrm(&a_psi) * nrm(phi));
            let rayleigh = dot(phi, &a_phi) / self.pairing(phi, phi);
            (defect, rayleigh)
        });
        OperatorProbe {
            samples,
            symmetry_defect: results.iter().map(|r| r.0).fold(0.0, f64::max),
            min_rayleigh: results.iter().map(|r| r.1).fold(f64::INFINITY, f64::min),
        }
    }

    /// Convenience: extension, interface equation and assembly in one call.
    pub fn solve(&self, setup: &Setup, model: &ElasticModel, slip: &SlipField, load: Option<&[f64]>) -> Result<(InterfaceSolution, DirectSolution)> {
        slip.validate(&setup.ft)?;
        let g = extend_slip(slip, &setup.ft);
        let sol = match load {
            Some(l) => {
                let (lm, lp) = split_load(setup, l);
                self.solve_interface_equation(&g, Some((&lm, &lp)))?
            }
            None => self.solve_interface_equation(&g, None)?,
        };
        let direct = self.assemble_dislocation_solution(setup, model, &sol, slip, load)?;
        Ok((sol, direct))
    }
}

/// Splits a nodal load on the split mesh between the subdomains: nodes
/// touched by Ω⁺ elements go to Ω⁺, the rest to Ω⁻. Any split of the shared
/// Γ nodes is admissible since φ absorbs it.
pub fn split_load(setup: &Setup, load: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mesh = &setup.split.mesh;
    let mut in_plus = vec![false; mesh.nodes.len()];
    for (e, el) in mesh.elements.iter().enumerate() {
        if !setup.ft.minus_elements[e] {
            for &v in &el.vertices {
                in_plus[v] = true;
            }
        }
    }
    let mut lm = vec![0.0; load.len()];
    let mut lp = vec![0.0; load.len()];
    for v in 0..mesh.nodes.len() {
        let dst = if in_plus[v] { &mut lp } else { &mut lm };
        dst[2 * v] = load[2 * v];
        dst[2 * v + 1] = load[2 * v + 1];
    }
    (lm, lp)
}
