use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::geometry::{realize_fault, Domain, FaultParam};
use crate::dislocation::Setup;
use crate::error::{Error, Result};
use crate::fem::{apply_stiffness, assemble_stiffness, DofMap, SkylineCholesky, SlipField};
use crate::material::ElasticModel;
use crate::mesh::Point;
use crate::par::{self, Execution};

/// Slip coefficients: the first half multiplies sin(kπs) times the fault
/// tangent, the second half the same modes times the normal (k = 1..p/2,
/// s the arclength fraction from the first fault vertex).
#[derive(Debug, Clone, PartialEq)]
pub struct SlipParam {
    pub coeffs: Vec<f64>,
}

impl SlipParam {
    pub fn zeros(p: usize) -> Self {
        SlipParam { coeffs: vec![0.0; p] }
    }

    pub fn modes(&self) -> usize {
        self.coeffs.len() / 2
    }

    pub fn validate(&self) -> Result<()> {
        if self.coeffs.is_empty() || !self.coeffs.len().is_multiple_of(2) {
            return Err(Error::Domain(format!("slip needs an even, positive number of coefficients, got {}", self.coeffs.len())));
        }
        if self.coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::Domain("non-finite slip coefficient".into()));
        }
        Ok(())
    }
}

/// sin(kπs) on the open interval, exactly zero at and beyond the endpoints.
pub fn mode_value(k: usize, s: f64) -> f64 {
    if s <= 0.0 || s >= 1.0 {
        0.0
    } else {
        (k as f64 * PI * s).sin()
    }
}

/// Fixed measurement points on Ξ.
#[derive(Debug, Clone, PartialEq)]
pub struct XiSampling {
    pub points: Vec<Point>,
}

impl XiSampling {
    /// `dom.samples` equally spaced points on the measured part of the top.
    pub fn uniform(dom: &Domain) -> Self {
        let n = dom.samples;
        let points = (0..n)
            .map(|i| [dom.xi[0] + (dom.xi[1] - dom.xi[0]) * i as f64 / (n - 1) as f64, dom.y[1]])
            .collect();
        XiSampling { points }
    }
}

/// Displacements at the sample points.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceData {
    pub points: Vec<Point>,
    pub values: Vec<[f64; 2]>,
    pub noise_sigma: Option<f64>,
}

impl SurfaceData {
    pub fn from_flat(points: Vec<Point>, flat: &[f64]) -> Self {
        let values = flat.chunks(2).map(|c| [c[0], c[1]]).collect();
        SurfaceData { points, values, noise_sigma: None }
    }

    pub fn flat(&self) -> Vec<f64> {
        self.values.iter().flat_map(|v| *v).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.points.len() != self.values.len() {
            return Err(Error::Dimension(format!("{} points but {} values", self.points.len(), self.values.len())));
        }
        if self.values.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Invariant("non-finite surface datum".into()));
        }
        Ok(())
    }

    /// Adds i.i.d. Gaussian noise of standard deviation `sigma` per component.
    pub fn with_noise(&self, sigma: f64, seed: u64) -> Result<Self> {
        let normal = Normal::new(0.0, sigma).map_err(|e| Error::config(format!("noise sigma {sigma}: {e}")))?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values = self
            .values
            .iter()
            .map(|v| [v[0] + normal.sample(&mut rng), v[1] + normal.sample(&mut rng)])
            .collect();
        Ok(SurfaceData { points: self.points.clone(), values, noise_sigma: Some(sigma) })
    }
}

/// Everything fixed across candidate faults in one experiment.
#[derive(Debug, Clone)]
pub struct InverseContext {
    pub domain: Domain,
    pub model: ElasticModel,
    pub sampling: XiSampling,
    pub exec: Execution,
}

impl InverseContext {
    pub fn new(domain: Domain, model: ElasticModel, exec: Execution) -> Self {
        let sampling = XiSampling::uniform(&domain);
        InverseContext { domain, model, sampling, exec }
    }

    pub fn realize(&self, fp: &FaultParam) -> Result<FaultRealization> {
        FaultRealization::new(fp, self)
    }
}

/// A meshed candidate fault with its factorized split-node system.
pub struct FaultRealization {
    pub setup: Setup,
    pub fault: FaultParam,
    /// Interior and boundary fault nodes with their arclength fraction.
    arclength: BTreeMap<usize, f64>,
    tangent: BTreeMap<usize, Point>,
    dofmap: DofMap,
    factor: SkylineCholesky,
    model: ElasticModel,
    /// Per sample: (node a, node b, weight of b).
    sampler: Vec<(usize, usize, f64)>,
    exec: Execution,
}

impl FaultRealization {
    pub fn new(fp: &FaultParam, ctx: &InverseContext) -> Result<Self> {
        let setup = realize_fault(fp, &ctx.domain)?;
        let mesh = &setup.mesh;
        let ft = &setup.ft;

        // Fault nodes in order along the polyline (x increases along it).
        let mut nodes = ft.s_nodes.clone();
        nodes.sort_by(|&a, &b| mesh.nodes[a][0].total_cmp(&mesh.nodes[b][0]));
        let mut acc = vec![0.0];
        for w in nodes.windows(2) {
            let (p, q) = (mesh.nodes[w[0]], mesh.nodes[w[1]]);
            acc.push(acc.last().unwrap() + (q[0] - p[0]).hypot(q[1] - p[1]));
        }
        let total = *acc.last().unwrap();
        let mut arclength = BTreeMap::new();
        let mut tangent = BTreeMap::new();
        for (i, &v) in nodes.iter().enumerate() {
            let s = if i == 0 { 0.0 } else if i + 1 == nodes.len() { 1.0 } else { acc[i] / total };
            arclength.insert(v, s);
            let mut t = [0.0, 0.0];
            for (a, b) in [(i.saturating_sub(1), i), (i, (i + 1).min(nodes.len() - 1))] {
                if a != b {
                    let (p, q) = (mesh.nodes[nodes[a]], mesh.nodes[nodes[b]]);
                    let l = (q[0] - p[0]).hypot(q[1] - p[1]);
                    t[0] += (q[0] - p[0]) / l;
                    t[1] += (q[1] - p[1]) / l;
                }
            }
            let l = t[0].hypot(t[1]);
            tangent.insert(v, [t[0] / l, t[1] / l]);
        }

        let split = &setup.split.mesh;
        let elements = setup.all_elements();
        let dofmap = DofMap::with_alias(split, &elements, &setup.sigma, &setup.split.merge);
        let k = assemble_stiffness(split, &ctx.model, &elements, &dofmap, ctx.exec)?;
        let factor = SkylineCholesky::factor(&k)?;

        let mut sampler = Vec::with_capacity(ctx.sampling.points.len());
        for p in &ctx.sampling.points {
            let hit = mesh
                .facets
                .iter()
                .filter(|f| setup.roles.xi_tags.contains(&f.tag))
                .find_map(|f| {
                    let (a, b) = (mesh.nodes[f.vertices[0]], mesh.nodes[f.vertices[1]]);
                    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
                    let len2 = dx * dx + dy * dy;
                    let t = ((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / len2;
                    let off = (p[0] - a[0] - t * dx).hypot(p[1] - a[1] - t * dy);
                    let tol = 1e-12 * len2.sqrt();
                    ((-1e-12..=1.0 + 1e-12).contains(&t) && off <= tol).then_some((f.vertices[0], f.vertices[1], t.clamp(0.0, 1.0)))
                })
                .ok_or_else(|| Error::Domain(format!("sample point {p:?} is not on Ξ")))?;
            sampler.push(hit);
        }
        Ok(FaultRealization {
            setup,
            fault: fp.clone(),
            arclength,
            tangent,
            dofmap,
            factor,
            model: ctx.model.clone(),
            sampler,
            exec: ctx.exec,
        })
    }

    /// Nodal slip for the given coefficients.
    pub fn slip(&self, sp: &SlipParam) -> Result<SlipField> {
        sp.validate()?;
        let m = sp.modes();
        let mut values = BTreeMap::new();
        for (&v, &s) in &self.arclength {
            let t = self.tangent[&v];
            let n = [-t[1], t[0]];
            let (mut gt, mut gn) = (0.0, 0.0);
            for k in 0..m {
                let b = mode_value(k + 1, s);
                gt += sp.coeffs[k] * b;
                gn += sp.coeffs[m + k] * b;
            }
            values.insert(v, [gt * t[0] + gn * n[0], gt * t[1] + gn * n[1]]);
        }
        let slip = SlipField { values };
        slip.validate(&self.setup.ft)?;
        Ok(slip)
    }

    /// Split-node solution (nodal field on the split mesh) for a slip.
    pub fn solve(&self, slip: &SlipField) -> Result<Vec<f64>> {
        let lift = self.setup.slip_lift(slip);
        let split = &self.setup.split.mesh;
        let klift = apply_stiffness(split, &self.model, &self.setup.all_elements(), &lift, Execution::Sequential)?;
        let rhs: Vec<f64> = self.dofmap.reduce(&klift).iter().map(|v| -v).collect();
        let x = self.factor.solve(&rhs);
        Ok(self.dofmap.expand(&x, Some(&lift)))
    }

    /// Samples a nodal field at the Ξ points (two components per point).
    pub fn sample(&self, field: &[f64]) -> Vec<f64> {
        self.sampler
            .iter()
            .flat_map(|&(a, b, t)| [0, 1].map(|c| (1.0 - t) * field[2 * a + c] + t * field[2 * b + c]))
            .collect()
    }

    pub fn data(&self, sp: &SlipParam) -> Result<Vec<f64>> {
        Ok(self.sample(&self.solve(&self.slip(sp)?)?))
    }

    /// Columns of the linear map c ↦ F(fault, c) for `p` coefficients.
    pub fn operator(&self, p: usize) -> Result<Vec<Vec<f64>>> {
        par::try_map_range(self.exec, p, |j| {
            let mut sp = SlipParam::zeros(p);
            sp.coeffs[j] = 1.0;
            self.data(&sp)
        })
    }
}

/// Surface data of the slip `sp` on the fault `fp`.
pub fn forward_map(ctx: &InverseContext, fp: &FaultParam, sp: &SlipParam) -> Result<SurfaceData> {
    let real = ctx.realize(fp)?;
    let flat = real.data(sp)?;
    Ok(SurfaceData::from_flat(ctx.sampling.points.clone(), &flat))
}
