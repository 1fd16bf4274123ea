//! Piecewise isotropic elasticity with affine Lamé fields per region.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::mesh::{Mesh, Point};

/// Symmetric 2×2 tensor stored as `[xx, yy, xy]`.
pub type Sym2 = [f64; 3];

/// Scalar field `a + b·x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Affine {
    pub a: f64,
    pub b: [f64; 2],
}

impl Affine {
    pub fn constant(a: f64) -> Self {
        Affine { a, b: [0.0, 0.0] }
    }

    pub fn new(coeffs: [f64; 3]) -> Self {
        Affine { a: coeffs[0], b: [coeffs[1], coeffs[2]] }
    }

    #[inline]
    pub fn eval(&self, x: Point) -> f64 {
        self.a + self.b[0] * x[0] + self.b[1] * x[1]
    }

    pub fn gradient_norm(&self) -> f64 {
        self.b[0].hypot(self.b[1])
    }

    fn is_finite(&self) -> bool {
        self.a.is_finite() && self.b.iter().all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lame {
    pub lambda: Affine,
    pub mu: Affine,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Admissibility {
    pub alpha0: f64,
    pub beta0: f64,
    /// Bound on the Lipschitz norms of the Lamé fields.
    pub m_bound: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ElasticModel {
    pub regions: BTreeMap<i32, Lame>,
    pub admissibility: Admissibility,
}

/// Material input as read from configuration: affine coefficients
/// `[a, b1, b2]` per region.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MaterialSpec {
    pub regions: BTreeMap<i32, ([f64; 3], [f64; 3])>,
    pub admissibility: Option<Admissibility>,
}

pub fn build_elastic_model(spec: &MaterialSpec, mesh_regions: &[i32]) -> Result<ElasticModel> {
    let mut regions = BTreeMap::new();
    for &r in mesh_regions {
        let (l, m) = spec.regions.get(&r).ok_or_else(|| Error::Config {
            section: Some(format!("material.{r}")),
            key: None,
            line: None,
            msg: format!("no material given for region {r}"),
        })?;
        let lame = Lame { lambda: Affine::new(*l), mu: Affine::new(*m) };
        if !lame.lambda.is_finite() || !lame.mu.is_finite() {
            return Err(Error::Config {
                section: Some(format!("material.{r}")),
                key: None,
                line: None,
                msg: "non-finite coefficient".into(),
            });
        }
        regions.insert(r, lame);
    }
    let admissibility = spec.admissibility.unwrap_or(Admissibility {
        alpha0: f64::MIN_POSITIVE,
        beta0: f64::MIN_POSITIVE,
        m_bound: f64::INFINITY,
    });
    Ok(ElasticModel { regions, admissibility })
}

impl ElasticModel {
    /// Homogeneous model over the given region tags.
    pub fn homogeneous(regions: &[i32], lambda: f64, mu: f64, adm: Admissibility) -> Self {
        let lame = Lame { lambda: Affine::constant(lambda), mu: Affine::constant(mu) };
        ElasticModel {
            regions: regions.iter().map(|&r| (r, lame)).collect(),
            admissibility: adm,
        }
    }

    pub fn lame(&self, region: i32) -> Result<&Lame> {
        self.regions
            .get(&region)
            .ok_or_else(|| Error::Domain(format!("unknown region {region}")))
    }

    /// Lamé values `(λ, μ)` at a point.
    #[inline]
    pub fn lame_at(&self, region: i32, x: Point) -> Result<(f64, f64)> {
        let l = self.lame(region)?;
        Ok((l.lambda.eval(x), l.mu.eval(x)))
    }

    /// σ = λ tr(ε) I + 2μ ε.
    pub fn tensor_apply(&self, region: i32, x: Point, strain: Sym2) -> Result<Sym2> {
        let (l, m) = self.lame_at(region, x)?;
        Ok(stress(l, m, strain))
    }

    /// Largest Lamé magnitude, used as a stress scale.
    pub fn modulus_scale(&self) -> f64 {
        self.regions
            .values()
            .map(|l| l.lambda.a.abs().max(l.mu.a.abs()))
            .fold(0.0, f64::max)
    }
}

#[inline]
pub fn stress(lambda: f64, mu: f64, e: Sym2) -> Sym2 {
    let tr = e[0] + e[1];
    [lambda * tr + 2.0 * mu * e[0], lambda * tr + 2.0 * mu * e[1], 2.0 * mu * e[2]]
}

/// Full double contraction of symmetric tensors.
#[inline]
pub fn ddot(a: Sym2, b: Sym2) -> f64 {
    a[0] * b[0] + a[1] * b[1] + 2.0 * a[2] * b[2]
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegionAdmissibility {
    pub region: i32,
    pub min_mu: f64,
    pub min_bulk: f64,
    pub lambda_lipschitz: f64,
    pub mu_lipschitz: f64,
    pub mu_ok: bool,
    pub bulk_ok: bool,
    pub lipschitz_ok: bool,
}

impl RegionAdmissibility {
    pub fn passed(&self) -> bool {
        self.mu_ok && self.bulk_ok && self.lipschitz_ok
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdmissibilityReport {
    pub regions: Vec<RegionAdmissibility>,
}

impl AdmissibilityReport {
    pub fn passed(&self) -> bool {
        self.regions.iter().all(RegionAdmissibility::passed)
    }
}

/// Extremizes the affine fields over each region's nodes (exact for affine
/// fields on polygonal regions) and compares against α₀, β₀ and M.
pub fn check_admissibility(model: &ElasticModel, mesh: &Mesh) -> AdmissibilityReport {
    let mut nodes_of: BTreeMap<i32, BTreeSet<usize>> = BTreeMap::new();
    for el in &mesh.elements {
        nodes_of.entry(el.region).or_default().extend(el.vertices);
    }
    let adm = model.admissibility;
    let mut regions = Vec::new();
    for (&region, lame) in &model.regions {
        let Some(nodes) = nodes_of.get(&region) else { continue };
        let mut min_mu = f64::INFINITY;
        let mut min_bulk = f64::INFINITY;
        let mut sup_l = 0.0f64;
        let mut sup_m = 0.0f64;
        for &v in nodes {
            let x = mesh.nodes[v];
            let l = lame.lambda.eval(x);
            let m = lame.mu.eval(x);
            min_mu = min_mu.min(m);
            min_bulk = min_bulk.min(3.0 * l + 2.0 * m);
            sup_l = sup_l.max(l.abs());
            sup_m = sup_m.max(m.abs());
        }
        let lambda_lipschitz = sup_l + lame.lambda.gradient_norm();
        let mu_lipschitz = sup_m + lame.mu.gradient_norm();
        regions.push(RegionAdmissibility {
            region,
            min_mu,
            min_bulk,
            lambda_lipschitz,
            mu_lipschitz,
            mu_ok: min_mu >= adm.alpha0,
            bulk_ok: min_bulk >= adm.beta0,
            lipschitz_ok: lambda_lipschitz + mu_lipschitz <= adm.m_bound,
        });
    }
    AdmissibilityReport { regions }
}
