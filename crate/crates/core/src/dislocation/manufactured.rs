//! Manufactured solutions on the unit square with an interior horizontal
//! fault S = [0.25, 0.75] × {0.5}.
//!
//! The exact field is u = u_c + χ_D g(x₁) e₁ where u_c is a smooth quadratic
//! vanishing on the clamped bottom, D is the half-strip above S and g is a
//! quartic bump with double roots at the fault tips, so u is C¹ across the
//! vertical sides of D and jumps by g e₁ across S. Body force, boundary
//! tractions and the (nonzero) stress jumps across interior edges are
//! computed from the exact pieces and handed to the solvers as loads.

use std::str::FromStr;

use super::{InterfaceOperator, Setup};
use crate::error::{Error, Result};
use crate::fem::assembly::{add_edge_load, add_element_load};
use crate::fem::norms::{h1_seminorm_error, l2_difference, l2_error, l2_norm};
use crate::fem::{LinearSolver, SlipField};
use crate::material::{Admissibility, Affine, ElasticModel, Lame, Sym2};
use crate::mesh::generate::{triangulate, ColumnGrid, Side, Tagging};
use crate::mesh::{BoundaryRoles, Mesh, Point};
use crate::par::{self, Execution};

pub const FAULT_X: [f64; 2] = [0.25, 0.75];
pub const FAULT_Y: f64 = 0.5;
pub const LAYER_Y: f64 = 0.4375;
pub const FAULT_TAG: i32 = 10;
pub const SIGMA_TAG: i32 = 1;
pub const XI_TAG: i32 = 3;
const LOWER_OFFSET: i32 = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ManufacturedKind {
    SmoothJump,
    LayeredJump,
    ZeroJump,
}

impl FromStr for ManufacturedKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "smooth_jump" => Ok(Self::SmoothJump),
            "layered_jump" => Ok(Self::LayeredJump),
            "zero_jump" => Ok(Self::ZeroJump),
            other => Err(Error::Config {
                section: Some("slip".into()),
                key: Some("manufactured".into()),
                line: None,
                msg: format!("unknown manufactured kind `{other}` (smooth_jump, layered_jump, zero_jump)"),
            }),
        }
    }
}

impl std::fmt::Display for ManufacturedKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::SmoothJump => "smooth_jump",
            Self::LayeredJump => "layered_jump",
            Self::ZeroJump => "zero_jump",
        })
    }
}

/// Fault bump g(x₁) = 16 (x₁ − s₀)² (s₁ − x₁)² and its first two derivatives.
pub fn bump(x: f64) -> [f64; 3] {
    let p = (x - FAULT_X[0]) * (FAULT_X[1] - x);
    let dp = FAULT_X[0] + FAULT_X[1] - 2.0 * x;
    [16.0 * p * p, 32.0 * p * dp, 32.0 * (dp * dp - 2.0 * p)]
}

/// Unit-square mesh with n × n cells (n divisible by 16). Regions: 2 for the
/// box [0.25, 0.75] × [0.25, 0.5] under the fault, 3 for the surrounding
/// ring [0.125, 0.875] × [0.125, 0.5] when `ring` is set, 1 elsewhere; the
/// layered variant adds 10 below y = 0.4375. Facets: bottom 1 (clamped),
/// right 2, top 3 (measured), left 4, fault 10.
pub fn mms_mesh(n: usize, layered: bool, ring: bool) -> Result<(Mesh, BoundaryRoles)> {
    if n == 0 || !n.is_multiple_of(16) {
        return Err(Error::config(format!("manufactured mesh size must be a positive multiple of 16, got {n}")));
    }
    let grid = ColumnGrid::rect(n, n, [0.0, 1.0], [0.0, 1.0]);
    let inside = |c: Point, x: [f64; 2], y: [f64; 2]| c[0] > x[0] && c[0] < x[1] && c[1] > y[0] && c[1] < y[1];
    let region = |c: Point| {
        let base = if inside(c, FAULT_X, [0.25, FAULT_Y]) {
            2
        } else if ring && inside(c, [0.125, 0.875], [0.125, FAULT_Y]) {
            3
        } else {
            1
        };
        if layered && c[1] < LAYER_Y {
            base + LOWER_OFFSET
        } else {
            base
        }
    };
    let boundary = |s: Side, _: Point| match s {
        Side::Bottom => SIGMA_TAG,
        Side::Right => 2,
        Side::Top => XI_TAG,
        Side::Left => 4,
    };
    let eps = 1e-12;
    let interior = |a: Point, b: Point| {
        let on_line = (a[1] - FAULT_Y).abs() < eps && (b[1] - FAULT_Y).abs() < eps;
        let within = |p: Point| p[0] > FAULT_X[0] - eps && p[0] < FAULT_X[1] + eps;
        (on_line && within(a) && within(b)).then_some(FAULT_TAG)
    };
    let mesh = triangulate(&grid, &Tagging { region: &region, boundary: &boundary, interior: &interior });
    let mut minus = vec![2];
    if ring {
        minus.push(3);
    }
    if layered {
        minus.extend(minus.clone().iter().map(|r| r + LOWER_OFFSET));
    }
    let roles = BoundaryRoles {
        sigma_tags: [SIGMA_TAG].into(),
        free_tags: [2, XI_TAG, 4].into(),
        xi_tags: [XI_TAG].into(),
        fault_tags: [FAULT_TAG].into(),
        omega_minus_regions: minus.into_iter().collect(),
    };
    Ok((mesh, roles))
}

/// Lamé model used by each manufactured kind, over the given region tags.
pub fn manufactured_model(kind: ManufacturedKind, regions: &[i32]) -> ElasticModel {
    let mut model = ElasticModel {
        regions: Default::default(),
        admissibility: Admissibility { alpha0: 0.5, beta0: 1.0, m_bound: 10.0 },
    };
    for &r in regions {
        let lame = match kind {
            ManufacturedKind::SmoothJump => Lame { lambda: Affine::new([1.5, 0.5, 0.0]), mu: Affine::new([1.0, 0.0, 0.5]) },
            ManufacturedKind::ZeroJump => Lame { lambda: Affine::constant(1.0), mu: Affine::constant(1.0) },
            ManufacturedKind::LayeredJump => {
                let mu = if r >= LOWER_OFFSET { 1.0 } else { 10.0 };
                Lame { lambda: Affine::constant(1.5 * mu), mu: Affine::constant(mu) }
            }
        };
        model.regions.insert(r, lame);
    }
    if kind == ManufacturedKind::LayeredJump {
        model.admissibility = Admissibility { alpha0: 0.5, beta0: 1.0, m_bound: 40.0 };
    }
    model
}

/// Value, gradient (∂u_i/∂x_j) and Hessian (∂²u_i/∂x_j∂x_k) of one piece.
#[derive(Debug, Clone, Copy)]
struct Jet {
    u: [f64; 2],
    g: [[f64; 2]; 2],
    h: [[[f64; 2]; 2]; 2],
}

/// A manufactured problem on a given [`Setup`].
#[derive(Debug, Clone)]
pub struct ManufacturedCase {
    pub kind: ManufacturedKind,
    pub model: ElasticModel,
    pub slip: SlipField,
    /// Nodal load on the split mesh: body force, boundary tractions and
    /// interior stress jumps of the exact solution.
    pub load: Vec<f64>,
    /// Per element: does it lie in the slipped strip D?
    in_strip: Vec<bool>,
}

impl ManufacturedCase {
    fn jet(&self, in_strip: bool, x: Point) -> Jet {
        let [x1, y] = x;
        let mut j = match self.kind {
            ManufacturedKind::ZeroJump => Jet {
                u: [0.1 * y, -0.05 * y],
                g: [[0.0, 0.1], [0.0, -0.05]],
                h: [[[0.0; 2]; 2]; 2],
            },
            _ => Jet {
                u: [0.1 * y * (1.0 + x1 - 0.5 * y), 0.1 * y * (-0.5 + 0.3 * x1 + 0.2 * y)],
                g: [[0.1 * y, 0.1 * (1.0 + x1 - y)], [0.03 * y, 0.1 * (-0.5 + 0.3 * x1 + 0.4 * y)]],
                h: [[[0.0, 0.1], [0.1, -0.1]], [[0.0, 0.03], [0.03, 0.04]]],
            },
        };
        if in_strip && self.kind != ManufacturedKind::ZeroJump {
            let b = bump(x1);
            j.u[0] += b[0];
            j.g[0][0] += b[1];
            j.h[0][0][0] += b[2];
        }
        j
    }

    /// Exact displacement on element `e`.
    pub fn exact(&self, e: usize, x: Point) -> [f64; 2] {
        self.jet(self.in_strip[e], x).u
    }

    pub fn exact_gradient(&self, e: usize, x: Point) -> [[f64; 2]; 2] {
        self.jet(self.in_strip[e], x).g
    }

    fn stress(&self, lame: &Lame, in_strip: bool, x: Point) -> Sym2 {
        let g = self.jet(in_strip, x).g;
        let e = [g[0][0], g[1][1], 0.5 * (g[0][1] + g[1][0])];
        crate::material::stress(lame.lambda.eval(x), lame.mu.eval(x), e)
    }

    /// f = −div σ(u) on one piece.
    fn body_force(&self, lame: &Lame, in_strip: bool, x: Point) -> [f64; 2] {
        let j = self.jet(in_strip, x);
        let (l, m) = (lame.lambda.eval(x), lame.mu.eval(x));
        let (gl, gm) = (lame.lambda.b, lame.mu.b);
        let tr = j.g[0][0] + j.g[1][1];
        let eps = |a: usize, b: usize| 0.5 * (j.g[a][b] + j.g[b][a]);
        let mut f = [0.0; 2];
        for i in 0..2 {
            let dtr = j.h[0][0][i] + j.h[1][1][i];
            let mut div = gl[i] * tr + l * dtr;
            for k in 0..2 {
                div += 2.0 * gm[k] * eps(i, k) + m * (j.h[i][k][k] + j.h[k][i][k]);
            }
            f[i] = -div;
        }
        f
    }
}

fn traction(s: Sym2, n: Point) -> [f64; 2] {
    [s[0] * n[0] + s[2] * n[1], s[2] * n[0] + s[1] * n[1]]
}

/// Builds the manufactured data for `setup`, which must be an [`mms_mesh`]
/// (or a mesh with the same fault and tags).
pub fn manufactured_case(kind: ManufacturedKind, setup: &Setup) -> Result<ManufacturedCase> {
    let mesh = &setup.mesh;
    let model = manufactured_model(kind, &mesh.regions());
    let in_strip: Vec<bool> = (0..mesh.elements.len())
        .map(|e| {
            let c = mesh.centroid(e);
            c[0] > FAULT_X[0] && c[0] < FAULT_X[1] && c[1] > FAULT_Y
        })
        .collect();
    let slip = if kind == ManufacturedKind::ZeroJump {
        SlipField::zero(&setup.ft)
    } else {
        SlipField::from_fn(mesh, &setup.ft, |x| [bump(x[0])[0], 0.0])
    };
    let mut case = ManufacturedCase { kind, model, slip, load: Vec::new(), in_strip };

    let split = &setup.split.mesh;
    let mut load = vec![0.0; 2 * split.nodes.len()];
    for e in 0..split.elements.len() {
        let lame = *case.model.lame(split.elements[e].region)?;
        let d = case.in_strip[e];
        add_element_load(&mut load, split, e, &|x| case.body_force(&lame, d, x));
    }
    let edges = mesh.edge_map();
    let outward = |a: Point, b: Point| {
        let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
        let len = dx.hypot(dy);
        [dy / len, -dx / len]
    };
    for f in &split.facets {
        if setup.roles.sigma_tags.contains(&f.tag) || setup.roles.fault_tags.contains(&f.tag) {
            continue;
        }
        let [a, b] = f.vertices;
        let key = crate::mesh::edge_key(setup.split.merge[a], setup.split.merge[b]);
        let Some(adj) = edges.get(&key).filter(|adj| adj.len() == 1) else { continue };
        let e = adj[0];
        let lame = *case.model.lame(mesh.elements[e].region)?;
        let n = outward(split.nodes[a], split.nodes[b]);
        let d = case.in_strip[e];
        add_edge_load(&mut load, a, b, split.nodes[a], split.nodes[b], &|x| traction(case.stress(&lame, d, x), n));
    }
    for (_, adj) in edges.iter().filter(|(_, adj)| adj.len() == 2) {
        let (ea, eb) = (adj[0], adj[1]);
        let la = *case.model.lame(mesh.elements[ea].region)?;
        let lb = *case.model.lame(mesh.elements[eb].region)?;
        let (da, db) = (case.in_strip[ea], case.in_strip[eb]);
        if da == db && la == lb {
            continue;
        }
        // Edge as oriented in A (counter-clockwise), on A's split-mesh ids.
        let va = split.elements[ea].vertices;
        let vo = mesh.elements[ea].vertices;
        let k = (0..3)
            .find(|&k| adj_contains(&mesh.elements[eb].vertices, vo[k]) && adj_contains(&mesh.elements[eb].vertices, vo[(k + 1) % 3]))
            .ok_or_else(|| Error::Invariant("edge map inconsistent with elements".into()))?;
        let (a, b) = (va[k], va[(k + 1) % 3]);
        let n = outward(split.nodes[a], split.nodes[b]);
        add_edge_load(&mut load, a, b, split.nodes[a], split.nodes[b], &|x| {
            let ta = traction(case.stress(&la, da, x), n);
            let tb = traction(case.stress(&lb, db, x), n);
            [ta[0] - tb[0], ta[1] - tb[1]]
        });
    }
    case.load = load;
    Ok(case)
}

fn adj_contains(v: &[usize; 3], x: usize) -> bool {
    v.contains(&x)
}

/// Errors of both direct solvers on one refinement level.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub n: usize,
    pub h: f64,
    pub l2_split: f64,
    pub l2_interface: f64,
    pub h1_split: f64,
    pub h1_interface: f64,
    /// Relative L² difference between the two solutions.
    pub method_difference: f64,
    /// Element-stress jump on Γ∖S̄ (dual norm) of the split-node solution.
    pub stress_jump_gamma: f64,
    /// Consistent traction residual on Γ∖S̄ of the split-node solution.
    pub traction_residual_gamma: f64,
    pub slip_error: f64,
    pub interface_iterations: usize,
    pub gamma_dofs: usize,
}

/// One level of a refinement study.
pub fn convergence_level(kind: ManufacturedKind, n: usize, exec: Execution) -> Result<ConvergenceRow> {
    let (mesh, roles) = mms_mesh(n, kind == ManufacturedKind::LayeredJump, false)?;
    let setup = Setup::new(mesh, roles)?;
    let case = manufactured_case(kind, &setup)?;
    let (split, iface) = par::join(
        exec,
        || super::solve_split_node(&setup, &case.model, &case.slip, Some(&case.load), LinearSolver::Cholesky, exec),
        || -> Result<_> {
            let op = InterfaceOperator::build(&setup, &case.model, exec)?;
            let (sol, direct) = op.solve(&setup, &case.model, &case.slip, Some(&case.load))?;
            Ok((sol, direct, op.dim()))
        },
    );
    let (split, (isol, idirect, gamma_dofs)) = (split?, iface?);
    let sm = &setup.split.mesh;
    let exact = |e: usize, x: Point| case.exact(e, x);
    let grad = |e: usize, x: Point| case.exact_gradient(e, x);
    let norm_b = l2_norm(sm, &split.field);
    Ok(ConvergenceRow {
        n,
        h: 1.0 / n as f64,
        l2_split: l2_error(sm, &split.field, &exact),
        l2_interface: l2_error(sm, &idirect.field, &exact),
        h1_split: h1_seminorm_error(sm, &split.field, &grad)?,
        h1_interface: h1_seminorm_error(sm, &idirect.field, &grad)?,
        method_difference: l2_difference(sm, &idirect.field, &split.field) / norm_b.max(f64::MIN_POSITIVE),
        stress_jump_gamma: split.report.stress_jump_gamma,
        traction_residual_gamma: split.report.traction_residual_gamma,
        slip_error: split.report.slip_error,
        interface_iterations: isol.iterations,
        gamma_dofs,
    })
}

/// Refinement study over the mesh sizes in `levels` (cells per side).
pub fn convergence_study(kind: ManufacturedKind, levels: &[usize], exec: Execution) -> Result<Vec<ConvergenceRow>> {
    levels.iter().map(|&n| convergence_level(kind, n, exec)).collect()
}

/// Observed orders log(e_{k−1}/e_k)/log(h_{k−1}/h_k) between consecutive
/// rows, for [L² split, L² interface, H¹ split, H¹ interface].
pub fn observed_orders(rows: &[ConvergenceRow]) -> Vec<[f64; 4]> {
    rows.windows(2)
        .map(|w| {
            let r = (w[0].h / w[1].h).ln();
            let o = |a: f64, b: f64| (a / b).ln() / r;
            [
                o(w[0].l2_split, w[1].l2_split),
                o(w[0].l2_interface, w[1].l2_interface),
                o(w[0].h1_split, w[1].h1_split),
                o(w[0].h1_interface, w[1].h1_interface),
            ]
        })
        .collect()
}

/// Least-squares slope of log e against log h over all rows.
pub fn fitted_order(rows: &[ConvergenceRow], error: impl Fn(&ConvergenceRow) -> f64) -> f64 {
    let pts: Vec<(f64, f64)> = rows.iter().map(|r| (r.h.ln(), error(r).ln())).collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}
