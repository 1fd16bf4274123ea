use std::collections::BTreeSet;

use super::config::{InverseSpec, MeshSource, Scenario, SlipSpec};
use crate::inverse::{tags, FaultParam, InverseContext, SlipParam};
use crate::dislocation::manufactured::{manufactured_case, mms_mesh};
use crate::dislocation::{
    merge_load, solve_continuous, solve_split_node, DirectSolution, InterfaceOperator, Method, Setup,
};
use crate::error::{Error, Result};
use crate::fem::norms::{l2_difference, l2_norm};
use crate::fem::SlipField;
use crate::material::{build_elastic_model, check_admissibility, ElasticModel};
use crate::mesh::{parse_mesh, BoundaryRoles};

/// Geometry, material, slip and loads of a forward scenario.
pub struct Prepared {
    pub setup: Setup,
    pub model: ElasticModel,
    pub slip: SlipField,
    /// Nodal load on the split mesh (manufactured cases only).
    pub load: Option<Vec<f64>>,
}

fn merge_roles(base: BoundaryRoles, sc: &BoundaryRoles) -> BoundaryRoles {
    let pick = |a: BTreeSet<i32>, b: &BTreeSet<i32>| if b.is_empty() { a } else { b.clone() };
    BoundaryRoles {
        sigma_tags: pick(base.sigma_tags, &sc.sigma_tags),
        free_tags: pick(base.free_tags, &sc.free_tags),
        xi_tags: pick(base.xi_tags, &sc.xi_tags),
        fault_tags: pick(base.fault_tags, &sc.fault_tags),
        omega_minus_regions: pick(base.omega_minus_regions, &sc.omega_minus_regions),
    }
}

fn read_slip_csv(text: &str, setup: &Setup) -> Result<SlipField> {
    let mut slip = SlipField::default();
    let n = setup.mesh.nodes.len();
    for (i, line) in text.lines().enumerate() {
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() || (i == 0 && body.starts_with(|c: char| c.is_alphabetic())) {
            continue;
        }
        let bad = || Error::Syntax { line: i + 1, msg: format!("expected node_id,gx,gy, got `{line}`") };
        let cols: Vec<&str> = body.split(',').map(str::trim).collect();
        if cols.len() != 3 {
            return Err(bad());
        }
        let id: usize = cols[0].parse().map_err(|_| bad())?;
        let gx: f64 = cols[1].parse().map_err(|_| bad())?;
        let gy: f64 = cols[2].parse().map_err(|_| bad())?;
        if id >= n {
            return Err(Error::Topology(format!("slip file line {}: node {id} does not exist", i + 1)));
        }
        slip.values.insert(id, [gx, gy]);
    }
    Ok(slip)
}

/// Builds the forward problem of a scenario. `omega_minus` replaces the
/// configured Ω⁻ regions when given.
pub fn prepare(sc: &Scenario, omega_minus: Option<&BTreeSet<i32>>) -> Result<Prepared> {
    let source = match (&sc.mesh, &sc.inverse) {
        (Some(m), _) => m,
        (None, Some(inv)) => return prepare_inverse(sc, inv),
        (None, None) => return Err(Error::config("no [mesh] section")),
    };
    let (mesh, mut roles) = match source {
        MeshSource::File(p) => {
            let text = std::fs::read_to_string(p)?;
            (parse_mesh(&text)?, sc.roles.clone())
        }
        MeshSource::UnitSquareFault { n, layered, ring } => {
            let (mesh, base) = mms_mesh(*n, *layered, *ring)?;
            (mesh, merge_roles(base, &sc.roles))
        }
    };
    if let Some(om) = omega_minus {
        roles.omega_minus_regions = om.clone();
    }
    let setup = Setup::new(mesh, roles)?;
    let slip_spec = sc.slip.as_ref().ok_or_else(|| Error::config("no [slip] section"))?;
    let (model, slip, load) = match slip_spec {
        SlipSpec::Manufactured(kind) => {
            let case = manufactured_case(*kind, &setup)?;
            (case.model, case.slip, Some(case.load))
        }
        SlipSpec::Bump { center, halfwidth, amplitude, direction } => {
            let model = build_elastic_model(&sc.material, &setup.mesh.regions())?;
            let slip = SlipField::from_fn(&setup.mesh, &setup.ft, |x| {
                let r = (x[0] - center[0]).hypot(x[1] - center[1]) / halfwidth;
                let w = if r >= 1.0 { 0.0 } else { amplitude * (1.0 - r * r).powi(2) };
                [w * direction[0], w * direction[1]]
            });
            (model, slip, None)
        }
        SlipSpec::File(p) => {
            let model = build_elastic_model(&sc.material, &setup.mesh.regions())?;
            let slip = read_slip_csv(&std::fs::read_to_string(p)?, &setup)?;
            (model, slip, None)
        }
    };
    slip.validate(&setup.ft)?;
    Ok(Prepared { setup, model, slip, load })
}

/// Forward problem on the initial fault of an inverse scenario, with the
/// synthetic slip when one is given and the first tangential mode otherwise.
fn prepare_inverse(sc: &Scenario, inv: &InverseSpec) -> Result<Prepared> {
    let model = build_elastic_model(&sc.material, &[tags::OUTER, tags::OMEGA_MINUS])?;
    let ctx = InverseContext::new(inv.domain.clone(), model, sc.solver.exec);
    let fp = FaultParam { frame: inv.frame_angle, knots: inv.knots.clone(), heights: inv.heights.clone() };
    let sp = match &inv.truth {
        Some(t) => SlipParam { coeffs: t.coeffs.clone() },
        None => {
            let mut sp = SlipParam::zeros(inv.slip_modes);
            sp.coeffs[0] = 0.01;
            sp
        }
    };
    let real = ctx.realize(&fp)?;
    let slip = real.slip(&sp)?;
    Ok(Prepared { setup: real.setup.clone(), model: ctx.model, slip, load: None })
}

/// Forward solve with the requested method.
pub fn run_forward(sc: &Scenario, prep: &Prepared, method: Method) -> Result<DirectSolution> {
    let exec = sc.solver.exec;
    match method {
        Method::SplitNode => {
            solve_split_node(&prep.setup, &prep.model, &prep.slip, prep.load.as_deref(), sc.solver.linear, exec)
        }
        Method::Interface => {
            let op = InterfaceOperator::build(&prep.setup, &prep.model, exec)?;
            Ok(op.solve(&prep.setup, &prep.model, &prep.slip, prep.load.as_deref())?.1)
        }
    }
}

/// The same physical problem with Ω⁻ = `om`. On a generated mesh the ring
/// region is switched on; every element keeps the material it had.
fn alternate_extension(sc: &Scenario, prep: &Prepared, om: &BTreeSet<i32>) -> Result<(Setup, ElasticModel)> {
    let setup = &prep.setup;
    let mesh = match &sc.mesh {
        Some(MeshSource::UnitSquareFault { n, layered, .. }) => mms_mesh(*n, *layered, true)?.0,
        _ => setup.mesh.clone(),
    };
    let mut roles = setup.roles.clone();
    roles.omega_minus_regions = om.clone();
    let setup2 = Setup::new(mesh, roles).map_err(|e| e.context("alternate Ω⁻ regions"))?;
    if setup2.mesh.nodes != setup.mesh.nodes || setup2.split.merge != setup.split.merge {
        return Err(Error::Invariant("alternate extension changed the split mesh".into()));
    }
    let mut model = ElasticModel { regions: Default::default(), admissibility: prep.model.admissibility };
    for (e2, e1) in setup2.mesh.elements.iter().zip(&setup.mesh.elements) {
        let lame = *prep.model.lame(e1.region)?;
        match model.regions.insert(e2.region, lame) {
            Some(prev) if prev != lame => {
                return Err(Error::Config {
                    section: Some("fault".into()),
                    key: Some("alternate_omega_minus_regions".into()),
                    line: None,
                    msg: format!("region {} would mix materials of different original regions", e2.region),
                })
            }
            _ => {}
        }
    }
    Ok((setup2, model))
}

/// One line of the invariant suite.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub note: String,
}

fn rel_diff(setup: &Setup, a: &[f64], b: &[f64]) -> f64 {
    let m = &setup.split.mesh;
    let scale = l2_norm(m, b);
    let d = l2_difference(m, a, b);
    if scale > 0.0 {
        d / scale
    } else {
        d
    }
}

/// Interface-operator symmetry and positivity, interface CG iteration count,
/// extension independence and zero-slip collapse.
pub fn run_check(sc: &Scenario) -> Result<Vec<CheckResult>> {
    let exec = sc.solver.exec;
    let prep = prepare(sc, None)?;
    let setup = &prep.setup;
    let mut out = Vec::new();

    let adm = check_admissibility(&prep.model, &setup.mesh);
    let worst = adm.regions.iter().map(|r| r.min_mu.min(r.min_bulk)).fold(f64::INFINITY, f64::min);
    out.push(CheckResult {
        name: "admissibility",
        value: worst,
        tolerance: 0.0,
        passed: adm.passed(),
        note: format!("{} regions", adm.regions.len()),
    });

    let op = InterfaceOperator::build(setup, &prep.model, exec)?;
    let probe = op.probe(sc.solver.check_samples, sc.solver.seed);
    out.push(CheckResult {
        name: "interface_symmetry_defect",
        value: probe.symmetry_defect,
        tolerance: 1e-9,
        passed: probe.symmetry_defect <= 1e-9,
        note: format!("{} random pairs", probe.samples),
    });
    out.push(CheckResult {
        name: "interface_min_rayleigh",
        value: probe.min_rayleigh,
        tolerance: 0.0,
        passed: probe.min_rayleigh > 0.0,
        note: String::new(),
    });
    let (isol, idirect) = op.solve(setup, &prep.model, &prep.slip, prep.load.as_deref())?;
    let cap = 2 * op.dim();
    out.push(CheckResult {
        name: "interface_cg_iterations",
        value: isol.iterations as f64,
        tolerance: cap as f64,
        passed: isol.iterations < cap,
        note: format!("{} Γ unknowns", op.dim()),
    });

    let split = solve_split_node(setup, &prep.model, &prep.slip, prep.load.as_deref(), sc.solver.linear, exec)?;
    let eq = rel_diff(setup, &idirect.field, &split.field);
    out.push(CheckResult {
        name: "method_equivalence",
        value: eq,
        tolerance: 1e-6,
        passed: eq <= 1e-6,
        note: "relative L2 difference interface vs split".into(),
    });

    let alternate = match (&sc.alternate_omega_minus, &sc.mesh) {
        (Some(a), _) => Some(a.clone()),
        (None, Some(MeshSource::UnitSquareFault { n, layered, ring: false })) => {
            let (_, ring_roles) = mms_mesh(*n, *layered, true)?;
            Some(ring_roles.omega_minus_regions)
        }
        _ => None,
    };
    match alternate {
        Some(om) => {
            let (setup2, model2) = alternate_extension(sc, &prep, &om)?;
            let op2 = InterfaceOperator::build(&setup2, &model2, exec)?;
            let (_, d2) = op2.solve(&setup2, &model2, &prep.slip, prep.load.as_deref())?;
            let v = rel_diff(setup, &d2.field, &idirect.field);
            out.push(CheckResult {
                name: "extension_independence",
                value: v,
                tolerance: 1e-6,
                passed: v <= 1e-6,
                note: format!("Ω⁻ regions {:?} vs {:?}", setup.roles.omega_minus_regions, om),
            });
        }
        None => out.push(CheckResult {
            name: "extension_independence",
            value: f64::NAN,
            tolerance: 1e-6,
            passed: true,
            note: "skipped: no alternate_omega_minus_regions configured".into(),
        }),
    }

    let zero = SlipField::zero(&setup.ft);
    let z = solve_split_node(setup, &prep.model, &zero, prep.load.as_deref(), sc.solver.linear, exec)?;
    let merged_load = prep.load.as_ref().map(|l| merge_load(setup, l));
    let cont = solve_continuous(setup, &prep.model, merged_load.as_deref(), sc.solver.linear, exec)?;
    let mut dev = 0.0f64;
    for (v, &m) in setup.split.merge.iter().enumerate() {
        for c in 0..2 {
            dev = dev.max((z.field[2 * v + c] - cont[2 * m + c]).abs());
        }
    }
    out.push(CheckResult {
        name: "zero_slip_collapse",
        value: dev,
        tolerance: 1e-12,
        passed: dev <= 1e-12,
        note: "max nodal difference split (g = 0) vs unsplit".into(),
    });
    Ok(out)
}
