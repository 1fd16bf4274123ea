//! Acceptance suite: one line per criterion.
//!
//! Runs as a plain binary. Failing criteria are reported but only turn the
//! exit status non-zero when `DISLOX_ACCEPTANCE_STRICT=1`.

mod common;

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::time::Instant;

use common::{bump_slip, free_square, graded, rel_l2, square};
use dislox::dislocation::manufactured::{
    convergence_study, fitted_order, manufactured_case, mms_mesh, observed_orders, ConvergenceRow, ManufacturedKind,
};
use dislox::dislocation::{merge_load, solve_continuous, solve_neumann_variant, solve_split_node, InterfaceOperator, Setup};
use dislox::fem::{LinearSolver, Loads, SlipField};
use dislox::inverse::{
    default_two_fault_cases, distinguishability_experiment, forward_map, lstsq, reconstruct, tags, Domain, FaultParam,
    InverseContext, ReconstructOptions, SlipParam,
};
use dislox::material::{check_admissibility, Admissibility, ElasticModel};
use dislox::{Execution, Result};

const EXEC: Execution = Execution::Parallel;
const LEVELS: [usize; 3] = [16, 32, 64];

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Result<Outcome> {
    Ok(Outcome { passed, detail })
}

struct Orders {
    l2: [f64; 2],
    h1: [f64; 2],
    pairwise: Vec<[f64; 4]>,
}

fn orders(rows: &[ConvergenceRow]) -> Orders {
    Orders {
        l2: [fitted_order(rows, |r| r.l2_split), fitted_order(rows, |r| r.l2_interface)],
        h1: [fitted_order(rows, |r| r.h1_split), fitted_order(rows, |r| r.h1_interface)],
        pairwise: observed_orders(rows),
    }
}

fn describe(o: &Orders) -> String {
    let pw: Vec<String> = o.pairwise.iter().map(|p| format!("{:.3}/{:.3}", p[0], p[2])).collect();
    format!(
        "fitted L2 {:.3}/{:.3}, H1 {:.3}/{:.3} (split/interface); pairwise L2/H1 {}",
        o.l2[0],
        o.l2[1],
        o.h1[0],
        o.h1[1],
        pw.join(", ")
    )
}

fn orders_ok(o: &Orders) -> bool {
    o.l2.iter().all(|&v| v >= 1.9) && o.h1.iter().all(|&v| v >= 0.9)
}

fn max_method_difference(rows: &[ConvergenceRow]) -> f64 {
    rows.iter().map(|r| r.method_difference).fold(0.0, f64::max)
}

struct Studies {
    smooth: Vec<ConvergenceRow>,
    smooth_seconds: f64,
    layered: Vec<ConvergenceRow>,
}

fn criterion1(s: &Studies) -> Result<Outcome> {
    let o = orders(&s.smooth);
    outcome(
        orders_ok(&o) && s.smooth_seconds < 120.0,
        format!("smooth_jump {}; {:.1} s", describe(&o), s.smooth_seconds),
    )
}

fn criterion2(s: &Studies) -> Result<Outcome> {
    let mut worst = max_method_difference(&s.smooth).max(max_method_difference(&s.layered));
    let mut meshes = 2 * LEVELS.len();
    for n in [16, 32] {
        let setup = square(n, true);
        let model = graded(&setup.mesh.regions());
        let slip = bump_slip(&setup, 0.01, [0.6, 0.8]);
        let split = solve_split_node(&setup, &model, &slip, None, LinearSolver::Cholesky, EXEC)?;
        let (_, iface) = InterfaceOperator::build(&setup, &model, EXEC)?.solve(&setup, &model, &slip, None)?;
        worst = worst.max(rel_l2(&setup, &iface.field, &split.field));
        meshes += 1;
    }
    outcome(worst <= 1e-6, format!("max relative L2 difference {worst:.2e} over {meshes} meshes"))
}

fn criterion3() -> Result<Outcome> {
    let mut worst: f64 = 0.0;
    for n in [16, 32, 64] {
        let solve = |ring: bool| -> Result<(Setup, Vec<f64>)> {
            let setup = square(n, ring);
            let model = graded(&setup.mesh.regions());
            let slip = bump_slip(&setup, 0.01, [0.6, 0.8]);
            let (_, u) = InterfaceOperator::build(&setup, &model, EXEC)?.solve(&setup, &model, &slip, None)?;
            Ok((setup, u.field))
        };
        let (a, ua) = solve(false)?;
        let (b, ub) = solve(true)?;
        assert_ne!(a.ft.gamma_nodes, b.ft.gamma_nodes);
        worst = worst.max(rel_l2(&a, &ub, &ua));
    }
    outcome(worst <= 1e-6, format!("two Γ extensions, max relative L2 difference {worst:.2e} (n = 16, 32, 64)"))
}

fn criterion4() -> Result<Outcome> {
    let mut collapse: f64 = 0.0;
    let mut zero: f64 = 0.0;
    for n in [16, 32] {
        let setup = square(n, false);
        let case = manufactured_case(ManufacturedKind::SmoothJump, &setup)?;
        let g0 = SlipField::zero(&setup.ft);
        let split = solve_split_node(&setup, &case.model, &g0, Some(&case.load), LinearSolver::Cholesky, EXEC)?;
        let cont = solve_continuous(&setup, &case.model, Some(&merge_load(&setup, &case.load)), LinearSolver::Cholesky, EXEC)?;
        for (v, &m) in setup.split.merge.iter().enumerate() {
            for c in 0..2 {
                collapse = collapse.max((split.field[2 * v + c] - cont[2 * m + c]).abs());
            }
        }
        let none = solve_split_node(&setup, &case.model, &g0, None, LinearSolver::Cholesky, EXEC)?;
        let (_, iface) = InterfaceOperator::build(&setup, &case.model, EXEC)?.solve(&setup, &case.model, &g0, None)?;
        zero = none.field.iter().chain(&iface.field).fold(zero, |a, v| a.max(v.abs()));
    }
    outcome(
        collapse <= 1e-12 && zero <= 1e-12,
        format!("split vs unsplit max difference {collapse:.2e}; zero data max |u| {zero:.2e}"),
    )
}

fn criterion5() -> Result<Outcome> {
    let mut sym: f64 = 0.0;
    let mut rayleigh = f64::INFINITY;
    let mut iters = Vec::new();
    let mut ok = true;
    let meshes: [(usize, bool, bool); 4] = [(16, false, false), (32, false, false), (32, true, false), (32, false, true)];
    for (i, &(n, ring, layered)) in meshes.iter().enumerate() {
        let (mesh, roles) = mms_mesh(n, layered, ring)?;
        let setup = Setup::new(mesh, roles)?;
        let model = if layered {
            manufactured_case(ManufacturedKind::LayeredJump, &setup)?.model
        } else {
            graded(&setup.mesh.regions())
        };
        let op = InterfaceOperator::build(&setup, &model, EXEC)?;
        let probe = op.probe(100, 100 + i as u64);
        sym = sym.max(probe.symmetry_defect);
        rayleigh = rayleigh.min(probe.min_rayleigh);
        let slip = bump_slip(&setup, 0.01, [0.6, 0.8]);
        let (sol, _) = op.solve(&setup, &model, &slip, None)?;
        ok &= sol.iterations < 2 * op.dim();
        iters.push(format!("{}/{}", sol.iterations, 2 * op.dim()));
    }
    ok &= sym <= 1e-9 && rayleigh > 0.0;
    outcome(
        ok,
        format!(
            "{} meshes × 100 traces: symmetry defect {sym:.2e}, min Rayleigh {rayleigh:.3e}; CG iterations/cap {}",
            meshes.len(),
            iters.join(", ")
        ),
    )
}

fn criterion6(s: &Studies) -> Result<Outcome> {
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, rows) in [("smooth", &s.smooth), ("layered", &s.layered)] {
        let j: Vec<f64> = rows.iter().map(|r| r.stress_jump_gamma).collect();
        ok &= j.windows(2).all(|w| w[1] < w[0]);
        parts.push(format!("{name} {}", j.iter().map(|v| format!("{v:.3e}")).collect::<Vec<_>>().join(" → ")));
    }
    outcome(ok, format!("stress-jump dual norm on Γ∖S̄: {}", parts.join("; ")))
}

fn criterion7(s: &Studies) -> Result<Outcome> {
    let o = orders(&s.layered);
    let diff = max_method_difference(&s.layered);
    let (mesh, roles) = mms_mesh(16, true, false)?;
    let setup = Setup::new(mesh, roles)?;
    let case = manufactured_case(ManufacturedKind::LayeredJump, &setup)?;
    let adm = check_admissibility(&case.model, &setup.mesh);
    let a = case.model.admissibility;
    let mu = case.model.regions.values().map(|l| l.mu.a).fold(f64::NAN, f64::max)
        / case.model.regions.values().map(|l| l.mu.a).fold(f64::NAN, f64::min);
    outcome(
        orders_ok(&o) && diff <= 1e-6 && adm.passed(),
        format!(
            "μ ratio {mu:.0}:1; {}; method difference {diff:.2e}; admissibility (α0 {}, β0 {}, M {}) {}",
            describe(&o),
            a.alpha0,
            a.beta0,
            a.m_bound,
            if adm.passed() { "passes" } else { "fails" }
        ),
    )
}

fn inverse_context() -> InverseContext {
    let adm = Admissibility { alpha0: 0.5, beta0: 1.0, m_bound: 10.0 };
    let model = ElasticModel::homogeneous(&[tags::OUTER, tags::OMEGA_MINUS], 1.5, 1.0, adm);
    InverseContext::new(Domain::default(), model, EXEC)
}

fn criterion8() -> Result<Outcome> {
    let ctx = inverse_context();
    let coverage = (ctx.domain.xi[1] - ctx.domain.xi[0]) / (ctx.domain.x[1] - ctx.domain.x[0]);
    let fp = FaultParam { frame: 0.0, knots: vec![0.3, 0.4, 0.5, 0.6, 0.7], heights: vec![0.55, 0.56, 0.57, 0.56, 0.55] };
    let truth = SlipParam { coeffs: vec![0.01, 0.005, 0.0033, 0.0025, 0.002, 0.001, 0.0007, 0.0005] };
    let data = forward_map(&ctx, &fp, &truth)?;
    let opts = ReconstructOptions { freeze_fault: true, ..Default::default() };
    let rec = reconstruct(&ctx, &data, (&fp, &SlipParam::zeros(8)), &opts)?;
    let scale = truth.coeffs.iter().map(|v| v * v).sum::<f64>().sqrt();
    let err = rec.slip.coeffs.iter().zip(&truth.coeffs).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt() / scale;
    let oracle = lstsq(&ctx.realize(&fp)?.operator(8)?, &data.flat())?;
    let dev = rec.slip.coeffs.iter().zip(&oracle).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / scale;
    outcome(
        rec.converged && err <= 0.05 && dev <= 1e-6 && coverage >= 0.25 - 1e-12,
        format!("Ξ covers {:.0}% of the top, p = 8: relative error {err:.2e}, deviation from explicit least squares {dev:.2e}", 100.0 * coverage),
    )
}

fn criterion9() -> Result<Outcome> {
    let ctx = inverse_context();
    let ((f1, s1), (f2, s2)) = default_two_fault_cases(&ctx, 8);
    let gap = distinguishability_experiment(&ctx, (&f1, &s1), (&f2, &s2), 1e-3)?;
    let same = distinguishability_experiment(&ctx, (&f1, &s1), (&f1, &s1), 1e-3)?;
    outcome(
        gap.gap > 1e-3 && same.gap <= 1e-8,
        format!("separation 0.1·diam: gap {:.3e}; identical cases gap {:.1e}", gap.gap, same.gap),
    )
}

fn criterion10() -> Result<Outcome> {
    let setup = free_square(32);
    let model = graded(&setup.mesh.regions());
    let slip = bump_slip(&setup, 0.01, [0.6, 0.8]);
    let h = |x: dislox::mesh::Point| [0.1 * x[1], -0.05 + 0.02 * x[0]];
    let load = setup.nodal_load(&Loads { body: None, traction: vec![(3, &h)] })?;
    let sol = solve_neumann_variant(&setup, &model, &slip, Some(&load), EXEC)?;
    outcome(
        sol.superposition_defect <= 1e-9,
        format!("traction-only boundary, ‖u − (ů + w)‖/‖u‖ = {:.2e}", sol.superposition_defect),
    )
}

const FORWARD_CFG: &str = r#"
mode = "forward"

[mesh]
generator = "unit_square_fault"
n = 32

[material.1]
lambda = [1.5, 0.5, 0.0]
mu = [1.0, 0.0, 0.5]

[material.2]
lambda = [1.5, 0.5, 0.0]
mu = [1.0, 0.0, 0.5]

[slip]
bump = { center = [0.5, 0.5], halfwidth = 0.25, amplitude = 0.01, direction = [0.6, 0.8] }

[solver]
method = "interface"
"#;

const MMS_CFG: &str = r#"
mode = "mms"

[mesh]
generator = "unit_square_fault"
n = 16

[slip]
manufactured = "smooth_jump"
"#;

const INVERSE_CFG: &str = r#"
mode = "inverse"

[material.1]
lambda = 1.5
mu = 1.0

[material.2]
lambda = 1.5
mu = 1.0

[inverse]
knots = [0.3, 0.4, 0.5, 0.6, 0.7]
heights = [0.55, 0.55, 0.55, 0.55, 0.55]
true_heights = [0.55, 0.56, 0.57, 0.56, 0.55]
slip_modes = 8
true_coeffs = [0.01, 0.005, 0.0033, 0.0025, 0.002, 0.001, 0.0007, 0.0005]
noise_sigma = 1e-5
seed = 42
max_iter = 3
"#;

fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .map(|it| {
            it.filter_map(|e| e.ok())
                .map(|e| (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap_or_default()))
                .collect()
        })
        .unwrap_or_default()
}

fn criterion11() -> Result<Outcome> {
    let mut ok = true;
    let mut parts = Vec::new();
    for (cmd, cfg, extra) in [("forward", FORWARD_CFG, &[][..]), ("mms", MMS_CFG, &["--levels", "3"][..]), ("inverse", INVERSE_CFG, &[][..])] {
        let mut runs = Vec::new();
        for _ in 0..2 {
            let dir = tempfile::TempDir::new()?;
            let path = dir.path().join("scenario.toml");
            fs::write(&path, cfg)?;
            let mut argv = vec!["dislox".to_string(), cmd.to_string(), path.to_string_lossy().into_owned()];
            argv.extend(extra.iter().map(|s| s.to_string()));
            let code = dislox::io::run_command(argv);
            runs.push((code, snapshot(&dir.path().join("out"))));
        }
        let same = runs[0] == runs[1] && !runs[0].1.is_empty() && runs[0].0 != 1;
        ok &= same;
        parts.push(format!("{cmd} {} files {}", runs[0].1.len(), if same { "identical" } else { "DIFFER" }));
    }
    outcome(ok, parts.join("; "))
}

fn main() {
    let t = Instant::now();
    let studies = convergence_study(ManufacturedKind::SmoothJump, &LEVELS, EXEC).and_then(|smooth| {
        let smooth_seconds = t.elapsed().as_secs_f64();
        let layered = convergence_study(ManufacturedKind::LayeredJump, &LEVELS, EXEC)?;
        Ok(Studies { smooth, smooth_seconds, layered })
    });

    let mut results: Vec<(usize, &str, Result<Outcome>)> = Vec::new();
    match &studies {
        Ok(s) => {
            results.push((1, "MMS convergence", criterion1(s)));
            results.push((2, "method equivalence", criterion2(s)));
        }
        Err(e) => {
            results.push((1, "MMS convergence", Err(dislox::Error::Solve(e.to_string()))));
            results.push((2, "method equivalence", Err(dislox::Error::Solve(e.to_string()))));
        }
    }
    results.push((3, "extension independence", criterion3()));
    results.push((4, "zero-slip collapse", criterion4()));
    results.push((5, "interface operator", criterion5()));
    if let Ok(s) = &studies {
        results.push((6, "traction-jump decay", criterion6(s)));
        results.push((7, "layered medium", criterion7(s)));
    }
    results.push((8, "linear slip recovery", criterion8()));
    results.push((9, "distinguishability", criterion9()));
    results.push((10, "Neumann superposition", criterion10()));
    results.push((11, "determinism", criterion11()));
    results.sort_by_key(|r| r.0);

    let mut passed = 0;
    for (id, name, r) in &results {
        let (ok, detail) = match r {
            Ok(o) => (o.passed, o.detail.clone()),
            Err(e) => (false, format!("error: {e}")),
        };
        passed += ok as usize;
        println!("criterion {id:>2} {} {name}: {detail}", if ok { "PASS" } else { "FAIL" });
    }
    println!("acceptance: {passed}/11 passed in {:.1} s", t.elapsed().as_secs_f64());
    if passed < 11 && std::env::var("DISLOX_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1") {
        std::process::exit(1);
    }
}
