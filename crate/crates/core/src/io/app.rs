use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use sha2::{Digest, Sha256};

use super::config::{load_config, Mode, Scenario, SlipSpec};
use super::export::{csv_string, export_field, vtk_string, write_atomic, Format};
use super::scenario::{prepare, run_check, run_forward};
use crate::dislocation::manufactured::{convergence_study, observed_orders};
use crate::dislocation::Method;
use crate::error::{Error, Result};
use crate::fem::LinearSolver;
use crate::inverse::{forward_map, reconstruct, tags, FaultParam, InverseContext, SlipParam, SurfaceData};
use crate::material::build_elastic_model;
use crate::par::init_threads;

#[derive(Parser)]
#[command(name = "dislox", version, about = "Elastostatic dislocation solvers and fault inversion")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the forward dislocation problem.
    Forward {
        config: PathBuf,
        #[arg(long, value_enum)]
        method: Option<MethodArg>,
    },
    /// Reconstruct fault geometry and slip from surface data.
    Inverse { config: PathBuf },
    /// Manufactured-solution refinement study.
    Mms {
        config: PathBuf,
        #[arg(long, default_value_t = 3)]
        levels: usize,
    },
    /// Run the invariant suite.
    Check { config: PathBuf },
    /// Solve forward and write only the displacement in one format.
    Export {
        config: PathBuf,
        #[arg(long, value_enum)]
        format: FormatArg,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Interface,
    Split,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Vtk,
    Csv,
}

/// Outcome of a command that ran to completion. `numerical_failure` marks
/// results that were written but did not meet their own targets.
struct Outcome {
    files: Vec<String>,
    numerical_failure: Option<String>,
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    version: &'a str,
    config_sha256: String,
    parallel: bool,
    solver: ManifestSolver,
    #[serde(skip_serializing_if = "Option::is_none")]
    inverse: Option<ManifestInverse>,
    files: Vec<String>,
}

#[derive(Serialize)]
struct ManifestSolver {
    method: String,
    linear: String,
    cg_tol: f64,
    cg_maxiter_factor: f64,
    interface_cg_tol: f64,
    seed: u64,
    check_samples: usize,
}

#[derive(Serialize)]
struct ManifestInverse {
    seed: u64,
    noise_sigma: f64,
    alpha: f64,
    tol: f64,
    max_iter: usize,
    lm_damping: f64,
    fd_step: f64,
}

/// Parses `argv` (program name first), runs the command and returns the
/// process exit code: 0 success, 1 input or configuration error, 2 solver
/// failure.
pub fn run_command<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    if let Ok(v) = std::env::var("DISLOX_THREADS") {
        match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => {
                init_threads(n);
            }
            _ => {
                eprintln!("error: DISLOX_THREADS must be a positive integer, got `{v}`");
                return 1;
            }
        }
    }
    match dispatch(&cli.command) {
        Ok(out) => match out.numerical_failure {
            None => 0,
            Some(msg) => {
                eprintln!("error: {msg}");
                2
            }
        },
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_solver_error() {
                2
            } else {
                1
            }
        }
    }
}

fn dispatch(cmd: &Command) -> Result<Outcome> {
    let (name, path) = match cmd {
        Command::Forward { config, .. } => ("forward", config),
        Command::Inverse { config } => ("inverse", config),
        Command::Mms { config, .. } => ("mms", config),
        Command::Check { config } => ("check", config),
        Command::Export { config, .. } => ("export", config),
    };
    let mut sc = load_config(path)?;
    let wanted = match cmd {
        Command::Inverse { .. } => Some(Mode::Inverse),
        Command::Mms { .. } => Some(Mode::Mms),
        _ => None,
    };
    if let Some(m) = wanted {
        if sc.mode != m {
            return Err(Error::config(format!("`{name}` needs a config with mode = \"{name}\"")));
        }
    }
    if let Command::Forward { method: Some(m), .. } = cmd {
        sc.solver.method = match m {
            MethodArg::Interface => Method::Interface,
            MethodArg::Split => Method::SplitNode,
        };
    }
    std::fs::create_dir_all(&sc.output_dir)?;
    let out = match cmd {
        Command::Forward { .. } => forward(&sc)?,
        Command::Export { format, .. } => export(&sc, *format)?,
        Command::Mms { levels, .. } => mms(&sc, *levels)?,
        Command::Check { .. } => check(&sc)?,
        Command::Inverse { .. } => inverse(&sc)?,
    };
    write_manifest(name, path, &sc, &out.files)?;
    Ok(out)
}

fn out_path(sc: &Scenario, name: &str) -> PathBuf {
    sc.output_dir.join(name)
}

fn forward(sc: &Scenario) -> Result<Outcome> {
    let prep = prepare(sc, None)?;
    let sol = run_forward(sc, &prep, sc.solver.method)?;
    let mesh = &prep.setup.split.mesh;
    write_atomic(&out_path(sc, "displacement.csv"), &csv_string(mesh, &sol.field)?)?;
    write_atomic(&out_path(sc, "displacement.vtk"), &vtk_string(mesh, &sol.field, "dislox displacement")?)?;
    let r = &sol.report;
    let mut t = String::from("quantity,value\n");
    for (k, v) in [
        ("slip_error", r.slip_error),
        ("continuity_error", r.continuity_error),
        ("traction_residual_fault", r.traction_residual_fault),
        ("traction_residual_gamma", r.traction_residual_gamma),
        ("stress_jump_fault", r.stress_jump_fault),
        ("stress_jump_gamma", r.stress_jump_gamma),
        ("interior_residual", r.interior_residual),
        ("residual_scale", r.residual_scale),
        ("relative_residual", r.relative_residual()),
    ] {
        writeln!(t, "{k},{v:.16e}").unwrap();
    }
    write_atomic(&out_path(sc, "transmission.csv"), &t)?;
    Ok(Outcome {
        files: vec!["displacement.csv".into(), "displacement.vtk".into(), "transmission.csv".into()],
        numerical_failure: None,
    })
}

fn export(sc: &Scenario, format: FormatArg) -> Result<Outcome> {
    let format = match format {
        FormatArg::Vtk => Format::Vtk,
        FormatArg::Csv => Format::Csv,
    };
    let prep = prepare(sc, None)?;
    let sol = run_forward(sc, &prep, sc.solver.method)?;
    let name = format!("displacement.{}", format.extension());
    export_field(&prep.setup.split.mesh, &sol.field, format, &out_path(sc, &name))?;
    Ok(Outcome { files: vec![name], numerical_failure: None })
}

fn mms(sc: &Scenario, levels: usize) -> Result<Outcome> {
    if levels == 0 || levels > 8 {
        return Err(Error::config("--levels must be between 1 and 8"));
    }
    let kind = match &sc.slip {
        Some(SlipSpec::Manufactured(k)) => *k,
        _ => return Err(Error::config("mms needs a manufactured slip")),
    };
    let n0 = match &sc.mesh {
        Some(super::config::MeshSource::UnitSquareFault { n, .. }) => *n,
        _ => return Err(Error::config("mms needs the unit_square_fault generator")),
    };
    let ns: Vec<usize> = (0..levels).map(|k| n0 << k).collect();
    let rows = convergence_study(kind, &ns, sc.solver.exec)?;
    let orders = observed_orders(&rows);
    let mut t = String::from(
        "n,h,l2_split,l2_interface,h1_split,h1_interface,order_l2_split,order_l2_interface,order_h1_split,order_h1_interface,method_difference,stress_jump_gamma,traction_residual_gamma,slip_error,interface_iterations,gamma_dofs\n",
    );
    for (i, r) in rows.iter().enumerate() {
        let ord = if i == 0 {
            ",,,".to_string()
        } else {
            orders[i - 1].iter().map(|o| format!("{o:.6}")).collect::<Vec<_>>().join(",")
        };
        writeln!(
            t,
            "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{},{:.16e},{:.16e},{:.16e},{:.16e},{},{}",
            r.n,
            r.h,
            r.l2_split,
            r.l2_interface,
            r.h1_split,
            r.h1_interface,
            ord,
            r.method_difference,
            r.stress_jump_gamma,
            r.traction_residual_gamma,
            r.slip_error,
            r.interface_iterations,
            r.gamma_dofs
        )
        .unwrap();
    }
    write_atomic(&out_path(sc, "convergence.csv"), &t)?;
    Ok(Outcome { files: vec!["convergence.csv".into()], numerical_failure: None })
}

fn check(sc: &Scenario) -> Result<Outcome> {
    let results = run_check(sc)?;
    let mut t = String::from("check,value,tolerance,passed,note\n");
    let mut failed = Vec::new();
    for r in &results {
        writeln!(t, "{},{:.6e},{:.1e},{},\"{}\"", r.name, r.value, r.tolerance, r.passed, r.note).unwrap();
        eprintln!("{:<28} {:<4} {:.3e}", r.name, if r.passed { "ok" } else { "FAIL" }, r.value);
        if !r.passed {
            failed.push(r.name);
        }
    }
    write_atomic(&out_path(sc, "check.csv"), &t)?;
    let numerical_failure = (!failed.is_empty()).then(|| format!("invariants failed: {}", failed.join(", ")));
    Ok(Outcome { files: vec!["check.csv".into()], numerical_failure })
}

fn read_data_csv(path: &Path) -> Result<SurfaceData> {
    let text = std::fs::read_to_string(path)?;
    let mut points = Vec::new();
    let mut values = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let body = line.trim();
        if body.is_empty() || body.starts_with('#') || (i == 0 && body.starts_with(|c: char| c.is_alphabetic())) {
            continue;
        }
        let v: std::result::Result<Vec<f64>, _> = body.split(',').map(|c| c.trim().parse::<f64>()).collect();
        match v {
            Ok(v) if v.len() == 4 => {
                points.push([v[0], v[1]]);
                values.push([v[2], v[3]]);
            }
            _ => return Err(Error::Syntax { line: i + 1, msg: "expected x,y,ux,uy".into() }),
        }
    }
    let data = SurfaceData { points, values, noise_sigma: None };
    data.validate()?;
    Ok(data)
}

fn inverse(sc: &Scenario) -> Result<Outcome> {
    let spec = sc.inverse.as_ref().ok_or_else(|| Error::config("no [inverse] section"))?;
    let model = build_elastic_model(&sc.material, &[tags::OUTER, tags::OMEGA_MINUS])?;
    let ctx = InverseContext::new(spec.domain.clone(), model, sc.solver.exec);
    let data = match (&spec.truth, &spec.data) {
        (Some(truth), _) => {
            let fp = FaultParam { frame: spec.frame_angle, knots: spec.knots.clone(), heights: truth.heights.clone() };
            let clean = forward_map(&ctx, &fp, &SlipParam { coeffs: truth.coeffs.clone() }).map_err(|e| e.context("true fault"))?;
            if spec.noise_sigma > 0.0 {
                clean.with_noise(spec.noise_sigma, spec.seed)?
            } else {
                clean
            }
        }
        (None, Some(p)) => read_data_csv(p)?,
        (None, None) => return Err(Error::config("inverse needs data or a synthetic truth")),
    };
    let mut d = String::from("x,y,ux,uy\n");
    for (p, v) in data.points.iter().zip(&data.values) {
        writeln!(d, "{:.16e},{:.16e},{:.16e},{:.16e}", p[0], p[1], v[0], v[1]).unwrap();
    }
    write_atomic(&out_path(sc, "data.csv"), &d)?;

    let fp0 = FaultParam { frame: spec.frame_angle, knots: spec.knots.clone(), heights: spec.heights.clone() };
    let sp0 = SlipParam::zeros(spec.slip_modes);
    let rec = reconstruct(&ctx, &data, (&fp0, &sp0), &spec.options)?;

    let mut t = String::from("iter,objective,accepted");
    for i in 0..spec.knots.len() {
        write!(t, ",theta{i}").unwrap();
    }
    for i in 0..spec.slip_modes {
        write!(t, ",c{i}").unwrap();
    }
    t.push('\n');
    for e in &rec.trace {
        write!(t, "{},{:.16e},{}", e.iter, e.objective, e.accepted).unwrap();
        for v in e.theta.iter().chain(&e.coeffs) {
            write!(t, ",{v:.16e}").unwrap();
        }
        t.push('\n');
    }
    write_atomic(&out_path(sc, "reconstruction.csv"), &t)?;

    let mut f = String::from("knot,height\n");
    for (k, h) in rec.fault.knots.iter().zip(&rec.fault.heights) {
        writeln!(f, "{k:.16e},{h:.16e}").unwrap();
    }
    f.push_str("\nmode,coefficient\n");
    for (i, c) in rec.slip.coeffs.iter().enumerate() {
        writeln!(f, "{i},{c:.16e}").unwrap();
    }
    write_atomic(&out_path(sc, "estimate.csv"), &f)?;

    let numerical_failure = (!rec.converged).then(|| {
        format!("reconstruction did not converge in {} iterations (objective {:.3e})", spec.options.max_iter, rec.objective)
    });
    Ok(Outcome {
        files: vec!["data.csv".into(), "reconstruction.csv".into(), "estimate.csv".into()],
        numerical_failure,
    })
}

fn write_manifest(command: &str, config: &Path, sc: &Scenario, files: &[String]) -> Result<()> {
    let bytes = std::fs::read(config)?;
    let config_sha256 = Sha256::digest(&bytes).iter().fold(String::new(), |mut s, b| {
        write!(s, "{b:02x}").unwrap();
        s
    });
    let (linear, cg_tol, cg_maxiter_factor) = match sc.solver.linear {
        LinearSolver::Cholesky => ("cholesky", 0.0, 0.0),
        LinearSolver::Cg(o) => ("cg", o.tol, o.maxiter_factor),
    };
    let manifest = Manifest {
        command,
        version: env!("CARGO_PKG_VERSION"),
        config_sha256,
        parallel: sc.solver.exec.is_parallel(),
        solver: ManifestSolver {
            method: sc.solver.method.to_string(),
            linear: linear.into(),
            cg_tol,
            cg_maxiter_factor,
            interface_cg_tol: 1e-10,
            seed: sc.solver.seed,
            check_samples: sc.solver.check_samples,
        },
        inverse: sc.inverse.as_ref().map(|i| ManifestInverse {
            seed: i.seed,
            noise_sigma: i.noise_sigma,
            alpha: i.options.alpha,
            tol: i.options.tol,
            max_iter: i.options.max_iter,
            lm_damping: i.options.lm_damping,
            fd_step: i.options.fd_step,
        }),
        files: files.to_vec(),
    };
    let text = toml::to_string(&manifest).map_err(|e| Error::config(format!("manifest: {e}")))?;
    write_atomic(&sc.output_dir.join("manifest.toml"), &text)
}
