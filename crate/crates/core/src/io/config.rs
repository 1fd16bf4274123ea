//! Scenario files.
//!
//! Scenarios are TOML documents with a root `mode` key and the sections
//! `[mesh] [roles] [material.<region>] [admissibility] [fault] [slip]
//! [solver] [inverse] [output]`. Unknown keys are errors.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::dislocation::{ManufacturedKind, Method};
use crate::error::{Error, Result};
use crate::fem::{CgOptions, LinearSolver};
use crate::inverse::{Domain, ReconstructOptions};
use crate::material::{Admissibility, MaterialSpec};
use crate::mesh::{BoundaryRoles, Point};
use crate::par::Execution;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    mode: String,
    mesh: Option<RawMesh>,
    #[serde(default)]
    roles: RawRoles,
    #[serde(default)]
    material: BTreeMap<String, RawMaterial>,
    admissibility: Option<RawAdmissibility>,
    fault: Option<RawFault>,
    slip: Option<RawSlip>,
    #[serde(default)]
    solver: RawSolver,
    inverse: Option<RawInverse>,
    #[serde(default)]
    output: RawOutput,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMesh {
    file: Option<String>,
    generator: Option<String>,
    n: Option<usize>,
    #[serde(default)]
    layered: bool,
    #[serde(default)]
    ring: bool,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRoles {
    sigma_tags: Option<Vec<i32>>,
    free_tags: Option<Vec<i32>>,
    xi_tags: Option<Vec<i32>>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum Coefficient {
    Constant(f64),
    Affine([f64; 3]),
}

impl Coefficient {
    fn coeffs(&self) -> [f64; 3] {
        match *self {
            Coefficient::Constant(a) => [a, 0.0, 0.0],
            Coefficient::Affine(c) => c,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMaterial {
    lambda: Coefficient,
    mu: Coefficient,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAdmissibility {
    alpha0: f64,
    beta0: f64,
    m_bound: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFault {
    tags: Option<Vec<i32>>,
    omega_minus_regions: Option<Vec<i32>>,
    /// Second choice of Ω⁻ used by `check` for extension independence.
    alternate_omega_minus_regions: Option<Vec<i32>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBump {
    center: [f64; 2],
    halfwidth: f64,
    amplitude: f64,
    direction: [f64; 2],
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSlip {
    file: Option<String>,
    bump: Option<RawBump>,
    manufactured: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSolver {
    method: Option<String>,
    linear: Option<String>,
    cg_tol: Option<f64>,
    cg_maxiter_factor: Option<f64>,
    #[serde(default)]
    sequential: bool,
    check_samples: Option<usize>,
    seed: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDomain {
    x: Option<[f64; 2]>,
    y: Option<[f64; 2]>,
    h: Option<f64>,
    safety_margin: Option<f64>,
    xi: Option<[f64; 2]>,
    samples: Option<usize>,
    omega_minus_rows: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInverse {
    #[serde(default)]
    domain: RawDomain,
    knots: Vec<f64>,
    heights: Vec<f64>,
    #[serde(default)]
    frame_angle: f64,
    slip_modes: usize,
    #[serde(default)]
    alpha: f64,
    max_iter: Option<usize>,
    tol: Option<f64>,
    lm_damping: Option<f64>,
    fd_step: Option<f64>,
    #[serde(default)]
    freeze_fault: bool,
    #[serde(default)]
    seed: u64,
    #[serde(default)]
    noise_sigma: f64,
    data: Option<String>,
    true_heights: Option<Vec<f64>>,
    true_coeffs: Option<Vec<f64>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    dir: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Forward,
    Inverse,
    Mms,
    Check,
}

#[derive(Debug, Clone, PartialEq)]
pub enum MeshSource {
    File(PathBuf),
    /// Unit square with the standard interior fault.
    UnitSquareFault { n: usize, layered: bool, ring: bool },
}

#[derive(Debug, Clone, PartialEq)]
pub enum SlipSpec {
    /// CSV `node_id,gx,gy` with 0-based node indices of the mesh file.
    File(PathBuf),
    /// amplitude·(1 − (r/halfwidth)²)²·direction within `halfwidth` of `center`.
    Bump { center: Point, halfwidth: f64, amplitude: f64, direction: Point },
    Manufactured(ManufacturedKind),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    pub method: Method,
    pub linear: LinearSolver,
    pub exec: Execution,
    /// Random trace vectors drawn by `check`.
    pub check_samples: usize,
    pub seed: u64,
}

/// Synthetic truth for the inverse mode when no data file is given.
#[derive(Debug, Clone, PartialEq)]
pub struct InverseTruth {
    pub heights: Vec<f64>,
    pub coeffs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InverseSpec {
    pub domain: Domain,
    pub frame_angle: f64,
    pub knots: Vec<f64>,
    pub heights: Vec<f64>,
    pub slip_modes: usize,
    pub options: ReconstructOptions,
    pub seed: u64,
    pub noise_sigma: f64,
    pub data: Option<PathBuf>,
    pub truth: Option<InverseTruth>,
}

/// A validated scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub mode: Mode,
    pub mesh: Option<MeshSource>,
    pub roles: BoundaryRoles,
    pub alternate_omega_minus: Option<BTreeSet<i32>>,
    pub material: MaterialSpec,
    pub slip: Option<SlipSpec>,
    pub solver: SolverOptions,
    pub inverse: Option<InverseSpec>,
    pub output_dir: PathBuf,
}

fn err(section: &str, key: Option<&str>, msg: impl Into<String>) -> Error {
    Error::Config { section: Some(section.into()), key: key.map(Into::into), line: None, msg: msg.into() }
}

/// Section header in effect at a 1-based line.
fn section_at(text: &str, line: usize) -> Option<String> {
    text.lines()
        .take(line)
        .filter_map(|l| {
            let t = l.trim();
            (t.starts_with('[') && !t.starts_with("[[")).then(|| t.trim_matches(|c| c == '[' || c == ']').trim().to_string())
        })
        .last()
}

fn from_toml_error(text: &str, e: toml::de::Error) -> Error {
    let line = e.span().map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1);
    let msg = e.message().trim().to_string();
    let key = msg
        .strip_prefix("unknown field `")
        .and_then(|r| r.split('`').next())
        .or_else(|| msg.strip_prefix("missing field `").and_then(|r| r.split('`').next()))
        .map(str::to_string);
    Error::Config { section: line.and_then(|l| section_at(text, l)), key, line, msg }
}

fn set(v: Option<Vec<i32>>) -> BTreeSet<i32> {
    v.unwrap_or_default().into_iter().collect()
}

/// Parses and validates a scenario. Relative paths are kept as written;
/// see [`load_config`] for resolution against the file location.
pub fn parse_config(text: &str) -> Result<Scenario> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| from_toml_error(text, e))?;
    let mode = match raw.mode.as_str() {
        "forward" => Mode::Forward,
        "inverse" => Mode::Inverse,
        "mms" => Mode::Mms,
        "check" => Mode::Check,
        other => return Err(err("", Some("mode"), format!("unknown mode `{other}` (forward, inverse, mms, check)"))),
    };

    let mesh = match raw.mesh {
        None => None,
        Some(m) => Some(match (m.file, m.generator.as_deref()) {
            (Some(f), None) => MeshSource::File(f.into()),
            (None, Some("unit_square_fault")) => MeshSource::UnitSquareFault {
                n: m.n.ok_or_else(|| err("mesh", Some("n"), "the generator needs a cell count `n`"))?,
                layered: m.layered,
                ring: m.ring,
            },
            (None, Some(g)) => return Err(err("mesh", Some("generator"), format!("unknown generator `{g}` (unit_square_fault)"))),
            _ => return Err(err("mesh", None, "give exactly one of `file` or `generator`")),
        }),
    };

    let fault = raw.fault;
    let roles = BoundaryRoles {
        sigma_tags: set(raw.roles.sigma_tags),
        free_tags: set(raw.roles.free_tags),
        xi_tags: set(raw.roles.xi_tags),
        fault_tags: set(fault.as_ref().and_then(|f| f.tags.clone())),
        omega_minus_regions: set(fault.as_ref().and_then(|f| f.omega_minus_regions.clone())),
    };
    let alternate_omega_minus = fault.and_then(|f| f.alternate_omega_minus_regions).map(|v| v.into_iter().collect());

    let mut material = MaterialSpec::default();
    for (name, m) in raw.material {
        let region: i32 = name
            .parse()
            .map_err(|_| err(&format!("material.{name}"), None, "material sections are named by integer region tag"))?;
        material.regions.insert(region, (m.lambda.coeffs(), m.mu.coeffs()));
    }
    material.admissibility = raw.admissibility.map(|a| Admissibility { alpha0: a.alpha0, beta0: a.beta0, m_bound: a.m_bound });

    let slip = match raw.slip {
        None => None,
        Some(s) => Some(match (s.file, s.bump, s.manufactured) {
            (Some(f), None, None) => SlipSpec::File(f.into()),
            (None, Some(b), None) => {
                if !(b.halfwidth > 0.0) {
                    return Err(err("slip", Some("bump"), "halfwidth must be positive"));
                }
                SlipSpec::Bump { center: b.center, halfwidth: b.halfwidth, amplitude: b.amplitude, direction: b.direction }
            }
            (None, None, Some(k)) => SlipSpec::Manufactured(k.parse()?),
            _ => return Err(err("slip", None, "give exactly one of `file`, `bump` or `manufactured`")),
        }),
    };

    let method = match raw.solver.method.as_deref() {
        None | Some("split") => Method::SplitNode,
        Some("interface") => Method::Interface,
        Some(m) => return Err(err("solver", Some("method"), format!("unknown method `{m}` (interface, split)"))),
    };
    let linear = match raw.solver.linear.as_deref() {
        None | Some("cholesky") => LinearSolver::Cholesky,
        Some("cg") => {
            let mut o = CgOptions::default();
            if let Some(t) = raw.solver.cg_tol {
                o.tol = t;
            }
            if let Some(f) = raw.solver.cg_maxiter_factor {
                o.maxiter_factor = f;
            }
            LinearSolver::Cg(o)
        }
        Some(l) => return Err(err("solver", Some("linear"), format!("unknown linear solver `{l}` (cholesky, cg)"))),
    };
    if let Some(t) = raw.solver.cg_tol {
        if !(t > 0.0) {
            return Err(err("solver", Some("cg_tol"), "must be positive"));
        }
    }
    let solver = SolverOptions {
        method,
        linear,
        exec: if raw.solver.sequential { Execution::Sequential } else { Execution::Parallel },
        check_samples: raw.solver.check_samples.unwrap_or(20),
        seed: raw.solver.seed.unwrap_or(0),
    };

    let inverse = match raw.inverse {
        None => None,
        Some(inv) => {
            let d = Domain::default();
            let domain = Domain {
                x: inv.domain.x.unwrap_or(d.x),
                y: inv.domain.y.unwrap_or(d.y),
                h: inv.domain.h.unwrap_or(d.h),
                safety_margin: inv.domain.safety_margin.unwrap_or(d.safety_margin),
                xi: inv.domain.xi.unwrap_or(d.xi),
                samples: inv.domain.samples.unwrap_or(d.samples),
                omega_minus_rows: inv.domain.omega_minus_rows.unwrap_or(d.omega_minus_rows),
            };
            domain.validate().map_err(|e| err("inverse", Some("domain"), e.to_string()))?;
            if inv.knots.len() != inv.heights.len() || inv.knots.len() < 2 {
                return Err(err("inverse", Some("heights"), "need at least two knots and one height per knot"));
            }
            if inv.slip_modes == 0 || inv.slip_modes % 2 != 0 {
                return Err(err("inverse", Some("slip_modes"), "must be a positive even number"));
            }
            if !(inv.alpha >= 0.0) || !(inv.noise_sigma >= 0.0) {
                return Err(err("inverse", None, "alpha and noise_sigma must be non-negative"));
            }
            let dflt = ReconstructOptions::default();
            let options = ReconstructOptions {
                alpha: inv.alpha,
                max_iter: inv.max_iter.unwrap_or(dflt.max_iter),
                tol: inv.tol.unwrap_or(dflt.tol),
                lm_damping: inv.lm_damping.unwrap_or(dflt.lm_damping),
                freeze_fault: inv.freeze_fault,
                fd_step: inv.fd_step.unwrap_or(dflt.fd_step),
            };
            let truth = match (inv.true_heights, inv.true_coeffs) {
                (Some(h), Some(c)) => {
                    if h.len() != inv.knots.len() || c.len() != inv.slip_modes {
                        return Err(err("inverse", Some("true_heights"), "truth must match the knots and slip_modes"));
                    }
                    Some(InverseTruth { heights: h, coeffs: c })
                }
                (None, None) => None,
                _ => return Err(err("inverse", None, "give both `true_heights` and `true_coeffs`")),
            };
            if truth.is_some() == inv.data.is_some() {
                return Err(err("inverse", Some("data"), "give either a `data` file or a synthetic truth, not both or neither"));
            }
            Some(InverseSpec {
                domain,
                frame_angle: inv.frame_angle,
                knots: inv.knots,
                heights: inv.heights,
                slip_modes: inv.slip_modes,
                options,
                seed: inv.seed,
                noise_sigma: inv.noise_sigma,
                data: inv.data.map(Into::into),
                truth,
            })
        }
    };

    let scenario = Scenario {
        mode,
        mesh,
        roles,
        alternate_omega_minus,
        material,
        slip,
        solver,
        inverse,
        output_dir: raw.output.dir.unwrap_or_else(|| "out".into()).into(),
    };
    scenario.check_required()?;
    Ok(scenario)
}

impl Scenario {
    fn check_required(&self) -> Result<()> {
        let manufactured = matches!(self.slip, Some(SlipSpec::Manufactured(_)));
        match self.mode {
            Mode::Inverse => {
                if self.inverse.is_none() {
                    return Err(err("inverse", None, "inverse mode needs an [inverse] section"));
                }
                if self.material.regions.is_empty() {
                    return Err(err("material", None, "inverse mode needs [material.1] and [material.2]"));
                }
            }
            Mode::Forward | Mode::Check | Mode::Mms => {
                if self.mesh.is_none() {
                    return Err(err("mesh", None, "this mode needs a [mesh] section"));
                }
                if self.slip.is_none() {
                    return Err(err("slip", None, "this mode needs a [slip] section"));
                }
                if self.mode == Mode::Mms && !manufactured {
                    return Err(err("slip", Some("manufactured"), "mms mode needs a manufactured slip"));
                }
                if self.mode == Mode::Mms && !matches!(self.mesh, Some(MeshSource::UnitSquareFault { .. })) {
                    return Err(err("mesh", Some("generator"), "mms mode needs the unit_square_fault generator"));
                }
                if !manufactured && self.material.regions.is_empty() {
                    return Err(err("material", None, "no [material.<region>] sections"));
                }
                if matches!(self.mesh, Some(MeshSource::File(_))) && self.roles.sigma_tags.is_empty() {
                    return Err(err("roles", Some("sigma_tags"), "a mesh file needs clamped facet tags"));
                }
            }
        }
        Ok(())
    }

    /// Resolves relative file references against `base` and checks they exist.
    pub fn resolve_paths(&mut self, base: &Path) -> Result<()> {
        let fix = |p: &mut PathBuf, section: &str, key: &str| -> Result<()> {
            if p.is_relative() {
                *p = base.join(&*p);
            }
            if !p.exists() {
                return Err(err(section, Some(key), format!("file {} does not exist", p.display())));
            }
            Ok(())
        };
        if let Some(MeshSource::File(p)) = &mut self.mesh {
            fix(p, "mesh", "file")?;
        }
        if let Some(SlipSpec::File(p)) = &mut self.slip {
            fix(p, "slip", "file")?;
        }
        if let Some(InverseSpec { data: Some(p), .. }) = &mut self.inverse {
            fix(p, "inverse", "data")?;
        }
        if self.output_dir.is_relative() {
            self.output_dir = base.join(&self.output_dir);
        }
        Ok(())
    }
}

/// Reads, parses and path-resolves a scenario file.
pub fn load_config(path: &Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Config {
        section: None,
        key: None,
        line: None,
        msg: format!("cannot read {}: {e}", path.display()),
    })?;
    let mut scenario = parse_config(&text)?;
    let base = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    scenario.resolve_paths(base)?;
    Ok(scenario)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
mode = "forward"

[mesh]
generator = "unit_square_fault"
n = 16

[material.1]
lambda = 1.0
mu = 1.0

[slip]
bump = { center = [0.5, 0.5], halfwidth = 0.25, amplitude = 0.0625, direction = [1.0, 0.0] }

[solver]
cg_tol = 1e-10
"#;

    #[test]
    fn minimal_forward() {
        let s = parse_config(MINIMAL).unwrap();
        assert_eq!(s.mode, Mode::Forward);
        assert_eq!(s.mesh, Some(MeshSource::UnitSquareFault { n: 16, layered: false, ring: false }));
        assert_eq!(s.solver.method, Method::SplitNode);
    }

    #[test]
    fn misspelled_key_is_named() {
        let text = MINIMAL.replace("cg_tol", "cg_toll");
        match parse_config(&text).unwrap_err() {
            Error::Config { section, key, line, .. } => {
                assert_eq!(key.as_deref(), Some("cg_toll"));
                assert_eq!(section.as_deref(), Some("solver"));
                assert_eq!(line, Some(16));
            }
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn inverse_needs_its_section() {
        let text = MINIMAL.replace("mode = \"forward\"", "mode = \"inverse\"");
        match parse_config(&text).unwrap_err() {
            Error::Config { section, .. } => assert_eq!(section.as_deref(), Some("inverse")),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn unknown_manufactured_kind() {
        let text = MINIMAL.replace(
            "bump = { center = [0.5, 0.5], halfwidth = 0.25, amplitude = 0.0625, direction = [1.0, 0.0] }",
            "manufactured = \"wavy\"",
        );
        assert!(matches!(parse_config(&text), Err(Error::Config { .. })));
    }

    #[test]
    fn affine_material() {
        let text = MINIMAL.replace("lambda = 1.0", "lambda = [1.5, 0.5, 0.0]");
        let s = parse_config(&text).unwrap();
        assert_eq!(s.material.regions[&1].0, [1.5, 0.5, 0.0]);
    }
}
