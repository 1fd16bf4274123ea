use super::dense::{lstsq, solve_dense};
use super::forward::{FaultRealization, InverseContext, SlipParam, SurfaceData};
use super::geometry::FaultParam;
use crate::error::{Error, Result};
use crate::par::{self, Execution};

/// Second differences θ_{i−1} − 2θ_i + θ_{i+1}.
pub fn second_difference(theta: &[f64]) -> Vec<f64> {
    theta.windows(3).map(|w| w[0] - 2.0 * w[1] + w[2]).collect()
}

fn sq(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

fn check_sampling(ctx: &InverseContext, data: &SurfaceData) -> Result<()> {
    data.validate()?;
    if data.points != ctx.sampling.points {
        return Err(Error::Dimension(format!(
            "data has {} points, the experiment samples {} (or the locations differ)",
            data.points.len(),
            ctx.sampling.points.len()
        )));
    }
    Ok(())
}

fn objective(pred: &[f64], data: &[f64], sp: &SlipParam, fp: &FaultParam, alpha: f64) -> f64 {
    let r: f64 = pred.iter().zip(data).map(|(a, b)| (a - b).powi(2)).sum();
    0.5 * r + alpha * (sq(&sp.coeffs) + sq(&second_difference(&fp.heights)))
}

/// J = ½‖F(fp, sp) − d‖² + α(‖c‖² + ‖D²θ‖²).
pub fn misfit(ctx: &InverseContext, fp: &FaultParam, sp: &SlipParam, data: &SurfaceData, alpha: f64) -> Result<f64> {
    check_sampling(ctx, data)?;
    let pred = ctx.realize(fp)?.data(sp)?;
    Ok(objective(&pred, &data.flat(), sp, fp, alpha))
}

/// Central-difference gradient with the two one-sided values per parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct FdGradient {
    pub gradient: Vec<f64>,
    pub plus: Vec<f64>,
    pub minus: Vec<f64>,
    pub steps: Vec<f64>,
}

/// Central differences of `f` at `params`. Default steps are
/// 1e-6·max(|p_i|, 1). Parameters are evaluated in parallel under
/// [`Execution::Parallel`].
pub fn fd_gradient<F>(f: F, params: &[f64], steps: Option<&[f64]>, exec: Execution) -> Result<FdGradient>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    let steps: Vec<f64> = match steps {
        Some(s) => s.to_vec(),
        None => params.iter().map(|p| 1e-6 * p.abs().max(1.0)).collect(),
    };
    if steps.len() != params.len() || steps.iter().any(|&s| !(s > 0.0)) {
        return Err(Error::Domain("finite-difference steps must be positive, one per parameter".into()));
    }
    let evals = par::try_map_range(exec, 2 * params.len(), |k| {
        let i = k / 2;
        let mut p = params.to_vec();
        p[i] += if k % 2 == 0 { steps[i] } else { -steps[i] };
        f(&p).map_err(|e| e.context(format!("parameter {i} perturbed")))
    })?;
    let plus: Vec<f64> = evals.iter().step_by(2).copied().collect();
    let minus: Vec<f64> = evals.iter().skip(1).step_by(2).copied().collect();
    let gradient = (0..params.len()).map(|i| (plus[i] - minus[i]) / (2.0 * steps[i])).collect();
    Ok(FdGradient { gradient, plus, minus, steps })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructOptions {
    pub alpha: f64,
    pub max_iter: usize,
    /// Stop when the relative decrease of J falls below this.
    pub tol: f64,
    /// Initial Levenberg–Marquardt damping (relative to diag JᵀJ).
    pub lm_damping: f64,
    /// Keep θ fixed and solve only the linear slip problem.
    pub freeze_fault: bool,
    /// Finite-difference step for fault heights.
    pub fd_step: f64,
}

impl Default for ReconstructOptions {
    fn default() -> Self {
        ReconstructOptions { alpha: 0.0, max_iter: 20, tol: 1e-8, lm_damping: 1e-3, freeze_fault: false, fd_step: 1e-6 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceEntry {
    pub iter: usize,
    pub objective: f64,
    pub theta: Vec<f64>,
    pub coeffs: Vec<f64>,
    /// False for rejected Levenberg–Marquardt trial steps.
    pub accepted: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reconstruction {
    pub fault: FaultParam,
    pub slip: SlipParam,
    pub objective: f64,
    pub trace: Vec<TraceEntry>,
    pub converged: bool,
}

/// Exact Tikhonov solve for c on a fixed fault:
/// min ½‖G c − d‖² + α‖c‖², as least squares on [G; √(2α) I].
fn solve_slip(real: &FaultRealization, p: usize, d: &[f64], alpha: f64) -> Result<(SlipParam, Vec<f64>)> {
    let g = real.operator(p)?;
    let mut cols = g.clone();
    let mut rhs = d.to_vec();
    if alpha > 0.0 {
        let s = (2.0 * alpha).sqrt();
        for (j, col) in cols.iter_mut().enumerate() {
            col.extend((0..p).map(|i| if i == j { s } else { 0.0 }));
        }
        rhs.extend(std::iter::repeat_n(0.0, p));
    }
    let c = lstsq(&cols, &rhs)?;
    let mut pred = vec![0.0; d.len()];
    for (col, cj) in g.iter().zip(&c) {
        for (p, v) in pred.iter_mut().zip(col) {
            *p += cj * v;
        }
    }
    Ok((SlipParam { coeffs: c }, pred))
}

fn with_heights(fp: &FaultParam, heights: Vec<f64>) -> FaultParam {
    FaultParam { frame: fp.frame, knots: fp.knots.clone(), heights }
}

/// Alternating reconstruction: exact slip solve for the current fault, then
/// one Levenberg–Marquardt step on the fault heights with a
/// finite-difference Jacobian. Running out of iterations is not an error:
/// the best iterate is returned with `converged = false`.
pub fn reconstruct(
    ctx: &InverseContext,
    data: &SurfaceData,
    init: (&FaultParam, &SlipParam),
    opts: &ReconstructOptions,
) -> Result<Reconstruction> {
    check_sampling(ctx, data)?;
    init.1.validate()?;
    let d = data.flat();
    let p = init.1.coeffs.len();
    let alpha = opts.alpha;
    let floor = 1e-24 * sq(&d).max(f64::MIN_POSITIVE);

    let mut fault = init.0.clone();
    let real = ctx.realize(&fault)?;
    let (mut slip, mut pred) = solve_slip(&real, p, &d, alpha)?;
    let mut j = objective(&pred, &d, &slip, &fault, alpha);
    let mut trace = vec![TraceEntry { iter: 0, objective: j, theta: fault.heights.clone(), coeffs: slip.coeffs.clone(), accepted: true }];
    if opts.freeze_fault || j <= floor {
        return Ok(Reconstruction { fault, slip, objective: j, trace, converged: true });
    }

    let m = fault.heights.len();
    let reg = (2.0 * alpha).sqrt();
    let residual = |pred: &[f64], theta: &[f64]| -> Vec<f64> {
        let mut r: Vec<f64> = pred.iter().zip(&d).map(|(a, b)| a - b).collect();
        if alpha > 0.0 {
            r.extend(second_difference(theta).iter().map(|v| reg * v));
        }
        r
    };
    let mut damping = opts.lm_damping;
    let mut converged = false;
    for iter in 1..=opts.max_iter {
        let r0 = residual(&pred, &fault.heights);
        let h = opts.fd_step;
        let cols = par::try_map_range(ctx.exec, m, |i| -> Result<Vec<f64>> {
            let shifted = |s: f64| -> Result<Vec<f64>> {
                let mut th = fault.heights.clone();
                th[i] += s;
                let fp = with_heights(&fault, th.clone());
                let pr = ctx.realize(&fp)?.data(&slip)?;
                Ok(residual(&pr, &th))
            };
            let (rp, rm) = (shifted(h)?, shifted(-h)?);
            Ok(rp.iter().zip(&rm).map(|(a, b)| (a - b) / (2.0 * h)).collect())
        })
        .map_err(|e| e.context("fault Jacobian"))?;
        let mut jtj = vec![vec![0.0; m]; m];
        let mut jtr = vec![0.0; m];
        for a in 0..m {
            jtr[a] = cols[a].iter().zip(&r0).map(|(x, y)| x * y).sum();
            for b in 0..m {
                jtj[a][b] = cols[a].iter().zip(&cols[b]).map(|(x, y)| x * y).sum();
            }
        }
        let grad_norm = sq(&jtr).sqrt();
        let jac_norm = (0..m).map(|k| jtj[k][k]).sum::<f64>().sqrt();
        if grad_norm <= 1e-14 * jac_norm * sq(&r0).sqrt() {
            converged = true;
            break;
        }
        let mut a = jtj.clone();
        for k in 0..m {
            a[k][k] += damping * jtj[k][k].max(f64::MIN_POSITIVE);
        }
        let delta = solve_dense(a, jtr.iter().map(|v| -v).collect())?;
        let trial = with_heights(&fault, fault.heights.iter().zip(&delta).map(|(t, s)| t + s).collect());
        let trial_j = ctx
            .realize(&trial)
            .and_then(|real| real.data(&slip))
            .map(|pr| objective(&pr, &d, &slip, &trial, alpha));
        match trial_j {
            Ok(tj) if tj < j => {
                damping = (damping / 3.0).max(1e-12);
                fault = trial;
                let real = ctx.realize(&fault)?;
                let (s, pr) = solve_slip(&real, p, &d, alpha)?;
                slip = s;
                pred = pr;
                let j_new = objective(&pred, &d, &slip, &fault, alpha);
                trace.push(TraceEntry { iter, objective: j_new, theta: fault.heights.clone(), coeffs: slip.coeffs.clone(), accepted: true });
                let decrease = (j - j_new) / j;
                j = j_new;
                if decrease < opts.tol || j <= floor {
                    converged = true;
                    break;
                }
            }
            other => {
                damping *= 10.0;
                trace.push(TraceEntry {
                    iter,
                    objective: other.unwrap_or(f64::INFINITY),
                    theta: trial.heights.clone(),
                    coeffs: slip.coeffs.clone(),
                    accepted: false,
                });
            }
        }
    }
    Ok(Reconstruction { fault, slip, objective: j, trace, converged })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gradient_of_a_quadratic() {
        let g = fd_gradient(|p| Ok(p[0] * p[0] + p[1] * p[1]), &[1.0, 2.0], None, Execution::Sequential).unwrap();
        assert!((g.gradient[0] - 2.0).abs() < 1e-8);
        assert!((g.gradient[1] - 4.0).abs() < 1e-8);
    }

    #[test]
    fn errors_name_the_parameter() {
        let err = fd_gradient(
            |p| if p[1] > 2.0 { Err(Error::Solve("boom".into())) } else { Ok(0.0) },
            &[1.0, 2.0],
            None,
            Execution::Sequential,
        )
        .unwrap_err();
        assert!(err.to_string().contains("parameter 1"));
        assert!(err.is_solver_error());
    }

    #[test]
    fn second_difference_of_a_line_vanishes() {
        assert_eq!(second_difference(&[1.0, 2.0, 3.0, 4.0]), vec![0.0, 0.0]);
    }
}
