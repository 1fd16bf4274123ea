//! Jacobi-preconditioned conjugate gradients.

use super::sparse::{dot, norm, CsrMatrix};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgOptions {
    /// Relative residual target ‖Ax − b‖ / ‖b‖.
    pub tol: f64,
    /// Iteration cap as a multiple of the system size.
    pub maxiter_factor: f64,
}

impl Default for CgOptions {
    fn default() -> Self {
        CgOptions { tol: 1e-10, maxiter_factor: 10.0 }
    }
}

#[derive(Debug, Clone)]
pub struct CgSolution {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Generic preconditioned CG on an abstract SPD operator.
///
/// `apply` computes y = A x, `precond` computes z = P⁻¹ r.
pub fn pcg<A, P>(n: usize, apply: A, precond: P, b: &[f64], tol: f64, max_iter: usize) -> Result<CgSolution>
where
    A: Fn(&[f64]) -> Result<Vec<f64>>,
    P: Fn(&[f64]) -> Vec<f64>,
{
    let bnorm = norm(b);
    if bnorm == 0.0 {
        return Ok(CgSolution { x: vec![0.0; n], iterations: 0, relative_residual: 0.0 });
    }
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut z = precond(&r);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    for it in 1..=max_iter {
        let ap = apply(&p)?;
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::Solve(format!(
                "operator is not positive definite (pᵀAp = {pap:e} at iteration {it})"
            )));
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rel = norm(&r) / bnorm;
        if rel <= tol {
            return Ok(CgSolution { x, iterations: it, relative_residual: rel });
        }
        z = precond(&r);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::Solve(format!(
        "CG stagnated: no convergence to {tol:e} within {max_iter} iterations"
    )))
}

/// Solves A x = b for SPD `a` with a Jacobi preconditioner.
pub fn solve_spd(a: &CsrMatrix, b: &[f64], opts: CgOptions) -> Result<CgSolution> {
    let diag = a.diagonal();
    if let Some(i) = diag.iter().position(|&d| !(d > 0.0)) {
        return Err(Error::Solve(format!(
            "indefinite matrix: non-positive diagonal at row {i}"
        )));
    }
    let max_iter = ((opts.maxiter_factor * a.n as f64).ceil() as usize).max(1);
    pcg(
        a.n,
        |x| Ok(a.mul_vec(x)),
        |r| r.iter().zip(&diag).map(|(ri, di)| ri / di).collect(),
        b,
        opts.tol,
        max_iter,
    )
}
