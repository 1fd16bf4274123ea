//! Integral norms of P1 fields.

use super::assembly::hat_gradients;
use super::quadrature::triangle_deg5;
use crate::error::Result;
use crate::mesh::{Mesh, Point};

/// Exact field evaluated with the element id, so piecewise definitions can
/// pick the piece an element belongs to.
pub type ExactValue<'a> = &'a dyn Fn(usize, Point) -> [f64; 2];
pub type ExactGradient<'a> = &'a dyn Fn(usize, Point) -> [[f64; 2]; 2];

/// ‖u_h − u‖_{L²(Ω)} with degree-5 quadrature; `u_h` nodal (length 2N).
pub fn l2_error(mesh: &Mesh, uh: &[f64], exact: ExactValue<'_>) -> f64 {
    let mut s = 0.0;
    for e in 0..mesh.elements.len() {
        let p = mesh.element_points(e);
        let v = mesh.elements[e].vertices;
        let area = mesh.element_area(e);
        for (l, w) in triangle_deg5() {
            let x = [
                l[0] * p[0][0] + l[1] * p[1][0] + l[2] * p[2][0],
                l[0] * p[0][1] + l[1] * p[1][1] + l[2] * p[2][1],
            ];
            let ue = exact(e, x);
            for c in 0..2 {
                let h: f64 = (0..3).map(|a| l[a] * uh[2 * v[a] + c]).sum();
                s += area * w * (h - ue[c]).powi(2);
            }
        }
    }
    s.sqrt()
}

/// |u_h − u|_{H¹(Ω)} with degree-5 quadrature; `grad[i][j]` = ∂u_i/∂x_j.
pub fn h1_seminorm_error(mesh: &Mesh, uh: &[f64], grad: ExactGradient<'_>) -> Result<f64> {
    let mut s = 0.0;
    for e in 0..mesh.elements.len() {
        let p = mesh.element_points(e);
        let v = mesh.elements[e].vertices;
        let (g, area) = hat_gradients(p)?;
        let mut gh = [[0.0; 2]; 2];
        for a in 0..3 {
            for i in 0..2 {
                for j in 0..2 {
                    gh[i][j] += uh[2 * v[a] + i] * g[a][j];
                }
            }
        }
        for (l, w) in triangle_deg5() {
            let x = [
                l[0] * p[0][0] + l[1] * p[1][0] + l[2] * p[2][0],
                l[0] * p[0][1] + l[1] * p[1][1] + l[2] * p[2][1],
            ];
            let ge = grad(e, x);
            for i in 0..2 {
                for j in 0..2 {
                    s += area * w * (gh[i][j] - ge[i][j]).powi(2);
                }
            }
        }
    }
    Ok(s.sqrt())
}

/// ‖u_h‖_{L²} of a nodal P1 field (exact: P1 mass matrix).
pub fn l2_norm(mesh: &Mesh, uh: &[f64]) -> f64 {
    l2_error(mesh, uh, &|_, _| [0.0, 0.0])
}

/// ‖u_h − v_h‖_{L²} for two nodal fields on the same mesh.
pub fn l2_difference(mesh: &Mesh, a: &[f64], b: &[f64]) -> f64 {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    l2_norm(mesh, &d)
}
