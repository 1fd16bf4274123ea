use crate::error::{Error, Result};

/// Least-squares solution of min ‖A x − b‖ by Householder QR, A given by
/// columns (each of length m ≥ n). Errors on numerically rank-deficient A.
pub fn lstsq(columns: &[Vec<f64>], b: &[f64]) -> Result<Vec<f64>> {
    let n = columns.len();
    let m = b.len();
    if columns.iter().any(|c| c.len() != m) || m < n {
        return Err(Error::Dimension(format!("least squares with {m} rows and {n} columns")));
    }
    let mut a: Vec<Vec<f64>> = columns.to_vec();
    let mut rhs = b.to_vec();
    let scale = a.iter().map(|c| c.iter().map(|v| v * v).sum::<f64>().sqrt()).fold(0.0, f64::max);
    for k in 0..n {
        let norm = a[k][k..].iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm <= 1e-14 * scale {
            return Err(Error::Solve(format!("least-squares matrix is rank deficient at column {k}")));
        }
        let alpha = if a[k][k] > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = a[k][k..].to_vec();
        v[0] -= alpha;
        let vv: f64 = v.iter().map(|x| x * x).sum();
        let reflect = |col: &mut [f64]| {
            let s = 2.0 * v.iter().zip(&col[k..]).map(|(a, b)| a * b).sum::<f64>() / vv;
            for (c, vi) in col[k..].iter_mut().zip(&v) {
                *c -= s * vi;
            }
        };
        for col in a.iter_mut().skip(k) {
            reflect(col);
        }
        reflect(&mut rhs);
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|j| a[j][i] * x[j]).sum();
        x[i] = (rhs[i] - s) / a[i][i];
    }
    Ok(x)
}

/// Solves a small dense square system by Gaussian elimination with partial
/// pivoting.
pub(crate) fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Result<Vec<f64>> {
    let n = b.len();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap();
        if a[p][c] == 0.0 || !a[p][c].is_finite() {
            return Err(Error::Solve("singular dense system".into()));
        }
        a.swap(c, p);
        b.swap(c, p);
        for r in c + 1..n {
            let f = a[r][c] / a[c][c];
            for k in c..n {
                a[r][k] -= f * a[c][k];
            }
            b[r] -= f * b[c];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| a[i][k] * x[k]).sum();
        x[i] = (b[i] - s) / a[i][i];
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overdetermined_line_fit() {
        // y = 1 + 2t sampled exactly.
        let t = [0.0, 1.0, 2.0, 3.0];
        let cols = vec![vec![1.0; 4], t.to_vec()];
        let b: Vec<f64> = t.iter().map(|t| 1.0 + 2.0 * t).collect();
        let x = lstsq(&cols, &b).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-13 && (x[1] - 2.0).abs() < 1e-13);
    }

    #[test]
    fn rank_deficient_is_an_error() {
        let cols = vec![vec![1.0, 2.0, 3.0], vec![2.0, 4.0, 6.0]];
        assert!(lstsq(&cols, &[1.0, 1.0, 1.0]).is_err());
    }

    #[test]
    fn square_solve() {
        let x = solve_dense(vec![vec![0.0, 2.0], vec![3.0, 1.0]], vec![4.0, 5.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-15 && (x[1] - 2.0).abs() < 1e-15);
    }
}
