//! Small dense solves used by the reference-generation path: Gaussian
//! elimination for the L×L energy-match normal system and a Jacobi
//! eigendecomposition for the C×C channel Gram (C ≤ 3).

use crate::error::{Error, Result};

/// Solves A x = b by Gaussian elimination with partial pivoting; A is given
/// row-major and consumed. Intended for systems no larger than a few tens.
pub(crate) fn solve_dense(
    mut a: Vec<f64>,
    mut b: Vec<f64>,
    n: usize,
    context: &'static str,
) -> Result<Vec<f64>> {
    debug_assert_eq!(a.len(), n * n);
    debug_assert_eq!(b.len(), n);
    let scale: f64 = a
        .iter()
        .map(|v| v.abs())
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    for col in 0..n {
        let (pivot_row, pivot) = (col..n)
            .map(|r| (r, a[r * n + col]))
            .max_by(|x, y| x.1.abs().total_cmp(&y.1.abs()))
            .unwrap();
        if pivot.abs() <= 1e-12 * scale {
            return Err(Error::Singular {
                context,
                detail: format!("pivot {pivot:.3e} at column {col} below threshold"),
            });
        }
        if pivot_row != col {
            for k in 0..n {
                a.swap(col * n + k, pivot_row * n + k);
            }
            b.swap(col, pivot_row);
        }
        for r in col + 1..n {
            let factor = a[r * n + col] / pivot;
            if factor == 0.0 {
                continue;
            }
            for k in col..n {
                a[r * n + k] -= factor * a[col * n + k];
            }
            b[r] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = b[row];
        for k in row + 1..n {
            acc -= a[row * n + k] * x[k];
        }
        x[row] = acc / a[row * n + row];
    }
    Ok(x)
}

/// Jacobi eigendecomposition of a small symmetric matrix (row-major n×n).
/// Returns eigenvalues in descending order with matching eigenvectors as
/// rows of the second return value.
pub(crate) fn symmetric_eigen(mut a: Vec<f64>, n: usize) -> (Vec<f64>, Vec<f64>) {
    debug_assert_eq!(a.len(), n * n);
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    for _sweep in 0..100 {
        let mut off = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                off += a[p * n + q] * a[p * n + q];
            }
        }
        if off <= 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[j * n + j].total_cmp(&a[i * n + i]));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| a[i * n + i]).collect();
    let mut eigenvectors = vec![0.0; n * n];
    for (row, &i) in order.iter().enumerate() {
        for k in 0..n {
            eigenvectors[row * n + k] = v[k * n + i];
        }
    }
    (eigenvalues, eigenvectors)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_planted_system() {
        // A = [[4,1],[1,3]], x* = [1,-2], b = A x*
        let a = vec![4.0, 1.0, 1.0, 3.0];
        let b = vec![4.0 - 2.0, 1.0 - 6.0];
        let x = solve_dense(a, b, 2, "test").unwrap();
        assert!((x[0] - 1.0).abs() < 1e-12 && (x[1] + 2.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_singular_system() {
        let a = vec![1.0, 2.0, 2.0, 4.0];
        assert!(solve_dense(a, vec![1.0, 2.0], 2, "test").is_err());
    }

    #[test]
    fn eigen_of_diagonal() {
        let (vals, vecs) = symmetric_eigen(vec![2.0, 0.0, 0.0, 5.0], 2);
        assert!((vals[0] - 5.0).abs() < 1e-12 && (vals[1] - 2.0).abs() < 1e-12);
        // First eigenvector aligns with e2.
        assert!((vecs[0].abs() - 0.0).abs() < 1e-10);
        assert!((vecs[1].abs() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn eigen_reconstructs_matrix() {
        let a = vec![3.0, 1.0, 0.5, 1.0, 2.0, 0.25, 0.5, 0.25, 1.0];
        let (vals, vecs) = symmetric_eigen(a.clone(), 3);
        for i in 0..3 {
            for j in 0..3 {
                let mut acc = 0.0;
                for k in 0..3 {
                    acc += vals[k] * vecs[k * 3 + i] * vecs[k * 3 + j];
                }
                assert!((acc - a[i * 3 + j]).abs() < 1e-10);
            }
        }
    }
}
