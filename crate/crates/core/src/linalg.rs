//! Dense symmetric eigensolvers and singular values.
//!
//! The cyclic Jacobi method is used wherever a full block eigendecomposition
//! is needed (dense block path, fidelity oracle). The one-sided Jacobi SVD
//! keeps small singular values accurate relative to the matrix norm, which
//! the fidelity oracle relies on.

use nalgebra::{DMatrix, DVector};

const MAX_SWEEPS: usize = 100;

/// Eigenvalues and column eigenvectors of a real symmetric matrix, sorted by
/// ascending eigenvalue.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    pub values: DVector<f64>,
    pub vectors: DMatrix<f64>,
}

fn off_diagonal_norm2(a: &DMatrix<f64>) -> f64 {
    let n = a.nrows();
    let mut s = 0.0;
    for j in 0..n {
        for i in 0..n {
            if i != j {
                s += a[(i, j)] * a[(i, j)];
            }
        }
    }
    s
}

/// Cyclic Jacobi eigendecomposition. Sweeps stop once the off-diagonal
/// Frobenius norm falls below `1e-15` of the input's Frobenius norm.
pub fn jacobi_eigen(input: &DMatrix<f64>) -> SymmetricEigen {
    let n = input.nrows();
    assert_eq!(n, input.ncols(), "jacobi_eigen needs a square matrix");
    let mut a = input.clone();
    // enforce exact symmetry
    for j in 0..n {
        for i in 0..j {
            let m = 0.5 * (a[(i, j)] + a[(j, i)]);
            a[(i, j)] = m;
            a[(j, i)] = m;
        }
    }
    let mut v = DMatrix::<f64>::identity(n, n);
    let scale = a.norm();
    let target = (1e-15 * scale).powi(2);

    for _ in 0..MAX_SWEEPS {
        if off_diagonal_norm2(&a) <= target || scale == 0.0 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq.abs() <= f64::MIN_POSITIVE {
                    continue;
                }
                let app = a[(p, p)];
                let aqq = a[(q, q)];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                a[(p, q)] = 0.0;
                a[(q, p)] = 0.0;
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].total_cmp(&a[(j, j)]));
    let values = DVector::from_iterator(n, order.iter().map(|&i| a[(i, i)]));
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &v.column(src));
    }
    SymmetricEigen { values, vectors }
}

/// Singular values of a real matrix by one-sided (Hestenes) Jacobi
/// rotations, in descending order.
pub fn singular_values(input: &DMatrix<f64>) -> Vec<f64> {
    let mut a = input.clone();
    let cols = a.ncols();
    let rows = a.nrows();
    let eps = 1e-15;
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for i in 0..cols {
            for j in (i + 1)..cols {
                let (mut alpha, mut beta, mut gamma) = (0.0, 0.0, 0.0);
                for k in 0..rows {
                    let x = a[(k, i)];
                    let y = a[(k, j)];
                    alpha += x * x;
                    beta += y * y;
                    gamma += x * y;
                }
                if gamma.abs() <= eps * (alpha * beta).sqrt() || gamma == 0.0 {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for k in 0..rows {
                    let x = a[(k, i)];
                    let y = a[(k, j)];
                    a[(k, i)] = c * x - s * y;
                    a[(k, j)] = s * x + c * y;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sv: Vec<f64> = (0..cols).map(|j| a.column(j).norm()).collect();
    sv.sort_by(|x, y| y.total_cmp(x));
    sv
}

/// Trace norm of the complex matrix `re + i im`, via its real embedding
/// `[[re, -im], [im, re]]` whose singular values come in duplicate pairs.
pub fn complex_trace_norm(re: &DMatrix<f64>, im: &DMatrix<f64>) -> f64 {
    let (r, c) = re.shape();
    let mut big = DMatrix::zeros(2 * r, 2 * c);
    big.view_mut((0, 0), (r, c)).copy_from(re);
    big.view_mut((r, c), (r, c)).copy_from(re);
    big.view_mut((r, 0), (r, c)).copy_from(im);
    big.view_mut((0, c), (r, c)).copy_from(&(-im));
    0.5 * singular_values(&big).iter().sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jacobi_reconstructs_matrix() {
        let a = DMatrix::from_row_slice(
            4,
            4,
            &[
                4.0, 1.0, -2.0, 2.0, 1.0, 2.0, 0.0, 1.0, -2.0, 0.0, 3.0, -2.0, 2.0, 1.0, -2.0, -1.0,
            ],
        );
        let e = jacobi_eigen(&a);
        let rec = &e.vectors * DMatrix::from_diagonal(&e.values) * e.vectors.transpose();
        assert!((rec - &a).norm() < 1e-13);
        let orth = e.vectors.transpose() * &e.vectors - DMatrix::identity(4, 4);
        assert!(orth.norm() < 1e-13);
        assert!(e.values[0] <= e.values[1] && e.values[2] <= e.values[3]);
    }

    #[test]
    fn jacobi_agrees_with_nalgebra() {
        let n = 9;
        let b = DMatrix::from_fn(n, n, |i, j| ((i * 7 + j * 3) % 11) as f64 - 5.0);
        let a = &b * b.transpose();
        let ours = jacobi_eigen(&a);
        let mut theirs: Vec<f64> = a
            .clone()
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .copied()
            .collect();
        theirs.sort_by(f64::total_cmp);
        for (x, y) in ours.values.iter().zip(&theirs) {
            assert!((x - y).abs() < 1e-10 * a.norm());
        }
    }

    #[test]
    fn singular_values_of_diagonal_and_rank_deficient() {
        let a = DMatrix::from_row_slice(3, 3, &[3.0, 0.0, 0.0, 0.0, -2.0, 0.0, 0.0, 0.0, 0.5]);
        assert_eq!(singular_values(&a), vec![3.0, 2.0, 0.5]);
        let u = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        let rank1 = &u * u.transpose();
        let sv = singular_values(&rank1);
        assert!((sv[0] - 14.0).abs() < 1e-13);
        assert!(sv[1].abs() < 1e-14 && sv[2].abs() < 1e-14);
    }

    #[test]
    fn trace_norm_of_phase_rotated_identity() {
        let re = DMatrix::identity(2, 2) * 0.6;
        let im = DMatrix::identity(2, 2) * 0.8;
        assert!((complex_trace_norm(&re, &im) - 2.0).abs() < 1e-14);
    }
}
