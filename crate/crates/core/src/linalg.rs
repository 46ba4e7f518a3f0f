//! Small dense linear-algebra helpers.

use nalgebra::{Matrix3, SymmetricEigen};

/// Determinant by Gaussian elimination with complete pivoting.
pub fn det_full_pivot(mut a: Vec<Vec<f64>>) -> f64 {
    let n = a.len();
    let mut det = 1.0;
    for k in 0..n {
        let (mut pi, mut pj, mut best) = (k, k, 0.0);
        for (i, row) in a.iter().enumerate().skip(k) {
            for (j, &v) in row.iter().enumerate().skip(k) {
                if v.abs() > best {
                    best = v.abs();
                    pi = i;
                    pj = j;
                }
            }
        }
        if best == 0.0 {
            return 0.0;
        }
        if pi != k {
            a.swap(pi, k);
            det = -det;
        }
        if pj != k {
            for row in a.iter_mut() {
                row.swap(pj, k);
            }
            det = -det;
        }
        let pivot = a[k][k];
        det *= pivot;
        for i in k + 1..n {
            let f = a[i][k] / pivot;
            if f != 0.0 {
                for j in k..n {
                    let v = a[k][j];
                    a[i][j] -= f * v;
                }
            }
        }
    }
    det
}

/// Eigenvalues of a symmetric 3×3 matrix in ascending order.
pub fn sym3_eigenvalues(m: &Matrix3<f64>) -> [f64; 3] {
    let e = SymmetricEigen::new(*m).eigenvalues;
    let mut v = [e[0], e[1], e[2]];
    v.sort_by(|a, b| a.total_cmp(b));
    v
}

/// Eigenvalues of `A x = λ B x` for symmetric `A` and positive definite `B`,
/// ascending. Returns `None` when `B` is not positive definite.
pub fn generalized_sym3_eigen(a: &Matrix3<f64>, b: &Matrix3<f64>) -> Option<[f64; 3]> {
    let chol = b.cholesky()?;
    let l = chol.l();
    let linv = l.try_inverse()?;
    let m = linv * a * linv.transpose();
    let sym = (m + m.transpose()) * 0.5;
    Some(sym3_eigenvalues(&sym))
}
