//! Dense linear-algebra helpers on top of nalgebra.
//!
//! All solves are SVD based so that rank-deficient systems yield the
//! minimum-norm solution instead of an error.

use nalgebra::{DMatrix, DVector};

/// Singular-value cutoff: `max(n, m) * eps * sigma_max`.
pub fn svd_threshold(a: &DMatrix<f64>, sigma_max: f64) -> f64 {
    a.nrows().max(a.ncols()) as f64 * f64::EPSILON * sigma_max
}

/// Minimum-norm least-squares solution of `a x ~ b`.
///
/// Returns the solution and a flag that is true when `a` was detected as
/// rank deficient.
pub fn lstsq_min_norm(a: &DMatrix<f64>, b: &DVector<f64>) -> (DVector<f64>, bool) {
    let p = a.ncols();
    let svd = a.clone().svd(true, true);
    let sigma_max = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let tol = svd_threshold(a, sigma_max);
    let rank = svd.singular_values.iter().filter(|&&s| s > tol).count();
    let x = svd
        .solve(b, tol)
        .expect("SVD computed with both factors; solve cannot fail");
    (x, rank < p)
}

/// Precomputed spectral form of a symmetric PSD matrix, for repeated
/// pseudo-inverse quadratic forms `b^T G^+ b`.
pub struct SpectralPseudoInverse {
    /// Eigenvectors as columns.
    q: DMatrix<f64>,
    /// Eigenvalues, same order as columns of `q`.
    lambda: DVector<f64>,
    tol: f64,
    pub rank_deficient: bool,
}

impl SpectralPseudoInverse {
    pub fn new(g: &DMatrix<f64>) -> Self {
        assert_eq!(g.nrows(), g.ncols(), "matrix must be square");
        let eig = g.clone().symmetric_eigen();
        let lambda_max = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
        let tol = g.nrows() as f64 * f64::EPSILON * lambda_max.max(f64::MIN_POSITIVE);
        let rank = eig.eigenvalues.iter().filter(|&&l| l > tol).count();
        SpectralPseudoInverse {
            rank_deficient: rank < g.nrows(),
            q: eig.eigenvectors,
            lambda: eig.eigenvalues,
            tol,
        }
    }

    /// `b^T G^+ b` over the numerically nonzero spectrum.
    pub fn quad_form(&self, b: &DVector<f64>) -> f64 {
        let proj = self.q.transpose() * b;
        proj.iter()
            .zip(self.lambda.iter())
            .filter(|(_, &l)| l > self.tol)
            .map(|(&c, &l)| c * c / l)
            .sum()
    }
}

/// Smallest eigenvalue of the symmetric pencil `(a, m)`: the infimum of the
/// generalized Rayleigh quotient `x^T a x / x^T m x` with `m` positive
/// definite. Computed as `lambda_min(L^-1 a L^-T)` where `m = L L^T`.
pub fn pencil_min_eigenvalue(a: &DMatrix<f64>, m: &DMatrix<f64>) -> f64 {
    let chol = m
        .clone()
        .cholesky()
        .expect("pencil metric must be positive definite");
    let l_inv = chol
        .l()
        .try_inverse()
        .expect("Cholesky factor is invertible");
    let reduced = &l_inv * a * l_inv.transpose();
    // Symmetrize against rounding before the eigensolve.
    let sym = (&reduced + reduced.transpose()) * 0.5;
    sym.symmetric_eigen()
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min)
}

/// Build a column-major matrix from row slices.
pub fn matrix_from_rows(rows: &[Vec<f64>]) -> DMatrix<f64> {
    let n = rows.len();
    let p = if n == 0 { 0 } else { rows[0].len() };
    DMatrix::from_fn(n, p, |i, j| rows[i][j])
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn lstsq_identity_interpolates() {
        let a = DMatrix::<f64>::identity(4, 4);
        let b = DVector::from_vec(vec![1.0, -2.0, 0.5, 3.0]);
        let (x, singular) = lstsq_min_norm(&a, &b);
        assert!(!singular);
        assert_relative_eq!(x, b, epsilon = 1e-14);
    }

    #[test]
    fn lstsq_rank_deficient_returns_min_norm() {
        // Two identical columns: solutions form a line; min-norm splits evenly.
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 1.0, 2.0, 2.0, 3.0, 3.0]);
        let b = DVector::from_vec(vec![2.0, 4.0, 6.0]);
        let (x, singular) = lstsq_min_norm(&a, &b);
        assert!(singular);
        assert_relative_eq!(x[0], 1.0, epsilon = 1e-12);
        assert_relative_eq!(x[1], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn quad_form_matches_direct_inverse() {
        let g = DMatrix::from_row_slice(2, 2, &[4.0, 1.0, 1.0, 3.0]);
        let b = DVector::from_vec(vec![1.0, 2.0]);
        let spectral = SpectralPseudoInverse::new(&g);
        let direct = (g.try_inverse().unwrap() * &b).dot(&b);
        assert_relative_eq!(spectral.quad_form(&b), direct, epsilon = 1e-12);
        assert!(!spectral.rank_deficient);
    }

    #[test]
    fn pencil_min_eig_identity_metric() {
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 5.0]);
        let m = DMatrix::<f64>::identity(2, 2);
        assert_relative_eq!(pencil_min_eigenvalue(&a, &m), 2.0, epsilon = 1e-12);
    }
}
