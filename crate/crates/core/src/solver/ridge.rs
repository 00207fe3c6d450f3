use nalgebra::{DMatrix, DVector};

use super::SolverError;

pub const MAX_DENSE_COLUMNS: usize = 4096;

fn normal_system(
    a: &[Vec<f64>],
    b: &[f64],
    lambda: f64,
    bias_col: Option<usize>,
) -> Result<(DMatrix<f64>, DVector<f64>), SolverError> {
    let m = a.len();
    let n = a.first().map_or(0, Vec::len);
    if b.len() != m {
        return Err(SolverError::Dimension(format!("{m} rows but {} targets", b.len())));
    }
    if n > MAX_DENSE_COLUMNS {
        return Err(SolverError::TooLarge(n));
    }
    let dense = DMatrix::from_fn(m, n, |i, j| a[i][j]);
    let rhs = dense.tr_mul(&DVector::from_column_slice(b));
    let mut gram = dense.tr_mul(&dense);
    for j in 0..n {
        if Some(j) != bias_col {
            gram[(j, j)] += m as f64 * lambda;
        }
    }
    Ok((gram, rhs))
}

/// Solves `(AᵀA + mλD)x = Aᵀb` where `D` is the identity with a zero at the
/// (unpenalized) bias column.
pub fn ridge_closed_form(
    a: &[Vec<f64>],
    b: &[f64],
    lambda: f64,
    bias_col: Option<usize>,
) -> Result<Vec<f64>, SolverError> {
    if !(lambda >= 0.0) {
        return Err(SolverError::Config(format!("lambda must be >= 0, got {lambda}")));
    }
    let (gram, rhs) = normal_system(a, b, lambda, bias_col)?;
    let chol = gram.cholesky().ok_or(SolverError::Singular)?;
    let x = chol.solve(&rhs);
    if x.iter().any(|v| !v.is_finite()) {
        return Err(SolverError::Singular);
    }
    Ok(x.as_slice().to_vec())
}

/// Max-abs residual of the normal equations at `x`.
pub fn normal_equation_residual(
    a: &[Vec<f64>],
    b: &[f64],
    lambda: f64,
    bias_col: Option<usize>,
    x: &[f64],
) -> Result<f64, SolverError> {
    let (gram, rhs) = normal_system(a, b, lambda, bias_col)?;
    let r = gram * DVector::from_column_slice(x) - rhs;
    Ok(r.amax())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn identity(n: usize) -> Vec<Vec<f64>> {
        (0..n)
            .map(|i| (0..n).map(|j| f64::from(u8::from(i == j))).collect())
            .collect()
    }

    #[test]
    fn identity_unregularized() {
        let x = ridge_closed_form(&identity(3), &[1.0, 2.0, 3.0], 0.0, None).unwrap();
        assert_eq!(x, vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn huge_lambda_shrinks_to_zero() {
        let x = ridge_closed_form(&identity(3), &[1.0, 2.0, 3.0], 1e12, None).unwrap();
        assert!(x.iter().all(|v| v.abs() < 1e-11));
    }

    #[test]
    fn random_instance_residual() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let a: Vec<Vec<f64>> = (0..10)
            .map(|_| (0..4).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let b: Vec<f64> = (0..10).map(|_| rng.random_range(-1.0..1.0)).collect();
        let x = ridge_closed_form(&a, &b, 0.1, Some(3)).unwrap();
        assert!(normal_equation_residual(&a, &b, 0.1, Some(3), &x).unwrap() <= 1e-10);
    }

    #[test]
    fn singular_without_regularization() {
        let a = vec![vec![1.0, 1.0], vec![2.0, 2.0]];
        assert!(matches!(
            ridge_closed_form(&a, &[1.0, 2.0], 0.0, None),
            Err(SolverError::Singular)
        ));
        assert!(ridge_closed_form(&a, &[1.0, 2.0], 0.1, None).is_ok());
    }

    #[test]
    fn norm_is_monotone_in_lambda() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a: Vec<Vec<f64>> = (0..30)
            .map(|_| (0..6).map(|_| rng.random_range(0.0..2.0)).collect())
            .collect();
        let b: Vec<f64> = (0..30).map(|_| rng.random_range(-3.0..3.0)).collect();
        let mut prev = f64::INFINITY;
        for lambda in [0.0, 1e-3, 1e-2, 0.1, 1.0, 10.0] {
            let x = ridge_closed_form(&a, &b, lambda, None).unwrap();
            let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!(norm <= prev + 1e-12);
            prev = norm;
        }
    }

    #[test]
    fn bias_is_not_penalized() {
        // Constant target with only a bias column: any lambda recovers it.
        let a = vec![vec![0.0, 1.0]; 5];
        let x = ridge_closed_form(&a, &[4.0; 5], 100.0, Some(1));
        // Column 0 is all zero, so its diagonal is only m·λ and stays solvable.
        let x = x.unwrap();
        assert!((x[1] - 4.0).abs() < 1e-12);
        assert_eq!(x[0], 0.0);
    }
}
