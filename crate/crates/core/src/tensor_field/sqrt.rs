use super::eigen::{sym_eigen, SymEigen};
use super::{Matrix, SymMatrix, TensorError};

/// Eigenvalues at or below `EIGEN_REL_TOL * max|λ|` count as non-positive.
pub const EIGEN_REL_TOL: f64 = 1e-12;

/// Principal square root of an SPD matrix, kept together with its
/// eigendecomposition so that derivatives can be taken in the eigenbasis.
#[derive(Clone, Debug)]
pub struct PrincipalRoot {
    eigen: SymEigen,
    root_values: Vec<f64>,
    root: Matrix,
}

impl PrincipalRoot {
    pub fn new(d: &SymMatrix) -> Result<Self, TensorError> {
        let eigen = sym_eigen(d.as_matrix());
        let tol = EIGEN_REL_TOL * eigen.max_abs_value();
        let min = eigen.min_value();
        if !(min > tol) {
            return Err(TensorError::NotPositiveDefinite { min_eigenvalue: min, tolerance: tol });
        }
        let root_values: Vec<f64> = eigen.values.iter().map(|v| v.sqrt()).collect();
        let mut root = eigen.reconstruct_with(f64::sqrt);
        root.symmetrize();
        Ok(Self { eigen, root_values, root })
    }

    pub fn root(&self) -> &Matrix {
        &self.root
    }

    pub fn into_root(self) -> Matrix {
        self.root
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigen.values
    }

    /// Solves `σ X + X σ = dD` for `X = ∂σ` in the eigenbasis of `D`.
    pub fn derivative(&self, d_diff: &Matrix) -> Matrix {
        let p = &self.eigen.vectors;
        let n = self.root_values.len();
        // rotated = Pᵀ dD P
        let rotated = p.transpose().matmul(d_diff).matmul(p);
        let r = Matrix::from_fn(n, |i, j| rotated[(i, j)] / (self.root_values[i] + self.root_values[j]));
        let mut out = p.matmul(&r).matmul(&p.transpose());
        out.symmetrize();
        out
    }
}

/// Unique symmetric positive definite `σ` with `σ² = D`.
pub fn principal_sqrt(d: &SymMatrix) -> Result<SymMatrix, TensorError> {
    let root = PrincipalRoot::new(d)?.into_root();
    Ok(SymMatrix::new(root).expect("symmetrized root is symmetric"))
}

/// Directional derivative of the principal root: given `D` and `∂_k D`,
/// returns `∂_k σ`, the solution of `σ σ' + σ' σ = ∂_k D`.
pub fn sylvester_sigma_derivative(d: &SymMatrix, d_diff: &SymMatrix) -> Result<SymMatrix, TensorError> {
    if d.dim() != d_diff.dim() {
        return Err(TensorError::DimensionMismatch { expected: d.dim(), found: d_diff.dim() });
    }
    let root = PrincipalRoot::new(d)?;
    Ok(SymMatrix::new(root.derivative(d_diff)).expect("symmetrized derivative is symmetric"))
}

/// `‖σσ' + σ'σ − dD‖_F / max(‖dD‖_F, 1)`.
pub fn sylvester_residual(sigma: &Matrix, sigma_diff: &Matrix, d_diff: &Matrix) -> f64 {
    let lhs = sigma.matmul(sigma_diff).add(&sigma_diff.matmul(sigma));
    lhs.sub(d_diff).frobenius_norm() / d_diff.frobenius_norm().max(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sym(rows: &[[f64; 2]]) -> SymMatrix {
        SymMatrix::new(Matrix::from_rows(rows)).unwrap()
    }

    #[test]
    fn diagonal_root() {
        let r = principal_sqrt(&SymMatrix::from_diag(&[4.0, 9.0])).unwrap();
        assert!(r.sub(&Matrix::from_diag(&[2.0, 3.0])).max_abs() < 1e-15);
    }

    #[test]
    fn identity_root() {
        for d in 1..=4 {
            let r = principal_sqrt(&SymMatrix::identity(d)).unwrap();
            assert!(r.sub(&Matrix::identity(d)).max_abs() < 1e-15);
        }
    }

    #[test]
    fn coupled_two_by_two_squares_back() {
        let d = sym(&[[2.0, 1.0], [1.0, 2.0]]);
        let r = principal_sqrt(&d).unwrap();
        assert!(r.matmul(&r).sub(&d).max_abs() < 1e-12);
        // eigenvalues of the root are √3 and 1 with eigenvectors (1,1)/√2, (1,-1)/√2
        let a = 0.5 * (3f64.sqrt() + 1.0);
        let b = 0.5 * (3f64.sqrt() - 1.0);
        assert!(r.sub(&Matrix::from_rows(&[[a, b], [b, a]])).max_abs() < 1e-14);
    }

    #[test]
    fn rejects_indefinite_and_singular() {
        let bad = sym(&[[1.0, 2.0], [2.0, 1.0]]);
        assert!(matches!(principal_sqrt(&bad), Err(TensorError::NotPositiveDefinite { .. })));
        let singular = sym(&[[1.0, 1.0], [1.0, 1.0]]);
        assert!(matches!(principal_sqrt(&singular), Err(TensorError::NotPositiveDefinite { .. })));
    }

    #[test]
    fn asymmetric_input_is_rejected_at_construction() {
        let m = Matrix::from_rows(&[[1.0, 0.5], [0.4, 1.0]]);
        assert!(matches!(SymMatrix::new(m), Err(TensorError::NotSymmetric { .. })));
    }

    #[test]
    fn isotropic_derivative() {
        // D = g I, dD = g' I  =>  σ' = g'/(2√g) I
        let (g, dg) = (2.5, -0.7);
        let s = sylvester_sigma_derivative(&SymMatrix::from_diag(&[g, g, g]), &SymMatrix::from_diag(&[dg, dg, dg]))
            .unwrap();
        let expected = dg / (2.0 * g.sqrt());
        assert!(s.sub(&Matrix::from_diag(&[expected; 3])).max_abs() < 1e-15);
    }

    #[test]
    fn zero_derivative() {
        let d = sym(&[[3.0, 0.4], [0.4, 1.0]]);
        let s = sylvester_sigma_derivative(&d, &SymMatrix::new(Matrix::zeros(2)).unwrap()).unwrap();
        assert_eq!(s.max_abs(), 0.0);
    }
}
