use std::fmt;
use std::ops::{Index, IndexMut};

use super::TensorError;

/// Relative tolerance used by [`SymMatrix::new`] to accept a matrix as symmetric.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Dense square matrix stored row-major.
#[derive(Clone, PartialEq)]
pub struct Matrix {
    dim: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, data: vec![0.0; dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, v) in diag.iter().enumerate() {
            m[(i, i)] = *v;
        }
        m
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                data.push(f(i, j));
            }
        }
        Self { dim, data }
    }

    /// Panics if the rows are ragged or not square.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Self {
        let dim = rows.len();
        let mut data = Vec::with_capacity(dim * dim);
        for r in rows {
            let r = r.as_ref();
            assert_eq!(r.len(), dim, "matrix rows must be square");
            data.extend_from_slice(r);
        }
        Self { dim, data }
    }

    pub fn from_row_major(dim: usize, data: Vec<f64>) -> Result<Self, TensorError> {
        if data.len() != dim * dim {
            return Err(TensorError::DimensionMismatch { expected: dim * dim, found: data.len() });
        }
        Ok(Self { dim, data })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn fill(&mut self, v: f64) {
        self.data.iter_mut().for_each(|x| *x = v);
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, rhs: &Matrix) -> Self {
        assert_eq!(self.dim, rhs.dim);
        let d = self.dim;
        let mut out = Self::zeros(d);
        for i in 0..d {
            for k in 0..d {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..d {
                    out.data[i * d + j] += a * rhs.data[k * d + j];
                }
            }
        }
        out
    }

    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.matvec_into(v, &mut out);
        out
    }

    #[inline]
    pub fn matvec_into(&self, v: &[f64], out: &mut [f64]) {
        let d = self.dim;
        for i in 0..d {
            let row = &self.data[i * d..(i + 1) * d];
            out[i] = row.iter().zip(v).map(|(a, b)| a * b).sum();
        }
    }

    pub fn add(&self, rhs: &Matrix) -> Self {
        self.zip_with(rhs, |a, b| a + b)
    }

    pub fn sub(&self, rhs: &Matrix) -> Self {
        self.zip_with(rhs, |a, b| a - b)
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { dim: self.dim, data: self.data.iter().map(|v| v * s).collect() }
    }

    fn zip_with(&self, rhs: &Matrix, f: impl Fn(f64, f64) -> f64) -> Self {
        assert_eq!(self.dim, rhs.dim);
        Self { dim: self.dim, data: self.data.iter().zip(&rhs.data).map(|(a, b)| f(*a, *b)).collect() }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Largest entrywise asymmetry `|m_ij - m_ji|`.
    pub fn asymmetry(&self) -> f64 {
        let mut worst = 0.0_f64;
        for i in 0..self.dim {
            for j in (i + 1)..self.dim {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }

    pub fn is_symmetric(&self, rel_tol: f64) -> bool {
        self.asymmetry() <= rel_tol * self.max_abs().max(f64::MIN_POSITIVE)
    }

    /// Replaces the matrix by `(m + mᵀ)/2`.
    pub fn symmetrize(&mut self) {
        let d = self.dim;
        for i in 0..d {
            for j in (i + 1)..d {
                let avg = 0.5 * (self.data[i * d + j] + self.data[j * d + i]);
                self.data[i * d + j] = avg;
                self.data[j * d + i] = avg;
            }
        }
    }

    /// Spectral norm of a symmetric matrix (largest absolute eigenvalue).
    pub fn sym_spectral_norm(&self) -> f64 {
        super::eigen::sym_eigen(self).values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.dim + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.dim + j]
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<&[f64]> = self.data.chunks(self.dim.max(1)).collect();
        f.debug_struct("Matrix").field("dim", &self.dim).field("rows", &rows).finish()
    }
}

/// A matrix that passed the symmetry and finiteness check.
#[derive(Clone, Debug, PartialEq)]
pub struct SymMatrix(Matrix);

impl SymMatrix {
    pub fn new(m: Matrix) -> Result<Self, TensorError> {
        if !m.is_finite() {
            return Err(TensorError::NonFinite);
        }
        if !m.is_symmetric(SYMMETRY_TOL) {
            return Err(TensorError::NotSymmetric { asymmetry: m.asymmetry() });
        }
        Ok(Self(m))
    }

    pub fn identity(dim: usize) -> Self {
        Self(Matrix::identity(dim))
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        Self(Matrix::from_diag(diag))
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn as_matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix {
        self.0
    }
}

impl std::ops::Deref for SymMatrix {
    type Target = Matrix;
    fn deref(&self) -> &Matrix {
        &self.0
    }
}

impl TryFrom<Matrix> for SymMatrix {
    type Error = TensorError;
    fn try_from(m: Matrix) -> Result<Self, TensorError> {
        SymMatrix::new(m)
    }
}

/// Rank-3 array `a[i][j][k]`, used for `∂_k M_ij` of a matrix field.
#[derive(Clone, Debug, PartialEq)]
pub struct Rank3Field {
    dim: usize,
    data: Vec<f64>,
}

impl Rank3Field {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, data: vec![0.0; dim * dim * dim] }
    }

    /// Builds the field from per-direction slices `∂_k M`.
    pub fn from_slices(slices: &[Matrix]) -> Self {
        let dim = slices.len();
        let mut out = Self::zeros(dim);
        for (k, s) in slices.iter().enumerate() {
            out.set_slice(k, s);
        }
        out
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.data[(i * self.dim + j) * self.dim + k]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, k: usize, v: f64) {
        self.data[(i * self.dim + j) * self.dim + k] = v;
    }

    pub fn fill(&mut self, v: f64) {
        self.data.iter_mut().for_each(|x| *x = v);
    }

    pub fn slice(&self, k: usize) -> Matrix {
        Matrix::from_fn(self.dim, |i, j| self.get(i, j, k))
    }

    pub fn set_slice(&mut self, k: usize, m: &Matrix) {
        for i in 0..self.dim {
            for j in 0..self.dim {
                self.set(i, j, k, m[(i, j)]);
            }
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Row divergence `Σ_j ∂_j M_ij`.
    pub fn row_divergence(&self) -> Vec<f64> {
        (0..self.dim).map(|i| (0..self.dim).map(|j| self.get(i, j, j)).sum()).collect()
    }

    /// Divergence of the transpose, `(∇·Mᵀ)_i = Σ_j ∂_j M_ji`.
    pub fn transpose_divergence(&self) -> Vec<f64> {
        (0..self.dim).map(|i| (0..self.dim).map(|j| self.get(j, i, j)).sum()).collect()
    }

    /// Double-dot contraction `(∇M : Nᵀ)_i = Σ_{l,k} ∂_k M_il · N_kl`.
    pub fn contract_transpose(&self, other: &Matrix, out: &mut [f64]) {
        let d = self.dim;
        for i in 0..d {
            let mut acc = 0.0;
            for l in 0..d {
                for k in 0..d {
                    acc += self.get(i, l, k) * other[(k, l)];
                }
            }
            out[i] = acc;
        }
    }

    /// `∂_k (M Q)` for a constant matrix `Q`.
    pub fn right_multiply(&self, q: &Matrix) -> Self {
        let slices: Vec<Matrix> = (0..self.dim).map(|k| self.slice(k).matmul(q)).collect();
        Self::from_slices(&slices)
    }
}
