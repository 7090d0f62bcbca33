//! Dense small-matrix algebra for diffusion tensors.
//!
//! Everything here works pointwise: a [`TensorFieldModel`] is queried at a
//! point `x` and the operations return vectors in `ℝ^d`. The central objects
//! are the principal square root `σ = D^{1/2}`, its derivative obtained from
//! the Sylvester equation `σσ' + σ'σ = D'`, and the structural residual
//! `Λ = ∇·D − 2σ∇·σᵀ`.

mod eigen;
mod matrix;
mod model;
mod sqrt;

use thiserror::Error;

pub use eigen::{sym_eigen, SymEigen};
pub use matrix::{Matrix, Rank3Field, SymMatrix, SYMMETRY_TOL};
pub use model::{fd_step, DerivativeMode, MatrixField, Rank3Eval, TensorFieldModel, VectorField, FD_REL_STEP};
pub use sqrt::{principal_sqrt, sylvester_residual, sylvester_sigma_derivative, PrincipalRoot, EIGEN_REL_TOL};

/// Agreement required between the two routes to the Itô correction.
pub const IDENTITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TensorError {
    #[error("matrix is not positive definite: smallest eigenvalue {min_eigenvalue:e} <= tolerance {tolerance:e}")]
    NotPositiveDefinite { min_eigenvalue: f64, tolerance: f64 },
    #[error("matrix is not symmetric: max |m_ij - m_ji| = {asymmetry:e}")]
    NotSymmetric { asymmetry: f64 },
    #[error("matrix has non-finite entries")]
    NonFinite,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("model does not declare an ellipticity constant and per-direction derivative bounds")]
    MissingBounds,
    #[error("Itô correction routes disagree in component {component}: {via_divergence:e} vs {via_contraction:e}")]
    IdentityMismatch { component: usize, via_divergence: f64, via_contraction: f64 },
    #[error("rotation is not orthogonal: ‖QᵀQ − I‖_F = {defect:e}")]
    NotOrthogonal { defect: f64 },
}

/// `(∇·D)_i = Σ_j ∂_j D_ij`.
pub fn divergence_d(model: &TensorFieldModel, x: &[f64], mode: DerivativeMode) -> Vec<f64> {
    model.grad_diffusion(x, mode).row_divergence()
}

/// `(∇·σᵀ)_i = Σ_j ∂_j σ_ji`.
pub fn divergence_sigma_t(model: &TensorFieldModel, x: &[f64], mode: DerivativeMode) -> Result<Vec<f64>, TensorError> {
    Ok(model.grad_sigma(x, mode)?.transpose_divergence())
}

/// `Λ(x) = ∇·D − 2σ(∇·σᵀ)`; vanishes identically exactly when the
/// drift-uncorrected kinetic SDE has the Fick-form density equation.
pub fn structural_residual(model: &TensorFieldModel, x: &[f64], mode: DerivativeMode) -> Result<Vec<f64>, TensorError> {
    let div_d = divergence_d(model, x, mode);
    let sigma = model.sigma(x)?;
    let div_st = divergence_sigma_t(model, x, mode)?;
    let s_div = sigma.matvec(&div_st);
    Ok(div_d.iter().zip(&s_div).map(|(a, b)| a - 2.0 * b).collect())
}

/// Same residual through the second algebraic route, `∇σ:σᵀ − σ∇·σᵀ`.
pub fn structural_residual_via_contraction(
    model: &TensorFieldModel,
    x: &[f64],
    mode: DerivativeMode,
) -> Result<Vec<f64>, TensorError> {
    let sigma = model.sigma(x)?;
    let grad = model.grad_sigma(x, mode)?;
    let mut h = vec![0.0; model.dim()];
    grad.contract_transpose(&sigma, &mut h);
    let s_div = sigma.matvec(&grad.transpose_divergence());
    Ok(h.iter().zip(&s_div).map(|(a, b)| a - b).collect())
}

/// The drift correction `h` of the kinetic-to-Itô conversion, computed twice.
#[derive(Clone, Debug, PartialEq)]
pub struct ItoCorrection {
    /// `∇·D − σ∇·σᵀ`
    pub via_divergence: Vec<f64>,
    /// `∇σ:σᵀ`, componentwise `Σ_{l,k} ∂_k σ_il σ_kl`
    pub via_contraction: Vec<f64>,
}

impl ItoCorrection {
    pub fn value(&self) -> &[f64] {
        &self.via_contraction
    }

    pub fn max_discrepancy(&self) -> f64 {
        self.via_divergence.iter().zip(&self.via_contraction).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()))
    }
}

/// Returns `h(x)` by both routes and fails with `IdentityMismatch` when they
/// disagree by more than [`IDENTITY_TOL`] (relative to the size of `∇·D`).
pub fn ito_correction_h(
    model: &TensorFieldModel,
    x: &[f64],
    mode: DerivativeMode,
) -> Result<ItoCorrection, TensorError> {
    let sigma = model.sigma(x)?;
    let grad_sigma = model.grad_sigma(x, mode)?;
    let div_d = divergence_d(model, x, mode);
    let s_div = sigma.matvec(&grad_sigma.transpose_divergence());
    let via_divergence: Vec<f64> = div_d.iter().zip(&s_div).map(|(a, b)| a - b).collect();
    let mut via_contraction = vec![0.0; model.dim()];
    grad_sigma.contract_transpose(&sigma, &mut via_contraction);

    let scale = 1.0 + div_d.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    for (i, (a, b)) in via_divergence.iter().zip(&via_contraction).enumerate() {
        if (a - b).abs() > IDENTITY_TOL * scale || !a.is_finite() || !b.is_finite() {
            return Err(TensorError::IdentityMismatch { component: i, via_divergence: *a, via_contraction: *b });
        }
    }
    Ok(ItoCorrection { via_divergence, via_contraction })
}

/// Outcome of checking `|∂_k σ_ij| ≤ d² M_k / (2√α)` over a point set.
#[derive(Clone, Debug, PartialEq)]
pub struct DerivativeBoundReport {
    /// Per point, per direction `k`: `max_ij |∂_k σ_ij|`.
    pub observed: Vec<Vec<f64>>,
    /// Per direction: `d² M_k / (2√α)`.
    pub bounds: Vec<f64>,
    pub worst_ratio: f64,
    pub holds: bool,
}

pub fn derivative_bound_check(
    model: &TensorFieldModel,
    points: &[Vec<f64>],
    mode: DerivativeMode,
) -> Result<DerivativeBoundReport, TensorError> {
    let (alpha, m) = match (model.ellipticity(), model.derivative_bounds()) {
        (Some(a), Some(m)) if m.len() == model.dim() => (a, m),
        _ => return Err(TensorError::MissingBounds),
    };
    let d = model.dim() as f64;
    let bounds: Vec<f64> = m.iter().map(|mk| d * d * mk / (2.0 * alpha.sqrt())).collect();
    let mut observed = Vec::with_capacity(points.len());
    let mut worst_ratio = 0.0_f64;
    let mut holds = true;
    let mut grad = Rank3Field::zeros(model.dim());
    for x in points {
        model.grad_sigma_into(x, mode, &mut grad)?;
        let per_k: Vec<f64> = (0..model.dim()).map(|k| grad.slice(k).max_abs()).collect();
        for (obs, bound) in per_k.iter().zip(&bounds) {
            if obs > bound {
                holds = false;
            }
            if *bound > 0.0 {
                worst_ratio = worst_ratio.max(obs / bound);
            } else if *obs > 0.0 {
                worst_ratio = f64::INFINITY;
            }
        }
        observed.push(per_k);
    }
    Ok(DerivativeBoundReport { observed, bounds, worst_ratio, holds })
}

#[derive(Clone, Debug, PartialEq)]
pub struct EllipticityReport {
    pub min_eigenvalue: f64,
    pub argmin: Vec<f64>,
    pub declared: Option<f64>,
    pub holds: bool,
}

/// Smallest eigenvalue of `D` over the points, compared with the declared
/// ellipticity constant (a small relative slack absorbs rounding).
pub fn ellipticity_check(model: &TensorFieldModel, points: &[Vec<f64>]) -> Result<EllipticityReport, TensorError> {
    let mut min = f64::INFINITY;
    let mut argmin = Vec::new();
    let mut m = Matrix::zeros(model.dim());
    for x in points {
        model.diffusion_into(x, &mut m);
        let sym = SymMatrix::new(m.clone())?;
        let e = sym_eigen(&sym).min_value();
        if e < min {
            min = e;
            argmin = x.clone();
        }
    }
    let holds = match model.ellipticity() {
        Some(a) => min >= a * (1.0 - 1e-12) && min > 0.0,
        None => min > 0.0,
    };
    Ok(EllipticityReport { min_eigenvalue: min, argmin, declared: model.ellipticity(), holds })
}

/// Tensor-product grid of `per_axis^dim` points on `[-half_width, half_width]^dim`,
/// endpoints included.
pub fn box_grid(dim: usize, half_width: f64, per_axis: usize) -> Vec<Vec<f64>> {
    let axis: Vec<f64> = if per_axis == 1 {
        vec![0.0]
    } else {
        (0..per_axis).map(|i| -half_width + 2.0 * half_width * i as f64 / (per_axis - 1) as f64).collect()
    };
    let total = per_axis.pow(dim as u32);
    (0..total)
        .map(|mut idx| {
            let mut p = vec![0.0; dim];
            for c in (0..dim).rev() {
                p[c] = axis[idx % per_axis];
                idx /= per_axis;
            }
            p
        })
        .collect()
}

#[cfg(test)]
mod tests;
