use std::fmt;
use std::sync::Arc;

use super::sqrt::PrincipalRoot;
use super::{Matrix, Rank3Field, SymMatrix, TensorError};

pub type VectorField = Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;
pub type MatrixField = Arc<dyn Fn(&[f64], &mut Matrix) + Send + Sync>;
pub type Rank3Eval = Arc<dyn Fn(&[f64], &mut Rank3Field) + Send + Sync>;

/// Relative finite-difference step, scaled per coordinate by `1 + |x_k|`.
pub const FD_REL_STEP: f64 = 1e-5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum DerivativeMode {
    /// Use closed-form derivatives where the model has them, falling back to
    /// the eigenbasis Sylvester solve and then to finite differences.
    #[default]
    Analytic,
    /// Central differences of the field values only.
    FiniteDifference,
}

#[inline]
pub fn fd_step(x: f64) -> f64 {
    FD_REL_STEP * (1.0 + x.abs())
}

/// Drift, diffusion tensor and noise amplitude of a `d`-dimensional SDE
/// `dX = b dt + σ dW` with `D = σσᵀ`.
#[derive(Clone)]
pub struct TensorFieldModel {
    name: String,
    dim: usize,
    drift: VectorField,
    diffusion: MatrixField,
    sigma: Option<MatrixField>,
    sigma_is_principal: bool,
    grad_diffusion: Option<Rank3Eval>,
    grad_sigma: Option<Rank3Eval>,
    ellipticity: Option<f64>,
    derivative_bounds: Option<Vec<f64>>,
    domain_half_width: f64,
}

impl fmt::Debug for TensorFieldModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TensorFieldModel")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("analytic_sigma", &self.sigma.is_some())
            .field("analytic_grad_diffusion", &self.grad_diffusion.is_some())
            .field("analytic_grad_sigma", &self.grad_sigma.is_some())
            .field("ellipticity", &self.ellipticity)
            .field("derivative_bounds", &self.derivative_bounds)
            .finish()
    }
}

impl TensorFieldModel {
    /// Zero drift, no analytic derivatives. Domain defaults to `[-5, 5]^d`.
    pub fn new(
        name: impl Into<String>,
        dim: usize,
        diffusion: impl Fn(&[f64], &mut Matrix) + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            dim,
            drift: Arc::new(|_, out: &mut [f64]| out.iter_mut().for_each(|v| *v = 0.0)),
            diffusion: Arc::new(diffusion),
            sigma: None,
            sigma_is_principal: true,
            grad_diffusion: None,
            grad_sigma: None,
            ellipticity: None,
            derivative_bounds: None,
            domain_half_width: 5.0,
        }
    }

    pub fn with_drift(mut self, drift: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static) -> Self {
        self.drift = Arc::new(drift);
        self
    }

    pub fn with_drift_field(mut self, drift: VectorField) -> Self {
        self.drift = drift;
        self
    }

    /// Analytic principal square root of `D`.
    pub fn with_sigma(mut self, sigma: impl Fn(&[f64], &mut Matrix) + Send + Sync + 'static) -> Self {
        self.sigma = Some(Arc::new(sigma));
        self.sigma_is_principal = true;
        self
    }

    pub fn with_grad_diffusion(mut self, g: impl Fn(&[f64], &mut Rank3Field) + Send + Sync + 'static) -> Self {
        self.grad_diffusion = Some(Arc::new(g));
        self
    }

    pub fn with_grad_sigma(mut self, g: impl Fn(&[f64], &mut Rank3Field) + Send + Sync + 'static) -> Self {
        self.grad_sigma = Some(Arc::new(g));
        self
    }

    pub fn with_ellipticity(mut self, alpha: f64) -> Self {
        self.ellipticity = Some(alpha);
        self
    }

    pub fn with_derivative_bounds(mut self, bounds: Vec<f64>) -> Self {
        self.derivative_bounds = Some(bounds);
        self
    }

    pub fn with_domain_half_width(mut self, l: f64) -> Self {
        self.domain_half_width = l;
        self
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Replaces `σ` by `σQ` for a constant orthogonal `Q`. The diffusion
    /// tensor is unchanged; the new noise amplitude is no longer symmetric.
    pub fn with_constant_rotation(&self, q: Matrix) -> Result<Self, TensorError> {
        if q.dim() != self.dim {
            return Err(TensorError::DimensionMismatch { expected: self.dim, found: q.dim() });
        }
        let defect = q.transpose().matmul(&q).sub(&Matrix::identity(self.dim)).frobenius_norm();
        if defect > 1e-12 {
            return Err(TensorError::NotOrthogonal { defect });
        }
        let base = self.clone();
        let q = Arc::new(q);
        let mut out = self.clone();
        let (b1, q1) = (base.clone(), q.clone());
        out.sigma = Some(Arc::new(move |x: &[f64], m: &mut Matrix| {
            let mut root = Matrix::zeros(b1.dim);
            b1.sigma_into(x, &mut root).expect("base model must admit a principal root");
            *m = root.matmul(&q1);
        }));
        out.sigma_is_principal = false;
        out.grad_sigma = Some(Arc::new(move |x: &[f64], g: &mut Rank3Field| {
            let base_grad =
                base.grad_sigma(x, DerivativeMode::Analytic).expect("base model must admit a principal root");
            *g = base_grad.right_multiply(&q);
        }));
        out.name = format!("{}+rotation", self.name);
        Ok(out)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn ellipticity(&self) -> Option<f64> {
        self.ellipticity
    }

    pub fn derivative_bounds(&self) -> Option<&[f64]> {
        self.derivative_bounds.as_deref()
    }

    pub fn domain_half_width(&self) -> f64 {
        self.domain_half_width
    }

    pub fn has_analytic_sigma(&self) -> bool {
        self.sigma.is_some()
    }

    pub fn has_analytic_grad_diffusion(&self) -> bool {
        self.grad_diffusion.is_some()
    }

    pub fn has_analytic_grad_sigma(&self) -> bool {
        self.grad_sigma.is_some()
    }

    pub fn drift_field(&self) -> VectorField {
        self.drift.clone()
    }

    pub fn diffusion_field(&self) -> MatrixField {
        self.diffusion.clone()
    }

    #[inline]
    pub fn drift_into(&self, x: &[f64], out: &mut [f64]) {
        (self.drift)(x, out)
    }

    pub fn drift(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.drift_into(x, &mut out);
        out
    }

    #[inline]
    pub fn diffusion_into(&self, x: &[f64], out: &mut Matrix) {
        (self.diffusion)(x, out)
    }

    pub fn diffusion(&self, x: &[f64]) -> Result<SymMatrix, TensorError> {
        let mut m = Matrix::zeros(self.dim);
        self.diffusion_into(x, &mut m);
        SymMatrix::new(m)
    }

    /// Analytic `σ(x)` when supplied, otherwise the principal root of `D(x)`.
    pub fn sigma_into(&self, x: &[f64], out: &mut Matrix) -> Result<(), TensorError> {
        match &self.sigma {
            Some(s) => {
                s(x, out);
                Ok(())
            }
            None => {
                *out = PrincipalRoot::new(&self.diffusion(x)?)?.into_root();
                Ok(())
            }
        }
    }

    pub fn sigma(&self, x: &[f64]) -> Result<Matrix, TensorError> {
        let mut m = Matrix::zeros(self.dim);
        self.sigma_into(x, &mut m)?;
        Ok(m)
    }

    /// `∂_k D_ij` at `x`.
    pub fn grad_diffusion(&self, x: &[f64], mode: DerivativeMode) -> Rank3Field {
        let mut out = Rank3Field::zeros(self.dim);
        match (&self.grad_diffusion, mode) {
            (Some(g), DerivativeMode::Analytic) => g(x, &mut out),
            _ => {
                let d = self.dim;
                let mut plus = Matrix::zeros(d);
                let mut minus = Matrix::zeros(d);
                central_difference(x, &mut out, |p, m| {
                    self.diffusion_into(p, &mut plus);
                    self.diffusion_into(m, &mut minus);
                    Ok(plus.sub(&minus))
                })
                .expect("diffusion evaluation is infallible");
            }
        }
        out
    }

    pub fn grad_sigma(&self, x: &[f64], mode: DerivativeMode) -> Result<Rank3Field, TensorError> {
        let mut out = Rank3Field::zeros(self.dim);
        self.grad_sigma_into(x, mode, &mut out)?;
        Ok(out)
    }

    /// `∂_k σ_ij` at `x`. In analytic mode without a closed form, a principal
    /// `σ` is differentiated through the Sylvester equation.
    pub fn grad_sigma_into(&self, x: &[f64], mode: DerivativeMode, out: &mut Rank3Field) -> Result<(), TensorError> {
        if mode == DerivativeMode::Analytic {
            if let Some(g) = &self.grad_sigma {
                g(x, out);
                return Ok(());
            }
            if self.sigma_is_principal {
                let root = PrincipalRoot::new(&self.diffusion(x)?)?;
                let grad_d = self.grad_diffusion(x, DerivativeMode::Analytic);
                for k in 0..self.dim {
                    out.set_slice(k, &root.derivative(&grad_d.slice(k)));
                }
                return Ok(());
            }
        }
        let d = self.dim;
        let mut plus = Matrix::zeros(d);
        let mut minus = Matrix::zeros(d);
        central_difference(x, out, |p, m| {
            self.sigma_into(p, &mut plus)?;
            self.sigma_into(m, &mut minus)?;
            Ok(plus.sub(&minus))
        })
    }
}

/// Fills `out[.., .., k]` with `(f(x + h e_k) - f(x - h e_k)) / 2h` where the
/// callback returns the raw difference of the two evaluations.
fn central_difference(
    x: &[f64],
    out: &mut Rank3Field,
    mut diff: impl FnMut(&[f64], &[f64]) -> Result<Matrix, TensorError>,
) -> Result<(), TensorError> {
    let d = x.len();
    let mut xp = x.to_vec();
    let mut xm = x.to_vec();
    for k in 0..d {
        let h = fd_step(x[k]);
        xp[k] = x[k] + h;
        xm[k] = x[k] - h;
        let delta = diff(&xp, &xm)?;
        // actual step after rounding
        let width = xp[k] - xm[k];
        out.set_slice(k, &delta.scale(1.0 / width));
        xp[k] = x[k];
        xm[k] = x[k];
    }
    Ok(())
}
