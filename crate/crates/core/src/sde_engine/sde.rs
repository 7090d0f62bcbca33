use std::fmt;
use std::sync::Arc;

use crate::model_zoo::{ModelError, ScalarSdeSpec};
use crate::stoch_integrals::InterpretationTag;
use crate::tensor_field::{DerivativeMode, Matrix, Rank3Field, TensorFieldModel};

use super::SdeError;

/// Scratch buffers reused across steps of one path.
#[derive(Clone, Debug)]
pub struct Workspace {
    pub sigma: Matrix,
    pub grad_sigma: Rank3Field,
    pub correction: Vec<f64>,
    pub drift: Vec<f64>,
    pub noise: Vec<f64>,
    pub increment: Vec<f64>,
}

impl Workspace {
    pub fn new(dim: usize) -> Self {
        Self {
            sigma: Matrix::zeros(dim),
            grad_sigma: Rank3Field::zeros(dim),
            correction: vec![0.0; dim],
            drift: vec![0.0; dim],
            noise: vec![0.0; dim],
            increment: vec![0.0; dim],
        }
    }
}

/// Coefficients `b`, `σ` of `dX = b dt + σ dW` with the stochastic term not
/// yet assigned an interpretation.
pub trait DiffusionModel: Send + Sync {
    fn dim(&self) -> usize;

    fn label(&self) -> &str;

    fn drift_into(&self, x: &[f64], out: &mut [f64]);

    fn sigma_into(&self, x: &[f64], out: &mut Matrix) -> Result<(), SdeError>;

    /// `[∇σ:σᵀ]_i = Σ_{l,k} (∂_k σ_il) σ_kl`; `ws.sigma` may be overwritten.
    fn correction_into(
        &self,
        x: &[f64],
        mode: DerivativeMode,
        ws: &mut Workspace,
        out: &mut [f64],
    ) -> Result<(), SdeError>;

    fn check_start(&self, x0: &[f64]) -> Result<(), SdeError> {
        if x0.len() != self.dim() {
            return Err(SdeError::DimensionMismatch { expected: self.dim(), found: x0.len() });
        }
        if x0.iter().any(|v| !v.is_finite()) {
            return Err(SdeError::DomainViolation(format!("{}: non-finite initial value", self.label())));
        }
        Ok(())
    }

    /// Lower bound of the state space, if any.
    fn domain_floor(&self) -> Option<f64> {
        None
    }
}

impl DiffusionModel for TensorFieldModel {
    fn dim(&self) -> usize {
        TensorFieldModel::dim(self)
    }

    fn label(&self) -> &str {
        self.name()
    }

    fn drift_into(&self, x: &[f64], out: &mut [f64]) {
        TensorFieldModel::drift_into(self, x, out)
    }

    fn sigma_into(&self, x: &[f64], out: &mut Matrix) -> Result<(), SdeError> {
        Ok(TensorFieldModel::sigma_into(self, x, out)?)
    }

    fn correction_into(
        &self,
        x: &[f64],
        mode: DerivativeMode,
        ws: &mut Workspace,
        out: &mut [f64],
    ) -> Result<(), SdeError> {
        TensorFieldModel::sigma_into(self, x, &mut ws.sigma)?;
        self.grad_sigma_into(x, mode, &mut ws.grad_sigma)?;
        ws.grad_sigma.contract_transpose(&ws.sigma, out);
        Ok(())
    }
}

impl DiffusionModel for ScalarSdeSpec {
    fn dim(&self) -> usize {
        1
    }

    fn label(&self) -> &str {
        self.name()
    }

    fn drift_into(&self, x: &[f64], out: &mut [f64]) {
        out[0] = self.drift(x[0]);
    }

    fn sigma_into(&self, x: &[f64], out: &mut Matrix) -> Result<(), SdeError> {
        out[(0, 0)] = self.noise_amp(x[0]);
        Ok(())
    }

    fn correction_into(
        &self,
        x: &[f64],
        _: DerivativeMode,
        _: &mut Workspace,
        out: &mut [f64],
    ) -> Result<(), SdeError> {
        out[0] = self.noise_product(x[0]);
        Ok(())
    }

    fn check_start(&self, x0: &[f64]) -> Result<(), SdeError> {
        if x0.len() != 1 {
            return Err(SdeError::DimensionMismatch { expected: 1, found: x0.len() });
        }
        ScalarSdeSpec::check_start(self, x0[0]).map_err(SdeError::from)
    }

    fn domain_floor(&self) -> Option<f64> {
        ScalarSdeSpec::domain_floor(self)
    }
}

impl From<ModelError> for SdeError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::DomainViolation(m) => SdeError::DomainViolation(m),
            other => SdeError::Model(other),
        }
    }
}

/// Itô equation `dX = [b + λ(∇σ:σᵀ)] dt + σ dW` equivalent to reading the
/// model's noise at the λ-point.
#[derive(Clone)]
pub struct EffectiveItoSde {
    model: Arc<dyn DiffusionModel>,
    tag: InterpretationTag,
    mode: DerivativeMode,
}

impl fmt::Debug for EffectiveItoSde {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EffectiveItoSde")
            .field("model", &self.model.label())
            .field("tag", &self.tag)
            .field("mode", &self.mode)
            .finish()
    }
}

/// Wraps a model read under `tag` as an Itô equation.
pub fn interpretation_to_ito(model: impl DiffusionModel + 'static, tag: InterpretationTag) -> EffectiveItoSde {
    EffectiveItoSde::from_shared(Arc::new(model), tag)
}

impl EffectiveItoSde {
    pub fn from_shared(model: Arc<dyn DiffusionModel>, tag: InterpretationTag) -> Self {
        Self { model, tag, mode: DerivativeMode::Analytic }
    }

    /// Chooses how `∇σ` is obtained for the correction.
    pub fn with_mode(mut self, mode: DerivativeMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn model(&self) -> &Arc<dyn DiffusionModel> {
        &self.model
    }

    pub fn tag(&self) -> InterpretationTag {
        self.tag
    }

    pub fn mode(&self) -> DerivativeMode {
        self.mode
    }

    pub fn dim(&self) -> usize {
        self.model.dim()
    }

    /// `model@interpretation`.
    pub fn provenance(&self) -> String {
        format!("{}@{}", self.model.label(), self.tag.name())
    }

    /// `b(x) + λ(∇σ:σᵀ)(x)`; exactly `b(x)` when λ = 0.
    pub fn drift_into(&self, x: &[f64], ws: &mut Workspace, out: &mut [f64]) -> Result<(), SdeError> {
        self.model.drift_into(x, out);
        let lambda = self.tag.lambda();
        if lambda != 0.0 {
            let mut corr = std::mem::take(&mut ws.correction);
            let r = self.model.correction_into(x, self.mode, ws, &mut corr);
            for (o, c) in out.iter_mut().zip(&corr) {
                *o += lambda * c;
            }
            ws.correction = corr;
            r?;
        }
        Ok(())
    }

    pub fn sigma_into(&self, x: &[f64], out: &mut Matrix) -> Result<(), SdeError> {
        self.model.sigma_into(x, out)
    }

    pub fn drift(&self, x: &[f64]) -> Result<Vec<f64>, SdeError> {
        let mut ws = Workspace::new(self.dim());
        let mut out = vec![0.0; self.dim()];
        self.drift_into(x, &mut ws, &mut out)?;
        Ok(out)
    }

    pub fn sigma(&self, x: &[f64]) -> Result<Matrix, SdeError> {
        let mut m = Matrix::zeros(self.dim());
        self.sigma_into(x, &mut m)?;
        Ok(m)
    }

    /// The unscaled correction `∇σ:σᵀ`.
    pub fn correction(&self, x: &[f64]) -> Result<Vec<f64>, SdeError> {
        let mut ws = Workspace::new(self.dim());
        let mut out = vec![0.0; self.dim()];
        self.model.correction_into(x, self.mode, &mut ws, &mut out)?;
        Ok(out)
    }
}
