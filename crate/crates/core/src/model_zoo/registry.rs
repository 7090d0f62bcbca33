use std::collections::BTreeMap;

use super::fields::{RadialProfile, ScalarField};
use super::scalar::{
    make_het_diffusion, make_het_diffusion_noise_only, make_kinetic_energy, make_kinetic_energy_fehlberg, ScalarSdeSpec,
};
use super::scaled_bm::{exponential, linear, power_law, ScaledBmSpec};
use super::tensor::{
    coupling_field, make_negative_case, make_positive_case, make_radial_case, separable_profile, CouplingFamily,
    FamilyShape, NegativeCase, PositiveCase,
};
use super::ModelError;
use crate::tensor_field::{Matrix, SymMatrix, TensorFieldModel};

/// A parameter value as read from a declarative model description.
#[derive(Clone, Debug, PartialEq)]
pub enum ParamValue {
    Number(f64),
    Vector(Vec<f64>),
    Matrix(Vec<Vec<f64>>),
    Text(String),
}

/// Registered model name plus its parameters.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ModelSpec {
    pub name: String,
    pub params: BTreeMap<String, ParamValue>,
}

/// What a [`ModelSpec`] produces.
#[derive(Clone, Debug)]
pub enum BuiltModel {
    Tensor(TensorFieldModel),
    Scalar(ScalarSdeSpec),
    ScaledBm(ScaledBmSpec),
}

impl BuiltModel {
    pub fn into_tensor(self) -> Result<TensorFieldModel, ModelError> {
        match self {
            BuiltModel::Tensor(m) => Ok(m),
            _ => Err(ModelError::param("model", "expected a tensor-field model")),
        }
    }

    pub fn into_scalar(self) -> Result<ScalarSdeSpec, ModelError> {
        match self {
            BuiltModel::Scalar(m) => Ok(m),
            _ => Err(ModelError::param("model", "expected a scalar SDE model")),
        }
    }

    pub fn into_scaled_bm(self) -> Result<ScaledBmSpec, ModelError> {
        match self {
            BuiltModel::ScaledBm(m) => Ok(m),
            _ => Err(ModelError::param("model", "expected a scaled Brownian motion model")),
        }
    }
}

/// Names and one-line descriptions of every registered model.
pub const REGISTERED_MODELS: &[(&str, &str)] = &[
    ("constant", "constant diffusion tensor d0"),
    ("isotropic", "g(x) I with scalar field g_*"),
    ("diagonal", "diag(g1_*, ..., gd_*)"),
    ("rotated", "R diag(g1_*, ..., gd_*) R^T with constant orthogonal 'rotation'"),
    ("oriented", "f_* v v^T + g_* (I - v v^T) with unit vector v"),
    ("modulated", "g_*(x) B with constant SPD b"),
    ("radial", "h(|x|) B with radial profile h_*"),
    ("cross_coupled", "sigma = [[alpha, tau], [tau, beta]], tau from 'family'"),
    ("separable", "sigma = [[a(x1), epsilon], [epsilon, b(x2)]], a and b from 'family'"),
    ("het_diffusion", "dX = (alpha k^2/2) X^(2 alpha - 1) dt + k X^alpha dW (Ito form)"),
    ("het_diffusion_noise_only", "dX = k X^alpha dW, to be read with an interpretation"),
    ("kinetic_energy", "dQ = (k^2/2) dt + k sqrt(2Q) dW (Ito form)"),
    ("kinetic_energy_fehlberg", "dQ = (k^2/512) dt + k sqrt(2Q) dW, read with lambda = 255/512"),
    ("scaled_bm", "dX = F(t) dW with F from 'family' (power_law, linear, exponential)"),
];

struct Params<'a> {
    map: &'a BTreeMap<String, ParamValue>,
}

impl<'a> Params<'a> {
    fn number(&self, key: &str) -> Result<f64, ModelError> {
        match self.map.get(key) {
            Some(ParamValue::Number(v)) => Ok(*v),
            Some(_) => Err(ModelError::param(key, "expected a number")),
            None => Err(ModelError::MissingParam(key.into())),
        }
    }

    fn number_or(&self, key: &str, default: f64) -> Result<f64, ModelError> {
        if self.map.contains_key(key) {
            self.number(key)
        } else {
            Ok(default)
        }
    }

    fn opt_number(&self, key: &str) -> Result<Option<f64>, ModelError> {
        if self.map.contains_key(key) {
            self.number(key).map(Some)
        } else {
            Ok(None)
        }
    }

    fn vector(&self, key: &str) -> Result<Vec<f64>, ModelError> {
        match self.map.get(key) {
            Some(ParamValue::Vector(v)) => Ok(v.clone()),
            Some(ParamValue::Number(v)) => Ok(vec![*v]),
            Some(_) => Err(ModelError::param(key, "expected a vector")),
            None => Err(ModelError::MissingParam(key.into())),
        }
    }

    fn vector_or(&self, key: &str, default: Vec<f64>) -> Result<Vec<f64>, ModelError> {
        if self.map.contains_key(key) {
            self.vector(key)
        } else {
            Ok(default)
        }
    }

    fn matrix(&self, key: &str) -> Result<Matrix, ModelError> {
        match self.map.get(key) {
            Some(ParamValue::Matrix(rows)) => {
                let d = rows.len();
                if d == 0 || rows.iter().any(|r| r.len() != d) {
                    return Err(ModelError::param(key, "expected a non-empty square matrix"));
                }
                Ok(Matrix::from_rows(rows))
            }
            Some(_) => Err(ModelError::param(key, "expected a matrix")),
            None => Err(ModelError::MissingParam(key.into())),
        }
    }

    fn sym_matrix(&self, key: &str) -> Result<SymMatrix, ModelError> {
        SymMatrix::new(self.matrix(key)?).map_err(|e| ModelError::param(key, e.to_string()))
    }

    fn text(&self, key: &str) -> Result<&'a str, ModelError> {
        match self.map.get(key) {
            Some(ParamValue::Text(s)) => Ok(s.as_str()),
            Some(_) => Err(ModelError::param(key, "expected a string")),
            None => Err(ModelError::MissingParam(key.into())),
        }
    }

    fn text_or(&self, key: &str, default: &'a str) -> Result<&'a str, ModelError> {
        if self.map.contains_key(key) {
            self.text(key)
        } else {
            Ok(default)
        }
    }

    fn dim(&self) -> Result<usize, ModelError> {
        let d = self.number("dim")?;
        if !(d >= 1.0 && d.fract() == 0.0 && d <= 16.0) {
            return Err(ModelError::param("dim", format!("must be an integer in 1..=16, got {d}")));
        }
        Ok(d as usize)
    }

    /// Scalar field under `prefix`: `{prefix}family` ∈ constant | sinusoid |
    /// gaussian | front, with `offset`, `amplitude`, `wave`, `phase`,
    /// `center`, `width`, `axis`.
    fn field(&self, prefix: &str, dim: usize) -> Result<ScalarField, ModelError> {
        let key = |s: &str| format!("{prefix}{s}");
        let family = self.text_or(&key("family"), "constant")?;
        let offset = self.number(&key("offset"))?;
        match family {
            "constant" => Ok(ScalarField::constant(dim, offset)),
            "sinusoid" => {
                let wave = self.vector(&key("wave"))?;
                if wave.len() != dim {
                    return Err(ModelError::param(&key("wave"), format!("must have length {dim}")));
                }
                ScalarField::sinusoid(
                    offset,
                    self.number(&key("amplitude"))?,
                    wave,
                    self.number_or(&key("phase"), 0.0)?,
                )
            }
            "gaussian" => {
                let center = self.vector_or(&key("center"), vec![0.0; dim])?;
                if center.len() != dim {
                    return Err(ModelError::param(&key("center"), format!("must have length {dim}")));
                }
                ScalarField::gaussian(
                    offset,
                    self.number(&key("amplitude"))?,
                    center,
                    self.number_or(&key("width"), 1.0)?,
                )
            }
            "front" => {
                let axis = self.number_or(&key("axis"), 0.0)?;
                if !(axis >= 0.0 && axis.fract() == 0.0) {
                    return Err(ModelError::param(&key("axis"), "must be a non-negative integer"));
                }
                ScalarField::front(
                    dim,
                    offset,
                    self.number(&key("amplitude"))?,
                    axis as usize,
                    self.number_or(&key("center"), 0.0)?,
                    self.number_or(&key("width"), 1.0)?,
                )
            }
            other => Err(ModelError::param(&key("family"), format!("unknown field family '{other}'"))),
        }
    }

    fn profile(&self, prefix: &str) -> Result<RadialProfile, ModelError> {
        let key = |s: &str| format!("{prefix}{s}");
        let offset = self.number(&key("offset"))?;
        match self.text_or(&key("family"), "constant")? {
            "constant" => Ok(RadialProfile::constant(offset)),
            "bump" => RadialProfile::bump(offset, self.number(&key("amplitude"))?, self.number_or(&key("width"), 1.0)?),
            other => Err(ModelError::param(&key("family"), format!("unknown radial profile '{other}'"))),
        }
    }
}

fn indexed_fields(p: &Params<'_>, dim: usize) -> Result<Vec<ScalarField>, ModelError> {
    (1..=dim).map(|k| p.field(&format!("g{k}_"), dim)).collect()
}

impl ModelSpec {
    pub fn new(name: impl Into<String>) -> Self {
        Self { name: name.into(), params: BTreeMap::new() }
    }

    pub fn with(mut self, key: impl Into<String>, value: ParamValue) -> Self {
        self.params.insert(key.into(), value);
        self
    }

    pub fn with_number(self, key: impl Into<String>, v: f64) -> Self {
        self.with(key, ParamValue::Number(v))
    }

    pub fn with_text(self, key: impl Into<String>, v: impl Into<String>) -> Self {
        self.with(key, ParamValue::Text(v.into()))
    }

    pub fn with_vector(self, key: impl Into<String>, v: Vec<f64>) -> Self {
        self.with(key, ParamValue::Vector(v))
    }

    pub fn with_matrix(self, key: impl Into<String>, v: Vec<Vec<f64>>) -> Self {
        self.with(key, ParamValue::Matrix(v))
    }

    /// Constructs the model, validating every constraint of its family.
    pub fn build(&self) -> Result<BuiltModel, ModelError> {
        let p = Params { map: &self.params };
        let tensor = |m: Result<TensorFieldModel, ModelError>| m.map(BuiltModel::Tensor);
        match self.name.as_str() {
            "constant" => tensor(make_positive_case(PositiveCase::Constant { d0: p.sym_matrix("d0")? })),
            "isotropic" => {
                let d = p.dim()?;
                tensor(make_positive_case(PositiveCase::Isotropic { g: p.field("g_", d)? }))
            }
            "diagonal" => {
                let d = p.dim()?;
                tensor(make_positive_case(PositiveCase::Diagonal { g: indexed_fields(&p, d)? }))
            }
            "rotated" => {
                let r = p.matrix("rotation")?;
                let g = indexed_fields(&p, r.dim())?;
                tensor(make_positive_case(PositiveCase::Rotated { r, g }))
            }
            "oriented" => {
                let v = p.vector("v")?;
                let d = v.len();
                tensor(make_positive_case(PositiveCase::Oriented { f: p.field("f_", d)?, g: p.field("g_", d)?, v }))
            }
            "modulated" => {
                let b = p.sym_matrix("b")?;
                let g = p.field("g_", b.dim())?;
                tensor(make_positive_case(PositiveCase::Modulated { b, g }))
            }
            "radial" => tensor(make_radial_case(p.sym_matrix("b")?, p.profile("h_")?)),
            "cross_coupled" => {
                let family = CouplingFamily::parse(p.text_or("family", "periodic")?)?;
                let shape = FamilyShape {
                    wave: p.vector_or("wave", vec![1.0, 1.0])?,
                    phase: p.number_or("phase", 0.0)?,
                    center: p.vector_or("center", vec![0.0, 0.0])?,
                    width: p.number_or("width", 1.0)?,
                };
                let tau = coupling_field(family, p.number("epsilon")?, &shape)?;
                tensor(make_negative_case(NegativeCase::CrossCoupled {
                    alpha: p.number("alpha")?,
                    beta: p.number("beta")?,
                    tau,
                }))
            }
            "separable" => {
                let family = CouplingFamily::parse(p.text_or("family", "periodic")?)?;
                let a0 = p.number("a0")?;
                let b0 = p.number("b0")?;
                let (eta_a, eta_b) = (p.number("eta_a")?, p.number("eta_b")?);
                if !(eta_a.abs() < a0) {
                    return Err(ModelError::param("eta_a", format!("|η_a| = {} must be below a0 = {a0}", eta_a.abs())));
                }
                if !(eta_b.abs() < b0) {
                    return Err(ModelError::param("eta_b", format!("|η_b| = {} must be below b0 = {b0}", eta_b.abs())));
                }
                let epsilon = p.number("epsilon")?;
                let delta2 = p.opt_number("delta2")?;
                if let Some(d2) = delta2 {
                    let margin = (a0 - eta_a.abs()) * (b0 - eta_b.abs()) - epsilon * epsilon;
                    if !(margin >= d2) {
                        return Err(ModelError::param(
                            "delta2",
                            format!("(a0 − |η_a|)(b0 − |η_b|) − ε² = {margin} is below δ₂ = {d2}"),
                        ));
                    }
                }
                let a = separable_profile(
                    family,
                    a0,
                    eta_a,
                    0,
                    p.number_or("k_a", 1.0)?,
                    p.number_or("theta_a", 0.0)?,
                    p.number_or("center_a", 0.0)?,
                    p.number_or("width_a", 1.0)?,
                )?;
                let b = separable_profile(
                    family,
                    b0,
                    eta_b,
                    1,
                    p.number_or("k_b", 1.0)?,
                    p.number_or("theta_b", 0.0)?,
                    p.number_or("center_b", 0.0)?,
                    p.number_or("width_b", 1.0)?,
                )?;
                tensor(make_negative_case(NegativeCase::Separable { epsilon, a, b, delta2 }))
            }
            "het_diffusion" => make_het_diffusion(p.number("alpha")?, p.number("k")?).map(BuiltModel::Scalar),
            "het_diffusion_noise_only" => {
                make_het_diffusion_noise_only(p.number("alpha")?, p.number("k")?).map(BuiltModel::Scalar)
            }
            "kinetic_energy" => make_kinetic_energy(p.number("k")?).map(BuiltModel::Scalar),
            "kinetic_energy_fehlberg" => make_kinetic_energy_fehlberg(p.number("k")?).map(BuiltModel::Scalar),
            "scaled_bm" => {
                let (a, b) = (p.number_or("a", 0.0)?, p.number_or("b", 1.0)?);
                let spec = match p.text_or("family", "power_law")? {
                    "power_law" => power_law(p.number("hurst")?, a, b)?,
                    "linear" => linear(p.number_or("c0", 0.0)?, p.number_or("c1", 1.0)?, a, b)?,
                    "exponential" => exponential(p.number("rate")?, a, b)?,
                    other => return Err(ModelError::param("family", format!("unknown amplitude family '{other}'"))),
                };
                Ok(BuiltModel::ScaledBm(spec))
            }
            other => Err(ModelError::UnknownModel(other.into())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_registered_name_is_buildable_or_reports_missing_params() {
        for (name, _) in REGISTERED_MODELS {
            match ModelSpec::new(*name).build() {
                Ok(_) => {}
                Err(ModelError::MissingParam(_)) => {}
                Err(e) => panic!("{name}: {e}"),
            }
        }
        assert!(matches!(ModelSpec::new("nope").build(), Err(ModelError::UnknownModel(_))));
    }

    #[test]
    fn cross_coupled_from_params() {
        let m = ModelSpec::new("cross_coupled")
            .with_number("alpha", 1.0)
            .with_number("beta", 2.0)
            .with_number("epsilon", 0.5)
            .build()
            .unwrap()
            .into_tensor()
            .unwrap();
        assert_eq!(m.dim(), 2);
        let too_big = ModelSpec::new("cross_coupled")
            .with_number("alpha", 1.0)
            .with_number("beta", 2.0)
            .with_number("epsilon", 1.5)
            .build();
        assert!(matches!(too_big, Err(ModelError::ParamViolation { .. })));
    }

    #[test]
    fn separable_amplitude_conditions() {
        let base = ModelSpec::new("separable")
            .with_text("family", "gaussian")
            .with_number("a0", 1.0)
            .with_number("b0", 1.5)
            .with_number("eta_a", 0.5)
            .with_number("eta_b", -0.5)
            .with_number("epsilon", 0.3);
        assert!(base.build().is_ok());
        assert!(base.clone().with_number("eta_a", 1.2).build().is_err());
        assert!(base.clone().with_number("delta2", 0.5).build().is_err());
        assert!(base.with_number("delta2", 0.3).build().is_ok());
    }
}
