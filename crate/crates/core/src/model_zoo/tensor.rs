use std::sync::Arc;

use super::fields::{RadialProfile, ScalarField};
use super::ModelError;
use crate::tensor_field::{
    box_grid, ellipticity_check, principal_sqrt, sym_eigen, Matrix, Rank3Field, SymMatrix, TensorFieldModel,
};

/// Default half-width of the box on which models are validated.
pub const DEFAULT_HALF_WIDTH: f64 = 5.0;

/// Parameters of the six families for which `∇·D = 2σ∇·σᵀ` holds.
#[derive(Clone, Debug)]
pub enum PositiveCase {
    /// Constant `D₀`.
    Constant { d0: SymMatrix },
    /// `g(x) I`.
    Isotropic { g: ScalarField },
    /// `diag(g_1, …, g_d)`.
    Diagonal { g: Vec<ScalarField> },
    /// `R diag(g_k) Rᵀ` with constant orthogonal `R`.
    Rotated { r: Matrix, g: Vec<ScalarField> },
    /// `f vvᵀ + g (I − vvᵀ)` with a unit vector `v`.
    Oriented { v: Vec<f64>, f: ScalarField, g: ScalarField },
    /// `g(x) B` with constant SPD `B`.
    Modulated { b: SymMatrix, g: ScalarField },
}

impl PositiveCase {
    pub fn name(&self) -> &'static str {
        match self {
            PositiveCase::Constant { .. } => "constant",
            PositiveCase::Isotropic { .. } => "isotropic",
            PositiveCase::Diagonal { .. } => "diagonal",
            PositiveCase::Rotated { .. } => "rotated",
            PositiveCase::Oriented { .. } => "oriented",
            PositiveCase::Modulated { .. } => "modulated",
        }
    }
}

/// Parameters of the two families for which the structural condition fails.
#[derive(Clone, Debug)]
pub enum NegativeCase {
    /// `σ = [[α, τ], [τ, β]]`.
    CrossCoupled { alpha: f64, beta: f64, tau: ScalarField },
    /// `σ = [[a(x₁), ε], [ε, b(x₂)]]`; `a`, `b` are one-dimensional fields.
    Separable { epsilon: f64, a: ScalarField, b: ScalarField, delta2: Option<f64> },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CouplingFamily {
    Periodic,
    Gaussian,
    Front,
}

impl CouplingFamily {
    pub fn parse(s: &str) -> Result<Self, ModelError> {
        match s {
            "periodic" => Ok(Self::Periodic),
            "gaussian" => Ok(Self::Gaussian),
            "front" => Ok(Self::Front),
            other => Err(ModelError::param("family", format!("unknown coupling family '{other}'"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Periodic => "periodic",
            Self::Gaussian => "gaussian",
            Self::Front => "front",
        }
    }
}

/// Shape parameters of a coupling family; unused entries are ignored.
#[derive(Clone, Debug, PartialEq)]
pub struct FamilyShape {
    pub wave: Vec<f64>,
    pub phase: f64,
    pub center: Vec<f64>,
    pub width: f64,
}

impl Default for FamilyShape {
    fn default() -> Self {
        Self { wave: vec![1.0, 1.0], phase: 0.0, center: vec![0.0, 0.0], width: 1.0 }
    }
}

/// `τ` for the cross-coupled case: `ε sin(kᵀx + φ)`, `ε exp(−|x − x₀|²/ℓ²)`
/// or `ε tanh((x₁ − c)/ℓ)`.
pub fn coupling_field(family: CouplingFamily, epsilon: f64, shape: &FamilyShape) -> Result<ScalarField, ModelError> {
    match family {
        CouplingFamily::Periodic => {
            if shape.wave.len() != 2 || shape.wave.iter().all(|k| *k == 0.0) {
                return Err(ModelError::param("wave", "must be a non-zero vector of length 2"));
            }
            ScalarField::sinusoid(0.0, epsilon, shape.wave.clone(), shape.phase)
        }
        CouplingFamily::Gaussian => {
            if shape.center.len() != 2 {
                return Err(ModelError::param("center", "must have length 2"));
            }
            ScalarField::gaussian(0.0, epsilon, shape.center.clone(), shape.width)
        }
        CouplingFamily::Front => {
            let c = shape.center.first().copied().unwrap_or(0.0);
            ScalarField::front(2, 0.0, epsilon, 0, c, shape.width)
        }
    }
}

/// One-dimensional coefficient `c₀ + η·φ(k x + θ)` for the separable case;
/// the periodic family uses `sin` for the first axis and `cos` for the second.
pub fn separable_profile(
    family: CouplingFamily,
    offset: f64,
    amplitude: f64,
    axis: usize,
    wave: f64,
    phase: f64,
    center: f64,
    width: f64,
) -> Result<ScalarField, ModelError> {
    match family {
        CouplingFamily::Periodic => {
            if !(wave > 0.0) {
                return Err(ModelError::param("wave", format!("must be positive, got {wave}")));
            }
            let shift = if axis == 0 { 0.0 } else { std::f64::consts::FRAC_PI_2 };
            ScalarField::sinusoid(offset, amplitude, vec![wave], phase + shift)
        }
        CouplingFamily::Gaussian => ScalarField::gaussian(offset, amplitude, vec![center], width),
        CouplingFamily::Front => ScalarField::front(1, offset, amplitude, 0, center, width),
    }
}

fn check_field_dims(fields: &[&ScalarField], dim: usize) -> Result<(), ModelError> {
    for f in fields {
        if f.dim() != dim {
            return Err(ModelError::param("field", format!("{} has dimension {}, expected {dim}", f.label(), f.dim())));
        }
    }
    Ok(())
}

fn check_lower(name: &str, f: &ScalarField) -> Result<f64, ModelError> {
    let lb = f.lower_bound();
    if !(lb > 0.0) {
        return Err(ModelError::param(name, format!("infimum {lb} of {} must be positive", f.label())));
    }
    Ok(lb)
}

/// Per-axis sample count of the constraint validation grid.
fn validation_per_axis(dim: usize) -> usize {
    match dim {
        1 | 2 => 200,
        3 => 24,
        _ => 8,
    }
}

/// Checks declared lower bounds of the fields and the model's ellipticity
/// constant on a tensor grid over the default box.
fn validate_on_grid(model: &TensorFieldModel, fields: &[(&str, &ScalarField)]) -> Result<(), ModelError> {
    let grid = box_grid(model.dim(), model.domain_half_width(), validation_per_axis(model.dim()));
    for (name, f) in fields {
        let lb = f.lower_bound();
        let ub = f.upper_bound();
        if let Some(x) = grid.iter().find(|x| {
            let v = f.value(x);
            !(v >= lb - 1e-12 * (1.0 + lb.abs()) && v <= ub + 1e-12 * (1.0 + ub.abs()))
        }) {
            return Err(ModelError::param(
                name,
                format!("value {} at {x:?} outside declared range [{lb}, {ub}]", f.value(x)),
            ));
        }
    }
    let report = ellipticity_check(model, &grid)?;
    if !report.holds {
        return Err(ModelError::param(
            "ellipticity",
            format!(
                "smallest eigenvalue {} at {:?} below declared constant {:?}",
                report.min_eigenvalue, report.argmin, report.declared
            ),
        ));
    }
    Ok(())
}

/// Builds `D = R diag(g) Rᵀ`, `σ = R diag(√g) Rᵀ` and both gradients for a
/// constant orthogonal `R` (the identity gives the diagonal case).
fn spectral_model(name: String, r: Matrix, g: Vec<ScalarField>) -> TensorFieldModel {
    let d = r.dim();
    let g = Arc::new(g);
    let r = Arc::new(r);
    // D_ij = Σ_l R_il R_jl w_l
    fn conj(r: &Matrix, w: &[f64], out: &mut Matrix) {
        let d = r.dim();
        for i in 0..d {
            for j in i..d {
                let s: f64 = (0..d).map(|l| r[(i, l)] * r[(j, l)] * w[l]).sum();
                out.as_mut_slice()[i * d + j] = s;
                out.as_mut_slice()[j * d + i] = s;
            }
        }
    }
    let (gd, rd) = (g.clone(), r.clone());
    let (gs, rs) = (g.clone(), r.clone());
    let (ggd, rgd) = (g.clone(), r.clone());
    let (ggs, rgs) = (g.clone(), r.clone());
    TensorFieldModel::new(name, d, move |x, out| {
        let w: Vec<f64> = gd.iter().map(|f| f.value(x)).collect();
        conj(&rd, &w, out);
    })
    .with_sigma(move |x, out| {
        let w: Vec<f64> = gs.iter().map(|f| f.value(x).sqrt()).collect();
        conj(&rs, &w, out);
    })
    .with_grad_diffusion(move |x, out| {
        let grads: Vec<Vec<f64>> = ggd.iter().map(|f| f.grad(x)).collect();
        let mut m = Matrix::zeros(d);
        for k in 0..d {
            let w: Vec<f64> = grads.iter().map(|gr| gr[k]).collect();
            conj(&rgd, &w, &mut m);
            out.set_slice(k, &m);
        }
    })
    .with_grad_sigma(move |x, out| {
        let vals: Vec<f64> = ggs.iter().map(|f| f.value(x)).collect();
        let grads: Vec<Vec<f64>> = ggs.iter().map(|f| f.grad(x)).collect();
        let mut m = Matrix::zeros(d);
        for k in 0..d {
            let w: Vec<f64> = grads.iter().zip(&vals).map(|(gr, v)| gr[k] / (2.0 * v.sqrt())).collect();
            conj(&rgs, &w, &mut m);
            out.set_slice(k, &m);
        }
    })
}

/// `M_k` for `R diag(g) Rᵀ`: `max_ij Σ_l |R_il R_jl| sup|∂_k g_l|`.
fn spectral_bounds(r: &Matrix, g: &[ScalarField]) -> Vec<f64> {
    let d = r.dim();
    (0..d)
        .map(|k| {
            let mut m = 0.0_f64;
            for i in 0..d {
                for j in 0..d {
                    let s: f64 = (0..d).map(|l| (r[(i, l)] * r[(j, l)]).abs() * g[l].grad_bounds()[k]).sum();
                    m = m.max(s);
                }
            }
            m
        })
        .collect()
}

pub fn make_positive_case(case: PositiveCase) -> Result<TensorFieldModel, ModelError> {
    let name = case.name().to_string();
    let (model, fields): CheckedModel = match case {
        PositiveCase::Constant { d0 } => {
            let d = d0.dim();
            let eig = sym_eigen(&d0);
            let alpha = eig.min_value();
            if !(alpha > 0.0) {
                return Err(ModelError::param("d0", format!("must be positive definite, smallest eigenvalue {alpha}")));
            }
            let root = principal_sqrt(&d0)?.into_matrix();
            let dm = d0.into_matrix();
            let model = TensorFieldModel::new(name, d, move |_, out| out.clone_from(&dm))
                .with_sigma(move |_, out| out.clone_from(&root))
                .with_grad_diffusion(|_, out| out.fill(0.0))
                .with_grad_sigma(|_, out| out.fill(0.0))
                .with_ellipticity(alpha)
                .with_derivative_bounds(vec![0.0; d]);
            (model, vec![])
        }
        PositiveCase::Isotropic { g } => {
            let d = g.dim();
            let alpha = check_lower("g", &g)?;
            let bounds = g.grad_bounds().to_vec();
            let (gd, gs, ggd, ggs) = (g.clone(), g.clone(), g.clone(), g.clone());
            let model = TensorFieldModel::new(name, d, move |x, out| {
                let v = gd.value(x);
                out.fill(0.0);
                (0..d).for_each(|i| out.as_mut_slice()[i * d + i] = v);
            })
            .with_sigma(move |x, out| {
                let v = gs.value(x).sqrt();
                out.fill(0.0);
                (0..d).for_each(|i| out.as_mut_slice()[i * d + i] = v);
            })
            .with_grad_diffusion(move |x, out| {
                let gr = ggd.grad(x);
                out.fill(0.0);
                for k in 0..d {
                    (0..d).for_each(|i| out.set(i, i, k, gr[k]));
                }
            })
            .with_grad_sigma(move |x, out| {
                let s = 2.0 * ggs.value(x).sqrt();
                let gr = ggs.grad(x);
                out.fill(0.0);
                for k in 0..d {
                    (0..d).for_each(|i| out.set(i, i, k, gr[k] / s));
                }
            })
            .with_ellipticity(alpha)
            .with_derivative_bounds(bounds);
            (model, vec![("g", g)])
        }
        PositiveCase::Diagonal { g } => {
            let d = g.len();
            if d == 0 {
                return Err(ModelError::param("g", "needs at least one diagonal coefficient"));
            }
            check_field_dims(&g.iter().collect::<Vec<_>>(), d)?;
            let mut alpha = f64::INFINITY;
            for f in &g {
                alpha = alpha.min(check_lower("g_k", f)?);
            }
            let r = Matrix::identity(d);
            let bounds = spectral_bounds(&r, &g);
            let model = spectral_model(name, r, g.clone()).with_ellipticity(alpha).with_derivative_bounds(bounds);
            (model, g.into_iter().map(|f| ("g_k", f)).collect())
        }
        PositiveCase::Rotated { r, g } => {
            let d = r.dim();
            if g.len() != d {
                return Err(ModelError::param("g", format!("expected {d} coefficients, got {}", g.len())));
            }
            check_field_dims(&g.iter().collect::<Vec<_>>(), d)?;
            let defect = r.transpose().matmul(&r).sub(&Matrix::identity(d)).frobenius_norm();
            if !(defect <= 1e-12) {
                return Err(ModelError::param("rotation", format!("‖RᵀR − I‖_F = {defect:e} exceeds 1e-12")));
            }
            let mut alpha = f64::INFINITY;
            for f in &g {
                alpha = alpha.min(check_lower("g_k", f)?);
            }
            let bounds = spectral_bounds(&r, &g);
            let model = spectral_model(name, r, g.clone()).with_ellipticity(alpha).with_derivative_bounds(bounds);
            (model, g.into_iter().map(|f| ("g_k", f)).collect())
        }
        PositiveCase::Oriented { v, f, g } => {
            let d = v.len();
            check_field_dims(&[&f, &g], d)?;
            let norm = v.iter().map(|c| c * c).sum::<f64>().sqrt();
            if !((norm - 1.0).abs() <= 1e-12) {
                return Err(ModelError::param("v", format!("must have unit norm, got {norm}")));
            }
            let a1 = check_lower("f", &f)?;
            let a2 = check_lower("g", &g)?;
            let p = Matrix::from_fn(d, |i, j| v[i] * v[j]);
            let bounds: Vec<f64> = (0..d)
                .map(|k| {
                    let mut m = 0.0_f64;
                    for i in 0..d {
                        for j in 0..d {
                            let q = if i == j { 1.0 } else { 0.0 } - p[(i, j)];
                            m = m.max(p[(i, j)].abs() * f.grad_bounds()[k] + q.abs() * g.grad_bounds()[k]);
                        }
                    }
                    m
                })
                .collect();
            let p = Arc::new(p);
            // a·vvᵀ + c·(I − vvᵀ)
            fn blend(p: &Matrix, a: f64, c: f64, out: &mut Matrix) {
                let d = p.dim();
                *out = Matrix::from_fn(d, |i, j| a * p[(i, j)] + c * (if i == j { 1.0 } else { 0.0 } - p[(i, j)]));
            }
            let (pd, fd, gd) = (p.clone(), f.clone(), g.clone());
            let (ps, fs, gs) = (p.clone(), f.clone(), g.clone());
            let (pgd, fgd, ggd) = (p.clone(), f.clone(), g.clone());
            let (pgs, fgs, ggs) = (p, f.clone(), g.clone());
            let model = TensorFieldModel::new(name, d, move |x, out| blend(&pd, fd.value(x), gd.value(x), out))
                .with_sigma(move |x, out| blend(&ps, fs.value(x).sqrt(), gs.value(x).sqrt(), out))
                .with_grad_diffusion(move |x, out| {
                    let (df, dg) = (fgd.grad(x), ggd.grad(x));
                    let mut m = Matrix::zeros(d);
                    for k in 0..d {
                        blend(&pgd, df[k], dg[k], &mut m);
                        out.set_slice(k, &m);
                    }
                })
                .with_grad_sigma(move |x, out| {
                    let (sf, sg) = (2.0 * fgs.value(x).sqrt(), 2.0 * ggs.value(x).sqrt());
                    let (df, dg) = (fgs.grad(x), ggs.grad(x));
                    let mut m = Matrix::zeros(d);
                    for k in 0..d {
                        blend(&pgs, df[k] / sf, dg[k] / sg, &mut m);
                        out.set_slice(k, &m);
                    }
                })
                .with_ellipticity(a1.min(a2))
                .with_derivative_bounds(bounds);
            (model, vec![("f", f), ("g", g)])
        }
        PositiveCase::Modulated { b, g } => modulated(name, b, g)?,
    };
    let refs: Vec<(&str, &ScalarField)> = fields.iter().map(|(n, f)| (*n, f)).collect();
    validate_on_grid(&model, &refs)?;
    Ok(model)
}

/// A model with the named scalar fields whose ranges are validated.
type CheckedModel = (TensorFieldModel, Vec<(&'static str, ScalarField)>);

fn modulated(name: String, b: SymMatrix, g: ScalarField) -> Result<CheckedModel, ModelError> {
    let d = b.dim();
    check_field_dims(&[&g], d)?;
    let alpha = check_lower("g", &g)?;
    let c_b = sym_eigen(&b).min_value();
    if !(c_b > 0.0) {
        return Err(ModelError::param("b", format!("must be positive definite, smallest eigenvalue {c_b}")));
    }
    let root = Arc::new(principal_sqrt(&b)?.into_matrix());
    let bm = Arc::new(b.into_matrix());
    let max_b = bm.max_abs();
    let bounds: Vec<f64> = g.grad_bounds().iter().map(|m| m * max_b).collect();
    let (gd, bd) = (g.clone(), bm.clone());
    let (gs, rs) = (g.clone(), root.clone());
    let (ggd, bgd) = (g.clone(), bm);
    let (ggs, rgs) = (g.clone(), root);
    let model = TensorFieldModel::new(name, d, move |x, out| *out = bd.scale(gd.value(x)))
        .with_sigma(move |x, out| *out = rs.scale(gs.value(x).sqrt()))
        .with_grad_diffusion(move |x, out| {
            let gr = ggd.grad(x);
            for k in 0..d {
                out.set_slice(k, &bgd.scale(gr[k]));
            }
        })
        .with_grad_sigma(move |x, out| {
            let s = 2.0 * ggs.value(x).sqrt();
            let gr = ggs.grad(x);
            for k in 0..d {
                out.set_slice(k, &rgs.scale(gr[k] / s));
            }
        })
        .with_ellipticity(alpha * c_b)
        .with_derivative_bounds(bounds);
    Ok((model, vec![("g", g)]))
}

/// Radially modulated anisotropic tensor `D = h(|x|) B`.
pub fn make_radial_case(b: SymMatrix, h: RadialProfile) -> Result<TensorFieldModel, ModelError> {
    let slope = h.derivative(0.0);
    if !(slope.abs() <= 1e-10) {
        return Err(ModelError::param("h", format!("h'(0) = {slope:e} must vanish")));
    }
    let g = ScalarField::radial(b.dim(), h);
    let (model, fields) = modulated("radial_case".into(), b, g)?;
    let refs: Vec<(&str, &ScalarField)> = fields.iter().map(|(n, f)| (*n, f)).collect();
    validate_on_grid(&model, &refs)?;
    Ok(model)
}

/// Writes the symmetric 2×2 matrix `[[p, q], [q, r]]`.
#[inline]
fn set2(out: &mut Matrix, p: f64, q: f64, r: f64) {
    out.as_mut_slice().copy_from_slice(&[p, q, q, r]);
}

/// Closed-form `Λ` of a negative case, the reference for audits.
pub fn negative_case_lambda(case: &NegativeCase, x: &[f64]) -> [f64; 2] {
    match case {
        NegativeCase::CrossCoupled { alpha, beta, tau } => {
            let g = tau.grad(x);
            [(beta - alpha) * g[1], (alpha - beta) * g[0]]
        }
        NegativeCase::Separable { epsilon, a, b, .. } => {
            let da = a.grad(&x[0..1])[0];
            let db = b.grad(&x[1..2])[0];
            [-epsilon * db, -epsilon * da]
        }
    }
}

pub fn make_negative_case(case: NegativeCase) -> Result<TensorFieldModel, ModelError> {
    let (model, fields) = match case {
        NegativeCase::CrossCoupled { alpha, beta, tau } => {
            if !(alpha > 0.0 && beta > 0.0) {
                return Err(ModelError::param("alpha/beta", format!("must be positive, got {alpha}, {beta}")));
            }
            check_field_dims(&[&tau], 2)?;
            let tau_max = tau.lower_bound().abs().max(tau.upper_bound().abs());
            let root = (alpha * beta).sqrt();
            if !(tau_max < root) {
                return Err(ModelError::param("tau", format!("sup|τ| = {tau_max} must stay below √(αβ) = {root}")));
            }
            let delta1 = alpha * beta - tau_max * tau_max;
            let ell = (delta1 / (alpha + beta)).powi(2);
            let s = alpha + beta;
            let bounds: Vec<f64> = tau.grad_bounds().iter().map(|t| (2.0 * tau_max).max(s) * t).collect();
            let (td, ts, tgd, tgs) = (tau.clone(), tau.clone(), tau.clone(), tau.clone());
            let model = TensorFieldModel::new("cross_coupled", 2, move |x, out| {
                let t = td.value(x);
                set2(out, alpha * alpha + t * t, s * t, beta * beta + t * t);
            })
            .with_sigma(move |x, out| {
                let t = ts.value(x);
                set2(out, alpha, t, beta);
            })
            .with_grad_diffusion(move |x, out| {
                let t = tgd.value(x);
                let g = tgd.grad(x);
                for k in 0..2 {
                    out.set_slice(k, &Matrix::from_rows(&[[2.0 * t * g[k], s * g[k]], [s * g[k], 2.0 * t * g[k]]]));
                }
            })
            .with_grad_sigma(move |x, out: &mut Rank3Field| {
                let g = tgs.grad(x);
                for k in 0..2 {
                    out.set_slice(k, &Matrix::from_rows(&[[0.0, g[k]], [g[k], 0.0]]));
                }
            })
            .with_ellipticity(ell)
            .with_derivative_bounds(bounds);
            (model, vec![])
        }
        NegativeCase::Separable { epsilon, a, b, delta2 } => {
            check_field_dims(&[&a, &b], 1)?;
            let (a0, b0) = (check_lower("a", &a)?, check_lower("b", &b)?);
            let margin = a0 * b0 - epsilon * epsilon;
            let delta2 = delta2.unwrap_or(margin);
            if !(delta2 > 0.0) {
                return Err(ModelError::param("delta2", format!("must be positive, got {delta2}")));
            }
            if !(margin >= delta2) {
                return Err(ModelError::param("epsilon", format!("inf(ab) − ε² = {margin} is below δ₂ = {delta2}")));
            }
            let (a_sup, b_sup) = (a.upper_bound(), b.upper_bound());
            let ell = (delta2 / (a_sup + b_sup)).powi(2);
            let bounds = vec![
                (2.0 * a_sup).max(epsilon.abs()) * a.grad_bounds()[0],
                (2.0 * b_sup).max(epsilon.abs()) * b.grad_bounds()[0],
            ];
            let e = epsilon;
            let ab = |a: &ScalarField, b: &ScalarField, x: &[f64]| (a.value(&x[0..1]), b.value(&x[1..2]));
            let dab = |a: &ScalarField, b: &ScalarField, x: &[f64]| (a.grad(&x[0..1])[0], b.grad(&x[1..2])[0]);
            let (ad, bd, as_, bs, agd, bgd, ags, bgs) =
                (a.clone(), b.clone(), a.clone(), b.clone(), a.clone(), b.clone(), a.clone(), b.clone());
            let model = TensorFieldModel::new("separable", 2, move |x, out| {
                let (av, bv) = ab(&ad, &bd, x);
                set2(out, av * av + e * e, e * (av + bv), bv * bv + e * e);
            })
            .with_sigma(move |x, out| {
                let (av, bv) = ab(&as_, &bs, x);
                set2(out, av, e, bv);
            })
            .with_grad_diffusion(move |x, out| {
                let (av, bv) = ab(&agd, &bgd, x);
                let (da, db) = dab(&agd, &bgd, x);
                out.set_slice(0, &Matrix::from_rows(&[[2.0 * av * da, e * da], [e * da, 0.0]]));
                out.set_slice(1, &Matrix::from_rows(&[[0.0, e * db], [e * db, 2.0 * bv * db]]));
            })
            .with_grad_sigma(move |x, out| {
                let (da, db) = dab(&ags, &bgs, x);
                out.set_slice(0, &Matrix::from_rows(&[[da, 0.0], [0.0, 0.0]]));
                out.set_slice(1, &Matrix::from_rows(&[[0.0, 0.0], [0.0, db]]));
            })
            .with_ellipticity(ell)
            .with_derivative_bounds(bounds);
            (model, vec![("a", a.embed(2, 0)), ("b", b.embed(2, 1))])
        }
    };
    let refs: Vec<(&str, &ScalarField)> = fields.iter().map(|(n, f)| (*n, f)).collect();
    validate_on_grid(&model, &refs)?;
    Ok(model)
}
