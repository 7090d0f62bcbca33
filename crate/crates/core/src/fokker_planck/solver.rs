use std::fmt;
use std::sync::Arc;

use crate::tensor_field::{divergence_d, DerivativeMode, Matrix, MatrixField, TensorFieldModel, VectorField};

use super::grid::DensityGrid;
use super::PdeError;

/// Safety factor applied to the explicit step bound.
pub const CFL_SAFETY: f64 = 0.9;
/// Largest tolerated change of total mass over one solve.
pub const MASS_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PdeVariant {
    /// `∂_t u = −∇·(bu) + ½∇·(D∇u)`
    Fick,
    /// `∂_t u = −Σ∂_i(b̃_i u) + ½ΣΣ∂_i∂_j(D_ij u)`
    ItoStandard,
}

impl PdeVariant {
    pub fn name(self) -> &'static str {
        match self {
            PdeVariant::Fick => "fick",
            PdeVariant::ItoStandard => "ito_standard",
        }
    }
}

/// Face value used for the convective flux `b u`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Convection {
    /// Upstream cell; first order, keeps the density nonnegative.
    Upwind,
    /// Mean of the two cells; second order, positivity not guaranteed.
    Centered,
}

/// Drift and diffusion tensor of a density equation in one of two forms.
#[derive(Clone)]
pub struct PdeForm {
    variant: PdeVariant,
    dim: usize,
    drift: VectorField,
    diffusion: MatrixField,
    convection: Convection,
}

impl fmt::Debug for PdeForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PdeForm")
            .field("variant", &self.variant)
            .field("dim", &self.dim)
            .field("convection", &self.convection)
            .finish()
    }
}

/// `b̃ = b + ½∇·D`.
pub fn drift_for_ito_form(model: &TensorFieldModel) -> VectorField {
    let m = model.clone();
    Arc::new(move |x: &[f64], out: &mut [f64]| {
        m.drift_into(x, out);
        let div = divergence_d(&m, x, DerivativeMode::Analytic);
        for (o, d) in out.iter_mut().zip(&div) {
            *o += 0.5 * d;
        }
    })
}

impl PdeForm {
    /// Fick form convects upwind, the standard form centred.
    pub fn new(variant: PdeVariant, dim: usize, drift: VectorField, diffusion: MatrixField) -> Self {
        let convection = match variant {
            PdeVariant::Fick => Convection::Upwind,
            PdeVariant::ItoStandard => Convection::Centered,
        };
        Self { variant, dim, drift, diffusion, convection }
    }

    pub fn with_convection(mut self, convection: Convection) -> Self {
        self.convection = convection;
        self
    }

    pub fn convection(&self) -> Convection {
        self.convection
    }

    /// Fick form with the model's own drift.
    pub fn fick(model: &TensorFieldModel) -> Self {
        Self::new(PdeVariant::Fick, model.dim(), model.drift_field(), model.diffusion_field())
    }

    /// Standard form with the drift `b + ½∇·D` that makes it equivalent to
    /// the model's Fick form.
    pub fn ito_standard(model: &TensorFieldModel) -> Self {
        Self::new(PdeVariant::ItoStandard, model.dim(), drift_for_ito_form(model), model.diffusion_field())
    }

    /// Standard form with an explicit drift.
    pub fn ito_standard_with_drift(model: &TensorFieldModel, drift: VectorField) -> Self {
        Self::new(PdeVariant::ItoStandard, model.dim(), drift, model.diffusion_field())
    }

    pub fn variant(&self) -> PdeVariant {
        self.variant
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
}

/// Face and cell coefficients of one form on one grid.
struct Stencil {
    dim: usize,
    cells: Vec<usize>,
    strides: Vec<usize>,
    dx: Vec<f64>,
    /// Per axis `a`, per cell `c`: drift component `a` on the face `c | c + e_a`.
    face_drift: Vec<Vec<f64>>,
    /// Per axis `a`, per cell, `½D_{ab}` on that face for every `b`
    /// (Fick form) or at the cell centre (standard form).
    half_d: Vec<Vec<Vec<f64>>>,
    max_norm_d: f64,
    max_drift: f64,
}

impl Stencil {
    fn build(form: &PdeForm, grid: &DensityGrid) -> Self {
        let d = grid.dim();
        let axes = grid.axes();
        let cells: Vec<usize> = axes.iter().map(|a| a.cells).collect();
        let strides = grid.strides();
        let dx: Vec<f64> = axes.iter().map(|a| a.dx()).collect();
        let n = grid.len();
        let mut face_drift = vec![vec![0.0; n]; d];
        let mut half_d = vec![vec![vec![0.0; n]; d]; d];
        let mut max_norm_d = 0.0_f64;
        let mut max_drift = 0.0_f64;
        let mut idx = vec![0usize; d];
        let mut x = vec![0.0; d];
        let mut b = vec![0.0; d];
        let mut m = Matrix::zeros(d);
        for c in 0..n {
            grid.unflatten(c, &mut idx);
            grid.center_into(c, &mut x);
            if form.variant == PdeVariant::ItoStandard {
                (form.diffusion)(&x, &mut m);
                max_norm_d = max_norm_d.max(m.sym_spectral_norm());
                for a in 0..d {
                    for bb in 0..d {
                        half_d[a][bb][c] = 0.5 * m[(a, bb)];
                    }
                }
            }
            for a in 0..d {
                if idx[a] + 1 == cells[a] {
                    continue;
                }
                let mut xf = x.clone();
                xf[a] = axes[a].face(idx[a]);
                (form.drift)(&xf, &mut b);
                face_drift[a][c] = b[a];
                max_drift = max_drift.max(b[a].abs());
                if form.variant == PdeVariant::Fick {
                    (form.diffusion)(&xf, &mut m);
                    max_norm_d = max_norm_d.max(m.sym_spectral_norm());
                    for bb in 0..d {
                        half_d[a][bb][c] = 0.5 * m[(a, bb)];
                    }
                }
            }
        }
        Self { dim: d, cells, strides, dx, face_drift, half_d, max_norm_d, max_drift }
    }

    /// `0.9·min(dx²/(2d·max‖D‖), dx/max|b|)`.
    fn step_bound(&self) -> f64 {
        let d = self.dim as f64;
        let dx_min = self.dx.iter().copied().fold(f64::INFINITY, f64::min);
        let diff = if self.max_norm_d > 0.0 { dx_min * dx_min / (2.0 * d * self.max_norm_d) } else { f64::INFINITY };
        let conv = if self.max_drift > 0.0 { dx_min / self.max_drift } else { f64::INFINITY };
        CFL_SAFETY * diff.min(conv)
    }

    /// Neighbour of `c` along `axis` by `±1`, mirrored at the boundary.
    #[inline]
    fn shift(&self, c: usize, i: usize, axis: usize, up: bool) -> usize {
        if up {
            if i + 1 < self.cells[axis] {
                c + self.strides[axis]
            } else {
                c
            }
        } else if i > 0 {
            c - self.strides[axis]
        } else {
            c
        }
    }

    /// Outward flux through the upper face of every cell along every axis.
    fn fluxes(&self, form: &PdeForm, u: &[f64], weighted: &mut [f64], flux: &mut [Vec<f64>]) {
        let variant = form.variant;
        let d = self.dim;
        let n = u.len();
        let mut idx = [0usize; 2];
        for a in 0..d {
            let dxa = self.dx[a];
            let fa = &mut flux[a];
            // ½D_ab u for the single off-diagonal direction (d ≤ 2)
            let other = (0..d).find(|&bb| bb != a);
            if let (PdeVariant::ItoStandard, Some(bb)) = (variant, other) {
                for (w, (x, y)) in weighted.iter_mut().zip(u.iter().zip(&self.half_d[a][bb])) {
                    *w = x * y;
                }
            }
            for c in 0..n {
                let mut rest = c;
                for k in (0..d).rev() {
                    idx[k] = rest % self.cells[k];
                    rest /= self.cells[k];
                }
                if idx[a] + 1 == self.cells[a] {
                    fa[c] = 0.0;
                    continue;
                }
                let up = c + self.strides[a];
                let v = self.face_drift[a][c];
                let mut f = match form.convection {
                    Convection::Upwind if v > 0.0 => v * u[c],
                    Convection::Upwind => v * u[up],
                    Convection::Centered => 0.5 * v * (u[c] + u[up]),
                };
                match variant {
                    PdeVariant::Fick => {
                        f -= self.half_d[a][a][c] * (u[up] - u[c]) / dxa;
                        if let Some(bb) = other {
                            f -= self.half_d[a][bb][c] * self.cross_gradient(u, c, up, &idx, bb);
                        }
                    }
                    PdeVariant::ItoStandard => {
                        let daa = &self.half_d[a][a];
                        f -= (daa[up] * u[up] - daa[c] * u[c]) / dxa;
                        if let Some(bb) = other {
                            f -= self.cross_gradient(weighted, c, up, &idx, bb);
                        }
                    }
                }
                fa[c] = f;
            }
        }
    }

    /// `∂_b v` on the face `c | up` from the four surrounding cells.
    #[inline]
    fn cross_gradient(&self, v: &[f64], c: usize, up: usize, idx: &[usize; 2], b: usize) -> f64 {
        let i = idx[b];
        let (cp, cm) = (self.shift(c, i, b, true), self.shift(c, i, b, false));
        let (up_p, up_m) = (self.shift(up, i, b, true), self.shift(up, i, b, false));
        (v[cp] - v[cm] + v[up_p] - v[up_m]) / (4.0 * self.dx[b])
    }
}

/// Largest explicit step accepted by [`solve_pde`] for this form and grid.
pub fn stable_step(form: &PdeForm, grid: &DensityGrid) -> Result<f64, PdeError> {
    check_dims(form, grid)?;
    Ok(Stencil::build(form, grid).step_bound())
}

fn check_dims(form: &PdeForm, grid: &DensityGrid) -> Result<(), PdeError> {
    if form.dim != grid.dim() {
        return Err(PdeError::GridMismatch);
    }
    Ok(())
}

/// Advances `u0` by `t` with forward Euler steps no longer than `dt_pde`.
/// Boundaries carry no flux.
pub fn solve_pde(form: &PdeForm, u0: &DensityGrid, t: f64, dt_pde: f64) -> Result<DensityGrid, PdeError> {
    check_dims(form, u0)?;
    let mass0 = u0.mass();
    if (mass0 - 1.0).abs() > 1e-3 {
        return Err(PdeError::UnresolvedInitial { mass: mass0 });
    }
    if !(t >= 0.0 && dt_pde > 0.0) {
        return Err(PdeError::InvalidGrid(format!("need t >= 0 and dt > 0, got t = {t}, dt = {dt_pde}")));
    }
    let stencil = Stencil::build(form, u0);
    let bound = stencil.step_bound();
    if dt_pde > bound {
        return Err(PdeError::StabilityViolation { dt: dt_pde, limit: bound });
    }
    let steps = (t / dt_pde).ceil() as usize;
    let dt = if steps == 0 { 0.0 } else { t / steps as f64 };
    let mut grid = u0.clone();
    let n = grid.len();
    let d = grid.dim();
    let mut weighted = vec![0.0; n];
    let mut flux = vec![vec![0.0; n]; d];
    let mut idx = [0usize; 2];
    for _ in 0..steps {
        stencil.fluxes(form, grid.values(), &mut weighted, &mut flux);
        let u = grid.values_mut();
        for c in 0..n {
            let mut rest = c;
            for k in (0..d).rev() {
                idx[k] = rest % stencil.cells[k];
                rest /= stencil.cells[k];
            }
            let mut div = 0.0;
            for a in 0..d {
                let out = flux[a][c];
                let inn = if idx[a] > 0 { flux[a][c - stencil.strides[a]] } else { 0.0 };
                div += (out - inn) / stencil.dx[a];
            }
            u[c] -= dt * div;
        }
    }
    grid.set_time(u0.time() + t);
    let drift = (grid.mass() - mass0).abs();
    if drift > MASS_TOL {
        return Err(PdeError::MassLoss { drift });
    }
    Ok(grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fokker_planck::{l1_distance, GridAxis};
    use crate::model_zoo::{
        coupling_field, make_negative_case, make_positive_case, CouplingFamily, FamilyShape, NegativeCase,
        PositiveCase, ScalarField,
    };
    use crate::tensor_field::SymMatrix;

    fn axes(d: usize, n: usize) -> Vec<GridAxis> {
        vec![GridAxis::symmetric(5.0, n).unwrap(); d]
    }

    fn solve_auto(form: &PdeForm, u0: &DensityGrid, t: f64) -> DensityGrid {
        let dt = stable_step(form, u0).unwrap();
        solve_pde(form, u0, t, dt).unwrap()
    }

    #[test]
    fn heat_kernel() {
        // D = 2I: variance grows by 2t per axis
        let m = make_positive_case(PositiveCase::Constant { d0: SymMatrix::from_diag(&[2.0, 2.0]) }).unwrap();
        let (s, t) = (0.5, 0.25);
        let u0 = DensityGrid::gaussian(axes(2, 100), &[0.0, 0.0], s).unwrap();
        let u = solve_auto(&PdeForm::fick(&m), &u0, t);
        let exact = DensityGrid::gaussian(axes(2, 100), &[0.0, 0.0], (s * s + 2.0 * t).sqrt()).unwrap();
        let err = l1_distance(&u, &exact).unwrap();
        assert!(err < 1e-3, "{err}");
        assert!((u.mass() - 1.0).abs() < 1e-8);
        assert!(u.min_value() >= -1e-12);
    }

    #[test]
    fn constant_tensor_forms_coincide() {
        let d0 = SymMatrix::new(Matrix::from_rows(&[[1.0, 0.3], [0.3, 0.8]])).unwrap();
        let m = make_positive_case(PositiveCase::Constant { d0 }).unwrap().with_drift(|x, o| {
            o[0] = -x[0];
            o[1] = 0.5 - x[1];
        });
        let u0 = DensityGrid::gaussian(axes(2, 60), &[0.2, -0.1], 0.5).unwrap();
        let fick = PdeForm::fick(&m);
        let dt = stable_step(&fick, &u0).unwrap();
        let a = solve_pde(&fick, &u0, 0.1, dt).unwrap();
        let b = solve_pde(&PdeForm::ito_standard(&m).with_convection(Convection::Upwind), &u0, 0.1, dt).unwrap();
        let gap = l1_distance(&a, &b).unwrap();
        assert!(gap < 1e-12, "{gap}");
    }

    #[test]
    fn isotropic_forms_agree() {
        let g = ScalarField::sinusoid(1.0, 0.5, vec![1.0, 0.7], 0.0).unwrap();
        let m = make_positive_case(PositiveCase::Isotropic { g }).unwrap();
        let u0 = DensityGrid::gaussian(axes(2, 120), &[0.0, 0.0], 0.5).unwrap();
        let a = solve_auto(&PdeForm::fick(&m), &u0, 0.25);
        let b = solve_auto(&PdeForm::ito_standard(&m), &u0, 0.25);
        let gap = l1_distance(&a, &b).unwrap();
        assert!(gap < 2e-3, "{gap}");
    }

    #[test]
    fn mass_is_conserved_with_cross_terms() {
        let tau = coupling_field(CouplingFamily::Periodic, 0.5, &FamilyShape::default()).unwrap();
        let m = make_negative_case(NegativeCase::CrossCoupled { alpha: 1.0, beta: 2.0, tau }).unwrap();
        let u0 = DensityGrid::gaussian(axes(2, 64), &[0.0, 0.0], 0.5).unwrap();
        for form in [PdeForm::fick(&m), PdeForm::ito_standard(&m)] {
            let u = solve_auto(&form, &u0, 0.25);
            assert!((u.mass() - u0.mass()).abs() < 1e-8, "{:?}", form.variant());
        }
    }

    #[test]
    fn ito_drift_reference_value() {
        // α = 1, β = 2, τ = 0.5 sin(x₁ + x₂) at the origin: b̃ − b = ½(1.5, 1.5)
        let tau = coupling_field(CouplingFamily::Periodic, 0.5, &FamilyShape::default()).unwrap();
        let m = make_negative_case(NegativeCase::CrossCoupled { alpha: 1.0, beta: 2.0, tau }).unwrap();
        let drift = drift_for_ito_form(&m);
        let mut out = [0.0; 2];
        drift(&[0.0, 0.0], &mut out);
        assert!((out[0] - 0.75).abs() < 1e-14 && (out[1] - 0.75).abs() < 1e-14, "{out:?}");
    }

    #[test]
    fn step_and_mass_guards() {
        let m = make_positive_case(PositiveCase::Constant { d0: SymMatrix::identity(1) }).unwrap();
        let u0 = DensityGrid::gaussian(axes(1, 100), &[0.0], 0.5).unwrap();
        let form = PdeForm::fick(&m);
        let bound = stable_step(&form, &u0).unwrap();
        assert!(matches!(solve_pde(&form, &u0, 0.1, 1.5 * bound), Err(PdeError::StabilityViolation { .. })));
        let half = DensityGrid::with_values(u0.axes().to_vec(), u0.values().iter().map(|v| 0.5 * v).collect()).unwrap();
        assert!(matches!(solve_pde(&form, &half, 0.1, bound), Err(PdeError::UnresolvedInitial { .. })));
    }
}
