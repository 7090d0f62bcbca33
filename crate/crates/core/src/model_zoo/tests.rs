use super::*;
use crate::tensor_field::{
    box_grid, derivative_bound_check, divergence_d, ellipticity_check, ito_correction_h, structural_residual,
    sym_eigen, DerivativeMode, Matrix, SymMatrix, TensorFieldModel,
};

fn sin_field(d: usize, offset: f64, amp: f64, seed: usize) -> ScalarField {
    let wave: Vec<f64> = (0..d).map(|k| 0.3 + 0.2 * ((k + seed) % 3) as f64).collect();
    ScalarField::sinusoid(offset, amp, wave, 0.1 * seed as f64).unwrap()
}

fn rotation(theta: f64) -> Matrix {
    let (s, c) = theta.sin_cos();
    Matrix::from_rows(&[[c, -s], [s, c]])
}

fn positive_models() -> Vec<TensorFieldModel> {
    let b = SymMatrix::new(Matrix::from_rows(&[[2.0, 0.5], [0.5, 1.0]])).unwrap();
    vec![
        make_positive_case(PositiveCase::Constant { d0: SymMatrix::from_diag(&[1.0, 2.0]) }).unwrap(),
        make_positive_case(PositiveCase::Isotropic { g: sin_field(2, 2.0, 0.8, 0) }).unwrap(),
        make_positive_case(PositiveCase::Diagonal { g: vec![sin_field(2, 2.0, 0.8, 1), sin_field(2, 1.5, 0.4, 2)] })
            .unwrap(),
        make_positive_case(PositiveCase::Rotated {
            r: rotation(0.7),
            g: vec![sin_field(2, 2.0, 0.8, 1), ScalarField::gaussian(1.0, 0.6, vec![0.5, -0.5], 1.2).unwrap()],
        })
        .unwrap(),
        make_positive_case(PositiveCase::Oriented {
            v: vec![0.6, 0.8],
            f: sin_field(2, 2.0, 0.9, 3),
            g: ScalarField::front(2, 1.0, 0.5, 1, 0.3, 0.7).unwrap(),
        })
        .unwrap(),
        make_positive_case(PositiveCase::Modulated { b: b.clone(), g: sin_field(2, 1.5, 0.5, 4) }).unwrap(),
        make_radial_case(b, RadialProfile::bump(2.0, 1.0, 1.0).unwrap()).unwrap(),
    ]
}

fn max_norm(v: &[f64]) -> f64 {
    v.iter().map(|c| c * c).sum::<f64>().sqrt()
}

#[test]
fn positive_cases_satisfy_structural_condition_on_grid() {
    for m in positive_models() {
        let mut grid = box_grid(2, m.domain_half_width(), 50);
        grid.push(vec![0.0, 0.0]);
        let mut worst_analytic = 0.0_f64;
        let mut worst_fd = 0.0_f64;
        for x in &grid {
            worst_analytic =
                worst_analytic.max(max_norm(&structural_residual(&m, x, DerivativeMode::Analytic).unwrap()));
            worst_fd = worst_fd.max(max_norm(&structural_residual(&m, x, DerivativeMode::FiniteDifference).unwrap()));
            ito_correction_h(&m, x, DerivativeMode::Analytic).unwrap();
        }
        assert!(worst_analytic <= 1e-10, "{}: {worst_analytic:e}", m.name());
        assert!(worst_fd <= 1e-6, "{}: {worst_fd:e}", m.name());
    }
}

#[test]
fn constructed_models_pass_ellipticity_and_derivative_bounds() {
    for m in positive_models().into_iter().chain(negative_models()) {
        let grid = box_grid(m.dim(), m.domain_half_width(), 50);
        let e = ellipticity_check(&m, &grid).unwrap();
        assert!(e.holds, "{}: {e:?}", m.name());
        let b = derivative_bound_check(&m, &grid, DerivativeMode::Analytic).unwrap();
        assert!(b.holds, "{}: worst ratio {}", m.name(), b.worst_ratio);
    }
}

#[test]
fn analytic_sigma_squares_to_diffusion() {
    for m in positive_models().into_iter().chain(negative_models()) {
        for x in box_grid(2, 4.0, 7) {
            let s = m.sigma(&x).unwrap();
            let d = m.diffusion(&x).unwrap();
            let err = s.matmul(&s.transpose()).sub(d.as_matrix()).frobenius_norm();
            assert!(err <= 1e-10 * d.as_matrix().frobenius_norm(), "{}", m.name());
        }
    }
}

#[test]
fn oriented_case_spectrum() {
    // d = 3, v = e₁, f = 2 + cos(x₂), g ≡ 1 → spectrum {f, 1, 1}
    let f = ScalarField::sinusoid(2.0, 1.0, vec![0.0, 1.0, 0.0], std::f64::consts::FRAC_PI_2).unwrap();
    let m = make_positive_case(PositiveCase::Oriented { v: vec![1.0, 0.0, 0.0], f, g: ScalarField::constant(3, 1.0) })
        .unwrap();
    for x in [[0.0, 0.3, -1.0], [1.0, 2.0, 0.5]] {
        let e = sym_eigen(&m.diffusion(&x).unwrap());
        let fx = 2.0 + x[1].cos();
        assert!((e.values[0] - 1.0).abs() < 1e-12 && (e.values[1] - 1.0).abs() < 1e-12);
        assert!((e.values[2] - fx).abs() < 1e-12);
    }
    assert!(make_positive_case(PositiveCase::Oriented {
        v: vec![1.0, 1.0, 0.0],
        f: ScalarField::constant(3, 1.0),
        g: ScalarField::constant(3, 1.0),
    })
    .is_err());
}

#[test]
fn rotated_case_with_identity_is_diagonal_case() {
    let g = vec![sin_field(2, 2.0, 0.8, 1), sin_field(2, 1.5, 0.4, 2)];
    let diag = make_positive_case(PositiveCase::Diagonal { g: g.clone() }).unwrap();
    let rot = make_positive_case(PositiveCase::Rotated { r: Matrix::identity(2), g }).unwrap();
    for x in box_grid(2, 3.0, 5) {
        assert_eq!(diag.diffusion(&x).unwrap(), rot.diffusion(&x).unwrap());
        assert_eq!(diag.sigma(&x).unwrap(), rot.sigma(&x).unwrap());
    }
    let bad = Matrix::from_rows(&[[1.0, 0.1], [0.0, 1.0]]);
    assert!(make_positive_case(PositiveCase::Rotated { r: bad, g: vec![sin_field(2, 2.0, 0.1, 0); 2] }).is_err());
}

#[test]
fn isotropic_divergence_is_gradient() {
    let g = sin_field(2, 2.0, 0.8, 0);
    let m = make_positive_case(PositiveCase::Isotropic { g: g.clone() }).unwrap();
    for x in box_grid(2, 3.0, 4) {
        let div = divergence_d(&m, &x, DerivativeMode::Analytic);
        let gr = g.grad(&x);
        assert!((div[0] - gr[0]).abs() < 1e-15 && (div[1] - gr[1]).abs() < 1e-15);
    }
    assert!(make_positive_case(PositiveCase::Isotropic { g: sin_field(2, 0.5, 0.8, 0) }).is_err());
}

#[test]
fn radial_case_reference_values() {
    let m = make_radial_case(SymMatrix::identity(2), RadialProfile::bump(2.0, 1.0, 1.0).unwrap()).unwrap();
    let div = divergence_d(&m, &[1.0, 0.0], DerivativeMode::Analytic);
    assert!((div[0] + 2.0 * (-1.0_f64).exp()).abs() < 1e-15 && div[1] == 0.0);
    // h ≡ c reduces to a constant modulation
    let c = make_radial_case(SymMatrix::identity(2), RadialProfile::constant(3.0)).unwrap();
    assert_eq!(divergence_d(&c, &[0.4, -0.2], DerivativeMode::Analytic), vec![0.0, 0.0]);
    // h'(0) ≠ 0 is rejected
    let slope = RadialProfile::custom("2+r", |r| 2.0 + r, |_| 1.0, 2.0, 10.0, 1.0);
    assert!(matches!(make_radial_case(SymMatrix::identity(2), slope), Err(ModelError::ParamViolation { .. })));
}

fn cross_coupled(alpha: f64, beta: f64, eps: f64) -> NegativeCase {
    NegativeCase::CrossCoupled {
        alpha,
        beta,
        tau: coupling_field(CouplingFamily::Periodic, eps, &FamilyShape::default()).unwrap(),
    }
}

fn separable(family: CouplingFamily, eps: f64) -> NegativeCase {
    NegativeCase::Separable {
        epsilon: eps,
        a: separable_profile(family, 1.0, 0.5, 0, 1.0, 0.0, 0.0, 1.0).unwrap(),
        b: separable_profile(family, 1.5, 0.5, 1, 1.0, 0.0, 0.0, 1.0).unwrap(),
        delta2: None,
    }
}

fn negative_models() -> Vec<TensorFieldModel> {
    let mut v = vec![make_negative_case(cross_coupled(1.0, 2.0, 0.5)).unwrap()];
    for fam in [CouplingFamily::Periodic, CouplingFamily::Gaussian, CouplingFamily::Front] {
        let shape = FamilyShape { center: vec![0.3, -0.2], width: 1.3, ..FamilyShape::default() };
        let tau = coupling_field(fam, 0.6, &shape).unwrap();
        v.push(make_negative_case(NegativeCase::CrossCoupled { alpha: 1.0, beta: 1.5, tau }).unwrap());
        v.push(make_negative_case(separable(fam, 0.3)).unwrap());
    }
    v
}

#[test]
fn cross_coupled_residual_matches_closed_form() {
    let case = cross_coupled(1.0, 2.0, 0.5);
    let m = make_negative_case(case.clone()).unwrap();
    for x in box_grid(2, 5.0, 21) {
        let lam = structural_residual(&m, &x, DerivativeMode::Analytic).unwrap();
        let c = 0.5 * (x[0] + x[1]).cos();
        assert!((lam[0] - c).abs() < 1e-12 && (lam[1] + c).abs() < 1e-12, "{x:?}");
        let closed = negative_case_lambda(&case, &x);
        assert!((lam[0] - closed[0]).abs() < 1e-12 && (lam[1] - closed[1]).abs() < 1e-12);
        // ∇·D display of the cross-coupled case
        let t = 0.5 * (x[0] + x[1]).sin();
        let div = divergence_d(&m, &x, DerivativeMode::Analytic);
        assert!((div[0] - (2.0 * t * c + 3.0 * c)).abs() < 1e-12);
        assert!((div[1] - (3.0 * c + 2.0 * t * c)).abs() < 1e-12);
    }
}

#[test]
fn degenerate_negative_parameters_satisfy_condition() {
    let equal = make_negative_case(cross_coupled(1.5, 1.5, 0.5)).unwrap();
    let uncoupled = make_negative_case(separable(CouplingFamily::Periodic, 0.0)).unwrap();
    for m in [equal, uncoupled] {
        for x in box_grid(2, 5.0, 15) {
            assert!(max_norm(&structural_residual(&m, &x, DerivativeMode::Analytic).unwrap()) < 1e-12);
        }
    }
}

#[test]
fn separable_residual_and_dual_routes() {
    for fam in [CouplingFamily::Periodic, CouplingFamily::Gaussian, CouplingFamily::Front] {
        let case = separable(fam, 0.3);
        let m = make_negative_case(case.clone()).unwrap();
        let mut worst = 0.0_f64;
        for x in box_grid(2, 5.0, 31) {
            let lam = structural_residual(&m, &x, DerivativeMode::Analytic).unwrap();
            let closed = negative_case_lambda(&case, &x);
            assert!((lam[0] - closed[0]).abs() < 1e-12 && (lam[1] - closed[1]).abs() < 1e-12);
            let h = ito_correction_h(&m, &x, DerivativeMode::Analytic).unwrap();
            assert!(h.max_discrepancy() < 1e-12);
            worst = worst.max(max_norm(&lam));
        }
        assert!(worst > 0.01, "{fam:?}: {worst}");
    }
}

#[test]
fn negative_constraints_are_enforced() {
    assert!(make_negative_case(cross_coupled(1.0, 2.0, 1.5)).is_err());
    assert!(make_negative_case(cross_coupled(-1.0, 2.0, 0.1)).is_err());
    let tight = NegativeCase::Separable {
        epsilon: 1.2,
        a: separable_profile(CouplingFamily::Periodic, 1.0, 0.5, 0, 1.0, 0.0, 0.0, 1.0).unwrap(),
        b: separable_profile(CouplingFamily::Periodic, 1.5, 0.5, 1, 1.0, 0.0, 0.0, 1.0).unwrap(),
        delta2: None,
    };
    assert!(matches!(make_negative_case(tight), Err(ModelError::ParamViolation { .. })));
}

#[test]
fn cross_coupled_ellipticity_constant() {
    let m = make_negative_case(cross_coupled(1.0, 2.0, 0.5)).unwrap();
    let delta1: f64 = 2.0 - 0.25;
    assert!((m.ellipticity().unwrap() - (delta1 / 3.0).powi(2)).abs() < 1e-15);
}
