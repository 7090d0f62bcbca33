use proptest::prelude::*;

use super::*;

fn spd_strategy(max_dim: usize) -> impl Strategy<Value = Matrix> {
    (1..=max_dim).prop_flat_map(|d| {
        (prop::collection::vec(-1.0f64..1.0, d * d), 0.05f64..2.0).prop_map(move |(a, shift)| {
            let a = Matrix::from_row_major(d, a).unwrap();
            a.matmul(&a.transpose()).add(&Matrix::identity(d).scale(shift))
        })
    })
}

fn sym_strategy(d: usize) -> impl Strategy<Value = Matrix> {
    prop::collection::vec(-1.0f64..1.0, d * d).prop_map(move |a| {
        let mut m = Matrix::from_row_major(d, a).unwrap();
        m.symmetrize();
        m
    })
}

// Gauss-Jordan inverse, only for the Denman-Beavers oracle.
fn inverse(m: &Matrix) -> Matrix {
    let d = m.dim();
    let mut a = m.clone();
    let mut inv = Matrix::identity(d);
    for c in 0..d {
        let piv = (c..d).max_by(|&i, &j| a[(i, c)].abs().total_cmp(&a[(j, c)].abs())).unwrap();
        for j in 0..d {
            let t = a[(c, j)];
            a[(c, j)] = a[(piv, j)];
            a[(piv, j)] = t;
            let t = inv[(c, j)];
            inv[(c, j)] = inv[(piv, j)];
            inv[(piv, j)] = t;
        }
        let p = a[(c, c)];
        for j in 0..d {
            a[(c, j)] /= p;
            inv[(c, j)] /= p;
        }
        for r in 0..d {
            if r != c {
                let f = a[(r, c)];
                for j in 0..d {
                    a[(r, j)] -= f * a[(c, j)];
                    inv[(r, j)] -= f * inv[(c, j)];
                }
            }
        }
    }
    inv
}

/// Denman-Beavers iteration: Y → D^{1/2}, independent of any eigensolver.
fn denman_beavers_sqrt(d: &Matrix) -> Matrix {
    let mut y = d.clone();
    let mut z = Matrix::identity(d.dim());
    for _ in 0..60 {
        let yi = inverse(&y);
        let zi = inverse(&z);
        y = y.add(&zi).scale(0.5);
        z = z.add(&yi).scale(0.5);
    }
    y
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn principal_root_squares_back(d in spd_strategy(4)) {
        let sym = SymMatrix::new(d.clone()).unwrap();
        let r = principal_sqrt(&sym).unwrap();
        let err = r.matmul(&r).sub(&d).frobenius_norm() / d.frobenius_norm();
        prop_assert!(err <= 1e-10, "relative error {err:e}");
        prop_assert!(r.asymmetry() == 0.0);
        prop_assert!(sym_eigen(&r).min_value() > 0.0);
    }

    #[test]
    fn principal_root_matches_denman_beavers(d in spd_strategy(4)) {
        let r = principal_sqrt(&SymMatrix::new(d.clone()).unwrap()).unwrap();
        let oracle = denman_beavers_sqrt(&d);
        prop_assert!(r.sub(&oracle).max_abs() <= 1e-9 * (1.0 + oracle.max_abs()));
    }

    #[test]
    fn sylvester_matches_finite_difference(
        (d, dd) in (1usize..=4).prop_flat_map(|n| (spd_strategy(n).prop_filter("dim", move |m| m.dim() == n), sym_strategy(n)))
    ) {
        let sym = SymMatrix::new(d.clone()).unwrap();
        let dsym = SymMatrix::new(dd.clone()).unwrap();
        let analytic = sylvester_sigma_derivative(&sym, &dsym).unwrap();
        let root = principal_sqrt(&sym).unwrap();
        prop_assert!(sylvester_residual(&root, &analytic, &dd) <= 1e-9);

        let h = 1e-5;
        let plus = principal_sqrt(&SymMatrix::new(d.add(&dd.scale(h))).unwrap()).unwrap();
        let minus = principal_sqrt(&SymMatrix::new(d.sub(&dd.scale(h))).unwrap()).unwrap();
        let fd = plus.sub(&minus).scale(0.5 / h);
        let rel = fd.sub(&analytic).frobenius_norm() / analytic.frobenius_norm().max(1e-3);
        prop_assert!(rel <= 1e-5, "relative FD error {rel:e}");
    }
}

fn isotropic_sine_model() -> TensorFieldModel {
    // g(x) = 2 + sin(x1), D = g I in two dimensions
    TensorFieldModel::new("iso", 2, |x, m| {
        let g = 2.0 + x[0].sin();
        m.fill(0.0);
        m[(0, 0)] = g;
        m[(1, 1)] = g;
    })
    .with_grad_diffusion(|x, g| {
        g.fill(0.0);
        let c = x[0].cos();
        g.set(0, 0, 0, c);
        g.set(1, 1, 0, c);
    })
    .with_ellipticity(1.0)
    .with_derivative_bounds(vec![1.0, 0.0])
}

fn cross_coupled_model(alpha: f64, beta: f64) -> TensorFieldModel {
    // σ = [[α, τ], [τ, β]] with τ = 0.5 sin(x1 + x2)
    let tau = |x: &[f64]| 0.5 * (x[0] + x[1]).sin();
    TensorFieldModel::new("cross", 2, move |x, m| {
        let t = tau(x);
        m[(0, 0)] = alpha * alpha + t * t;
        m[(0, 1)] = (alpha + beta) * t;
        m[(1, 0)] = (alpha + beta) * t;
        m[(1, 1)] = beta * beta + t * t;
    })
    .with_sigma(move |x, m| {
        let t = tau(x);
        m[(0, 0)] = alpha;
        m[(0, 1)] = t;
        m[(1, 0)] = t;
        m[(1, 1)] = beta;
    })
}

#[test]
fn isotropic_bound_and_observed_maximum() {
    let model = isotropic_sine_model();
    let points = box_grid(2, 5.0, 41);
    let report = derivative_bound_check(&model, &points, DerivativeMode::Analytic).unwrap();
    assert_eq!(report.bounds, vec![2.0, 0.0]);
    assert!(report.holds);
    // grid oracle: max |cos x| / (2 sqrt(2 + sin x)) over the same x1 values
    let oracle = points.iter().map(|p| p[0].cos().abs() / (2.0 * (2.0 + p[0].sin()).sqrt())).fold(0.0_f64, f64::max);
    let observed = report.observed.iter().map(|v| v[0]).fold(0.0_f64, f64::max);
    assert!((observed - oracle).abs() < 1e-12);
    assert!(observed <= 0.5);
}

#[test]
fn bound_check_requires_declared_constants() {
    let model = TensorFieldModel::new("bare", 1, |_, m| m[(0, 0)] = 1.0);
    assert_eq!(derivative_bound_check(&model, &[vec![0.0]], DerivativeMode::Analytic), Err(TensorError::MissingBounds));
}

#[test]
fn constant_tensor_has_zero_divergence_and_correction() {
    let model = TensorFieldModel::new("const", 2, |_, m| {
        *m = Matrix::from_rows(&[[1.0, 0.3], [0.3, 2.0]]);
    });
    for mode in [DerivativeMode::Analytic, DerivativeMode::FiniteDifference] {
        let x = [0.4, -1.3];
        assert!(divergence_d(&model, &x, mode).iter().all(|v| v.abs() < 1e-12));
        let h = ito_correction_h(&model, &x, mode).unwrap();
        assert!(h.value().iter().all(|v| v.abs() < 1e-10));
    }
}

#[test]
fn isotropic_divergence_is_gradient() {
    let model = isotropic_sine_model();
    let x = [0.7, 2.0];
    let div = divergence_d(&model, &x, DerivativeMode::Analytic);
    assert!((div[0] - 0.7f64.cos()).abs() < 1e-15);
    assert_eq!(div[1], 0.0);
    let fd = divergence_d(&model, &x, DerivativeMode::FiniteDifference);
    assert!((fd[0] - 0.7f64.cos()).abs() < 1e-9);
}

#[test]
fn cross_coupled_divergence_and_residual() {
    let (alpha, beta) = (1.0, 2.0);
    let model = cross_coupled_model(alpha, beta);
    let x = [0.3_f64, -0.8];
    let t = 0.5 * (x[0] + x[1]).sin();
    let dt = 0.5 * (x[0] + x[1]).cos(); // ∂1τ = ∂2τ
    let div = divergence_d(&model, &x, DerivativeMode::FiniteDifference);
    let expected = [2.0 * t * dt + (alpha + beta) * dt, (alpha + beta) * dt + 2.0 * t * dt];
    for i in 0..2 {
        assert!((div[i] - expected[i]).abs() < 1e-9);
    }
    let lam = structural_residual(&model, &x, DerivativeMode::FiniteDifference).unwrap();
    assert!((lam[0] - (beta - alpha) * dt).abs() < 1e-9);
    assert!((lam[1] - (alpha - beta) * dt).abs() < 1e-9);
    let lam2 = structural_residual_via_contraction(&model, &x, DerivativeMode::FiniteDifference).unwrap();
    assert!((lam[0] - lam2[0]).abs() < 1e-9 && (lam[1] - lam2[1]).abs() < 1e-9);
}

#[test]
fn scalar_correction_is_sigma_sigma_prime() {
    // g = x² + 1 at x = 1: h = σσ' = x = 1
    let model = TensorFieldModel::new("quad", 1, |x, m| m[(0, 0)] = x[0] * x[0] + 1.0)
        .with_grad_diffusion(|x, g| g.set(0, 0, 0, 2.0 * x[0]));
    let h = ito_correction_h(&model, &[1.0], DerivativeMode::Analytic).unwrap();
    assert!((h.value()[0] - 1.0).abs() < 1e-14);
    assert!(h.max_discrepancy() < 1e-14);
}

#[test]
fn broken_derivative_is_flagged() {
    // analytic ∇D deliberately off by a factor of two
    let model = TensorFieldModel::new("bad", 1, |x, m| m[(0, 0)] = x[0] * x[0] + 1.0)
        .with_grad_diffusion(|x, g| g.set(0, 0, 0, 4.0 * x[0]))
        .with_sigma(|x, m| m[(0, 0)] = (x[0] * x[0] + 1.0).sqrt())
        .with_grad_sigma(|x, g| g.set(0, 0, 0, x[0] / (x[0] * x[0] + 1.0).sqrt()));
    assert!(matches!(
        ito_correction_h(&model, &[1.0], DerivativeMode::Analytic),
        Err(TensorError::IdentityMismatch { component: 0, .. })
    ));
}

#[test]
fn constant_rotation_preserves_residual() {
    let model = cross_coupled_model(1.0, 2.0);
    let th: f64 = 0.6;
    let q = Matrix::from_rows(&[[th.cos(), -th.sin()], [th.sin(), th.cos()]]);
    let rotated = model.with_constant_rotation(q).unwrap();
    for x in box_grid(2, 2.0, 7) {
        let a = structural_residual(&model, &x, DerivativeMode::Analytic).unwrap();
        let b = structural_residual(&rotated, &x, DerivativeMode::Analytic).unwrap();
        assert!((a[0] - b[0]).abs() < 1e-9 && (a[1] - b[1]).abs() < 1e-9);
        let s = rotated.sigma(&x).unwrap();
        let d = model.diffusion(&x).unwrap();
        assert!(s.matmul(&s.transpose()).sub(&d).max_abs() < 1e-12);
    }
    let bad = Matrix::from_rows(&[[1.0, 0.1], [0.0, 1.0]]);
    assert!(matches!(model.with_constant_rotation(bad), Err(TensorError::NotOrthogonal { .. })));
}

#[test]
fn ellipticity_check_reports_minimum() {
    let model = isotropic_sine_model();
    let report = ellipticity_check(&model, &box_grid(2, 5.0, 50)).unwrap();
    assert!(report.holds);
    assert!(report.min_eigenvalue >= 1.0);
    let liar = isotropic_sine_model().with_ellipticity(1.5);
    assert!(!ellipticity_check(&liar, &box_grid(2, 5.0, 50)).unwrap().holds);
}

#[test]
fn box_grid_covers_corners() {
    let g = box_grid(2, 1.0, 3);
    assert_eq!(g.len(), 9);
    assert_eq!(g[0], vec![-1.0, -1.0]);
    assert_eq!(g[8], vec![1.0, 1.0]);
}
