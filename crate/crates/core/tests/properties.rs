//! Property tests for invariants that span modules.

use noisecalc_core::fokker_planck::{
    histogram_density, l1_distance, solve_pde, stable_step, DensityGrid, GridAxis, PdeForm,
};
use noisecalc_core::model_zoo::{make_het_diffusion, make_positive_case, PositiveCase, ScalarField};
use noisecalc_core::sde_engine::{interpretation_to_ito, isotropic_gaussian, simulate_ensemble, Guards};
use noisecalc_core::stoch_integrals::{lambda_riemann_sum, BrownianPath, InterpretationTag, Partition};
use noisecalc_core::tensor_field::{divergence_d, structural_residual, DerivativeMode, Matrix, SymMatrix};
use proptest::prelude::*;

fn sinusoid(offset: f64, amp: f64, w1: f64, w2: f64, phase: f64) -> ScalarField {
    ScalarField::sinusoid(offset, amp, vec![w1, w2], phase).unwrap()
}

fn positive_field() -> impl Strategy<Value = ScalarField> {
    (1.0..3.0_f64, 0.0..0.9_f64, -2.0..2.0_f64, -2.0..2.0_f64, 0.0..6.3_f64)
        .prop_map(|(o, a, w1, w2, p)| sinusoid(o, a * o, w1, w2, p))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn endpoint_sums_satisfy_discrete_ito_formula(seed in 0u64..10_000, level in 4u32..12) {
        // Σ W_{j-1}ΔW = (W_T² − ΣΔW²)/2 and Σ W_jΔW = (W_T² + ΣΔW²)/2 hold exactly
        let w = BrownianPath::standard(seed, 1, &Partition::dyadic(0.0, 1.0, level).unwrap()).unwrap();
        let qv: f64 = w.increments().iter().map(|d| d * d).sum();
        let wt = w.value(w.n_steps())[0];
        let ito = lambda_riemann_sum(|x| x, &w, InterpretationTag::ITO).unwrap();
        let hk = lambda_riemann_sum(|x| x, &w, InterpretationTag::HK).unwrap();
        prop_assert!((ito - 0.5 * (wt * wt - qv)).abs() < 1e-10);
        prop_assert!((hk - 0.5 * (wt * wt + qv)).abs() < 1e-10);
    }

    #[test]
    fn refinement_keeps_coarse_values(seed in 0u64..10_000, level in 2u32..10) {
        let coarse = BrownianPath::standard(seed, 2, &Partition::dyadic(0.0, 1.0, level).unwrap()).unwrap();
        let fine = coarse.refine();
        for j in 0..=coarse.n_steps() {
            prop_assert_eq!(coarse.value(j), fine.value(2 * j));
        }
    }

    #[test]
    fn isotropic_and_diagonal_models_satisfy_structural_condition(
        g1 in positive_field(),
        g2 in positive_field(),
        x in prop::array::uniform2(-5.0..5.0_f64),
    ) {
        let iso = make_positive_case(PositiveCase::Isotropic { g: g1.clone() }).unwrap();
        let diag = make_positive_case(PositiveCase::Diagonal { g: vec![g1, g2] }).unwrap();
        for m in [iso, diag] {
            let lam = structural_residual(&m, &x, DerivativeMode::Analytic).unwrap();
            prop_assert!(lam.iter().all(|v| v.abs() <= 1e-10), "{lam:?}");
        }
    }

    #[test]
    fn kinetic_drift_equals_half_divergence_under_structural_condition(
        g1 in positive_field(),
        g2 in positive_field(),
        theta in 0.0..6.3_f64,
        x in prop::array::uniform2(-5.0..5.0_f64),
    ) {
        let (s, c) = theta.sin_cos();
        let r = Matrix::from_rows(&[[c, -s], [s, c]]);
        let m = make_positive_case(PositiveCase::Rotated { r, g: vec![g1, g2] }).unwrap();
        let hk = interpretation_to_ito(m.clone(), InterpretationTag::HK);
        let drift = hk.drift(&x).unwrap();
        let div = divergence_d(&m, &x, DerivativeMode::Analytic);
        let scale = 1.0 + div.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
        for i in 0..2 {
            prop_assert!((drift[i] - 0.5 * div[i]).abs() <= 1e-9 * scale);
        }
    }

    #[test]
    fn analytic_solutions_are_nonnegative(alpha_idx in 0usize..3, x0 in 0.0..4.0_f64, w in -20.0..20.0_f64) {
        let alpha = [1.0, 0.5, 0.75][alpha_idx];
        let spec = make_het_diffusion(alpha, 1.3).unwrap();
        let closed = spec.closed_form().unwrap();
        let stopped = closed.barrier(x0).is_some_and(|b| b.crossed(w));
        if !stopped {
            prop_assert!(closed.value(x0, w) >= 0.0);
        }
    }

    #[test]
    fn histogram_mass_accounts_for_leakage(samples in prop::collection::vec(-3.0..3.0_f64, 1..200)) {
        let h = histogram_density(&samples, vec![GridAxis::new(-2.0, 2.0, 16).unwrap()]).unwrap();
        prop_assert!((h.density.mass() - (1.0 - h.leak_fraction())).abs() < 1e-12);
    }

    #[test]
    fn l1_is_a_metric(m1 in -1.0..1.0_f64, m2 in -1.0..1.0_f64, m3 in -1.0..1.0_f64, s in 0.3..0.8_f64) {
        let ax = vec![GridAxis::symmetric(5.0, 100).unwrap()];
        let a = DensityGrid::gaussian(ax.clone(), &[m1], s).unwrap();
        let b = DensityGrid::gaussian(ax.clone(), &[m2], s).unwrap();
        let c = DensityGrid::gaussian(ax, &[m3], s).unwrap();
        let (ab, ba) = (l1_distance(&a, &b).unwrap(), l1_distance(&b, &a).unwrap());
        prop_assert_eq!(ab, ba);
        prop_assert!(ab <= l1_distance(&a, &c).unwrap() + l1_distance(&c, &b).unwrap() + 1e-14);
        prop_assert!(ab <= 2.0 + 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn flux_form_conserves_mass(
        d11 in 0.3..2.0_f64,
        d22 in 0.3..2.0_f64,
        rho in -0.8..0.8_f64,
        b1 in -1.0..1.0_f64,
        b2 in -1.0..1.0_f64,
    ) {
        let d12 = rho * (d11 * d22).sqrt();
        let d0 = SymMatrix::new(Matrix::from_rows(&[[d11, d12], [d12, d22]])).unwrap();
        let m = make_positive_case(PositiveCase::Constant { d0 }).unwrap().with_drift(move |x, o| {
            o[0] = b1 - 0.2 * x[0];
            o[1] = b2 - 0.2 * x[1];
        });
        let u0 = DensityGrid::gaussian(vec![GridAxis::symmetric(5.0, 40).unwrap(); 2], &[0.0, 0.0], 0.5).unwrap();
        for form in [PdeForm::fick(&m), PdeForm::ito_standard(&m)] {
            let dt = stable_step(&form, &u0).unwrap();
            let u = solve_pde(&form, &u0, 0.2, dt).unwrap();
            prop_assert!((u.mass() - u0.mass()).abs() <= 1e-8);
        }
    }

    #[test]
    fn ensembles_do_not_depend_on_thread_count(seed in any::<u64>(), threads in 1usize..4) {
        let g = sinusoid(1.5, 0.5, 1.0, 0.5, 0.0);
        let m = make_positive_case(PositiveCase::Isotropic { g }).unwrap();
        let sde = interpretation_to_ito(m, InterpretationTag::HK);
        let part = Partition::uniform(0.0, 0.1, 20).unwrap();
        let run = || simulate_ensemble(&sde, isotropic_gaussian(vec![0.0, 0.0], 0.3), 64, seed, &part, &Guards::default());
        let reference = run().unwrap();
        let pooled = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(run).unwrap();
        prop_assert_eq!(reference, pooled);
    }
}
