use noisecalc_core::rng::hashed_normal;
use noisecalc_core::tensor_field::{
    box_grid, derivative_bound_check, ellipticity_check, principal_sqrt, structural_residual, sylvester_residual,
    sylvester_sigma_derivative, DerivativeMode, Matrix, SymMatrix, TensorError,
};
use rayon::prelude::*;

use super::{euclidean, replicate_seed, tensor_model};
use crate::config::{AuditCase, AuditSettings, Expectation, LoadedConfig, SylvesterSettings};
use crate::error::Result;
use crate::report::{Check, ExperimentReport, Outcome, Table};

/// Grid maximum of `‖Λ‖` per case, its location, the ellipticity minimum and
/// the derivative bound; optionally the Sylvester derivative solve on random
/// SPD matrices.
pub fn run_structural_audit(config: &LoadedConfig) -> Result<Outcome> {
    let c = &config.config;
    let a = c.audit()?;
    let mut outcome = Outcome::new(ExperimentReport::new("audit", config));
    let mut table = Table::new(["case", "max_residual_analytic", "max_residual_fd", "ellipticity_min", "bound_ratio"]);
    for (index, case) in a.cases.iter().enumerate() {
        let row = audit_case(config, a, case, &mut outcome.report)?;
        outcome.report.note(format!("case.{index}"), &case.label);
        let mut full = vec![index as f64];
        full.extend(row);
        table.push(full);
    }
    if !a.cases.is_empty() {
        outcome.tables.insert("audit_cases".into(), table);
    }
    if let Some(s) = &a.sylvester {
        let t = sylvester_study(config, s, &mut outcome.report)?;
        outcome.tables.insert("sylvester".into(), t);
    }
    Ok(outcome)
}

fn grid_max(
    model: &noisecalc_core::TensorFieldModel,
    points: &[Vec<f64>],
    mode: DerivativeMode,
) -> Result<(f64, usize)> {
    let norms: Vec<f64> = points
        .par_iter()
        .map(|x| structural_residual(model, x, mode).map(|v| euclidean(&v)))
        .collect::<std::result::Result<_, TensorError>>()?;
    let (arg, max) =
        norms
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |(ai, am), (i, v)| if *v > am || v.is_nan() { (i, *v) } else { (ai, am) });
    Ok((max, arg))
}

fn audit_case(
    config: &LoadedConfig,
    a: &AuditSettings,
    case: &AuditCase,
    r: &mut ExperimentReport,
) -> Result<Vec<f64>> {
    let c = &config.config;
    let model = tensor_model(&case.model)?;
    let points = box_grid(model.dim(), a.half_width, a.resolution);
    let label = &case.label;
    let (max_an, arg) = grid_max(&model, &points, DerivativeMode::Analytic)?;
    let (max_fd, _) = grid_max(&model, &points, DerivativeMode::FiniteDifference)?;
    for (i, x) in points[arg].iter().enumerate() {
        r.metric(format!("{label}.argmax_x{}", i + 1), *x);
    }
    let criterion = format!("structural.{label}");
    let observed_holds = max_an <= c.threshold("analytic_residual")?;
    r.note(format!("{label}.verdict"), if observed_holds { "holds" } else { "fails" });
    match case.expect {
        Expectation::Holds => {
            r.check(
                &criterion,
                Check::le(format!("{label}.max_residual_analytic"), max_an, c.threshold("analytic_residual")?),
            );
            r.check(&criterion, Check::le(format!("{label}.max_residual_fd"), max_fd, c.threshold("fd_residual")?));
        }
        Expectation::Fails => {
            r.metric(format!("{label}.max_residual_analytic"), max_an);
            r.metric(format!("{label}.max_residual_fd"), max_fd);
            match case.expected_max {
                Some(expected) => {
                    r.metric(format!("{label}.expected_max"), expected);
                    let rel = (max_an - expected).abs() / expected.abs();
                    r.check(
                        &criterion,
                        Check::le(format!("{label}.relative_error"), rel, c.threshold("relative_error")?),
                    );
                }
                None => {
                    r.check(
                        &criterion,
                        Check::gt(format!("{label}.max_residual_analytic"), max_an, c.threshold("min_violation")?),
                    );
                }
            }
        }
    }

    let ell = ellipticity_check(&model, &points)?;
    r.metric(format!("{label}.ellipticity_min"), ell.min_eigenvalue);
    let mut ratio = f64::NAN;
    if a.check_bounds {
        let criterion = format!("derivative_bound.{label}");
        let declared = model.ellipticity().unwrap_or(0.0);
        r.check(
            &criterion,
            Check::ge(format!("{label}.ellipticity_min"), ell.min_eigenvalue, declared * (1.0 - 1e-12)),
        );
        let bound = derivative_bound_check(&model, &points, DerivativeMode::Analytic)?;
        ratio = bound.worst_ratio;
        r.check(&criterion, Check::le(format!("{label}.bound_ratio"), ratio, c.threshold("bound_ratio")?));
    }
    Ok(vec![max_an, max_fd, ell.min_eigenvalue, ratio])
}

/// Random SPD `D = AAᵀ/d + ½I` and symmetric direction `E`, both built from
/// hashed normals so each instance depends only on its seed.
fn random_instance(seed: u64, d: usize) -> (SymMatrix, SymMatrix) {
    let normal = |k: usize| hashed_normal(replicate_seed(seed, 1, k as u64));
    let a = Matrix::from_fn(d, |i, j| normal(i * d + j));
    let mut dm = a.matmul(&a.transpose()).scale(1.0 / d as f64).add(&Matrix::identity(d).scale(0.5));
    dm.symmetrize();
    let b = Matrix::from_fn(d, |i, j| normal(d * d + i * d + j));
    let mut e = b.add(&b.transpose()).scale(0.5);
    e.symmetrize();
    (SymMatrix::new(dm).expect("symmetrized"), SymMatrix::new(e).expect("symmetrized"))
}

/// Step of the central difference `(σ(D + hE) − σ(D − hE)) / 2h`.
const SYLVESTER_FD_STEP: f64 = 1e-5;

fn sylvester_study(config: &LoadedConfig, s: &SylvesterSettings, r: &mut ExperimentReport) -> Result<Table> {
    let c = &config.config;
    let mut table = Table::new(["dim", "max_residual", "max_fd_relative_error"]);
    let (mut worst_res, mut worst_fd) = (0.0_f64, 0.0_f64);
    for &d in &s.dims {
        let results: Vec<(f64, f64)> = (0..s.instances)
            .into_par_iter()
            .map(|i| -> std::result::Result<(f64, f64), TensorError> {
                let (dm, e) = random_instance(replicate_seed(c.master_seed, d as u64, i as u64), d);
                let sigma = principal_sqrt(&dm)?;
                let deriv = sylvester_sigma_derivative(&dm, &e)?;
                let res = sylvester_residual(sigma.as_matrix(), deriv.as_matrix(), e.as_matrix());
                let shifted = |sign: f64| -> std::result::Result<Matrix, TensorError> {
                    let m = dm.as_matrix().add(&e.as_matrix().scale(sign * SYLVESTER_FD_STEP));
                    Ok(principal_sqrt(&SymMatrix::new(m)?)?.into_matrix())
                };
                let fd = shifted(1.0)?.sub(&shifted(-1.0)?).scale(0.5 / SYLVESTER_FD_STEP);
                let rel = fd.sub(deriv.as_matrix()).frobenius_norm() / deriv.as_matrix().frobenius_norm().max(1e-300);
                Ok((res, rel))
            })
            .collect::<std::result::Result<_, _>>()?;
        let max_res = results.iter().map(|p| p.0).fold(0.0, f64::max);
        let max_fd = results.iter().map(|p| p.1).fold(0.0, f64::max);
        r.metric(format!("sylvester.d{d}.max_residual"), max_res);
        r.metric(format!("sylvester.d{d}.max_fd_relative_error"), max_fd);
        table.push(vec![d as f64, max_res, max_fd]);
        worst_res = worst_res.max(max_res);
        worst_fd = worst_fd.max(max_fd);
    }
    r.metric("sylvester.instances_per_dim", s.instances as f64);
    r.check("sylvester", Check::le("sylvester.max_residual", worst_res, c.threshold("sylvester_residual")?));
    r.check("sylvester", Check::le("sylvester.max_fd_relative_error", worst_fd, c.threshold("sylvester_fd_relative")?));
    Ok(table)
}
