use noisecalc_core::sde_engine::{euler_maruyama, interpretation_to_ito, Guards};
use noisecalc_core::stats::{loglog_slope, median};
use noisecalc_core::stoch_integrals::{
    conversion_residual, fehlberg_residual, ho_discretization_sum, identity_integral_limit, lambda_riemann_sum,
    BrownianPath, BrownianSource, HoOutcome, Integrator, InterpretationTag, Partition,
};
use noisecalc_core::tensor_field::Matrix;
use rayon::prelude::*;

use super::{euclidean, replicate_seed, tensor_model};
use crate::config::{IntegralKind, IntegralSettings, LoadedConfig};
use crate::error::{HarnessError, Result};
use crate::report::{Check, ExperimentReport, Outcome, Table};

/// Residual-versus-n tables with log-log slopes for the integral studies.
pub fn run_integral_convergence(config: &LoadedConfig) -> Result<Outcome> {
    let s = config.config.integrals()?;
    let mut outcome = Outcome::new(ExperimentReport::new("integrals", config));
    outcome.report.note("subtype", s.subtype.name());
    match s.subtype {
        IntegralKind::LambdaFamily => lambda_family(config, s, &mut outcome)?,
        IntegralKind::Fehlberg => fehlberg(config, s, &mut outcome)?,
        IntegralKind::HkConversion => hk_conversion(config, s, &mut outcome)?,
        IntegralKind::Deterministic => deterministic(config, s, &mut outcome)?,
        IntegralKind::HoDivergence => ho_divergence(config, s, &mut outcome)?,
    }
    Ok(outcome)
}

fn sorted_levels(s: &IntegralSettings) -> Vec<u32> {
    let mut l = s.levels.clone();
    l.sort_unstable();
    l.dedup();
    l
}

fn tags(s: &IntegralSettings) -> Result<Vec<InterpretationTag>> {
    if s.interpretations.is_empty() {
        return Err(HarnessError::Config("'integrals.interpretations' must be non-empty".into()));
    }
    Ok(s.interpretations.iter().map(|l| InterpretationTag::new(*l)).collect::<std::result::Result<_, _>>()?)
}

/// Paths of seed `i` on every requested level, finest generated once and
/// coarsened so all levels share one realisation.
fn nested_paths(seed: u64, dim: usize, s: &IntegralSettings, levels: &[u32]) -> Result<Vec<BrownianPath>> {
    let finest = *levels.last().expect("non-empty");
    let mut path = BrownianPath::standard(seed, dim, &Partition::dyadic(0.0, s.horizon, finest)?)?;
    let mut out = Vec::with_capacity(levels.len());
    for level in (levels[0]..=finest).rev() {
        if levels.contains(&level) {
            out.push(path.clone());
        }
        if level > levels[0] {
            path = path.coarsen()?;
        }
    }
    out.reverse();
    Ok(out)
}

/// `values[seed][level]` → per-level medians.
fn level_medians(values: &[Vec<f64>], n_levels: usize) -> Vec<f64> {
    (0..n_levels).map(|j| median(&values.iter().map(|v| v[j]).collect::<Vec<_>>())).collect()
}

fn ns(levels: &[u32]) -> Vec<f64> {
    levels.iter().map(|l| (1u64 << l) as f64).collect()
}

fn per_seed<T: Send>(s: &IntegralSettings, master: u64, f: impl Fn(u64) -> Result<T> + Sync) -> Result<Vec<T>> {
    (0..s.seeds).into_par_iter().map(|i| f(replicate_seed(master, 0x1A, i as u64))).collect()
}

fn lambda_family(config: &LoadedConfig, s: &IntegralSettings, o: &mut Outcome) -> Result<()> {
    let c = &config.config;
    let levels = sorted_levels(s);
    let tags = tags(s)?;
    // errors[seed][tag][level]
    let errors: Vec<Vec<Vec<f64>>> = per_seed(s, c.master_seed, |seed| {
        let paths = nested_paths(seed, 1, s, &levels)?;
        tags.iter()
            .map(|&tag| {
                paths
                    .iter()
                    .map(|w| Ok((lambda_riemann_sum(|x| x, w, tag)? - identity_integral_limit(w, tag)).abs()))
                    .collect()
            })
            .collect()
    })?;
    let n = ns(&levels);
    let mut columns = vec!["n".to_string()];
    columns.extend(tags.iter().map(|t| format!("median_error_{}", t.name())));
    let mut table = Table::new(columns).with_loglog(0);
    let medians: Vec<Vec<f64>> = (0..tags.len())
        .map(|t| level_medians(&errors.iter().map(|e| e[t].clone()).collect::<Vec<_>>(), levels.len()))
        .collect();
    for (j, nj) in n.iter().enumerate() {
        let mut row = vec![*nj];
        row.extend(medians.iter().map(|m| m[j]));
        table.push(row);
    }
    let (lo, hi) = (c.threshold("slope_min")?, c.threshold("slope_max")?);
    for (tag, med) in tags.iter().zip(&medians) {
        let name = tag.name();
        let criterion = format!("lambda_family.{name}");
        o.report.check(
            &criterion,
            Check::lt(format!("{name}.median_error"), *med.last().unwrap(), c.threshold("median_error")?),
        );
        o.report.check(&criterion, Check::within(format!("{name}.slope"), loglog_slope(&n, med), lo, hi));
    }
    o.tables.insert("lambda_family".into(), table);
    Ok(())
}

fn fehlberg(config: &LoadedConfig, s: &IntegralSettings, o: &mut Outcome) -> Result<()> {
    let c = &config.config;
    let levels = sorted_levels(s);
    let residuals: Vec<Vec<f64>> = per_seed(s, c.master_seed, |seed| {
        nested_paths(seed, 1, s, &levels)?.iter().map(|w| Ok(fehlberg_residual(|x| x * x, |x| 2.0 * x, w)?)).collect()
    })?;
    let med = level_medians(&residuals, levels.len());
    let decreasing = residuals.iter().filter(|r| r.windows(2).all(|p| p[1] < p[0])).count() as f64 / s.seeds as f64;
    let n = ns(&levels);
    let mut table = Table::new(["n", "median_residual"]).with_loglog(0);
    for (nj, m) in n.iter().zip(&med) {
        table.push(vec![*nj, *m]);
    }
    o.report.metric("slope", loglog_slope(&n, &med));
    o.report.check("fehlberg", Check::lt("median_residual", *med.last().unwrap(), c.threshold("median_residual")?));
    o.report.check("fehlberg", Check::ge("fraction_decreasing", decreasing, c.threshold("fraction_decreasing")?));
    o.tables.insert("fehlberg".into(), table);
    Ok(())
}

/// Kinetic sum of `σ(Y) dW` against the Itô sum plus the covariation term,
/// on Euler paths of the λ = 1 equation.
fn hk_conversion(config: &LoadedConfig, s: &IntegralSettings, o: &mut Outcome) -> Result<()> {
    let c = &config.config;
    let levels = sorted_levels(s);
    let model =
        tensor_model(s.model.as_ref().ok_or_else(|| HarnessError::Config("'integrals.model' is required".into()))?)?;
    let dim = model.dim();
    o.report.note("model", model.name());
    let sde = interpretation_to_ito(model.clone(), InterpretationTag::HK);
    let sigma = |x: &[f64], m: &mut Matrix| {
        if model.sigma_into(x, m).is_err() {
            m.fill(f64::NAN);
        }
    };
    let residuals: Vec<Vec<f64>> = per_seed(s, c.master_seed, |seed| {
        nested_paths(seed, dim, s, &levels)?
            .iter()
            .map(|w| {
                let y = euler_maruyama(&sde, &vec![0.0; dim], w, &Guards::default())?;
                let res = conversion_residual(|x, _, m| sigma(x, m), &y, Integrator::Brownian(w), sigma)?;
                Ok(euclidean(&res))
            })
            .collect()
    })?;
    let med = level_medians(&residuals, levels.len());
    let n = ns(&levels);
    let mut table = Table::new(["n", "median_residual"]).with_loglog(0);
    for (nj, m) in n.iter().zip(&med) {
        table.push(vec![*nj, *m]);
    }
    o.report
        .check("hk_conversion", Check::lt("median_residual", *med.last().unwrap(), c.threshold("median_residual")?));
    o.report.check("hk_conversion", Check::le("slope", loglog_slope(&n, &med), c.threshold("slope_max")?));
    o.tables.insert("hk_conversion".into(), table);
    Ok(())
}

/// Spread of the λ-sums of a deterministic integrand and their
/// integration-by-parts residuals.
fn deterministic(config: &LoadedConfig, s: &IntegralSettings, o: &mut Outcome) -> Result<()> {
    let c = &config.config;
    let levels = sorted_levels(s);
    let tags = tags(s)?;
    let model = s.model.as_ref().ok_or_else(|| HarnessError::Config("'integrals.model' is required".into()))?;
    let spec = model.to_spec()?.build()?.into_scaled_bm()?;
    o.report.note("model", spec.name());
    let (a, b) = spec.interval();
    if (a, b) != (0.0, s.horizon) {
        return Err(HarnessError::Config(format!("amplitude interval [{a}, {b}] must be [0, horizon]")));
    }
    // per seed, per level: (max_λ |I_λ − I_0|, max_λ |by-parts residual|)
    let stats: Vec<Vec<(f64, f64)>> = per_seed(s, c.master_seed, |seed| {
        nested_paths(seed, 1, s, &levels)?
            .iter()
            .map(|w| {
                let base = spec.lambda_integral(w, InterpretationTag::ITO)?;
                let (mut dev, mut bp) = (0.0_f64, 0.0_f64);
                for &t in &tags {
                    dev = dev.max((spec.lambda_integral(w, t)? - base).abs());
                    bp = bp.max(spec.by_parts_residual(w, t)?.abs());
                }
                Ok((dev, bp))
            })
            .collect()
    })?;
    let devs: Vec<Vec<f64>> = stats.iter().map(|v| v.iter().map(|p| p.0).collect()).collect();
    let bps: Vec<Vec<f64>> = stats.iter().map(|v| v.iter().map(|p| p.1).collect()).collect();
    let (md, mb) = (level_medians(&devs, levels.len()), level_medians(&bps, levels.len()));
    let n = ns(&levels);
    let mut table = Table::new(["n", "median_max_deviation", "median_by_parts"]).with_loglog(0);
    for j in 0..n.len() {
        table.push(vec![n[j], md[j], mb[j]]);
    }
    o.report.metric("deviation_slope", loglog_slope(&n, &md));
    o.report
        .check("deterministic", Check::lt("median_max_deviation", *md.last().unwrap(), c.threshold("max_deviation")?));
    o.report.check("deterministic", Check::lt("median_by_parts", *mb.last().unwrap(), c.threshold("by_parts")?));
    o.tables.insert("deterministic".into(), table);
    Ok(())
}

fn ho_max_term(outcome: HoOutcome) -> f64 {
    match outcome {
        HoOutcome::Finite { max_term, .. } => max_term,
        HoOutcome::Overflow { term_abs, .. } => term_abs,
    }
}

/// Starting at the origin the first term divides by `W_0 = 0`; on partitions
/// that skip the origin the largest term is tracked under refinement.
fn ho_divergence(config: &LoadedConfig, s: &IntegralSettings, o: &mut Outcome) -> Result<()> {
    let c = &config.config;
    let levels = sorted_levels(s);
    if levels.len() < 2 {
        return Err(HarnessError::Config("'integrals.levels' needs two or more levels".into()));
    }
    // per seed: (overflowed at step 1 on every level from the origin, max terms per level off the origin)
    let rows: Vec<(bool, Vec<f64>)> = per_seed(s, c.master_seed, |seed| {
        let source = BrownianSource::new(seed, 1, s.horizon)?;
        let mut immediate = true;
        let mut maxima = Vec::with_capacity(levels.len());
        for &level in &levels {
            let full = Partition::dyadic(0.0, s.horizon, level)?;
            let w = BrownianPath::sample(&source, &full)?;
            immediate &= matches!(ho_discretization_sum(&w)?, HoOutcome::Overflow { step: 1, .. });
            let skipped = Partition::new(full.times()[1..].to_vec())?;
            maxima.push(ho_max_term(ho_discretization_sum(&BrownianPath::sample(&source, &skipped)?)?));
        }
        Ok((immediate, maxima))
    })?;
    let fraction = rows.iter().filter(|r| r.0).count() as f64 / s.seeds as f64;
    let maxima: Vec<Vec<f64>> = rows.into_iter().map(|r| r.1).collect();
    let med = level_medians(&maxima, levels.len());
    let n = ns(&levels);
    let mut table = Table::new(["n", "median_max_term"]).with_loglog(0);
    for (nj, m) in n.iter().zip(&med) {
        table.push(vec![*nj, *m]);
    }
    let growth = med.last().unwrap() / med[0];
    o.report.check("ho_origin", Check::ge("origin_overflow_fraction", fraction, c.threshold("overflow_fraction")?));
    o.report.check("ho_refinement", Check::ge("max_term_growth", growth, c.threshold("max_term_growth")?));
    o.tables.insert("ho_divergence".into(), table);
    Ok(())
}
