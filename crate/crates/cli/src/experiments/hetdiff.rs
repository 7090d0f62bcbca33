use noisecalc_core::model_zoo::make_het_diffusion;
use noisecalc_core::sde_engine::{
    analytic_path, euler_maruyama, interpretation_to_ito, FloorMode, Guards, PathStatus, SdeError,
};
use noisecalc_core::stats::{loglog_slope, mean, median, normal_cdf, proportion_se};
use noisecalc_core::stoch_integrals::{BrownianPath, InterpretationTag, Partition};
use rayon::prelude::*;

use super::replicate_seed;
use crate::config::{DomainSettings, HetDiffSettings, HittingSettings, LoadedConfig, StrongErrorSettings};
use crate::error::{HarnessError, Result};
use crate::report::{Check, ExperimentReport, Outcome, Table};

/// Strong error against the closed-form solution, blow-up and absorption
/// frequencies against hitting probabilities of the driver, and rejection of
/// initial values outside the domain.
pub fn run_het_diffusion_suite(config: &LoadedConfig) -> Result<Outcome> {
    let h = config.config.hetdiff()?;
    let mut outcome = Outcome::new(ExperimentReport::new("hetdiff", config));
    if let Some(s) = &h.strong_error {
        let table = strong_error(config, h, s, &mut outcome.report)?;
        outcome.tables.insert("strong_error".into(), table);
    }
    if let Some(s) = &h.blow_up {
        hitting(config, h, s, "blow_up", &mut outcome.report)?;
    }
    if let Some(s) = &h.absorption {
        hitting(config, h, s, "absorption", &mut outcome.report)?;
    }
    if let Some(s) = &h.domain {
        domain(s, &mut outcome.report)?;
    }
    Ok(outcome)
}

fn strong_error(
    config: &LoadedConfig,
    h: &HetDiffSettings,
    s: &StrongErrorSettings,
    r: &mut ExperimentReport,
) -> Result<Table> {
    let c = &config.config;
    let spec = make_het_diffusion(s.alpha, s.k)?;
    let sde = interpretation_to_ito(spec.clone(), InterpretationTag::ITO);
    let mut levels = s.levels.clone();
    levels.sort_unstable();
    levels.dedup();
    let finest = *levels.last().expect("validated");
    // errors[seed][level]
    let errors: Vec<Vec<f64>> = (0..s.seeds)
        .into_par_iter()
        .map(|i| -> Result<Vec<f64>> {
            let seed = replicate_seed(c.master_seed, 0x5E, i as u64);
            let mut w = BrownianPath::standard(seed, 1, &Partition::dyadic(0.0, h.horizon, finest)?)?;
            let mut out = vec![0.0; levels.len()];
            for (j, level) in levels.iter().enumerate().rev() {
                while w.n_steps() > 1usize << level {
                    w = w.coarsen()?;
                }
                let em = euler_maruyama(&sde, &[s.x0], &w, &Guards::default())?;
                let exact = analytic_path(&spec, s.x0, &w)?;
                out[j] = (em.terminal()[0] - exact.terminal()[0]).abs();
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let n: Vec<f64> = levels.iter().map(|l| (1u64 << l) as f64).collect();
    let mean_err: Vec<f64> =
        (0..levels.len()).map(|j| mean(&errors.iter().map(|e| e[j]).collect::<Vec<_>>())).collect();
    let mut table = Table::new(["n", "mean_abs_error"]).with_loglog(0);
    for (nj, e) in n.iter().zip(&mean_err) {
        table.push(vec![*nj, *e]);
    }
    r.metric("strong_error.alpha", s.alpha);
    r.metric("strong_error.finest", *mean_err.last().unwrap());
    r.check(
        "strong_error",
        Check::within(
            "strong_error.slope",
            loglog_slope(&n, &mean_err),
            c.threshold("slope_min")?,
            c.threshold("slope_max")?,
        ),
    );
    Ok(table)
}

/// Probability that the driver reaches the barrier level `b` by `t`:
/// `2Φ(−|b|/√t)` by the reflection principle.
fn hitting_probability(level: f64, t: f64) -> f64 {
    2.0 * normal_cdf(-level.abs() / t.sqrt())
}

fn hitting(
    config: &LoadedConfig,
    h: &HetDiffSettings,
    s: &HittingSettings,
    name: &str,
    r: &mut ExperimentReport,
) -> Result<()> {
    let c = &config.config;
    let spec = make_het_diffusion(s.alpha, s.k)?;
    let barrier = spec.closed_form().and_then(|cf| cf.barrier(s.x0)).ok_or_else(|| {
        HarnessError::Config(format!("hetdiff.{name}: α = {} from x0 = {} has no barrier", s.alpha, s.x0))
    })?;
    let reference = hitting_probability(barrier.level, h.horizon);
    let sde = interpretation_to_ito(spec.clone(), InterpretationTag::ITO);
    let guards = Guards::for_model(&sde, FloorMode::Absorb);
    let partition = Partition::dyadic(0.0, h.horizon, s.level)?;
    let stopped = |p: PathStatus| match name {
        "blow_up" => matches!(p, PathStatus::BlownUp { .. }),
        _ => matches!(p, PathStatus::Absorbed { .. }),
    };
    // per path: (exact stopped, Euler stopped, |τ_Euler − τ_exact| when both stopped)
    let rows: Vec<(bool, bool, Option<f64>)> = (0..s.paths)
        .into_par_iter()
        .map(|i| -> Result<(bool, bool, Option<f64>)> {
            let seed = replicate_seed(c.master_seed, 0x4D, i as u64);
            let w = BrownianPath::standard(seed, 1, &partition)?;
            let exact = analytic_path(&spec, s.x0, &w)?.status();
            let em = euler_maruyama(&sde, &[s.x0], &w, &guards)?.status();
            let gap = match (exact.stopping_time(), em.stopping_time()) {
                (Some(a), Some(b)) if stopped(exact) && stopped(em) => Some((a - b).abs()),
                _ => None,
            };
            Ok((stopped(exact), stopped(em), gap))
        })
        .collect::<Result<_>>()?;
    let n = s.paths as f64;
    let fraction = rows.iter().filter(|r| r.0).count() as f64 / n;
    let em_fraction = rows.iter().filter(|r| r.1).count() as f64 / n;
    let gaps: Vec<f64> = rows.iter().filter_map(|r| r.2).collect();
    let se = proportion_se(reference, s.paths);
    r.metric(format!("{name}.alpha"), s.alpha);
    r.metric(format!("{name}.reference"), reference);
    r.metric(format!("{name}.fraction"), fraction);
    r.metric(format!("{name}.standard_error"), se);
    r.metric(format!("{name}.em_fraction"), em_fraction);
    if !gaps.is_empty() {
        r.metric(format!("{name}.median_time_gap"), median(&gaps));
    }
    r.check(
        name,
        Check::le(format!("{name}.z_score"), (fraction - reference).abs() / se, c.threshold("hitting_se_multiple")?),
    );
    Ok(())
}

fn domain(s: &DomainSettings, r: &mut ExperimentReport) -> Result<()> {
    let spec = make_het_diffusion(s.alpha, s.k)?;
    let sde = interpretation_to_ito(spec, InterpretationTag::ITO);
    let w = BrownianPath::standard(0, 1, &Partition::dyadic(0.0, 1.0, 4)?)?;
    let rejected = match euler_maruyama(&sde, &[s.x0], &w, &Guards::default()) {
        Err(SdeError::DomainViolation(msg)) => {
            r.note("domain.error", format!("DomainViolation: {msg}"));
            1.0
        }
        Err(e) => return Err(e.into()),
        Ok(_) => {
            r.note("domain.error", "accepted");
            0.0
        }
    };
    r.metric("domain.alpha", s.alpha);
    r.metric("domain.x0", s.x0);
    r.check("domain", Check::ge("domain.rejected", rejected, 1.0));
    Ok(())
}
