use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use noisecalc_core::fokker_planck::{
    drift_for_ito_form, histogram_density, l1_distance, solve_pde, stable_step, DensityGrid, GridAxis, PdeForm,
};
use noisecalc_core::sde_engine::{interpretation_to_ito, isotropic_gaussian, simulate_ensemble, Guards};
use noisecalc_core::stats::{loglog_slope, mean, std_dev};
use noisecalc_core::stoch_integrals::{InterpretationTag, Partition};
use noisecalc_core::tensor_field::{box_grid, ito_correction_h, DerivativeMode, TensorFieldModel, VectorField};

use super::{replicate_seed, tensor_model};
use crate::config::{DensityCheck, DensityMode, DensitySettings, DriftChoice, LoadedConfig, PdeReference};
use crate::error::{HarnessError, Result};
use crate::report::{Check, ExperimentReport, Outcome, Table};

/// Width, in cells, of the boundary layer whose mass is monitored.
const BOUNDARY_LAYER: usize = 2;

/// PDE form equivalence under grid refinement, or Monte Carlo histograms
/// against PDE solutions with a shard bootstrap for the sampling error.
pub fn run_density_crossval(config: &LoadedConfig) -> Result<Outcome> {
    let d = config.config.density()?;
    match d.mode {
        DensityMode::FormEquivalence => form_equivalence(config, d),
        DensityMode::Crossval => crossval(config, d),
    }
}

fn axes(d: &DensitySettings, dim: usize, cells: usize) -> Result<Vec<GridAxis>> {
    Ok(vec![GridAxis::symmetric(d.half_width, cells)?; dim])
}

fn initial_mean(d: &DensitySettings, dim: usize) -> Result<Vec<f64>> {
    let m = d.initial_mean.clone().unwrap_or_else(|| vec![0.0; dim]);
    if m.len() != dim {
        return Err(HarnessError::Config(format!("'density.initial_mean' must have length {dim}")));
    }
    Ok(m)
}

fn solve(forms: &[&PdeForm], u0: &DensityGrid, t: f64) -> Result<Vec<DensityGrid>> {
    let mut dt = f64::INFINITY;
    for f in forms {
        dt = dt.min(stable_step(f, u0)?);
    }
    forms.iter().map(|f| Ok(solve_pde(f, u0, t, dt)?)).collect()
}

fn check_boundary(config: &LoadedConfig, r: &mut ExperimentReport, name: &str, u: &DensityGrid) {
    let mass = u.boundary_mass(BOUNDARY_LAYER);
    match config.config.thresholds.get("boundary_mass") {
        Some(t) => r.check("boundary_mass", Check::le(format!("{name}.boundary_mass"), mass, *t)),
        None => r.metric(format!("{name}.boundary_mass"), mass),
    }
}

fn form_equivalence(config: &LoadedConfig, d: &DensitySettings) -> Result<Outcome> {
    let c = &config.config;
    let model = tensor_model(&d.model)?;
    let dim = model.dim();
    let mean0 = initial_mean(d, dim)?;
    let fick = PdeForm::fick(&model);
    let ito = PdeForm::ito_standard(&model);
    let mut outcome = Outcome::new(ExperimentReport::new("density", config));
    let r = &mut outcome.report;
    let mut table = Table::new(["cells", "l1_gap"]).with_loglog(0);
    let (mut cells, mut gaps) = (Vec::new(), Vec::new());
    for k in 0..=d.refinements {
        let n = d.resolution << k;
        let u0 = DensityGrid::gaussian(axes(d, dim, n)?, &mean0, d.initial_spread)?;
        let sol = solve(&[&fick, &ito], &u0, d.horizon)?;
        let gap = l1_distance(&sol[0], &sol[1])?;
        r.metric(format!("l1_gap.cells{n}"), gap);
        table.push(vec![n as f64, gap]);
        cells.push(n as f64);
        gaps.push(gap);
        if k == 0 {
            check_boundary(config, r, "fick", &sol[0]);
            check_boundary(config, r, "ito_standard", &sol[1]);
            let [f, i]: [DensityGrid; 2] = sol.try_into().expect("two solutions");
            outcome.densities.insert("fick".into(), f);
            outcome.densities.insert("ito_standard".into(), i);
        }
    }
    let order = if gaps.len() > 1 { -loglog_slope(&cells, &gaps) } else { f64::NAN };
    r.note("model", model.name());
    r.check("form_equivalence", Check::lt("l1_gap", gaps[0], c.threshold("form_gap")?));
    r.check("form_equivalence", Check::ge("refinement_order", order, c.threshold("min_order")?));
    outcome.tables.insert("form_gap".into(), table);
    Ok(outcome)
}

/// `b + ∇σ:σᵀ`, after confirming on `points` that both routes to the
/// correction agree.
fn kinetic_drift(model: &TensorFieldModel, points: &[Vec<f64>]) -> Result<VectorField> {
    for x in points {
        ito_correction_h(model, x, DerivativeMode::Analytic)?;
    }
    let m = model.clone();
    Ok(Arc::new(move |x: &[f64], out: &mut [f64]| {
        m.drift_into(x, out);
        match ito_correction_h(&m, x, DerivativeMode::Analytic) {
            Ok(h) => out.iter_mut().zip(h.value()).for_each(|(o, v)| *o += v),
            Err(_) => out.iter_mut().for_each(|o| *o = f64::NAN),
        }
    }))
}

fn reference_form(model: &TensorFieldModel, reference: PdeReference, points: &[Vec<f64>]) -> Result<PdeForm> {
    Ok(match reference {
        PdeReference::Fick => PdeForm::fick(model),
        PdeReference::ItoStandard => PdeForm::ito_standard(model),
        PdeReference::ItoKinetic => PdeForm::ito_standard_with_drift(model, kinetic_drift(model, points)?),
    })
}

/// Full-ensemble and per-shard L1 distances of one run to one reference.
struct Distances {
    full: f64,
    shards: Vec<f64>,
}

fn crossval(config: &LoadedConfig, d: &DensitySettings) -> Result<Outcome> {
    let c = &config.config;
    let model = tensor_model(&d.model)?;
    let dim = model.dim();
    let mean0 = initial_mean(d, dim)?;
    let grid_axes = axes(d, dim, d.resolution)?;
    let fine_axes = axes(d, dim, 2 * d.resolution)?;
    let u0 = DensityGrid::gaussian(grid_axes.clone(), &mean0, d.initial_spread)?;
    let u0_fine = DensityGrid::gaussian(fine_axes, &mean0, d.initial_spread)?;
    let mut outcome = Outcome::new(ExperimentReport::new("density", config));
    let r = &mut outcome.report;
    r.note("model", model.name());

    let references: BTreeSet<PdeReference> = d
        .checks
        .iter()
        .flat_map(|ch| match ch {
            DensityCheck::Match { reference, .. } => vec![*reference],
            DensityCheck::Separation { far, near, .. } => vec![*far, *near],
        })
        .collect();
    let check_points = box_grid(dim, d.half_width, 2 * d.resolution + 1);
    let mut pde = BTreeMap::new();
    let mut gaps = BTreeMap::new();
    for &reference in &references {
        let form = reference_form(&model, reference, &check_points)?;
        let u = solve(&[&form], &u0, d.horizon)?.remove(0);
        let fine = solve(&[&form], &u0_fine, d.horizon)?.remove(0);
        let gap = l1_distance(&u, &fine.restrict(2)?)?;
        let name = reference.name();
        r.metric(format!("pde.{name}.refinement_gap"), gap);
        check_boundary(config, r, &format!("pde.{name}"), &u);
        gaps.insert(reference, gap);
        outcome.densities.insert(format!("pde_{name}"), u.clone());
        pde.insert(reference, u);
    }

    let steps = (d.horizon / d.dt.expect("validated")).round().max(1.0) as usize;
    let partition = Partition::uniform(0.0, d.horizon, steps)?;
    let n_paths = d.paths.expect("validated");
    let per_shard = n_paths / d.shards;
    let mut distances: BTreeMap<(String, PdeReference), Distances> = BTreeMap::new();
    for (ri, run) in d.runs.iter().enumerate() {
        let simulated = match run.drift {
            DriftChoice::Raw => model.clone(),
            DriftChoice::HalfDivergence => model.clone().with_drift_field(drift_for_ito_form(&model)),
        };
        let sde = interpretation_to_ito(simulated, InterpretationTag::new(run.interpretation)?);
        let seed = replicate_seed(c.master_seed, 0xD5, ri as u64);
        let ens = simulate_ensemble(
            &sde,
            isotropic_gaussian(mean0.clone(), d.initial_spread),
            n_paths,
            seed,
            &partition,
            &Guards::default(),
        )?;
        let label = &run.label;
        r.metric(format!("{label}.stopped_paths"), (ens.tally.blown_up + ens.tally.absorbed) as f64);
        let samples: Vec<f64> = ens.alive_states().flatten().copied().collect();
        let full = histogram_density(&samples, grid_axes.clone())?;
        r.metric(format!("{label}.leak_fraction"), full.leak_fraction());
        let shard_hists = samples
            .chunks(per_shard * dim)
            .take(d.shards)
            .map(|s| Ok(histogram_density(s, grid_axes.clone())?.density))
            .collect::<Result<Vec<_>>>()?;
        for (&reference, u) in &pde {
            let dist = Distances {
                full: l1_distance(&full.density, u)?,
                shards: shard_hists.iter().map(|h| l1_distance(h, u)).collect::<std::result::Result<_, _>>()?,
            };
            let key = format!("{label}.{}", reference.name());
            r.metric(format!("{key}.l1"), dist.full);
            r.metric(format!("{key}.shard_mean"), mean(&dist.shards));
            r.metric(format!("{key}.shard_sd"), std_dev(&dist.shards));
            distances.insert((label.clone(), reference), dist);
        }
        outcome.densities.insert(format!("mc_{label}"), full.density);
    }

    let k_sd = c.threshold("sampling_sd_multiple")?;
    for check in &d.checks {
        match check {
            DensityCheck::Match { run, reference } => {
                let dist = &distances[&(run.clone(), *reference)];
                sampling_check(
                    r,
                    &format!("match.{run}.{}", reference.name()),
                    run,
                    *reference,
                    dist,
                    gaps[reference],
                    k_sd,
                    d.shards,
                );
            }
            DensityCheck::Separation { run, far, near } => {
                let criterion = format!("separation.{run}");
                let (df, dn) = (&distances[&(run.clone(), *far)], &distances[&(run.clone(), *near)]);
                let ratio = df.full / dn.full;
                let shard_ratios: Vec<f64> = df.shards.iter().zip(&dn.shards).map(|(a, b)| a / b).collect();
                let ratio_sd = std_dev(&shard_ratios);
                r.metric(format!("{run}.separation_ratio.shard_mean"), mean(&shard_ratios));
                r.metric(format!("{run}.separation_ratio.shard_sd"), ratio_sd);
                r.check(
                    &criterion,
                    Check::ge(format!("{run}.separation_ratio"), ratio, c.threshold("separation_ratio")?),
                );
                // distance of the ratio from 1 in units of its bootstrap SD at full size
                let z = (ratio - 1.0) / (ratio_sd / (d.shards as f64).sqrt());
                r.check(&format!("separation_significance.{run}"), Check::ge(format!("{run}.separation_z"), z, k_sd));
                sampling_check(r, &criterion, run, *near, dn, gaps[near], k_sd, d.shards);
            }
        }
    }
    Ok(outcome)
}

/// The histogram noise of a shard is `√shards` times that of the full
/// ensemble, so shard statistics are rescaled before comparison: the full
/// ensemble is within sampling error when `|L1 − m/√S| ≤ k·s/√S + gap`.
#[allow(clippy::too_many_arguments)]
fn sampling_check(
    r: &mut ExperimentReport,
    criterion: &str,
    run: &str,
    reference: PdeReference,
    dist: &Distances,
    gap: f64,
    k_sd: f64,
    shards: usize,
) {
    let key = format!("{run}.{}", reference.name());
    let (m, s) = (mean(&dist.shards), std_dev(&dist.shards));
    let scale = (shards as f64).sqrt();
    r.metric(format!("{key}.noise_floor"), m / scale);
    r.metric(format!("{key}.unscaled_excess"), (dist.full - m).abs());
    r.metric(format!("{key}.unscaled_allowance"), k_sd * s + gap);
    r.check(
        criterion,
        Check::le(format!("{key}.sampling_excess"), (dist.full - m / scale).abs(), k_sd * s / scale + gap),
    );
}
