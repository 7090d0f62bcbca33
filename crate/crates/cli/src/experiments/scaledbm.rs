use noisecalc_core::stoch_integrals::{BrownianPath, InterpretationTag, Partition};

use crate::config::LoadedConfig;
use crate::error::Result;
use crate::report::{Check, ExperimentReport, Outcome, Table};

/// One realisation of `∫ F dW` read at several λ: the sums should agree and
/// satisfy integration by parts.
pub fn run_scaled_bm(config: &LoadedConfig) -> Result<Outcome> {
    let c = &config.config;
    let s = c.scaledbm()?;
    let spec = s.model.to_spec()?.build()?.into_scaled_bm()?;
    let (a, b) = spec.interval();
    let w = BrownianPath::standard(c.master_seed, 1, &Partition::dyadic(a, b, s.level)?)?;
    let base = spec.lambda_integral(&w, InterpretationTag::ITO)?;
    let mut outcome = Outcome::new(ExperimentReport::new("scaledbm", config));
    let r = &mut outcome.report;
    r.note("model", spec.name());
    r.metric("total_variation", spec.total_variation());
    r.metric("ito_integral", base);
    let mut table = Table::new(["lambda", "integral", "deviation", "by_parts_residual"]);
    let (mut dev, mut bp) = (0.0_f64, 0.0_f64);
    for &lambda in &s.interpretations {
        let tag = InterpretationTag::new(lambda)?;
        let v = spec.lambda_integral(&w, tag)?;
        let res = spec.by_parts_residual(&w, tag)?.abs();
        table.push(vec![lambda, v, (v - base).abs(), res]);
        dev = dev.max((v - base).abs());
        bp = bp.max(res);
    }
    r.check("scaled_bm", Check::lt("max_deviation", dev, c.threshold("max_deviation")?));
    r.check("scaled_bm", Check::lt("max_by_parts_residual", bp, c.threshold("by_parts")?));
    outcome.tables.insert("scaled_bm".into(), table);
    Ok(outcome)
}
