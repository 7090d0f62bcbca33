use crate::model_zoo::{BarrierKind, ScalarSdeSpec};
use crate::stoch_integrals::BrownianPath;

use super::path::{PathStatus, SamplePath};
use super::SdeError;

/// Evaluates the closed-form solution on the driver, stopping at the first
/// partition point where the driver has crossed the solution's barrier.
/// Absorbed paths end on the floor; blown-up paths end one point before.
pub fn analytic_path(spec: &ScalarSdeSpec, x0: f64, w: &BrownianPath) -> Result<SamplePath, SdeError> {
    if w.dim() != 1 {
        return Err(SdeError::DimensionMismatch { expected: 1, found: w.dim() });
    }
    spec.check_start(x0)?;
    let closed = spec.closed_form().ok_or_else(|| SdeError::MissingClosedForm(spec.name().to_string()))?;
    let barrier = closed.barrier(x0);
    let times = w.partition().times();
    let w0 = w.value(0)[0];
    let mut states = Vec::with_capacity(times.len());
    states.push(x0);
    let mut status = PathStatus::Alive;
    for j in 1..times.len() {
        let wj = w.value(j)[0] - w0;
        if let Some(b) = barrier.filter(|b| b.crossed(wj)) {
            let (time, step) = (times[j], j);
            match b.kind {
                BarrierKind::BlowUp => status = PathStatus::BlownUp { time, step },
                BarrierKind::Absorption => {
                    states.push(spec.domain_floor().unwrap_or(0.0));
                    status = PathStatus::Absorbed { time, step };
                }
            }
            break;
        }
        states.push(closed.value(x0, wj));
    }
    SamplePath::new(w.partition().clone(), 1, states, status).map(|p| p.with_driver_seed(w.seed()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model_zoo::{make_het_diffusion, make_het_diffusion_noise_only, make_kinetic_energy, ScalarSdeSpec};
    use crate::stoch_integrals::Partition;

    fn path_with(pred: impl Fn(&BrownianPath) -> bool, part: &Partition) -> BrownianPath {
        (0..1000).map(|s| BrownianPath::standard(s, 1, part).unwrap()).find(|w| pred(w)).expect("seed found")
    }

    #[test]
    fn blow_up_at_unit_level() {
        let part = Partition::uniform(0.0, 2.0, 2000).unwrap();
        let w = path_with(|w| w.values().iter().any(|v| *v >= 1.0), &part);
        let hit = w.values().iter().position(|v| *v >= 1.0).unwrap();
        let p = analytic_path(&make_het_diffusion(2.0, 1.0).unwrap(), 1.0, &w).unwrap();
        assert_eq!(p.status(), PathStatus::BlownUp { time: part.times()[hit], step: hit });
        assert_eq!(p.n_steps(), hit - 1);
        assert!(p.states().iter().all(|v| *v > 0.0));
    }

    #[test]
    fn zero_start_stays_at_zero() {
        let part = Partition::uniform(0.0, 1.0, 500).unwrap();
        let w = BrownianPath::standard(3, 1, &part).unwrap();
        let p = analytic_path(&make_het_diffusion(0.75, 1.0).unwrap(), 0.0, &w).unwrap();
        assert!(p.status().is_alive());
        assert!(p.states().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn quarter_exponent_needs_positive_start_in_ito_form() {
        let part = Partition::uniform(0.0, 1.0, 10).unwrap();
        let w = BrownianPath::standard(3, 1, &part).unwrap();
        let r = analytic_path(&make_het_diffusion(0.25, 1.0).unwrap(), 0.0, &w);
        assert!(matches!(r, Err(SdeError::DomainViolation(_))));
        assert!(analytic_path(&make_het_diffusion_noise_only(0.25, 1.0).unwrap(), 0.0, &w).is_ok());
    }

    #[test]
    fn kinetic_energy_formula() {
        let part = Partition::uniform(0.0, 1.0, 100).unwrap();
        let w = BrownianPath::standard(9, 1, &part).unwrap();
        let p = analytic_path(&make_kinetic_energy(2.0).unwrap(), 0.0, &w).unwrap();
        for j in 0..=100 {
            let wj = w.value(j)[0];
            assert!((p.state(j)[0] - 2.0 * wj * wj).abs() < 1e-12);
        }
    }

    #[test]
    fn square_root_paths_stay_nonnegative_and_absorb() {
        let part = Partition::uniform(0.0, 4.0, 4000).unwrap();
        let w = path_with(|w| w.values().iter().any(|v| *v <= -2.0), &part);
        for alpha in [1.0, 0.5, 0.75] {
            let p = analytic_path(&make_het_diffusion(alpha, 1.0).unwrap(), 1.0, &w).unwrap();
            assert!(p.states().iter().all(|v| *v >= 0.0), "alpha {alpha}");
        }
        let p = analytic_path(&make_het_diffusion(0.5, 1.0).unwrap(), 1.0, &w).unwrap();
        assert!(matches!(p.status(), PathStatus::Absorbed { .. }));
        assert_eq!(p.terminal(), &[0.0]);
    }

    #[test]
    fn missing_closed_form() {
        let s = ScalarSdeSpec::new("ou", |x| -x, |_| 1.0);
        let w = BrownianPath::standard(1, 1, &Partition::uniform(0.0, 1.0, 4).unwrap()).unwrap();
        assert!(matches!(analytic_path(&s, 0.0, &w), Err(SdeError::MissingClosedForm(_))));
    }
}
