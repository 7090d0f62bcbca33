use super::{BrownianPath, IntegralError};

/// Per-term magnitude beyond which the sum is declared divergent.
pub const HO_OVERFLOW_THRESHOLD: f64 = 1e12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum HoOutcome {
    Finite {
        sum: f64,
        /// Largest `|term_j|` over the partition.
        max_term: f64,
    },
    Overflow {
        /// 1-based index of the offending interval.
        step: usize,
        /// `|W_{t_{j-1}}|` in the denominator.
        w_prev_abs: f64,
        term_abs: f64,
    },
}

impl HoOutcome {
    pub fn is_overflow(&self) -> bool {
        matches!(self, HoOutcome::Overflow { .. })
    }
}

/// `Σ_j ½ (W_{t_j}² / W_{t_{j-1}} + W_{t_{j-1}}) (W_{t_j} − W_{t_{j-1}})`,
/// stopping at the first term whose magnitude exceeds
/// [`HO_OVERFLOW_THRESHOLD`] (a zero denominator counts as overflow).
pub fn ho_discretization_sum(w: &BrownianPath) -> Result<HoOutcome, IntegralError> {
    if w.dim() != 1 {
        return Err(IntegralError::DimensionMismatch { expected: 1, found: w.dim() });
    }
    let vals = w.values();
    let mut sum = 0.0;
    let mut max_term = 0.0_f64;
    for j in 1..vals.len() {
        let (prev, cur) = (vals[j - 1], vals[j]);
        let term = 0.5 * (cur * cur / prev + prev) * (cur - prev);
        if !term.is_finite() || term.abs() > HO_OVERFLOW_THRESHOLD {
            return Ok(HoOutcome::Overflow { step: j, w_prev_abs: prev.abs(), term_abs: term.abs() });
        }
        sum += term;
        max_term = max_term.max(term.abs());
    }
    Ok(HoOutcome::Finite { sum, max_term })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stoch_integrals::{BrownianSource, Partition};

    #[test]
    fn origin_start_overflows_immediately() {
        for seed in 0..20 {
            let w = BrownianPath::standard(seed, 1, &Partition::dyadic(0.0, 1.0, 8).unwrap()).unwrap();
            match ho_discretization_sum(&w).unwrap() {
                HoOutcome::Overflow { step, w_prev_abs, .. } => {
                    assert_eq!(step, 1);
                    assert_eq!(w_prev_abs, 0.0);
                }
                other => panic!("expected overflow, got {other:?}"),
            }
        }
    }

    #[test]
    fn window_away_from_zero_is_finite() {
        // pick a realisation whose path stays clear of zero on [1, 2]
        let part = Partition::uniform(1.0, 2.0, 256).unwrap();
        let w = (0..200)
            .map(|s| BrownianPath::sample(&BrownianSource::new(s, 1, 2.0).unwrap(), &part).unwrap())
            .find(|w| w.values().iter().all(|v| v.abs() > 0.2))
            .expect("some realisation avoids zero");
        match ho_discretization_sum(&w).unwrap() {
            HoOutcome::Finite { sum, max_term } => {
                assert!(sum.is_finite());
                assert!(max_term < HO_OVERFLOW_THRESHOLD);
            }
            other => panic!("expected finite sum, got {other:?}"),
        }
    }
}
