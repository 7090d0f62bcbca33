use crate::stoch_integrals::Partition;

use super::SdeError;

/// How a simulated or analytic path ended.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PathStatus {
    Alive,
    /// Left every bounded set at `time`, detected at partition index `step`.
    BlownUp {
        time: f64,
        step: usize,
    },
    /// Reached the domain floor at `time`, partition index `step`.
    Absorbed {
        time: f64,
        step: usize,
    },
}

impl PathStatus {
    pub fn is_alive(&self) -> bool {
        matches!(self, PathStatus::Alive)
    }

    pub fn stopping_time(&self) -> Option<f64> {
        match self {
            PathStatus::Alive => None,
            PathStatus::BlownUp { time, .. } | PathStatus::Absorbed { time, .. } => Some(*time),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            PathStatus::Alive => "alive",
            PathStatus::BlownUp { .. } => "blown_up",
            PathStatus::Absorbed { .. } => "absorbed",
        }
    }
}

/// States `X_{t_0}, …, X_{t_m}` on a prefix of a partition, row-major. A path
/// that stopped early holds fewer states than the partition has points.
#[derive(Clone, Debug, PartialEq)]
pub struct SamplePath {
    partition: Partition,
    dim: usize,
    states: Vec<f64>,
    status: PathStatus,
    driver_seed: Option<u64>,
}

impl SamplePath {
    pub fn new(partition: Partition, dim: usize, states: Vec<f64>, status: PathStatus) -> Result<Self, SdeError> {
        if dim == 0 || states.len() % dim != 0 || states.is_empty() {
            return Err(SdeError::DimensionMismatch { expected: dim.max(1), found: states.len() });
        }
        let points = states.len() / dim;
        if points > partition.n_steps() + 1 {
            return Err(SdeError::DimensionMismatch { expected: partition.n_steps() + 1, found: points });
        }
        if status.is_alive() && states.iter().any(|v| !v.is_finite()) {
            return Err(SdeError::NonFiniteState);
        }
        Ok(Self { partition, dim, states, status, driver_seed: None })
    }

    pub fn with_driver_seed(mut self, seed: u64) -> Self {
        self.driver_seed = Some(seed);
        self
    }

    /// Seed of the Brownian realisation that drove the path, if known.
    pub fn driver_seed(&self) -> Option<u64> {
        self.driver_seed
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of produced steps; the last stored state is `state(n_steps())`.
    pub fn n_steps(&self) -> usize {
        self.states.len() / self.dim - 1
    }

    pub fn states(&self) -> &[f64] {
        &self.states
    }

    #[inline]
    pub fn state(&self, j: usize) -> &[f64] {
        &self.states[j * self.dim..(j + 1) * self.dim]
    }

    /// Times of the stored states.
    pub fn times(&self) -> &[f64] {
        &self.partition.times()[..=self.n_steps()]
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn status(&self) -> PathStatus {
        self.status
    }

    /// Last produced state.
    pub fn terminal(&self) -> &[f64] {
        self.state(self.n_steps())
    }

    /// One coordinate over the stored states.
    pub fn component(&self, c: usize) -> Vec<f64> {
        self.states.iter().skip(c).step_by(self.dim).copied().collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prefix_paths_are_accepted() {
        let p = Partition::uniform(0.0, 1.0, 4).unwrap();
        let s = SamplePath::new(p.clone(), 2, vec![0.0; 6], PathStatus::Absorbed { time: 0.5, step: 2 }).unwrap();
        assert_eq!(s.n_steps(), 2);
        assert_eq!(s.times(), &[0.0, 0.25, 0.5]);
        assert_eq!(s.status().stopping_time(), Some(0.5));
        assert!(SamplePath::new(p.clone(), 2, vec![0.0; 5], PathStatus::Alive).is_err());
        assert!(SamplePath::new(p.clone(), 1, vec![0.0; 6], PathStatus::Alive).is_err());
        assert!(SamplePath::new(p, 1, vec![0.0, f64::NAN], PathStatus::Alive).is_err());
    }
}
