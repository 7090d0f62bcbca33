use std::fmt;

use super::IntegralError;

/// Evaluation point rule `t* = t_{j-1} + λ (t_j − t_{j-1})` for the λ-family
/// of stochastic integrals.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct InterpretationTag {
    lambda: f64,
}

impl InterpretationTag {
    pub const ITO: Self = Self { lambda: 0.0 };
    pub const STRATONOVICH: Self = Self { lambda: 0.5 };
    pub const FEHLBERG: Self = Self { lambda: 255.0 / 512.0 };
    /// Hänggi-Klimontovich (kinetic) interpretation.
    pub const HK: Self = Self { lambda: 1.0 };

    pub fn new(lambda: f64) -> Result<Self, IntegralError> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(IntegralError::InvalidLambda(lambda));
        }
        Ok(Self { lambda })
    }

    #[inline]
    pub fn lambda(self) -> f64 {
        self.lambda
    }

    pub fn name(self) -> String {
        let l = self.lambda;
        if l == 0.0 {
            "ito".into()
        } else if l == 0.5 {
            "stratonovich".into()
        } else if l == 255.0 / 512.0 {
            "fehlberg".into()
        } else if l == 1.0 {
            "hk".into()
        } else {
            format!("lambda={l}")
        }
    }

    /// `t*` for the interval `[left, right]`, exact at the endpoints.
    #[inline]
    pub fn point(self, left: f64, right: f64) -> f64 {
        if self.lambda == 0.0 {
            left
        } else if self.lambda == 1.0 {
            right
        } else {
            left + self.lambda * (right - left)
        }
    }
}

impl fmt::Display for InterpretationTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

/// Strictly increasing time grid `t_0 < t_1 < … < t_n`.
#[derive(Clone, Debug, PartialEq)]
pub struct Partition {
    times: Vec<f64>,
}

impl Partition {
    pub fn new(times: Vec<f64>) -> Result<Self, IntegralError> {
        if times.len() < 2 {
            return Err(IntegralError::InvalidPartition("need at least two points".into()));
        }
        if times.iter().any(|t| !t.is_finite()) {
            return Err(IntegralError::InvalidPartition("non-finite time".into()));
        }
        if let Some(w) = times.windows(2).position(|w| w[1] <= w[0]) {
            return Err(IntegralError::InvalidPartition(format!("times not strictly increasing at index {}", w + 1)));
        }
        Ok(Self { times })
    }

    /// `n` equal steps on `[a, b]`.
    pub fn uniform(a: f64, b: f64, n: usize) -> Result<Self, IntegralError> {
        if n == 0 || !(b > a) {
            return Err(IntegralError::InvalidPartition(format!(
                "uniform grid needs n >= 1 and b > a (n={n}, a={a}, b={b})"
            )));
        }
        let h = b - a;
        let mut times: Vec<f64> = (0..=n).map(|j| a + h * (j as f64 / n as f64)).collect();
        times[n] = b;
        Self::new(times)
    }

    /// `2^level` equal steps on `[a, b]`.
    pub fn dyadic(a: f64, b: f64, level: u32) -> Result<Self, IntegralError> {
        Self::uniform(a, b, 1usize << level)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn start(&self) -> f64 {
        self.times[0]
    }

    pub fn end(&self) -> f64 {
        *self.times.last().unwrap()
    }

    /// Number of intervals.
    pub fn n_steps(&self) -> usize {
        self.times.len() - 1
    }

    #[inline]
    pub fn step(&self, j: usize) -> f64 {
        self.times[j + 1] - self.times[j]
    }

    pub fn diameter(&self) -> f64 {
        self.times.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
    }

    /// One evaluation point per interval.
    pub fn lambda_points(&self, tag: InterpretationTag) -> Vec<f64> {
        self.times.windows(2).map(|w| tag.point(w[0], w[1])).collect()
    }

    /// Inserts the midpoint of every interval.
    pub fn refine(&self) -> Self {
        let mut times = Vec::with_capacity(2 * self.times.len() - 1);
        for w in self.times.windows(2) {
            times.push(w[0]);
            times.push(w[0] + 0.5 * (w[1] - w[0]));
        }
        times.push(self.end());
        Self { times }
    }

    /// Keeps every other point; requires an even number of intervals.
    pub fn coarsen(&self) -> Result<Self, IntegralError> {
        if self.n_steps() % 2 != 0 || self.n_steps() < 2 {
            return Err(IntegralError::InvalidPartition("coarsening needs an even number of intervals".into()));
        }
        Ok(Self { times: self.times.iter().step_by(2).copied().collect() })
    }

    /// Whether every point of `coarse` is also a point of `self`.
    pub fn contains_partition(&self, coarse: &Partition) -> bool {
        coarse.times.iter().all(|t| self.times.binary_search_by(|p| p.total_cmp(t)).is_ok())
    }

    /// Composite trapezoidal rule for samples `f(t_j)`.
    pub fn trapezoid(&self, samples: &[f64]) -> f64 {
        self.times.windows(2).zip(samples.windows(2)).map(|(t, f)| 0.5 * (t[1] - t[0]) * (f[0] + f[1])).sum()
    }
}
