use std::fmt;
use std::sync::Arc;

use super::scalar::ScalarFn;
use super::ModelError;
use crate::stoch_integrals::{
    by_parts_residual, deterministic_lambda_integral, BrownianPath, IntegralError, InterpretationTag,
};

/// Grid levels on which the total variation of the amplitude is estimated.
const TV_LEVELS: [u32; 4] = [11, 12, 13, 14];
/// Growth factor between consecutive levels read as divergence.
const TV_GROWTH_LIMIT: f64 = 1.2;

/// Scaled Brownian motion `dX = F(t) dW`: the solution is the Wiener
/// integral of a deterministic amplitude of bounded variation.
#[derive(Clone)]
pub struct ScaledBmSpec {
    name: String,
    amplitude: ScalarFn,
    start: f64,
    end: f64,
    total_variation: f64,
}

impl fmt::Debug for ScaledBmSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScaledBmSpec")
            .field("name", &self.name)
            .field("interval", &(self.start, self.end))
            .field("total_variation", &self.total_variation)
            .finish()
    }
}

fn grid_variation(f: &dyn Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let mut prev = f(a);
    let mut tv = 0.0;
    for j in 1..=n {
        let t = if j == n { b } else { a + (b - a) * (j as f64 / n as f64) };
        let v = f(t);
        tv += (v - prev).abs();
        prev = v;
    }
    tv
}

/// Validates `F` on `[a, b]`: finite values and a grid total variation that
/// settles under refinement.
pub fn make_scaled_bm(
    name: impl Into<String>,
    amplitude: impl Fn(f64) -> f64 + Send + Sync + 'static,
    a: f64,
    b: f64,
) -> Result<ScaledBmSpec, ModelError> {
    let name = name.into();
    if !(a.is_finite() && b.is_finite() && b > a) {
        return Err(ModelError::param("interval", format!("need finite a < b, got [{a}, {b}]")));
    }
    let n_max = 1usize << TV_LEVELS[TV_LEVELS.len() - 1];
    if let Some(j) = (0..=n_max).find(|j| !amplitude(a + (b - a) * (*j as f64 / n_max as f64)).is_finite()) {
        return Err(ModelError::param("F", format!("non-finite value at grid point {j}")));
    }
    let tvs: Vec<f64> = TV_LEVELS.iter().map(|l| grid_variation(&amplitude, a, b, 1usize << l)).collect();
    for w in tvs.windows(2).skip(1) {
        if w[0] > 0.0 && w[1] / w[0] > TV_GROWTH_LIMIT {
            return Err(ModelError::param(
                "F",
                format!("grid total variation grows from {} to {} under refinement", w[0], w[1]),
            ));
        }
    }
    Ok(ScaledBmSpec { name, amplitude: Arc::new(amplitude), start: a, end: b, total_variation: tvs[tvs.len() - 1] })
}

/// `F(t) = t^H`, `H > 0`.
pub fn power_law(h: f64, a: f64, b: f64) -> Result<ScaledBmSpec, ModelError> {
    if !(h > 0.0) {
        return Err(ModelError::param("hurst", format!("exponent must be positive, got {h}")));
    }
    if a < 0.0 {
        return Err(ModelError::param("interval", "power laws need a >= 0"));
    }
    make_scaled_bm(format!("power_law(H={h})"), move |t| t.powf(h), a, b)
}

/// `F(t) = c₀ + c₁ t`.
pub fn linear(c0: f64, c1: f64, a: f64, b: f64) -> Result<ScaledBmSpec, ModelError> {
    make_scaled_bm(format!("linear({c0}+{c1}t)"), move |t| c0 + c1 * t, a, b)
}

/// `F(t) = exp(r t)`.
pub fn exponential(rate: f64, a: f64, b: f64) -> Result<ScaledBmSpec, ModelError> {
    make_scaled_bm(format!("exponential({rate})"), move |t| (rate * t).exp(), a, b)
}

impl ScaledBmSpec {
    pub fn name(&self) -> &str {
        &self.name
    }

    #[inline]
    pub fn amplitude(&self, t: f64) -> f64 {
        (self.amplitude)(t)
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.start, self.end)
    }

    /// Grid estimate on the finest validation level.
    pub fn total_variation(&self) -> f64 {
        self.total_variation
    }

    /// `Σ F(t*_j) ΔW_j`.
    pub fn lambda_integral(&self, w: &BrownianPath, tag: InterpretationTag) -> Result<f64, IntegralError> {
        deterministic_lambda_integral(|t| self.amplitude(t), w, tag)
    }

    /// Integration-by-parts residual of the λ-sum.
    pub fn by_parts_residual(&self, w: &BrownianPath, tag: InterpretationTag) -> Result<f64, IntegralError> {
        by_parts_residual(|t| self.amplitude(t), w, tag)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stoch_integrals::Partition;

    #[test]
    fn unit_amplitude_gives_the_driver() {
        let s = linear(1.0, 0.0, 0.0, 1.0).unwrap();
        let w = BrownianPath::standard(3, 1, &Partition::dyadic(0.0, 1.0, 8).unwrap()).unwrap();
        let i = s.lambda_integral(&w, InterpretationTag::STRATONOVICH).unwrap();
        assert!((i - w.value(256)[0]).abs() < 1e-12);
        assert!((s.total_variation()).abs() < 1e-15);
    }

    #[test]
    fn linear_amplitude_by_parts() {
        // ∫ t dW = W₁ − Σ W_{t_j} Δt on the grid
        let s = linear(0.0, 1.0, 0.0, 1.0).unwrap();
        let w = BrownianPath::standard(4, 1, &Partition::dyadic(0.0, 1.0, 12).unwrap()).unwrap();
        let r = s.by_parts_residual(&w, InterpretationTag::ITO).unwrap();
        assert!(r.abs() < 1e-12);
        assert!((s.total_variation() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unbounded_variation_rejected() {
        // sin(1/t) has unbounded variation on [0, 1]
        let r = make_scaled_bm("osc", |t: f64| if t == 0.0 { 0.0 } else { (1.0 / t).sin() }, 0.0, 1.0);
        assert!(matches!(r, Err(ModelError::ParamViolation { .. })), "{r:?}");
        assert!(power_law(0.5, 0.0, 1.0).is_ok());
        assert!(power_law(-0.5, 0.0, 1.0).is_err());
    }
}
