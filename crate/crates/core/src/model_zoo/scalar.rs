use std::fmt;
use std::sync::Arc;

use super::ModelError;
use crate::tensor_field::fd_step;

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
type SolutionFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
type BarrierFn = Arc<dyn Fn(f64) -> Option<Barrier> + Send + Sync>;
type StartCheck = Arc<dyn Fn(f64) -> Result<(), String> + Send + Sync>;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BarrierKind {
    /// The solution leaves every bounded set.
    BlowUp,
    /// The solution reaches the domain floor.
    Absorption,
}

/// Level of the driving Brownian motion at which a closed-form solution stops.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Barrier {
    pub level: f64,
    /// Crossing from below (`W ≥ level`) when true, from above otherwise.
    pub upper: bool,
    pub kind: BarrierKind,
}

impl Barrier {
    #[inline]
    pub fn crossed(&self, w: f64) -> bool {
        if self.upper {
            w >= self.level
        } else {
            w <= self.level
        }
    }
}

/// Solution `X_t = S(x₀, W_t)` of a scalar SDE as a function of the driver's
/// current value, valid up to the barrier's hitting time.
#[derive(Clone)]
pub struct ClosedForm {
    solution: SolutionFn,
    barrier: BarrierFn,
}

impl ClosedForm {
    pub fn new(
        solution: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        barrier: impl Fn(f64) -> Option<Barrier> + Send + Sync + 'static,
    ) -> Self {
        Self { solution: Arc::new(solution), barrier: Arc::new(barrier) }
    }

    #[inline]
    pub fn value(&self, x0: f64, w: f64) -> f64 {
        (self.solution)(x0, w)
    }

    pub fn barrier(&self, x0: f64) -> Option<Barrier> {
        (self.barrier)(x0)
    }
}

/// One-dimensional SDE `dX = b(X) dt + s(X) dW`, with the interpretation of
/// the stochastic term fixed by whoever simulates it.
#[derive(Clone)]
pub struct ScalarSdeSpec {
    name: String,
    drift: ScalarFn,
    noise_amp: ScalarFn,
    noise_slope: Option<ScalarFn>,
    noise_product: Option<ScalarFn>,
    domain_floor: Option<f64>,
    start_check: Option<StartCheck>,
    closed_form: Option<ClosedForm>,
}

impl fmt::Debug for ScalarSdeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarSdeSpec")
            .field("name", &self.name)
            .field("domain_floor", &self.domain_floor)
            .field("closed_form", &self.closed_form.is_some())
            .finish()
    }
}

impl ScalarSdeSpec {
    pub fn new(
        name: impl Into<String>,
        drift: impl Fn(f64) -> f64 + Send + Sync + 'static,
        noise_amp: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            drift: Arc::new(drift),
            noise_amp: Arc::new(noise_amp),
            noise_slope: None,
            noise_product: None,
            domain_floor: None,
            start_check: None,
            closed_form: None,
        }
    }

    /// Analytic `s'(x)`.
    pub fn with_noise_slope(mut self, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.noise_slope = Some(Arc::new(f));
        self
    }

    /// Analytic `s(x)s'(x)`, used where the product stays finite although `s'`
    /// does not (square-root type amplitudes at the floor).
    pub fn with_noise_product(mut self, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.noise_product = Some(Arc::new(f));
        self
    }

    pub fn with_domain_floor(mut self, floor: f64) -> Self {
        self.domain_floor = Some(floor);
        self
    }

    pub fn with_start_check(mut self, f: impl Fn(f64) -> Result<(), String> + Send + Sync + 'static) -> Self {
        self.start_check = Some(Arc::new(f));
        self
    }

    pub fn with_closed_form(mut self, c: ClosedForm) -> Self {
        self.closed_form = Some(c);
        self
    }

    /// Same amplitude with a different drift; the closed form is dropped.
    pub fn with_drift(mut self, name: impl Into<String>, drift: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.name = name.into();
        self.drift = Arc::new(drift);
        self.closed_form = None;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    #[inline]
    pub fn drift(&self, x: f64) -> f64 {
        (self.drift)(x)
    }

    #[inline]
    pub fn noise_amp(&self, x: f64) -> f64 {
        (self.noise_amp)(x)
    }

    /// `s'(x)`, analytic if supplied, else a central difference.
    pub fn noise_slope(&self, x: f64) -> f64 {
        match &self.noise_slope {
            Some(f) => f(x),
            None => {
                let h = fd_step(x);
                let (xp, xm) = (x + h, x - h);
                (self.noise_amp(xp) - self.noise_amp(xm)) / (xp - xm)
            }
        }
    }

    /// `s(x)s'(x)`, the Itô correction per unit λ.
    pub fn noise_product(&self, x: f64) -> f64 {
        match &self.noise_product {
            Some(f) => f(x),
            None => self.noise_amp(x) * self.noise_slope(x),
        }
    }

    pub fn domain_floor(&self) -> Option<f64> {
        self.domain_floor
    }

    pub fn closed_form(&self) -> Option<&ClosedForm> {
        self.closed_form.as_ref()
    }

    /// Rejects initial values for which the equation is not posed.
    pub fn check_start(&self, x0: f64) -> Result<(), ModelError> {
        if !x0.is_finite() {
            return Err(ModelError::DomainViolation(format!("{}: non-finite initial value", self.name)));
        }
        if let Some(floor) = self.domain_floor {
            if x0 < floor {
                return Err(ModelError::DomainViolation(format!(
                    "{}: initial value {x0} below domain floor {floor}",
                    self.name
                )));
            }
        }
        match &self.start_check {
            Some(f) => f(x0).map_err(|m| ModelError::DomainViolation(format!("{}: {m}", self.name))),
            None => Ok(()),
        }
    }
}

/// Exponents with a closed-form solution for the heterogeneous diffusion model.
pub const STUDIED_EXPONENTS: [f64; 5] = [1.0, 2.0, 0.5, 0.75, 0.25];

#[inline]
fn pos_pow(x: f64, p: f64) -> f64 {
    x.max(0.0).powf(p)
}

fn het_closed_form(alpha: f64, k: f64) -> Option<ClosedForm> {
    let absorb = |level: f64| Some(Barrier { level, upper: false, kind: BarrierKind::Absorption });
    if alpha == 1.0 {
        Some(ClosedForm::new(move |x0, w| x0 * (k * w).exp(), |_| None))
    } else if alpha == 2.0 {
        Some(ClosedForm::new(
            move |x0, w| if x0 == 0.0 { 0.0 } else { 1.0 / (1.0 / x0 - k * w) },
            move |x0| (x0 > 0.0).then(|| Barrier { level: 1.0 / (x0 * k), upper: true, kind: BarrierKind::BlowUp }),
        ))
    } else if alpha == 0.5 {
        Some(ClosedForm::new(
            move |x0, w| (0.5 * k * w + x0.sqrt()).powi(2),
            move |x0| if x0 > 0.0 { absorb(-2.0 * x0.sqrt() / k) } else { None },
        ))
    } else if alpha == 0.75 {
        Some(ClosedForm::new(
            move |x0, w| if x0 == 0.0 { 0.0 } else { (0.25 * k * w + x0.powf(0.25)).powi(4) },
            move |x0| if x0 > 0.0 { absorb(-4.0 * x0.powf(0.25) / k) } else { None },
        ))
    } else if alpha == 0.25 {
        Some(ClosedForm::new(
            move |x0, w| (0.75 * k * w + x0.powf(0.75)).powi(4).cbrt(),
            move |x0| if x0 > 0.0 { absorb(-4.0 * x0.powf(0.75) / (3.0 * k)) } else { None },
        ))
    } else {
        None
    }
}

/// Heterogeneous diffusion `dX = (αk²/2) X^{2α−1} dt + k X^α dW` in Itô form
/// on `X ≥ 0`. The amplitude is evaluated at `max(X, 0)`.
pub fn make_het_diffusion(alpha: f64, k: f64) -> Result<ScalarSdeSpec, ModelError> {
    validate_het(alpha, k)?;
    let mut spec = ScalarSdeSpec::new(
        format!("het_diffusion(alpha={alpha},k={k})"),
        move |x| 0.5 * alpha * k * k * het_drift_power(x, alpha),
        move |x| k * pos_pow(x, alpha),
    )
    .with_noise_slope(move |x| k * alpha * pos_pow(x, alpha - 1.0))
    .with_noise_product(move |x| alpha * k * k * het_drift_power(x, alpha))
    .with_domain_floor(0.0);
    if alpha == 0.25 {
        spec = spec.with_start_check(|x0| {
            if x0 > 0.0 {
                Ok(())
            } else {
                Err("Itô form with exponent 1/4 requires a strictly positive initial value".into())
            }
        });
    }
    if let Some(c) = het_closed_form(alpha, k) {
        spec = spec.with_closed_form(c);
    }
    Ok(spec)
}

/// The same model with zero drift, meant to be read in the Stratonovich
/// sense (the original white-noise formulation).
pub fn make_het_diffusion_noise_only(alpha: f64, k: f64) -> Result<ScalarSdeSpec, ModelError> {
    validate_het(alpha, k)?;
    let mut spec = ScalarSdeSpec::new(
        format!("het_diffusion_noise_only(alpha={alpha},k={k})"),
        |_| 0.0,
        move |x| k * pos_pow(x, alpha),
    )
    .with_noise_slope(move |x| k * alpha * pos_pow(x, alpha - 1.0))
    .with_noise_product(move |x| alpha * k * k * het_drift_power(x, alpha))
    .with_domain_floor(0.0);
    if let Some(c) = het_closed_form(alpha, k) {
        spec = spec.with_closed_form(c);
    }
    Ok(spec)
}

fn validate_het(alpha: f64, k: f64) -> Result<(), ModelError> {
    if !(k > 0.0 && k.is_finite()) {
        return Err(ModelError::param("k", format!("must be positive and finite, got {k}")));
    }
    if !alpha.is_finite() {
        return Err(ModelError::param("alpha", "must be finite"));
    }
    Ok(())
}

/// `x^{2α−1}` on `x ≥ 0`, constant 1 when the exponent vanishes.
#[inline]
fn het_drift_power(x: f64, alpha: f64) -> f64 {
    let p = 2.0 * alpha - 1.0;
    if p == 0.0 {
        1.0
    } else {
        pos_pow(x, p)
    }
}

/// Kinetic energy `Q = k²W²/2` of a unit mass with Brownian velocity `kW`:
/// `dQ = (k²/2) dt + k√(2Q) dW` in Itô form. The closed form needs `Q₀ = 0`.
pub fn make_kinetic_energy(k: f64) -> Result<ScalarSdeSpec, ModelError> {
    kinetic_base(k, "kinetic_energy", 0.5 * k * k).map(|s| {
        s.with_closed_form(ClosedForm::new(move |_, w| 0.5 * k * k * w * w, |_| None)).with_start_check(|q0| {
            if q0 == 0.0 {
                Ok(())
            } else {
                Err("closed form is stated for a particle initially at rest".into())
            }
        })
    })
}

/// Drift of the kinetic-energy equation when the noise is read with
/// λ = 255/512: `k²/2 − (255/512)k² = k²/512`.
pub fn kinetic_energy_fehlberg_drift(k: f64) -> f64 {
    k * k / 512.0
}

/// Kinetic-energy equation with the Fehlberg-form drift.
pub fn make_kinetic_energy_fehlberg(k: f64) -> Result<ScalarSdeSpec, ModelError> {
    kinetic_base(k, "kinetic_energy_fehlberg", kinetic_energy_fehlberg_drift(k))
}

fn kinetic_base(k: f64, name: &str, drift: f64) -> Result<ScalarSdeSpec, ModelError> {
    if !(k > 0.0 && k.is_finite()) {
        return Err(ModelError::param("k", format!("must be positive and finite, got {k}")));
    }
    Ok(ScalarSdeSpec::new(format!("{name}(k={k})"), move |_| drift, move |q| k * (2.0 * q.max(0.0)).sqrt())
        .with_noise_slope(move |q| k / (2.0 * q.max(0.0)).sqrt())
        .with_noise_product(move |_| k * k)
        .with_domain_floor(0.0))
}
