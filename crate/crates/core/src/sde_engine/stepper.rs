use crate::stoch_integrals::{BrownianPath, Partition};

use super::path::{PathStatus, SamplePath};
use super::sde::{EffectiveItoSde, Workspace};
use super::SdeError;

/// Default blow-up threshold on `|X_i|`.
pub const BLOW_UP_THRESHOLD: f64 = 1e9;

/// What happens when a step lands below the domain floor.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FloorMode {
    /// Set the state to the floor and stop the path.
    Absorb,
    /// Set the state to the floor and continue.
    Clamp,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Floor {
    pub level: f64,
    pub mode: FloorMode,
}

/// Outcome checks applied after every step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Guards {
    pub blow_up: f64,
    pub floor: Option<Floor>,
}

impl Default for Guards {
    fn default() -> Self {
        Self { blow_up: BLOW_UP_THRESHOLD, floor: None }
    }
}

impl Guards {
    /// Blow-up threshold plus the model's own floor in `mode`.
    pub fn for_model(sde: &EffectiveItoSde, mode: FloorMode) -> Self {
        Self { blow_up: BLOW_UP_THRESHOLD, floor: sde.model().domain_floor().map(|level| Floor { level, mode }) }
    }

    pub fn with_floor(mut self, level: f64, mode: FloorMode) -> Self {
        self.floor = Some(Floor { level, mode });
        self
    }
}

/// Forward Euler on `times` with increments supplied per step. Leaves the
/// last produced state in `x`, appends every produced state to `record`.
pub(crate) fn integrate<F>(
    sde: &EffectiveItoSde,
    x: &mut [f64],
    times: &[f64],
    guards: &Guards,
    ws: &mut Workspace,
    mut increment: F,
    mut record: Option<&mut Vec<f64>>,
) -> Result<PathStatus, SdeError>
where
    F: FnMut(usize, f64, &mut [f64]),
{
    let d = x.len();
    if let Some(r) = record.as_deref_mut() {
        r.extend_from_slice(x);
    }
    let mut drift = std::mem::take(&mut ws.drift);
    let mut noise = std::mem::take(&mut ws.noise);
    let mut dw = std::mem::take(&mut ws.increment);
    let mut result = Ok(PathStatus::Alive);
    for j in 0..times.len().saturating_sub(1) {
        let dt = times[j + 1] - times[j];
        if let Err(e) = sde.drift_into(x, ws, &mut drift) {
            result = Err(e);
            break;
        }
        if let Err(e) = sde.sigma_into(x, &mut ws.sigma) {
            result = Err(e);
            break;
        }
        increment(j, dt, &mut dw);
        ws.sigma.matvec_into(&dw, &mut noise);
        let mut escaped = false;
        let mut below = false;
        for i in 0..d {
            let next = x[i] + drift[i] * dt + noise[i];
            if !next.is_finite() || next.abs() > guards.blow_up {
                escaped = true;
            }
            if let Some(f) = guards.floor {
                if next < f.level {
                    below = true;
                }
            }
            noise[i] = next;
        }
        let (time, step) = (times[j + 1], j + 1);
        if escaped {
            result = Ok(PathStatus::BlownUp { time, step });
            break;
        }
        x.copy_from_slice(&noise);
        if below {
            let f = guards.floor.expect("floor checked above");
            x.iter_mut().filter(|v| **v < f.level).for_each(|v| *v = f.level);
            if let Some(r) = record.as_deref_mut() {
                r.extend_from_slice(x);
            }
            if f.mode == FloorMode::Absorb {
                result = Ok(PathStatus::Absorbed { time, step });
                break;
            }
            continue;
        }
        if let Some(r) = record.as_deref_mut() {
            r.extend_from_slice(x);
        }
    }
    ws.drift = drift;
    ws.noise = noise;
    ws.increment = dw;
    result
}

/// Simulates `sde` from `x0` on the partition and increments of `w`.
pub fn euler_maruyama(
    sde: &EffectiveItoSde,
    x0: &[f64],
    w: &BrownianPath,
    guards: &Guards,
) -> Result<SamplePath, SdeError> {
    let d = sde.dim();
    if w.dim() != d {
        return Err(SdeError::DimensionMismatch { expected: d, found: w.dim() });
    }
    euler_maruyama_with_increments(sde, x0, w.partition(), w.increments(), guards).map(|p| p.with_driver_seed(w.seed()))
}

/// Same stepper on explicit increments `ΔW_j`, row-major `(n × d)`.
pub fn euler_maruyama_with_increments(
    sde: &EffectiveItoSde,
    x0: &[f64],
    partition: &Partition,
    increments: &[f64],
    guards: &Guards,
) -> Result<SamplePath, SdeError> {
    let d = sde.dim();
    sde.model().check_start(x0)?;
    if increments.len() != partition.n_steps() * d {
        return Err(SdeError::DimensionMismatch { expected: partition.n_steps() * d, found: increments.len() });
    }
    let mut x = x0.to_vec();
    let mut ws = Workspace::new(d);
    let mut states = Vec::with_capacity((partition.n_steps() + 1) * d);
    let status = integrate(
        sde,
        &mut x,
        partition.times(),
        guards,
        &mut ws,
        |j, _, out| out.copy_from_slice(&increments[j * d..(j + 1) * d]),
        Some(&mut states),
    )?;
    SamplePath::new(partition.clone(), d, states, status)
}
