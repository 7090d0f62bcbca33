use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::rng::path_stream;
use crate::stoch_integrals::Partition;

use super::path::{PathStatus, SamplePath};
use super::sde::{EffectiveItoSde, Workspace};
use super::stepper::{integrate, Guards};
use super::SdeError;

/// Counts of path outcomes at the query time.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct StatusTally {
    pub alive: usize,
    pub blown_up: usize,
    pub absorbed: usize,
}

impl StatusTally {
    pub fn total(&self) -> usize {
        self.alive + self.blown_up + self.absorbed
    }

    fn add(&mut self, s: &PathStatus) {
        match s {
            PathStatus::Alive => self.alive += 1,
            PathStatus::BlownUp { .. } => self.blown_up += 1,
            PathStatus::Absorbed { .. } => self.absorbed += 1,
        }
    }
}

/// Terminal states, row-major `(N × d)`, with per-path outcomes.
#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleResult {
    pub dim: usize,
    pub terminal: Vec<f64>,
    pub statuses: Vec<PathStatus>,
    pub tally: StatusTally,
}

impl EnsembleResult {
    pub fn len(&self) -> usize {
        self.statuses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.statuses.is_empty()
    }

    pub fn terminal_state(&self, i: usize) -> &[f64] {
        &self.terminal[i * self.dim..(i + 1) * self.dim]
    }

    /// Terminal states of paths that never tripped a stopping guard.
    pub fn alive_states(&self) -> impl Iterator<Item = &[f64]> {
        self.terminal.chunks(self.dim).zip(&self.statuses).filter(|(_, s)| s.is_alive()).map(|(x, _)| x)
    }
}

fn run_member<S>(
    sde: &EffectiveItoSde,
    sampler: &S,
    seed: u64,
    index: u64,
    partition: &Partition,
    guards: &Guards,
    ws: &mut Workspace,
    record: Option<&mut Vec<f64>>,
) -> Result<(Vec<f64>, PathStatus), SdeError>
where
    S: Fn(&mut ChaCha8Rng, &mut [f64]),
{
    let d = sde.dim();
    let mut rng = path_stream(seed, index);
    let mut x = vec![0.0; d];
    sampler(&mut rng, &mut x);
    sde.model().check_start(&x)?;
    let status = integrate(
        sde,
        &mut x,
        partition.times(),
        guards,
        ws,
        |_, dt, out| {
            let scale = dt.sqrt();
            for v in out.iter_mut() {
                let z: f64 = rng.sample(StandardNormal);
                *v = z * scale;
            }
        },
        record,
    )?;
    Ok((x, status))
}

/// Full path of ensemble member `index`: the initial value and increments
/// come from the member's own stream, so this equals what
/// [`simulate_ensemble`] computes for that member.
pub fn ensemble_member<S>(
    sde: &EffectiveItoSde,
    sampler: S,
    seed: u64,
    index: u64,
    partition: &Partition,
    guards: &Guards,
) -> Result<SamplePath, SdeError>
where
    S: Fn(&mut ChaCha8Rng, &mut [f64]),
{
    let d = sde.dim();
    let mut ws = Workspace::new(d);
    let mut states = Vec::with_capacity((partition.n_steps() + 1) * d);
    let (_, status) = run_member(sde, &sampler, seed, index, partition, guards, &mut ws, Some(&mut states))?;
    SamplePath::new(partition.clone(), d, states, status)
}

/// `N` independent Euler-Maruyama paths to the end of `partition`. Path `i`
/// draws its initial value and increments from the substream `(seed, i)`, so
/// the result does not depend on how rayon schedules the work.
pub fn simulate_ensemble<S>(
    sde: &EffectiveItoSde,
    sampler: S,
    n: usize,
    seed: u64,
    partition: &Partition,
    guards: &Guards,
) -> Result<EnsembleResult, SdeError>
where
    S: Fn(&mut ChaCha8Rng, &mut [f64]) + Sync,
{
    if n == 0 {
        return Err(SdeError::EmptyEnsemble);
    }
    let d = sde.dim();
    let members: Vec<(Vec<f64>, PathStatus)> = (0..n as u64)
        .into_par_iter()
        .map_init(|| Workspace::new(d), |ws, i| run_member(sde, &sampler, seed, i, partition, guards, ws, None))
        .collect::<Result<_, _>>()?;
    let mut terminal = Vec::with_capacity(n * d);
    let mut statuses = Vec::with_capacity(n);
    let mut tally = StatusTally::default();
    for (x, s) in members {
        terminal.extend_from_slice(&x);
        tally.add(&s);
        statuses.push(s);
    }
    Ok(EnsembleResult { dim: d, terminal, statuses, tally })
}

/// Sampler for a fixed initial point.
pub fn point_mass(x0: Vec<f64>) -> impl Fn(&mut ChaCha8Rng, &mut [f64]) + Sync + Clone {
    move |_, out| out.copy_from_slice(&x0)
}

/// Sampler for `N(mean, s² I)`.
pub fn isotropic_gaussian(mean: Vec<f64>, s: f64) -> impl Fn(&mut ChaCha8Rng, &mut [f64]) + Sync + Clone {
    move |rng, out| {
        for (o, m) in out.iter_mut().zip(&mean) {
            let z: f64 = rng.sample(StandardNormal);
            *o = m + s * z;
        }
    }
}
