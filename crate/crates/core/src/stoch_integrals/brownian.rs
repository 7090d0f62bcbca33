//! Reproducible Brownian motion with exact refinement.
//!
//! A [`BrownianSource`] is one realisation of `d` independent Brownian
//! motions started at zero. It is built by recursive midpoint (Lévy)
//! construction on dyadic subintervals of blocks `[kH, (k+1)H]`; every
//! midpoint displacement is a hashed normal keyed by its node, so the value at
//! a dyadic time does not depend on which other times were requested. Below
//! [`LEAF_LEVEL`] the remaining interior times are filled by sequential bridge
//! sampling inside the leaf cell.

use crate::rng::{hashed_normal, mix};

use super::{IntegralError, InterpretationTag, Partition};

/// Depth of the dyadic tree; leaf cells have width `H · 2^-LEAF_LEVEL`.
pub const LEAF_LEVEL: u32 = 40;

#[derive(Clone, Debug, PartialEq)]
pub struct BrownianSource {
    seed: u64,
    dim: usize,
    horizon: f64,
}

impl BrownianSource {
    pub fn new(seed: u64, dim: usize, horizon: f64) -> Result<Self, IntegralError> {
        if dim == 0 {
            return Err(IntegralError::DimensionMismatch { expected: 1, found: 0 });
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(IntegralError::InvalidPartition(format!("horizon must be positive, got {horizon}")));
        }
        Ok(Self { seed, dim, horizon })
    }

    /// Horizon `2^⌈log2 t_max⌉` (at least 1), so dyadic grids on `[0, 1]` are
    /// node-aligned.
    pub fn covering(seed: u64, dim: usize, t_max: f64) -> Result<Self, IntegralError> {
        let mut h = 1.0;
        while h < t_max {
            h *= 2.0;
        }
        Self::new(seed, dim, h)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn value_at(&self, t: f64) -> Result<Vec<f64>, IntegralError> {
        self.values_at(&[t])
    }

    /// Values at arbitrary non-negative times, row-major `(times × dim)`.
    pub fn values_at(&self, times: &[f64]) -> Result<Vec<f64>, IntegralError> {
        if let Some(&t) = times.iter().find(|t| !(**t >= 0.0) || !t.is_finite()) {
            return Err(IntegralError::NegativeTime(t));
        }
        let mut order: Vec<usize> = (0..times.len()).collect();
        if !times.windows(2).all(|w| w[0] <= w[1]) {
            order.sort_by(|&a, &b| times[a].total_cmp(&times[b]));
        }
        let sorted: Vec<(usize, f64)> = order.iter().map(|&i| (i, times[i])).collect();
        let mut out = vec![0.0; times.len() * self.dim];
        for c in 0..self.dim {
            self.fill_component(c, &sorted, &mut out);
        }
        Ok(out)
    }

    fn fill_component(&self, comp: usize, sorted: &[(usize, f64)], out: &mut [f64]) {
        let comp_key = mix(self.seed, comp as u64);
        let h = self.horizon;
        let mut block = 0u64;
        let mut w_left = 0.0;
        let mut start = 0;
        while start < sorted.len() {
            let block_left = block as f64 * h;
            let block_right = (block + 1) as f64 * h;
            let end = start + sorted[start..].partition_point(|(_, t)| *t <= block_right);
            let block_key = mix(comp_key, block);
            let w_right = w_left + h.sqrt() * hashed_normal(mix(block_key, u64::MAX));
            let mut walker = Walker { key: block_key, dim: self.dim, comp, out };
            walker.descend(0, 0, block_left, block_right, w_left, w_right, &sorted[start..end]);
            start = end;
            block += 1;
            w_left = w_right;
        }
    }
}

struct Walker<'a> {
    key: u64,
    dim: usize,
    comp: usize,
    out: &'a mut [f64],
}

impl Walker<'_> {
    #[inline]
    fn put(&mut self, slot: usize, v: f64) {
        self.out[slot * self.dim + self.comp] = v;
    }

    #[allow(clippy::too_many_arguments)]
    fn descend(&mut self, level: u32, index: u64, l: f64, r: f64, wl: f64, wr: f64, ts: &[(usize, f64)]) {
        if ts.is_empty() {
            return;
        }
        let lo = ts.partition_point(|(_, t)| *t <= l);
        let hi = ts.partition_point(|(_, t)| *t < r);
        for &(slot, _) in &ts[..lo] {
            self.put(slot, wl);
        }
        for &(slot, _) in &ts[hi..] {
            self.put(slot, wr);
        }
        let inner = &ts[lo..hi];
        if inner.is_empty() {
            return;
        }
        if level >= LEAF_LEVEL {
            self.leaf(index, l, r, wl, wr, inner);
            return;
        }
        let mid = l + 0.5 * (r - l);
        if !(mid > l && mid < r) {
            self.leaf(index, l, r, wl, wr, inner);
            return;
        }
        let node = mix(self.key, ((level as u64) << 48) ^ index);
        let wm = 0.5 * (wl + wr) + (0.25 * (r - l)).sqrt() * hashed_normal(node);
        let split = inner.partition_point(|(_, t)| *t < mid);
        let eq_end = inner.partition_point(|(_, t)| *t <= mid);
        for &(slot, _) in &inner[split..eq_end] {
            self.put(slot, wm);
        }
        self.descend(level + 1, 2 * index, l, mid, wl, wm, &inner[..split]);
        self.descend(level + 1, 2 * index + 1, mid, r, wm, wr, &inner[eq_end..]);
    }

    /// Sequential bridge through the remaining times of one leaf cell.
    fn leaf(&mut self, index: u64, l: f64, r: f64, wl: f64, wr: f64, ts: &[(usize, f64)]) {
        let leaf_key = mix(self.key, (0xFFu64 << 48) ^ index);
        let (mut tp, mut wp) = (l, wl);
        for &(slot, t) in ts {
            if t == tp {
                self.put(slot, wp);
                continue;
            }
            let frac = (t - tp) / (r - tp);
            let var = (t - tp) * (r - t) / (r - tp);
            let w = wp + frac * (wr - wp) + var.max(0.0).sqrt() * hashed_normal(mix(leaf_key, t.to_bits()));
            self.put(slot, w);
            tp = t;
            wp = w;
        }
    }
}

/// A Brownian realisation sampled on a partition: values `W_{t_j}` and
/// increments `ΔW_j = W_{t_j} − W_{t_{j-1}}`, both row-major.
///
/// Values are canonical: they come straight from the source, so refining the
/// partition leaves the values at the old points bit-identical. Increments
/// are differences of those values.
#[derive(Clone, Debug)]
pub struct BrownianPath {
    source: BrownianSource,
    partition: Partition,
    values: Vec<f64>,
    increments: Vec<f64>,
}

impl BrownianPath {
    pub fn sample(source: &BrownianSource, partition: &Partition) -> Result<Self, IntegralError> {
        let values = source.values_at(partition.times())?;
        let d = source.dim();
        let n = partition.n_steps();
        let mut increments = vec![0.0; n * d];
        for j in 0..n {
            for c in 0..d {
                increments[j * d + c] = values[(j + 1) * d + c] - values[j * d + c];
            }
        }
        Ok(Self { source: source.clone(), partition: partition.clone(), values, increments })
    }

    /// Samples the realisation `seed` with the default covering horizon.
    pub fn standard(seed: u64, dim: usize, partition: &Partition) -> Result<Self, IntegralError> {
        let source = BrownianSource::covering(seed, dim, partition.end())?;
        Self::sample(&source, partition)
    }

    pub fn source(&self) -> &BrownianSource {
        &self.source
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn dim(&self) -> usize {
        self.source.dim()
    }

    pub fn seed(&self) -> u64 {
        self.source.seed()
    }

    pub fn n_steps(&self) -> usize {
        self.partition.n_steps()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn increments(&self) -> &[f64] {
        &self.increments
    }

    #[inline]
    pub fn value(&self, j: usize) -> &[f64] {
        let d = self.dim();
        &self.values[j * d..(j + 1) * d]
    }

    #[inline]
    pub fn increment(&self, j: usize) -> &[f64] {
        let d = self.dim();
        &self.increments[j * d..(j + 1) * d]
    }

    /// One coordinate over all partition points.
    pub fn component(&self, c: usize) -> Vec<f64> {
        self.values.iter().skip(c).step_by(self.dim()).copied().collect()
    }

    /// Values of the same realisation at other times.
    pub fn values_at(&self, times: &[f64]) -> Result<Vec<f64>, IntegralError> {
        self.source.values_at(times)
    }

    /// `W(t*_j)` for every interval, row-major `(n × dim)`.
    pub fn lambda_point_values(&self, tag: InterpretationTag) -> Vec<f64> {
        let n = self.n_steps();
        let d = self.dim();
        if tag.lambda() == 0.0 {
            return self.values[..n * d].to_vec();
        }
        if tag.lambda() == 1.0 {
            return self.values[d..].to_vec();
        }
        self.source.values_at(&self.partition.lambda_points(tag)).expect("partition times are valid")
    }

    /// Same realisation with every interval bisected.
    pub fn refine(&self) -> Self {
        Self::sample(&self.source, &self.partition.refine()).expect("refined partition is valid")
    }

    /// Same realisation on every other point.
    pub fn coarsen(&self) -> Result<Self, IntegralError> {
        Self::sample(&self.source, &self.partition.coarsen()?)
    }
}
