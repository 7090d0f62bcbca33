use crate::stats::normal_cdf;

use super::PdeError;

/// Uniform cell-centred grid on `[lo, hi]` with `cells` cells.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridAxis {
    pub lo: f64,
    pub hi: f64,
    pub cells: usize,
}

impl GridAxis {
    pub fn new(lo: f64, hi: f64, cells: usize) -> Result<Self, PdeError> {
        if !(lo.is_finite() && hi.is_finite() && hi > lo) || cells < 2 {
            return Err(PdeError::InvalidGrid(format!("axis [{lo}, {hi}] with {cells} cells")));
        }
        Ok(Self { lo, hi, cells })
    }

    /// `[−L, L]`.
    pub fn symmetric(half_width: f64, cells: usize) -> Result<Self, PdeError> {
        Self::new(-half_width, half_width, cells)
    }

    #[inline]
    pub fn dx(&self) -> f64 {
        (self.hi - self.lo) / self.cells as f64
    }

    #[inline]
    pub fn center(&self, i: usize) -> f64 {
        self.lo + (i as f64 + 0.5) * self.dx()
    }

    /// Right face of cell `i`.
    #[inline]
    pub fn face(&self, i: usize) -> f64 {
        self.lo + (i + 1) as f64 * self.dx()
    }

    /// Cell containing `x`, if inside.
    pub fn locate(&self, x: f64) -> Option<usize> {
        if !(x >= self.lo && x < self.hi) {
            return if x == self.hi { Some(self.cells - 1) } else { None };
        }
        Some((((x - self.lo) / self.dx()) as usize).min(self.cells - 1))
    }
}

/// Cell averages of a density on a tensor-product grid, row-major with the
/// last axis fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityGrid {
    axes: Vec<GridAxis>,
    values: Vec<f64>,
    time: f64,
}

impl DensityGrid {
    pub fn zeros(axes: Vec<GridAxis>) -> Result<Self, PdeError> {
        if axes.is_empty() || axes.len() > 2 {
            return Err(PdeError::UnsupportedDimension(axes.len()));
        }
        let n = axes.iter().map(|a| a.cells).product();
        Ok(Self { axes, values: vec![0.0; n], time: 0.0 })
    }

    /// Point values `f(center)`.
    pub fn from_fn(axes: Vec<GridAxis>, f: impl Fn(&[f64]) -> f64) -> Result<Self, PdeError> {
        let mut g = Self::zeros(axes)?;
        let mut x = vec![0.0; g.dim()];
        for c in 0..g.values.len() {
            g.center_into(c, &mut x);
            g.values[c] = f(&x);
        }
        Ok(g)
    }

    /// Exact cell averages of `N(mean, s² I)`.
    pub fn gaussian(axes: Vec<GridAxis>, mean: &[f64], s: f64) -> Result<Self, PdeError> {
        if mean.len() != axes.len() {
            return Err(PdeError::GridMismatch);
        }
        if !(s > 0.0) {
            return Err(PdeError::InvalidGrid(format!("Gaussian width must be positive, got {s}")));
        }
        let per_axis: Vec<Vec<f64>> = axes
            .iter()
            .zip(mean)
            .map(|(a, m)| {
                let dx = a.dx();
                (0..a.cells)
                    .map(|i| {
                        let lo = a.lo + i as f64 * dx;
                        (normal_cdf((lo + dx - m) / s) - normal_cdf((lo - m) / s)) / dx
                    })
                    .collect()
            })
            .collect();
        let mut g = Self::zeros(axes)?;
        let mut idx = vec![0usize; g.dim()];
        for c in 0..g.values.len() {
            g.unflatten(c, &mut idx);
            g.values[c] = idx.iter().enumerate().map(|(k, &i)| per_axis[k][i]).product();
        }
        Ok(g)
    }

    pub fn with_values(axes: Vec<GridAxis>, values: Vec<f64>) -> Result<Self, PdeError> {
        let mut g = Self::zeros(axes)?;
        if values.len() != g.values.len() {
            return Err(PdeError::GridMismatch);
        }
        g.values = values;
        Ok(g)
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[GridAxis] {
        &self.axes
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn set_time(&mut self, t: f64) {
        self.time = t;
    }

    pub fn cell_volume(&self) -> f64 {
        self.axes.iter().map(|a| a.dx()).product()
    }

    /// Flat-index stride of each axis.
    pub fn strides(&self) -> Vec<usize> {
        let mut s = vec![1; self.dim()];
        for k in (0..self.dim().saturating_sub(1)).rev() {
            s[k] = s[k + 1] * self.axes[k + 1].cells;
        }
        s
    }

    pub fn unflatten(&self, mut c: usize, idx: &mut [usize]) {
        for k in (0..self.dim()).rev() {
            idx[k] = c % self.axes[k].cells;
            c /= self.axes[k].cells;
        }
    }

    pub fn center_into(&self, c: usize, x: &mut [f64]) {
        let mut rest = c;
        for k in (0..self.dim()).rev() {
            let a = &self.axes[k];
            x[k] = a.center(rest % a.cells);
            rest /= a.cells;
        }
    }

    /// `Σ u · Π dx`.
    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.cell_volume()
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Copy with negative round-off set to zero.
    pub fn clipped(&self) -> Self {
        let mut g = self.clone();
        g.values.iter_mut().for_each(|v| *v = v.max(0.0));
        g
    }

    /// Mass in cells within `width` cells of the boundary.
    pub fn boundary_mass(&self, width: usize) -> f64 {
        let mut idx = vec![0usize; self.dim()];
        let mut total = 0.0;
        for c in 0..self.values.len() {
            self.unflatten(c, &mut idx);
            if idx.iter().zip(&self.axes).any(|(&i, a)| i < width || i + width >= a.cells) {
                total += self.values[c].abs();
            }
        }
        total * self.cell_volume()
    }

    pub fn same_grid(&self, other: &Self) -> bool {
        self.axes == other.axes
    }

    /// Averages blocks of `factor` cells per axis onto a coarser grid.
    pub fn restrict(&self, factor: usize) -> Result<Self, PdeError> {
        if factor == 0 || self.axes.iter().any(|a| a.cells % factor != 0) {
            return Err(PdeError::GridMismatch);
        }
        let axes: Vec<GridAxis> =
            self.axes.iter().map(|a| GridAxis { lo: a.lo, hi: a.hi, cells: a.cells / factor }).collect();
        let mut coarse = Self::zeros(axes)?;
        coarse.time = self.time;
        let strides = coarse.strides();
        let mut idx = vec![0usize; self.dim()];
        let weight = 1.0 / (factor.pow(self.dim() as u32)) as f64;
        for c in 0..self.values.len() {
            self.unflatten(c, &mut idx);
            let target: usize = idx.iter().zip(&strides).map(|(i, s)| (i / factor) * s).sum();
            coarse.values[target] += self.values[c] * weight;
        }
        Ok(coarse)
    }
}

/// `Σ |a − b| · Π dx` on identical grids.
pub fn l1_distance(a: &DensityGrid, b: &DensityGrid) -> Result<f64, PdeError> {
    if !a.same_grid(b) {
        return Err(PdeError::GridMismatch);
    }
    Ok(a.values.iter().zip(&b.values).map(|(x, y)| (x - y).abs()).sum::<f64>() * a.cell_volume())
}

/// Normalised histogram with the count of samples that fell outside.
#[derive(Clone, Debug, PartialEq)]
pub struct Histogram {
    pub density: DensityGrid,
    pub total: usize,
    pub leaked: usize,
}

impl Histogram {
    pub fn leak_fraction(&self) -> f64 {
        self.leaked as f64 / self.total as f64
    }
}

/// `count / (N · cell volume)` from row-major samples `(N × d)`.
pub fn histogram_density(samples: &[f64], axes: Vec<GridAxis>) -> Result<Histogram, PdeError> {
    let mut density = DensityGrid::zeros(axes)?;
    let d = density.dim();
    if samples.len() % d != 0 || samples.is_empty() {
        return Err(PdeError::GridMismatch);
    }
    let total = samples.len() / d;
    let strides = density.strides();
    let mut leaked = 0;
    'sample: for x in samples.chunks(d) {
        let mut flat = 0;
        for k in 0..d {
            match density.axes[k].locate(x[k]) {
                Some(i) => flat += i * strides[k],
                None => {
                    leaked += 1;
                    continue 'sample;
                }
            }
        }
        density.values[flat] += 1.0;
    }
    let scale = 1.0 / (total as f64 * density.cell_volume());
    density.values.iter_mut().for_each(|v| *v *= scale);
    Ok(Histogram { density, total, leaked })
}
