use std::fmt;
use std::sync::Arc;

use super::ModelError;

type ValueFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type GradFn = Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;
type RadialFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Smooth bounded scalar coefficient `g: ℝ^d → ℝ` with its gradient and the
/// bounds needed to validate ellipticity and derivative hypotheses.
#[derive(Clone)]
pub struct ScalarField {
    dim: usize,
    label: String,
    value: ValueFn,
    grad: GradFn,
    lower: f64,
    upper: f64,
    grad_bounds: Vec<f64>,
    bounds_analytic: bool,
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarField")
            .field("label", &self.label)
            .field("dim", &self.dim)
            .field("lower", &self.lower)
            .field("upper", &self.upper)
            .field("grad_bounds", &self.grad_bounds)
            .finish()
    }
}

fn require_positive(name: &str, v: f64) -> Result<(), ModelError> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(ModelError::param(name, format!("must be positive and finite, got {v}")));
    }
    Ok(())
}

fn require_finite(name: &str, vs: &[f64]) -> Result<(), ModelError> {
    if vs.iter().any(|v| !v.is_finite()) {
        return Err(ModelError::param(name, "must be finite"));
    }
    Ok(())
}

impl ScalarField {
    pub fn constant(dim: usize, c: f64) -> Self {
        Self {
            dim,
            label: format!("{c}"),
            value: Arc::new(move |_| c),
            grad: Arc::new(|_, out: &mut [f64]| out.fill(0.0)),
            lower: c,
            upper: c,
            grad_bounds: vec![0.0; dim],
            bounds_analytic: true,
        }
    }

    /// `c + a·sin(kᵀx + φ)`.
    pub fn sinusoid(offset: f64, amplitude: f64, wave: Vec<f64>, phase: f64) -> Result<Self, ModelError> {
        require_finite("wave", &wave)?;
        require_finite("amplitude", &[offset, amplitude, phase])?;
        let dim = wave.len();
        let grad_bounds = wave.iter().map(|k| (amplitude * k).abs()).collect();
        let kv = Arc::new(wave);
        let kg = kv.clone();
        let arg = move |k: &[f64], x: &[f64]| k.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + phase;
        Ok(Self {
            dim,
            label: format!("{offset} + {amplitude}·sin(k·x + {phase})"),
            value: Arc::new(move |x| offset + amplitude * arg(&kv, x).sin()),
            grad: Arc::new(move |x, out| {
                let c = amplitude * arg(&kg, x).cos();
                out.iter_mut().zip(kg.iter()).for_each(|(o, k)| *o = c * k);
            }),
            lower: offset - amplitude.abs(),
            upper: offset + amplitude.abs(),
            grad_bounds,
            bounds_analytic: true,
        })
    }

    /// `c + a·exp(−|x − x₀|²/ℓ²)`.
    pub fn gaussian(offset: f64, amplitude: f64, center: Vec<f64>, width: f64) -> Result<Self, ModelError> {
        require_finite("center", &center)?;
        require_finite("amplitude", &[offset, amplitude])?;
        require_positive("width", width)?;
        let dim = center.len();
        let inv_l2 = 1.0 / (width * width);
        let cv = Arc::new(center);
        let cg = cv.clone();
        let bump =
            move |c: &[f64], x: &[f64]| (-c.iter().zip(x).map(|(a, b)| (b - a) * (b - a)).sum::<f64>() * inv_l2).exp();
        // sup_s 2|s| e^{-s²/ℓ²}/ℓ² = √2 e^{-1/2}/ℓ
        let gb = amplitude.abs() * std::f64::consts::SQRT_2 * (-0.5_f64).exp() / width;
        Ok(Self {
            dim,
            label: format!("{offset} + {amplitude}·exp(-|x-x0|²/{width}²)"),
            value: Arc::new(move |x| offset + amplitude * bump(&cv, x)),
            grad: Arc::new(move |x, out| {
                let e = amplitude * bump(&cg, x);
                for ((o, xi), ci) in out.iter_mut().zip(x).zip(cg.iter()) {
                    *o = -2.0 * (xi - ci) * inv_l2 * e;
                }
            }),
            lower: offset + amplitude.min(0.0),
            upper: offset + amplitude.max(0.0),
            grad_bounds: vec![gb; dim],
            bounds_analytic: true,
        })
    }

    /// `c + a·tanh((x_axis − c₀)/ℓ)`.
    pub fn front(
        dim: usize,
        offset: f64,
        amplitude: f64,
        axis: usize,
        center: f64,
        width: f64,
    ) -> Result<Self, ModelError> {
        if axis >= dim {
            return Err(ModelError::param("axis", format!("must be below dimension {dim}, got {axis}")));
        }
        require_finite("amplitude", &[offset, amplitude, center])?;
        require_positive("width", width)?;
        let mut grad_bounds = vec![0.0; dim];
        grad_bounds[axis] = amplitude.abs() / width;
        Ok(Self {
            dim,
            label: format!("{offset} + {amplitude}·tanh((x{axis}-{center})/{width})"),
            value: Arc::new(move |x| offset + amplitude * ((x[axis] - center) / width).tanh()),
            grad: Arc::new(move |x, out| {
                out.fill(0.0);
                let t = ((x[axis] - center) / width).tanh();
                out[axis] = amplitude * (1.0 - t * t) / width;
            }),
            lower: offset - amplitude.abs(),
            upper: offset + amplitude.abs(),
            grad_bounds,
            bounds_analytic: true,
        })
    }

    /// `g(x) = h(|x|)` with `∇g(x) = h'(r)/r · x` and `∇g(0) = 0`.
    pub fn radial(dim: usize, profile: RadialProfile) -> Self {
        let p = Arc::new(profile);
        let pv = p.clone();
        let pg = p.clone();
        Self {
            dim,
            label: format!("h(|x|), h = {}", p.label),
            value: Arc::new(move |x| (pv.h)(norm(x))),
            grad: Arc::new(move |x, out| {
                let r = norm(x);
                if r == 0.0 {
                    out.fill(0.0);
                } else {
                    let s = (pg.dh)(r) / r;
                    out.iter_mut().zip(x).for_each(|(o, xi)| *o = s * xi);
                }
            }),
            lower: p.lower,
            upper: p.upper,
            grad_bounds: vec![p.dh_bound; dim],
            bounds_analytic: p.bounds_analytic,
        }
    }

    /// User-supplied field. The bounds are taken on trust and later checked
    /// only on sample grids.
    #[allow(clippy::too_many_arguments)]
    pub fn custom(
        dim: usize,
        label: impl Into<String>,
        value: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        grad: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
        lower: f64,
        upper: f64,
        grad_bounds: Vec<f64>,
    ) -> Self {
        Self {
            dim,
            label: label.into(),
            value: Arc::new(value),
            grad: Arc::new(grad),
            lower,
            upper,
            grad_bounds,
            bounds_analytic: false,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    #[inline]
    pub fn value(&self, x: &[f64]) -> f64 {
        (self.value)(x)
    }

    #[inline]
    pub fn grad_into(&self, x: &[f64], out: &mut [f64]) {
        (self.grad)(x, out)
    }

    pub fn grad(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.dim];
        self.grad_into(x, &mut g);
        g
    }

    /// Declared infimum.
    pub fn lower_bound(&self) -> f64 {
        self.lower
    }

    /// Declared supremum.
    pub fn upper_bound(&self) -> f64 {
        self.upper
    }

    /// Declared `sup |∂_k g|` per direction.
    pub fn grad_bounds(&self) -> &[f64] {
        &self.grad_bounds
    }

    pub fn bounds_analytic(&self) -> bool {
        self.bounds_analytic
    }

    /// Same field reading only coordinate `axis` of a `dim`-dimensional point.
    pub fn embed(&self, dim: usize, axis: usize) -> Self {
        assert_eq!(self.dim, 1, "only one-dimensional fields can be embedded");
        let v = self.value.clone();
        let g = self.grad.clone();
        let mut grad_bounds = vec![0.0; dim];
        grad_bounds[axis] = self.grad_bounds[0];
        Self {
            dim,
            label: self.label.replace('x', &format!("x{axis}")),
            value: Arc::new(move |x| v(&x[axis..=axis])),
            grad: Arc::new(move |x, out| {
                out.fill(0.0);
                g(&x[axis..=axis], &mut out[axis..=axis]);
            }),
            lower: self.lower,
            upper: self.upper,
            grad_bounds,
            bounds_analytic: self.bounds_analytic,
        }
    }
}

#[inline]
fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Radial profile `h: [0, ∞) → ℝ` for radially modulated tensors.
#[derive(Clone)]
pub struct RadialProfile {
    label: String,
    h: RadialFn,
    dh: RadialFn,
    lower: f64,
    upper: f64,
    dh_bound: f64,
    bounds_analytic: bool,
}

impl fmt::Debug for RadialProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RadialProfile").field("label", &self.label).finish()
    }
}

impl RadialProfile {
    pub fn constant(c: f64) -> Self {
        Self {
            label: format!("{c}"),
            h: Arc::new(move |_| c),
            dh: Arc::new(|_| 0.0),
            lower: c,
            upper: c,
            dh_bound: 0.0,
            bounds_analytic: true,
        }
    }

    /// `c + a·exp(−r²/ℓ²)`.
    pub fn bump(offset: f64, amplitude: f64, width: f64) -> Result<Self, ModelError> {
        require_finite("amplitude", &[offset, amplitude])?;
        require_positive("width", width)?;
        let inv_l2 = 1.0 / (width * width);
        Ok(Self {
            label: format!("{offset} + {amplitude}·exp(-r²/{width}²)"),
            h: Arc::new(move |r| offset + amplitude * (-r * r * inv_l2).exp()),
            dh: Arc::new(move |r| -2.0 * amplitude * r * inv_l2 * (-r * r * inv_l2).exp()),
            lower: offset + amplitude.min(0.0),
            upper: offset + amplitude.max(0.0),
            dh_bound: amplitude.abs() * std::f64::consts::SQRT_2 * (-0.5_f64).exp() / width,
            bounds_analytic: true,
        })
    }

    pub fn custom(
        label: impl Into<String>,
        h: impl Fn(f64) -> f64 + Send + Sync + 'static,
        dh: impl Fn(f64) -> f64 + Send + Sync + 'static,
        lower: f64,
        upper: f64,
        dh_bound: f64,
    ) -> Self {
        Self { label: label.into(), h: Arc::new(h), dh: Arc::new(dh), lower, upper, dh_bound, bounds_analytic: false }
    }

    pub fn value(&self, r: f64) -> f64 {
        (self.h)(r)
    }

    pub fn derivative(&self, r: f64) -> f64 {
        (self.dh)(r)
    }

    pub fn lower_bound(&self) -> f64 {
        self.lower
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd_grad(f: &ScalarField, x: &[f64]) -> Vec<f64> {
        (0..x.len())
            .map(|k| {
                let h = 1e-6;
                let mut xp = x.to_vec();
                let mut xm = x.to_vec();
                xp[k] += h;
                xm[k] -= h;
                (f.value(&xp) - f.value(&xm)) / (2.0 * h)
            })
            .collect()
    }

    #[test]
    fn gradients_match_differences() {
        let fields = vec![
            ScalarField::sinusoid(2.0, 0.7, vec![1.0, -2.0], 0.3).unwrap(),
            ScalarField::gaussian(1.0, -0.4, vec![0.5, -0.2], 1.3).unwrap(),
            ScalarField::front(2, 1.5, 0.5, 1, 0.2, 0.8).unwrap(),
            ScalarField::radial(2, RadialProfile::bump(2.0, 1.0, 1.0).unwrap()),
        ];
        for f in &fields {
            for x in [[0.3, -1.1], [2.0, 0.4], [-0.7, -0.9]] {
                let g = f.grad(&x);
                let fd = fd_grad(f, &x);
                for k in 0..2 {
                    assert!((g[k] - fd[k]).abs() < 1e-7, "{} at {x:?}", f.label());
                    assert!(g[k].abs() <= f.grad_bounds()[k] + 1e-12);
                }
                let v = f.value(&x);
                assert!(v >= f.lower_bound() - 1e-12 && v <= f.upper_bound() + 1e-12);
            }
        }
    }

    #[test]
    fn gaussian_gradient_bound_is_attained() {
        let f = ScalarField::gaussian(0.0, 1.0, vec![0.0], 0.8).unwrap();
        let s = 0.8 / std::f64::consts::SQRT_2;
        assert!((f.grad(&[s])[0].abs() - f.grad_bounds()[0]).abs() < 1e-12);
    }

    #[test]
    fn radial_gradient_vanishes_at_origin() {
        let f = ScalarField::radial(3, RadialProfile::bump(2.0, 1.0, 1.0).unwrap());
        assert_eq!(f.grad(&[0.0, 0.0, 0.0]), vec![0.0; 3]);
        // ∇g(1, 0) = h'(1)(1, 0) = −2e^{-1}(1, 0)
        let g = ScalarField::radial(2, RadialProfile::bump(2.0, 1.0, 1.0).unwrap()).grad(&[1.0, 0.0]);
        assert!((g[0] + 2.0 * (-1.0_f64).exp()).abs() < 1e-15 && g[1] == 0.0);
    }

    #[test]
    fn embedding_reads_one_coordinate() {
        let a = ScalarField::sinusoid(1.0, 0.5, vec![2.0], 0.0).unwrap().embed(2, 1);
        assert_eq!(a.value(&[9.0, 0.25]), 1.0 + 0.5 * 0.5_f64.sin());
        let g = a.grad(&[9.0, 0.25]);
        assert_eq!(g[0], 0.0);
        assert!((g[1] - 0.5_f64.cos()).abs() < 1e-15);
        assert_eq!(a.grad_bounds(), &[0.0, 1.0]);
    }
}
