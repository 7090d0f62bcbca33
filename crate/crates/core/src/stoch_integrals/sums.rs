use super::{BrownianPath, IntegralError, InterpretationTag};

fn require_scalar(w: &BrownianPath) -> Result<(), IntegralError> {
    if w.dim() != 1 {
        return Err(IntegralError::DimensionMismatch { expected: 1, found: w.dim() });
    }
    Ok(())
}

/// `Σ_j Φ(W(t*_j)) (W_{t_j} − W_{t_{j-1}})` on a scalar path.
///
/// Off-grid evaluation points are read from the same realisation, so the
/// value is exact for this path at any λ.
pub fn lambda_riemann_sum(
    phi: impl Fn(f64) -> f64,
    w: &BrownianPath,
    tag: InterpretationTag,
) -> Result<f64, IntegralError> {
    require_scalar(w)?;
    let at = w.lambda_point_values(tag);
    Ok(at.iter().zip(w.increments()).map(|(x, dw)| phi(*x) * dw).sum())
}

/// Closed-form limit of the λ-sum for `Φ = id`: `(W_T² − W_a²)/2 + (λ − ½)(T − a)`.
pub fn identity_integral_limit(w: &BrownianPath, tag: InterpretationTag) -> f64 {
    let p = w.partition();
    let (wa, wb) = (w.value(0)[0], w.value(p.n_steps())[0]);
    0.5 * (wb * wb - wa * wa) + (tag.lambda() - 0.5) * (p.end() - p.start())
}

/// The λ = 255/512 sum.
pub fn fehlberg_integral(phi: impl Fn(f64) -> f64, w: &BrownianPath) -> Result<f64, IntegralError> {
    lambda_riemann_sum(phi, w, InterpretationTag::FEHLBERG)
}

/// Itô sum plus `(255/512) ∫ Φ'(W_t) dt`, the time integral by trapezoid on
/// the path's own partition. The difference to [`fehlberg_integral`]
/// vanishes under refinement.
pub fn fehlberg_conversion_rhs(
    phi: impl Fn(f64) -> f64,
    dphi: impl Fn(f64) -> f64,
    w: &BrownianPath,
) -> Result<f64, IntegralError> {
    let ito = lambda_riemann_sum(&phi, w, InterpretationTag::ITO)?;
    let slope: Vec<f64> = w.values().iter().map(|x| dphi(*x)).collect();
    Ok(ito + InterpretationTag::FEHLBERG.lambda() * w.partition().trapezoid(&slope))
}

/// `|fehlberg_integral − fehlberg_conversion_rhs|`.
pub fn fehlberg_residual(
    phi: impl Fn(f64) -> f64,
    dphi: impl Fn(f64) -> f64,
    w: &BrownianPath,
) -> Result<f64, IntegralError> {
    let lhs = fehlberg_integral(&phi, w)?;
    let rhs = fehlberg_conversion_rhs(&phi, &dphi, w)?;
    Ok((lhs - rhs).abs())
}

/// `Σ_j F(t*_j) ΔW_j` for a deterministic integrand; `F` is evaluated at the
/// exact λ-point, no path interpolation is needed.
pub fn deterministic_lambda_integral(
    f: impl Fn(f64) -> f64,
    w: &BrownianPath,
    tag: InterpretationTag,
) -> Result<f64, IntegralError> {
    require_scalar(w)?;
    let points = w.partition().lambda_points(tag);
    Ok(points.iter().zip(w.increments()).map(|(t, dw)| f(*t) * dw).sum())
}

/// `I_λ + Σ_j W_{t_j}(F(t_j) − F(t_{j-1})) − (F(b)W_b − F(a)W_a)`.
pub fn by_parts_residual(
    f: impl Fn(f64) -> f64,
    w: &BrownianPath,
    tag: InterpretationTag,
) -> Result<f64, IntegralError> {
    let integral = deterministic_lambda_integral(&f, w, tag)?;
    let times = w.partition().times();
    let fv: Vec<f64> = times.iter().map(|t| f(*t)).collect();
    let vals = w.values();
    let boundary: f64 = (1..times.len()).map(|j| vals[j] * (fv[j] - fv[j - 1])).sum();
    let n = times.len() - 1;
    Ok(integral + boundary - (fv[n] * vals[n] - fv[0] * vals[0]))
}
