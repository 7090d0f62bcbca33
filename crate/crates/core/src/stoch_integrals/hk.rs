use crate::sde_engine::SamplePath;
use crate::tensor_field::{fd_step, Matrix};

use super::{BrownianPath, IntegralError};

/// What the matrix integrand multiplies.
#[derive(Clone, Copy, Debug)]
pub enum Integrator<'a> {
    /// Increments of the integrated process itself, `Ψ(Y) dY`.
    State,
    /// Increments of a Brownian driver sampled on the same partition, `Ψ(Y) dW`.
    Brownian(&'a BrownianPath),
}

fn increments(y: &SamplePath, integrator: Integrator<'_>) -> Result<Vec<f64>, IntegralError> {
    let d = y.dim();
    let m = y.n_steps();
    match integrator {
        Integrator::State => {
            let s = y.states();
            Ok((0..m * d).map(|i| s[i + d] - s[i]).collect())
        }
        Integrator::Brownian(w) => {
            if w.dim() != d {
                return Err(IntegralError::DimensionMismatch { expected: d, found: w.dim() });
            }
            if w.partition().times()[..=m] != y.times()[..] {
                return Err(IntegralError::PartitionMismatch);
            }
            Ok(w.increments()[..m * d].to_vec())
        }
    }
}

fn endpoint_sum<F>(psi: &F, y: &SamplePath, integrator: Integrator<'_>, right: bool) -> Result<Vec<f64>, IntegralError>
where
    F: Fn(&[f64], f64, &mut Matrix),
{
    let d = y.dim();
    let dz = increments(y, integrator)?;
    let times = y.times();
    let mut m = Matrix::zeros(d);
    let mut acc = vec![0.0; d];
    let mut tmp = vec![0.0; d];
    for j in 0..y.n_steps() {
        let at = if right { j + 1 } else { j };
        psi(y.state(at), times[at], &mut m);
        m.matvec_into(&dz[j * d..(j + 1) * d], &mut tmp);
        acc.iter_mut().zip(&tmp).for_each(|(a, t)| *a += t);
    }
    Ok(acc)
}

/// Right-endpoint (kinetic) sum `Σ_j Ψ(Y_{t_j}, t_j)(Z_{t_j} − Z_{t_{j-1}})`.
pub fn hk_integral_multi<F>(psi: F, y: &SamplePath, integrator: Integrator<'_>) -> Result<Vec<f64>, IntegralError>
where
    F: Fn(&[f64], f64, &mut Matrix),
{
    endpoint_sum(&psi, y, integrator, true)
}

/// Left-endpoint (Itô) sum.
pub fn ito_integral_multi<F>(psi: F, y: &SamplePath, integrator: Integrator<'_>) -> Result<Vec<f64>, IntegralError>
where
    F: Fn(&[f64], f64, &mut Matrix),
{
    endpoint_sum(&psi, y, integrator, false)
}

/// Kinetic sum minus Itô sum minus the covariation correction
/// `∫ Σ_{l,k} ∂_k Ψ_il(Y_t, t) C_kl(Y_t) dt`, where `C_kl` is the rate of
/// `d⟨Y_k, Z_l⟩` (the diffusion tensor for `Z = Y`, the noise amplitude for
/// `Z = W`). Partial derivatives of `Ψ` are central differences; the time
/// integral is trapezoidal.
pub fn conversion_residual<F, C>(
    psi: F,
    y: &SamplePath,
    integrator: Integrator<'_>,
    covariation: C,
) -> Result<Vec<f64>, IntegralError>
where
    F: Fn(&[f64], f64, &mut Matrix),
    C: Fn(&[f64], &mut Matrix),
{
    let d = y.dim();
    let hk = hk_integral_multi(&psi, y, integrator)?;
    let ito = ito_integral_multi(&psi, y, integrator)?;
    let times = y.times();

    let mut plus = Matrix::zeros(d);
    let mut minus = Matrix::zeros(d);
    let mut cov = Matrix::zeros(d);
    let mut xp = vec![0.0; d];
    let mut xm = vec![0.0; d];
    // integrand samples per component
    let mut samples = vec![vec![0.0; times.len()]; d];
    for (j, &t) in times.iter().enumerate() {
        let x = y.state(j);
        covariation(x, &mut cov);
        let mut corr = vec![0.0; d];
        for k in 0..d {
            xp.copy_from_slice(x);
            xm.copy_from_slice(x);
            let h = fd_step(x[k]);
            xp[k] += h;
            xm[k] -= h;
            psi(&xp, t, &mut plus);
            psi(&xm, t, &mut minus);
            let width = xp[k] - xm[k];
            for (i, c) in corr.iter_mut().enumerate() {
                for l in 0..d {
                    *c += (plus[(i, l)] - minus[(i, l)]) / width * cov[(k, l)];
                }
            }
        }
        for i in 0..d {
            samples[i][j] = corr[i];
        }
    }
    let trap = |f: &[f64]| -> f64 {
        times.windows(2).zip(f.windows(2)).map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] + v[1])).sum()
    };
    Ok((0..d).map(|i| hk[i] - ito[i] - trap(&samples[i])).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sde_engine::PathStatus;
    use crate::stoch_integrals::{lambda_riemann_sum, InterpretationTag, Partition};

    fn brownian_as_state(w: &BrownianPath) -> SamplePath {
        SamplePath::new(w.partition().clone(), w.dim(), w.values().to_vec(), PathStatus::Alive).unwrap()
    }

    #[test]
    fn constant_matrix_telescopes() {
        let w = BrownianPath::standard(1, 2, &Partition::dyadic(0.0, 1.0, 6).unwrap()).unwrap();
        let y = brownian_as_state(&w);
        let c = Matrix::from_rows(&[[1.0, 2.0], [-0.5, 3.0]]);
        let s = hk_integral_multi(|_, _, m| *m = c.clone(), &y, Integrator::State).unwrap();
        let n = w.n_steps();
        let delta: Vec<f64> = (0..2).map(|i| w.value(n)[i] - w.value(0)[i]).collect();
        let expected = c.matvec(&delta);
        assert!((s[0] - expected[0]).abs() < 1e-12 && (s[1] - expected[1]).abs() < 1e-12);
        let r = conversion_residual(|_, _, m| *m = c.clone(), &y, Integrator::State, |_, m| *m = Matrix::identity(2))
            .unwrap();
        assert!(r.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn scalar_identity_matches_lambda_sum() {
        let w = BrownianPath::standard(5, 1, &Partition::dyadic(0.0, 1.0, 10).unwrap()).unwrap();
        let y = brownian_as_state(&w);
        let multi = hk_integral_multi(|x, _, m| m[(0, 0)] = x[0], &y, Integrator::State).unwrap();
        let scalar = lambda_riemann_sum(|x| x, &w, InterpretationTag::HK).unwrap();
        assert!((multi[0] - scalar).abs() < 1e-12);
    }

    #[test]
    fn scalar_identity_residual_is_quadratic_variation_gap() {
        // Ψ = id, Y = W: residual = Σ ΔW² − T
        let w = BrownianPath::standard(6, 1, &Partition::dyadic(0.0, 1.0, 12).unwrap()).unwrap();
        let y = brownian_as_state(&w);
        let r = conversion_residual(|x, _, m| m[(0, 0)] = x[0], &y, Integrator::State, |_, m| m[(0, 0)] = 1.0).unwrap();
        let qv: f64 = w.increments().iter().map(|d| d * d).sum();
        assert!((r[0] - (qv - 1.0)).abs() < 1e-9);
    }

    #[test]
    fn mismatched_driver_rejected() {
        let w = BrownianPath::standard(1, 1, &Partition::dyadic(0.0, 1.0, 4).unwrap()).unwrap();
        let other = BrownianPath::standard(1, 1, &Partition::dyadic(0.0, 1.0, 5).unwrap()).unwrap();
        let y = brownian_as_state(&w);
        assert!(matches!(
            hk_integral_multi(|_, _, m| m[(0, 0)] = 1.0, &y, Integrator::Brownian(&other)),
            Err(IntegralError::PartitionMismatch)
        ));
    }
}
