//! Cyclic Jacobi eigensolver for small symmetric matrices.

use super::Matrix;

const MAX_SWEEPS: usize = 64;

/// Eigenpairs of a symmetric matrix. `vectors` holds the eigenvectors as
/// columns, ordered like `values` (ascending).
#[derive(Clone, Debug)]
pub struct SymEigen {
    pub values: Vec<f64>,
    pub vectors: Matrix,
}

impl SymEigen {
    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs_value(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// `P f(Λ) Pᵀ`.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> Matrix {
        let d = self.values.len();
        let fv: Vec<f64> = self.values.iter().map(|v| f(*v)).collect();
        let p = &self.vectors;
        Matrix::from_fn(d, |i, j| (0..d).map(|k| p[(i, k)] * fv[k] * p[(j, k)]).sum())
    }
}

/// Only the lower triangle is trusted; the input is symmetrized first.
pub fn sym_eigen(m: &Matrix) -> SymEigen {
    let d = m.dim();
    let mut a = m.clone();
    a.symmetrize();
    let mut v = Matrix::identity(d);

    let scale = a.frobenius_norm();
    if scale > 0.0 && d > 1 {
        for _ in 0..MAX_SWEEPS {
            let mut off = 0.0;
            for p in 0..d {
                for q in (p + 1)..d {
                    off += a[(p, q)] * a[(p, q)];
                }
            }
            if off.sqrt() <= f64::EPSILON * 1e-2 * scale {
                break;
            }
            for p in 0..d {
                for q in (p + 1)..d {
                    let apq = a[(p, q)];
                    if apq == 0.0 {
                        continue;
                    }
                    let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let t = if theta == 0.0 { 1.0 } else { t };
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    rotate(&mut a, &mut v, p, q, c, s);
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| a[(i, i)].total_cmp(&a[(j, j)]));
    let values = order.iter().map(|&i| a[(i, i)]).collect();
    let vectors = Matrix::from_fn(d, |r, c| v[(r, order[c])]);
    SymEigen { values, vectors }
}

fn rotate(a: &mut Matrix, v: &mut Matrix, p: usize, q: usize, c: f64, s: f64) {
    let d = a.dim();
    for k in 0..d {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = c * akp - s * akq;
        a[(k, q)] = s * akp + c * akq;
    }
    for k in 0..d {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = c * apk - s * aqk;
        a[(q, k)] = s * apk + c * aqk;
    }
    a[(p, q)] = 0.0;
    a[(q, p)] = 0.0;
    for k in 0..d {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = c * vkp - s * vkq;
        v[(k, q)] = s * vkp + c * vkq;
    }
}
