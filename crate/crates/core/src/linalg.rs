//! Dense symmetric eigenproblems: Cholesky and cyclic Jacobi.
//!
//! Matrices are row-major `n × n` slices.

use crate::error::{Error, Result};

/// Jacobi stops once the off-diagonal Frobenius norm is below this fraction
/// of the full Frobenius norm.
pub const JACOBI_RTOL: f64 = 1e-12;

pub const JACOBI_MAX_SWEEPS: usize = 100;

/// Lower-triangular `L` with `A = L Lᵀ`.
pub fn cholesky(a: &[f64], n: usize) -> Result<Vec<f64>> {
    assert_eq!(a.len(), n * n);
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a[i * n + j];
            for k in 0..j {
                sum -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if !sum.is_finite() || sum <= 0.0 {
                    return Err(Error::NotPositiveDefinite { row: i, pivot: sum });
                }
                l[i * n + i] = sum.sqrt();
            } else {
                l[i * n + j] = sum / l[j * n + j];
            }
        }
    }
    Ok(l)
}

/// Solve `L X = B` in place for lower-triangular `L`; `B` has `m` columns.
fn forward_substitute(l: &[f64], n: usize, b: &mut [f64], m: usize) {
    for i in 0..n {
        let (done, rest) = b.split_at_mut(i * m);
        let row = &mut rest[..m];
        for k in 0..i {
            let lik = l[i * n + k];
            if lik != 0.0 {
                let src = &done[k * m..(k + 1) * m];
                for (r, s) in row.iter_mut().zip(src) {
                    *r -= lik * s;
                }
            }
        }
        let d = l[i * n + i];
        row.iter_mut().for_each(|r| *r /= d);
    }
}

/// Solve `Lᵀ x = b` in place.
fn back_substitute_transposed(l: &[f64], n: usize, x: &mut [f64]) {
    for i in (0..n).rev() {
        let mut s = x[i];
        for k in i + 1..n {
            s -= l[k * n + i] * x[k];
        }
        x[i] = s / l[i * n + i];
    }
}

fn frobenius(a: &[f64]) -> f64 {
    a.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn off_diagonal(a: &[f64], n: usize) -> f64 {
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[i * n + j] * a[i * n + j];
            }
        }
    }
    s.sqrt()
}

#[derive(Debug, Clone)]
pub struct Eigen {
    /// Ascending.
    pub values: Vec<f64>,
    /// Column `j` (row-major storage) is the eigenvector of `values[j]`.
    pub vectors: Option<Vec<f64>>,
    pub sweeps: usize,
}

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
pub fn jacobi_eigen(a: &[f64], n: usize, want_vectors: bool) -> Result<Eigen> {
    assert_eq!(a.len(), n * n);
    let mut a = a.to_vec();
    let mut v = want_vectors.then(|| {
        let mut id = vec![0.0; n * n];
        (0..n).for_each(|i| id[i * n + i] = 1.0);
        id
    });
    let scale = frobenius(&a);
    let mut sweeps = 0;
    while off_diagonal(&a, n) > JACOBI_RTOL * scale {
        if sweeps == JACOBI_MAX_SWEEPS {
            return Err(Error::NoConvergence {
                what: "Jacobi eigensolver",
                iterations: sweeps,
            });
        }
        sweeps += 1;
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let (app, aqq) = (a[p * n + p], a[q * n + q]);
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k * n + p], a[k * n + q]);
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p * n + k], a[q * n + k]);
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;
                if let Some(v) = v.as_mut() {
                    for k in 0..n {
                        let (vkp, vkq) = (v[k * n + p], v[k * n + q]);
                        v[k * n + p] = c * vkp - s * vkq;
                        v[k * n + q] = s * vkp + c * vkq;
                    }
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[i * n + i].total_cmp(&a[j * n + j]));
    let values = order.iter().map(|&i| a[i * n + i]).collect();
    let vectors = v.map(|v| {
        let mut out = vec![0.0; n * n];
        for (new, &old) in order.iter().enumerate() {
            for k in 0..n {
                out[k * n + new] = v[k * n + old];
            }
        }
        out
    });
    Ok(Eigen {
        values,
        vectors,
        sweeps,
    })
}

/// `K x = λ M x` for symmetric `K` and symmetric positive-definite `M`.
///
/// Reduces to `L⁻¹ K L⁻ᵀ` with `M = L Lᵀ`; returned vectors are
/// `M`-orthonormal.
pub fn generalized_eigen(k: &[f64], m: &[f64], n: usize, want_vectors: bool) -> Result<Eigen> {
    let l = cholesky(m, n)?;
    // X = L⁻¹ K, then C = L⁻¹ Xᵀ = L⁻¹ K L⁻ᵀ
    let mut x = k.to_vec();
    forward_substitute(&l, n, &mut x, n);
    let mut c = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            c[i * n + j] = x[j * n + i];
        }
    }
    forward_substitute(&l, n, &mut c, n);
    for i in 0..n {
        for j in i + 1..n {
            let avg = 0.5 * (c[i * n + j] + c[j * n + i]);
            c[i * n + j] = avg;
            c[j * n + i] = avg;
        }
    }
    let mut eig = jacobi_eigen(&c, n, want_vectors)?;
    if let Some(y) = eig.vectors.as_mut() {
        let mut col = vec![0.0; n];
        for j in 0..n {
            (0..n).for_each(|i| col[i] = y[i * n + j]);
            back_substitute_transposed(&l, n, &mut col);
            (0..n).for_each(|i| y[i * n + j] = col[i]);
        }
    }
    Ok(eig)
}
