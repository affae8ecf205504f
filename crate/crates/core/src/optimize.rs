//! Small derivative-free solvers: bisection, golden section, Nelder–Mead.

use crate::error::{Error, Result};

/// Root of a continuous `f` on `[lo, hi]` with `f(lo)` and `f(hi)` of opposite sign.
pub fn bisect<F>(f: F, lo: f64, hi: f64, tol: f64, what: &'static str) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let (mut lo, mut hi) = (lo, hi);
    let mut f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() || f_lo.is_nan() || f_hi.is_nan() {
        return Err(Error::NoBracket { what, lo, hi });
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= tol {
            return Ok(mid);
        }
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Minimum of a unimodal `f` on `[lo, hi]`; returns `(argmin, min)`.
pub fn golden_section_min<F>(f: F, lo: f64, hi: f64, tol: f64) -> (f64, f64)
where
    F: Fn(f64) -> f64,
{
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    let fx = f(x);
    // the bracket ends may beat the midpoint on monotone functions
    [(x, fx), (c, fc), (d, fd)]
        .into_iter()
        .min_by(|p, q| p.1.total_cmp(&q.1))
        .unwrap()
}

#[derive(Debug, Clone, Copy)]
pub struct NelderMeadOptions {
    /// Edge length of the initial simplex.
    pub initial_step: f64,
    pub max_evals: usize,
    /// Stop when the spread of simplex values drops below this.
    pub f_tol: f64,
    /// ... and the simplex diameter drops below this.
    pub x_tol: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self {
            initial_step: 0.1,
            max_evals: 4000,
            f_tol: 1e-14,
            x_tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone)]
pub struct NelderMeadResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub evals: usize,
    pub converged: bool,
}

/// Minimize `f` from `start` with the standard reflection/expansion/
/// contraction/shrink coefficients (1, 2, 1/2, 1/2).
pub fn nelder_mead<F>(f: F, start: &[f64], opts: NelderMeadOptions) -> NelderMeadResult
where
    F: Fn(&[f64]) -> f64,
{
    let n = start.len();
    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    simplex.push(start.to_vec());
    for i in 0..n {
        let mut v = start.to_vec();
        v[i] += opts.initial_step;
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| f(v)).collect();
    let mut evals = n + 1;
    let mut converged = false;

    let mut centroid = vec![0.0; n];
    let mut trial = vec![0.0; n];
    let mut trial2 = vec![0.0; n];

    while evals < opts.max_evals {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();

        let spread = (values[n] - values[0]).abs();
        let diameter = simplex[1..]
            .iter()
            .map(|v| {
                v.iter()
                    .zip(&simplex[0])
                    .map(|(x, y)| (x - y).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        if spread <= opts.f_tol && diameter <= opts.x_tol {
            converged = true;
            break;
        }

        centroid.iter_mut().for_each(|c| *c = 0.0);
        for v in &simplex[..n] {
            for (c, x) in centroid.iter_mut().zip(v) {
                *c += x / n as f64;
            }
        }
        let worst = simplex[n].clone();
        for k in 0..n {
            trial[k] = centroid[k] + (centroid[k] - worst[k]);
        }
        let f_r = f(&trial);
        evals += 1;

        if f_r < values[0] {
            for k in 0..n {
                trial2[k] = centroid[k] + 2.0 * (centroid[k] - worst[k]);
            }
            let f_e = f(&trial2);
            evals += 1;
            if f_e < f_r {
                simplex[n].copy_from_slice(&trial2);
                values[n] = f_e;
            } else {
                simplex[n].copy_from_slice(&trial);
                values[n] = f_r;
            }
            continue;
        }
        if f_r < values[n - 1] {
            simplex[n].copy_from_slice(&trial);
            values[n] = f_r;
            continue;
        }
        // contraction, outside if the reflection improved on the worst point
        let outside = f_r < values[n];
        for k in 0..n {
            trial2[k] = if outside {
                centroid[k] + 0.5 * (trial[k] - centroid[k])
            } else {
                centroid[k] + 0.5 * (worst[k] - centroid[k])
            };
        }
        let f_c = f(&trial2);
        evals += 1;
        if f_c < values[n].min(f_r) {
            simplex[n].copy_from_slice(&trial2);
            values[n] = f_c;
            continue;
        }
        // shrink toward the best vertex
        let best = simplex[0].clone();
        for i in 1..=n {
            for k in 0..n {
                simplex[i][k] = best[k] + 0.5 * (simplex[i][k] - best[k]);
            }
            values[i] = f(&simplex[i]);
            evals += 1;
        }
    }

    let (i_best, _) = values.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).unwrap();
    NelderMeadResult {
        x: simplex[i_best].clone(),
        value: values[i_best],
        evals,
        converged,
    }
}
