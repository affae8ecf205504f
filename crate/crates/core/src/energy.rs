//! Maps from flat tori into spheres and their Dirichlet energies.
//!
//! Quadrature is the periodic trapezoid rule on a uniform grid in lattice
//! coordinates `(s,t) ∈ [0,1)²`, mapped to `(x,y) = s(1,0) + t(a,b)`.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::flat_spectrum::{frequency, Mode};
use crate::moduli::TorusParams;
use crate::optimize::{golden_section_min, nelder_mead, NelderMeadOptions};
use crate::sphere::{dot, BallPoint, MobiusMap, SpherePoint};

/// Smallest admissible number of nodes per direction.
pub const MIN_RESOLUTION: usize = 16;

/// Step of the finite-difference fallback, in lattice coordinates.
const FD_STEP: f64 = 1e-3;

/// Optimizer iterates are confined to `|ξ| <= 1 - BALL_GUARD`.
const BALL_GUARD: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TorusGrid {
    params: TorusParams,
    ns: usize,
    nt: usize,
}

impl TorusGrid {
    pub fn new(params: TorusParams, ns: usize, nt: usize) -> Result<Self> {
        if ns < MIN_RESOLUTION || nt < MIN_RESOLUTION {
            return Err(Error::Resolution(format!(
                "grid {ns}x{nt} is below the {MIN_RESOLUTION}x{MIN_RESOLUTION} floor"
            )));
        }
        Ok(Self { params, ns, nt })
    }

    pub fn square(params: TorusParams, n: usize) -> Result<Self> {
        Self::new(params, n, n)
    }

    pub fn params(&self) -> &TorusParams {
        &self.params
    }

    pub fn ns(&self) -> usize {
        self.ns
    }

    pub fn nt(&self) -> usize {
        self.nt
    }

    pub fn len(&self) -> usize {
        self.ns * self.nt
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn cell_weight(&self) -> f64 {
        self.params.b() / (self.ns * self.nt) as f64
    }

    pub fn doubled(&self) -> Self {
        Self {
            params: self.params,
            ns: 2 * self.ns,
            nt: 2 * self.nt,
        }
    }

    /// Lattice coordinates of node `k`; nodes are ordered with `t` fastest.
    #[inline]
    pub fn lattice_node(&self, k: usize) -> (f64, f64) {
        let (i, j) = (k / self.nt, k % self.nt);
        (i as f64 / self.ns as f64, j as f64 / self.nt as f64)
    }

    #[inline]
    pub fn point(&self, k: usize) -> (f64, f64) {
        let (s, t) = self.lattice_node(k);
        lattice_to_cartesian(&self.params, s, t)
    }

    /// Trapezoid quadrature of nodal values.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.len());
        values.iter().sum::<f64>() * self.cell_weight()
    }
}

#[inline]
pub fn lattice_to_cartesian(params: &TorusParams, s: f64, t: f64) -> (f64, f64) {
    (s + params.a() * t, params.b() * t)
}

/// A smooth lattice-periodic map from the torus into `S^{dim-1}`.
pub trait TorusMap: Sync {
    /// Ambient dimension `n + 1`.
    fn dim(&self) -> usize;

    fn eval(&self, x: f64, y: f64, out: &mut [f64]);

    /// Writes the value and the Cartesian partials; returns `false` when no
    /// analytic formula exists.
    fn eval_with_partials(&self, _x: f64, _y: f64, _value: &mut [f64], _dx: &mut [f64], _dy: &mut [f64]) -> bool {
        false
    }
}

/// `(A₁ cos θ₁, A₁ sin θ₁, …, A_n cos θ_n, A_n sin θ_n)` with
/// `θ_k = 2π⟨frequency(mode_k), (x,y)⟩` and `Σ A_k² = 1`.
#[derive(Debug, Clone)]
pub struct TrigMap {
    params: TorusParams,
    terms: Vec<(f64, [f64; 2])>,
}

impl TrigMap {
    pub fn new(params: TorusParams, terms: &[(f64, Mode)]) -> Result<Self> {
        let total: f64 = terms.iter().map(|(amp, _)| amp * amp).sum();
        if terms.is_empty() || (total - 1.0).abs() > 1e-12 {
            return Err(Error::OutOfRange(format!("squared amplitudes sum to {total}, not 1")));
        }
        Ok(Self {
            params,
            terms: terms.iter().map(|&(amp, m)| (amp, frequency(&params, m))).collect(),
        })
    }

    /// The embedding into `S³` with weights `√r` on mode `(1,0)` and `√(1-r)`
    /// on mode `(0,1)`.
    pub fn psi3(params: TorusParams, r: f64) -> Result<Self> {
        if !(0.5..1.0).contains(&r) {
            return Err(Error::OutOfRange(format!("r = {r} is outside [1/2, 1)")));
        }
        Self::new(
            params,
            &[
                (r.sqrt(), Mode::canonical(1, 0)),
                ((1.0 - r).sqrt(), Mode::canonical(0, 1)),
            ],
        )
    }

    /// Bryant's conformal immersion into `S⁵`, built on modes `(1,0)`,
    /// `(0,1)` and `(1,1)`.
    pub fn bryant(params: TorusParams) -> Result<Self> {
        let (a, b) = (params.a(), params.b());
        if !params.is_in_fundamental_region() {
            return Err(Error::InvalidParams(format!(
                "({a}, {b}) is outside the fundamental region"
            )));
        }
        let c = b * b + a * a - a;
        let norm = 1.0 + c;
        let a = a.max(0.0);
        // the last weight is √a; clamp rounding on the a = 0 edge
        let w = [(c / norm).sqrt(), ((1.0 - a) / norm).sqrt(), (a / norm).sqrt()];
        let total: f64 = w.iter().map(|x| x * x).sum();
        let w = w.map(|x| x / total.sqrt());
        Self::new(
            params,
            &[
                (w[0], Mode::canonical(1, 0)),
                (w[1], Mode::canonical(0, 1)),
                (w[2], Mode::canonical(1, 1)),
            ],
        )
    }

    pub fn params(&self) -> &TorusParams {
        &self.params
    }
}

impl TorusMap for TrigMap {
    fn dim(&self) -> usize {
        2 * self.terms.len()
    }

    fn eval(&self, x: f64, y: f64, out: &mut [f64]) {
        for (k, &(amp, [k1, k2])) in self.terms.iter().enumerate() {
            let (s, c) = (2.0 * PI * (k1 * x + k2 * y)).sin_cos();
            out[2 * k] = amp * c;
            out[2 * k + 1] = amp * s;
        }
    }

    fn eval_with_partials(&self, x: f64, y: f64, value: &mut [f64], dx: &mut [f64], dy: &mut [f64]) -> bool {
        for (k, &(amp, [k1, k2])) in self.terms.iter().enumerate() {
            let (s, c) = (2.0 * PI * (k1 * x + k2 * y)).sin_cos();
            value[2 * k] = amp * c;
            value[2 * k + 1] = amp * s;
            let (gx, gy) = (2.0 * PI * k1 * amp, 2.0 * PI * k2 * amp);
            dx[2 * k] = -gx * s;
            dx[2 * k + 1] = gx * c;
            dy[2 * k] = -gy * s;
            dy[2 * k + 1] = gy * c;
        }
        true
    }
}

/// `φ_ξ ∘ F` with partials by the differential of `φ_ξ`.
pub struct MobiusComposite<'a> {
    pub inner: &'a dyn TorusMap,
    pub map: MobiusMap,
}

impl TorusMap for MobiusComposite<'_> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn eval(&self, x: f64, y: f64, out: &mut [f64]) {
        let mut v = vec![0.0; out.len()];
        self.inner.eval(x, y, &mut v);
        self.map.apply_into(&v, out);
    }

    fn eval_with_partials(&self, x: f64, y: f64, value: &mut [f64], dx: &mut [f64], dy: &mut [f64]) -> bool {
        let n = value.len();
        let (mut v, mut vx, mut vy) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
        if !self.inner.eval_with_partials(x, y, &mut v, &mut vx, &mut vy) {
            return false;
        }
        self.map.apply_into(&v, value);
        self.map.differential_into(&v, &vx, dx);
        self.map.differential_into(&v, &vy, dy);
        true
    }
}

/// `Ψ(x,y)` for the embedding into `S³`.
pub fn embedding_psi3(params: &TorusParams, r: f64, point: (f64, f64)) -> Result<SpherePoint> {
    let map = TrigMap::psi3(*params, r)?;
    let mut out = vec![0.0; 4];
    map.eval(point.0, point.1, &mut out);
    SpherePoint::new(out)
}

/// `ψ(x,y)` for Bryant's immersion into `S⁵`.
pub fn immersion_bryant(params: &TorusParams, point: (f64, f64)) -> Result<SpherePoint> {
    let map = TrigMap::bryant(*params)?;
    let mut out = vec![0.0; 6];
    map.eval(point.0, point.1, &mut out);
    SpherePoint::new(out)
}

/// Values and Cartesian partials of a map on every grid node.
#[derive(Debug, Clone, PartialEq)]
pub struct MapSample {
    dim: usize,
    values: Vec<f64>,
    dx: Vec<f64>,
    dy: Vec<f64>,
}

impl MapSample {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.values.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    #[inline]
    pub fn value(&self, k: usize) -> &[f64] {
        &self.values[k * self.dim..(k + 1) * self.dim]
    }

    #[inline]
    pub fn dx(&self, k: usize) -> &[f64] {
        &self.dx[k * self.dim..(k + 1) * self.dim]
    }

    #[inline]
    pub fn dy(&self, k: usize) -> &[f64] {
        &self.dy[k * self.dim..(k + 1) * self.dim]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `|∇F|²` at node `k`.
    #[inline]
    pub fn grad_sq(&self, k: usize) -> f64 {
        dot(self.dx(k), self.dx(k)) + dot(self.dy(k), self.dy(k))
    }

    /// Largest `||F| - 1|` and largest `|⟨F, ∂F⟩|` over the grid.
    pub fn invariant_residuals(&self) -> (f64, f64) {
        let mut unit: f64 = 0.0;
        let mut tangent: f64 = 0.0;
        for k in 0..self.len() {
            let v = self.value(k);
            unit = unit.max((dot(v, v).sqrt() - 1.0).abs());
            tangent = tangent.max(dot(v, self.dx(k)).abs()).max(dot(v, self.dy(k)).abs());
        }
        (unit, tangent)
    }

    /// Sample of `φ ∘ F`, partials by the differential of `φ`.
    pub fn compose_mobius(&self, map: &MobiusMap) -> MapSample {
        let d = self.dim;
        let mut out = MapSample {
            dim: d,
            values: vec![0.0; self.values.len()],
            dx: vec![0.0; self.values.len()],
            dy: vec![0.0; self.values.len()],
        };
        out.values
            .par_chunks_mut(d)
            .zip(out.dx.par_chunks_mut(d))
            .zip(out.dy.par_chunks_mut(d))
            .enumerate()
            .for_each(|(k, ((v, gx), gy))| {
                let p = self.value(k);
                map.apply_into(p, v);
                map.differential_into(p, self.dx(k), gx);
                map.differential_into(p, self.dy(k), gy);
            });
        out
    }

    /// Sample of `O ∘ F` for a row-major `dim × dim` matrix `O`.
    pub fn transform_linear(&self, matrix: &[f64]) -> MapSample {
        let d = self.dim;
        let apply = |src: &[f64]| -> Vec<f64> {
            src.chunks(d)
                .flat_map(|v| (0..d).map(move |i| dot(&matrix[i * d..(i + 1) * d], v)))
                .collect()
        };
        MapSample {
            dim: d,
            values: apply(&self.values),
            dx: apply(&self.dx),
            dy: apply(&self.dy),
        }
    }

    pub(crate) fn from_parts(dim: usize, values: Vec<f64>, dx: Vec<f64>, dy: Vec<f64>) -> Self {
        debug_assert!(values.len() == dx.len() && dx.len() == dy.len());
        Self { dim, values, dx, dy }
    }
}

/// Sample `map` on the grid. With `analytic` set and available, partials
/// come from the map's formulas; otherwise from 4th-order central
/// differences in `(s,t)` converted to `(x,y)`.
pub fn sample_map(grid: &TorusGrid, map: &dyn TorusMap, analytic: bool) -> MapSample {
    let d = map.dim();
    let n = grid.len();
    let mut values = vec![0.0; n * d];
    let mut dx = vec![0.0; n * d];
    let mut dy = vec![0.0; n * d];
    let params = *grid.params();
    values
        .par_chunks_mut(d)
        .zip(dx.par_chunks_mut(d))
        .zip(dy.par_chunks_mut(d))
        .enumerate()
        .for_each(|(k, ((v, gx), gy))| {
            let (s, t) = grid.lattice_node(k);
            let (x, y) = lattice_to_cartesian(&params, s, t);
            if analytic && map.eval_with_partials(x, y, v, gx, gy) {
                return;
            }
            map.eval(x, y, v);
            finite_difference_partials(&params, map, s, t, gx, gy);
        });
    MapSample { dim: d, values, dx, dy }
}

fn finite_difference_partials(
    params: &TorusParams,
    map: &dyn TorusMap,
    s: f64,
    t: f64,
    gx: &mut [f64],
    gy: &mut [f64],
) {
    let d = map.dim();
    let h = FD_STEP;
    let mut buf = vec![0.0; d];
    let mut diff = |ds: f64, dt: f64, out: &mut [f64]| {
        out.iter_mut().for_each(|o| *o = 0.0);
        for (m, c) in [(-2.0, 1.0), (-1.0, -8.0), (1.0, 8.0), (2.0, -1.0)] {
            let (x, y) = lattice_to_cartesian(params, s + m * ds, t + m * dt);
            map.eval(x, y, &mut buf);
            for (o, v) in out.iter_mut().zip(&buf) {
                *o += c * v;
            }
        }
        out.iter_mut().for_each(|o| *o /= 12.0 * h);
    };
    let mut fs = vec![0.0; d];
    let mut ft = vec![0.0; d];
    diff(h, 0.0, &mut fs);
    diff(0.0, h, &mut ft);
    // ∂/∂s = ∂/∂x and ∂/∂t = a ∂/∂x + b ∂/∂y
    for i in 0..d {
        gx[i] = fs[i];
        gy[i] = (ft[i] - params.a() * fs[i]) / params.b();
    }
}

/// `½ ∫ |∇F|²`.
pub fn dirichlet_energy(sample: &MapSample, grid: &TorusGrid) -> f64 {
    let total: f64 = (0..sample.len()).map(|k| sample.grad_sq(k)).sum();
    0.5 * total * grid.cell_weight()
}

/// `E(φ_ξ ∘ F)` from a sample of `F`, using that `φ_ξ` is conformal with
/// factor `(1 - |ξ|²)/(1 + ⟨F,ξ⟩)²`.
pub fn mobius_energy(sample: &MapSample, grid: &TorusGrid, xi: &[f64]) -> f64 {
    let grad = gradient_table(sample);
    mobius_energy_cached(sample, &grad, grid, xi)
}

fn gradient_table(sample: &MapSample) -> Vec<f64> {
    (0..sample.len()).map(|k| sample.grad_sq(k)).collect()
}

fn mobius_energy_cached(sample: &MapSample, grad: &[f64], grid: &TorusGrid, xi: &[f64]) -> f64 {
    let c = 1.0 - dot(xi, xi);
    let total: f64 = grad
        .iter()
        .enumerate()
        .map(|(k, g)| {
            let den = 1.0 + dot(sample.value(k), xi);
            g / (den * den)
        })
        .sum();
    0.5 * c * total * grid.cell_weight()
}

/// `½ ∫ (1 - |ξ|²)/(1 - ⟨ψ,ξ⟩)² |∇ψ|²` by quadrature.
pub fn area_functional(psi_sample: &MapSample, grid: &TorusGrid, xi: &BallPoint) -> Result<f64> {
    let xi = xi.as_slice();
    if xi.len() != psi_sample.dim() {
        return Err(Error::OutOfRange("ξ has the wrong dimension".into()));
    }
    let c = 1.0 - dot(xi, xi);
    let mut total = 0.0;
    for k in 0..psi_sample.len() {
        let den = 1.0 - dot(psi_sample.value(k), xi);
        if den * den < 1e-300 {
            return Err(Error::Singular(psi_sample.value(k).to_vec()));
        }
        total += psi_sample.grad_sq(k) / (den * den);
    }
    Ok(0.5 * c * total * grid.cell_weight())
}

#[derive(Debug, Clone, Serialize)]
pub struct SupResult {
    pub xi: BallPoint,
    pub energy: f64,
    /// Index of the seed whose run produced the maximizer.
    pub seed: usize,
}

/// Deterministic seeds: the origin and `±0.5 eᵢ`.
pub fn ball_seeds(dim: usize) -> Vec<Vec<f64>> {
    let mut seeds = vec![vec![0.0; dim]];
    for i in 0..dim {
        for s in [0.5, -0.5] {
            let mut v = vec![0.0; dim];
            v[i] = s;
            seeds.push(v);
        }
    }
    seeds
}

/// `sup_ξ E(φ_ξ ∘ F)` over the open ball, for a sampled `F`.
///
/// Multi-start Nelder–Mead with a ball-interior penalty from
/// [`ball_seeds`], followed by coordinate-wise golden-section refinement of
/// the best point.
pub fn sup_energy_over_ball(sample: &MapSample, grid: &TorusGrid) -> SupResult {
    let dim = sample.dim();
    let grad = gradient_table(sample);
    let energy = |xi: &[f64]| mobius_energy_cached(sample, &grad, grid, xi);
    let limit = 1.0 - BALL_GUARD;
    let objective = |xi: &[f64]| {
        let n = dot(xi, xi).sqrt();
        if n >= limit {
            1e30 * (1.0 + n)
        } else {
            -energy(xi)
        }
    };
    let opts = NelderMeadOptions {
        initial_step: 0.1,
        max_evals: 3000,
        f_tol: 1e-13,
        x_tol: 1e-9,
    };
    let runs: Vec<(usize, Vec<f64>, f64)> = ball_seeds(dim)
        .into_par_iter()
        .enumerate()
        .map(|(i, seed)| {
            let res = nelder_mead(objective, &seed, opts);
            (i, res.x, -res.value)
        })
        .collect();
    let (seed, mut best, mut best_e) = runs
        .into_iter()
        .fold(None::<(usize, Vec<f64>, f64)>, |acc, run| match acc {
            Some(a) if a.2 >= run.2 => Some(a),
            _ => Some(run),
        })
        .unwrap();
    let e0 = energy(&vec![0.0; dim]);
    if e0 >= best_e {
        best = vec![0.0; dim];
        best_e = e0;
    }

    for _ in 0..3 {
        for i in 0..dim {
            let rest: f64 = best
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, v)| v * v)
                .sum();
            let room = (limit * limit - rest).max(0.0).sqrt();
            let lo = (best[i] - 0.05).max(-room);
            let hi = (best[i] + 0.05).min(room);
            if hi <= lo {
                continue;
            }
            let mut trial = best.clone();
            let (x, fx) = golden_section_min(
                |v| {
                    let mut p = trial.clone();
                    p[i] = v;
                    -energy(&p)
                },
                lo,
                hi,
                1e-10,
            );
            if -fx > best_e {
                trial[i] = x;
                best = trial;
                best_e = -fx;
            }
        }
    }
    SupResult {
        xi: BallPoint::new(best).expect("optimizer iterate stays inside the ball"),
        energy: best_e,
        seed,
    }
}

/// `E(Ψ)` for the embedding into `S³`: `2π²((a²+b²)(1-r) + r)/b`.
pub fn psi3_energy(params: &TorusParams, r: f64) -> f64 {
    2.0 * PI * PI * (params.s() * (1.0 - r) + r) / params.b()
}

/// Closed-form `sup_ξ E(φ_ξ ∘ Ψ)`, two branches split at `r = 2/3`.
pub fn psi3_sup_energy(params: &TorusParams, r: f64) -> Result<f64> {
    if !(0.5..1.0).contains(&r) {
        return Err(Error::OutOfRange(format!("r = {r} is outside [1/2, 1)")));
    }
    let num = params.s() * (1.0 - r) + r;
    Ok(if r <= 2.0 / 3.0 {
        2.0 * PI * PI * num / params.b()
    } else {
        4.0 * PI * PI * num / (3.0 * 3f64.sqrt() * params.b() * r * (1.0 - r).sqrt())
    })
}

/// The same supremum written through `b₀ = √(r/(1-r))`.
pub fn psi3_sup_energy_via_b0(params: &TorusParams, r: f64) -> Result<f64> {
    if !(0.5..1.0).contains(&r) {
        return Err(Error::OutOfRange(format!("r = {r} is outside [1/2, 1)")));
    }
    let b0sq = r / (1.0 - r);
    let s = params.s();
    Ok(if r <= 2.0 / 3.0 {
        2.0 * PI * PI * (s + b0sq) / (params.b() * (b0sq + 1.0))
    } else {
        4.0 * PI * PI * (b0sq + 1.0).sqrt() * (s + b0sq) / (3.0 * 3f64.sqrt() * params.b() * b0sq)
    })
}

/// Closed-form `sup_ξ A(φ_ξ ∘ ψ)` for Bryant's immersion.
pub fn bryant_sup_area(params: &TorusParams) -> f64 {
    let (a, b) = (params.a(), params.b());
    let c = b * b + a * a - a;
    if c <= 2.0 {
        4.0 * PI * PI * b / (1.0 + c)
    } else {
        8.0 * PI * PI * b * (1.0 + c).sqrt() / (3.0 * 3f64.sqrt() * c)
    }
}

/// Relative deviation of `E(φ_ξ∘Ψ₁)/E(φ_ξ∘Ψ₂)` from `E(Ψ₁)/E(Ψ₂)` on an
/// `n × n` grid.
pub fn ratio_invariance_check_on(
    params1: &TorusParams,
    params2: &TorusParams,
    r: f64,
    xi: &BallPoint,
    n: usize,
) -> Result<f64> {
    let energies = |p: &TorusParams| -> Result<(f64, f64)> {
        let grid = TorusGrid::square(*p, n)?;
        let sample = sample_map(&grid, &TrigMap::psi3(*p, r)?, true);
        Ok((
            dirichlet_energy(&sample, &grid),
            mobius_energy(&sample, &grid, xi.as_slice()),
        ))
    };
    if xi.dim() != 4 {
        return Err(Error::OutOfRange("ξ must lie in the 4-ball".into()));
    }
    let (e1, e1x) = energies(params1)?;
    let (e2, e2x) = energies(params2)?;
    let rhs = e1 / e2;
    Ok(((e1x / e2x) - rhs).abs() / rhs.abs())
}

pub fn ratio_invariance_check(params1: &TorusParams, params2: &TorusParams, r: f64, xi: &BallPoint) -> Result<f64> {
    ratio_invariance_check_on(params1, params2, r, xi, 64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const PI2: f64 = PI * PI;

    fn tp(a: f64, b: f64) -> TorusParams {
        TorusParams::new(a, b).unwrap()
    }

    fn rel(x: f64, y: f64) -> f64 {
        (x - y).abs() / y.abs()
    }

    #[test]
    fn grid_floor_and_area() {
        assert!(matches!(
            TorusGrid::new(TorusParams::square(), 8, 32),
            Err(Error::Resolution(_))
        ));
        let g = TorusGrid::new(tp(0.3, 1.2), 16, 24).unwrap();
        assert!((g.integrate(&vec![1.0; g.len()]) - 1.2).abs() < 1e-14);
    }

    #[test]
    fn psi3_examples() {
        let p = embedding_psi3(&TorusParams::square(), 0.5, (0.0, 0.0)).unwrap();
        let h = 0.5f64.sqrt();
        assert!(p.distance(&SpherePoint::new(vec![h, 0.0, h, 0.0]).unwrap()) < 1e-15);
        assert!(embedding_psi3(&TorusParams::square(), 0.4, (0.0, 0.0)).is_err());
        assert!(embedding_psi3(&TorusParams::square(), 1.0, (0.0, 0.0)).is_err());

        let params = tp(0.3, 1.2);
        let map = TrigMap::psi3(params, 0.7).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (mut u, mut v) = (vec![0.0; 4], vec![0.0; 4]);
        for _ in 0..20 {
            let (x, y) = (rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            map.eval(x, y, &mut u);
            assert!((dot(&u, &u) - 1.0).abs() < 1e-15);
            map.eval(x + 0.3, y + 1.2, &mut v);
            assert!(u.iter().zip(&v).all(|(p, q)| (p - q).abs() < 1e-12));
            map.eval(x + 1.0, y, &mut v);
            assert!(u.iter().zip(&v).all(|(p, q)| (p - q).abs() < 1e-12));
        }
    }

    #[test]
    fn bryant_examples() {
        let p = immersion_bryant(&TorusParams::square(), (0.0, 0.0)).unwrap();
        assert_eq!(p.as_slice()[4], 0.0);
        assert_eq!(p.as_slice()[5], 0.0);

        let eq = TorusParams::equilateral();
        let (a, b) = (eq.a(), eq.b());
        let c = b * b + a * a - a;
        let n = (1.0 + c).sqrt();
        let want = [c.sqrt() / n, 0.0, (1.0 - a).sqrt() / n, 0.0, a.sqrt() / n, 0.0];
        let got = immersion_bryant(&eq, (0.0, 0.0)).unwrap();
        assert!(got.as_slice().iter().zip(want).all(|(g, w)| (g - w).abs() < 1e-15));

        let map = TrigMap::bryant(tp(0.4, 1.3)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut u = vec![0.0; 6];
        for _ in 0..20 {
            map.eval(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0), &mut u);
            assert!((dot(&u, &u).sqrt() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn bryant_is_conformal() {
        let grid = TorusGrid::square(tp(0.3, 1.4), 16).unwrap();
        let s = sample_map(&grid, &TrigMap::bryant(*grid.params()).unwrap(), true);
        for k in 0..s.len() {
            let (xx, yy, xy) = (dot(s.dx(k), s.dx(k)), dot(s.dy(k), s.dy(k)), dot(s.dx(k), s.dy(k)));
            assert!((xx - yy).abs() < 1e-10 * xx && xy.abs() < 1e-10 * xx);
        }
    }

    #[test]
    fn constant_map_has_no_energy() {
        struct Constant;
        impl TorusMap for Constant {
            fn dim(&self) -> usize {
                3
            }
            fn eval(&self, _x: f64, _y: f64, out: &mut [f64]) {
                out.copy_from_slice(&[0.0, 0.0, 1.0]);
            }
        }
        let grid = TorusGrid::square(TorusParams::square(), 16).unwrap();
        let s = sample_map(&grid, &Constant, true);
        assert!((0..s.len()).all(|k| s.grad_sq(k) == 0.0));
        assert_eq!(dirichlet_energy(&s, &grid), 0.0);
    }

    #[test]
    fn pointwise_gradient_square_torus() {
        let grid = TorusGrid::square(TorusParams::square(), 16).unwrap();
        let s = sample_map(&grid, &TrigMap::psi3(*grid.params(), 0.5).unwrap(), true);
        for k in 0..s.len() {
            assert!(rel(s.grad_sq(k), 4.0 * PI2) < 1e-14);
        }
    }

    #[test]
    fn sample_invariants_hold() {
        let grid = TorusGrid::square(tp(0.2, 1.1), 32).unwrap();
        let psi = TrigMap::psi3(*grid.params(), 0.6).unwrap();
        let xi = BallPoint::new(vec![0.3, -0.2, 0.1, 0.4]).unwrap();
        let comp = MobiusComposite {
            inner: &psi,
            map: MobiusMap::new(&xi),
        };
        let s = sample_map(&grid, &comp, true);
        let (unit, tangent) = s.invariant_residuals();
        assert!(unit < 1e-10 && tangent < 1e-8);
    }

    #[test]
    fn analytic_and_fd_partials_agree() {
        let grid = TorusGrid::square(tp(0.4, 1.3), 16).unwrap();
        let psi = TrigMap::psi3(*grid.params(), 0.7).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..3 {
            let v: Vec<f64> = (0..4).map(|_| rng.gen_range(-0.4..0.4)).collect();
            let comp = MobiusComposite {
                inner: &psi,
                map: MobiusMap::new(&BallPoint::new(v).unwrap()),
            };
            let a = sample_map(&grid, &comp, true);
            let f = sample_map(&grid, &comp, false);
            let err =
                a.dx.iter()
                    .zip(&f.dx)
                    .chain(a.dy.iter().zip(&f.dy))
                    .map(|(p, q)| (p - q).abs())
                    .fold(0.0, f64::max);
            assert!(err < 1e-6, "{err}");
        }
    }

    #[test]
    fn energy_closed_forms() {
        for &(a, b, r) in &[(0.0, 1.0, 0.5), (0.3, 1.2, 0.6), (0.5, 3f64.sqrt() / 2.0, 0.5)] {
            let grid = TorusGrid::square(tp(a, b), 64).unwrap();
            let s = sample_map(&grid, &TrigMap::psi3(*grid.params(), r).unwrap(), true);
            let e = dirichlet_energy(&s, &grid);
            assert!(rel(e, psi3_energy(grid.params(), r)) < 1e-10);
            assert_eq!(mobius_energy(&s, &grid, &[0.0; 4]), e);
        }
    }

    #[test]
    fn mobius_energy_matches_composite_sample() {
        let grid = TorusGrid::square(tp(0.1, 1.5), 48).unwrap();
        let psi = TrigMap::psi3(*grid.params(), 0.8).unwrap();
        let s = sample_map(&grid, &psi, true);
        let xi = BallPoint::new(vec![0.5, 0.1, -0.2, 0.0]).unwrap();
        let direct = dirichlet_energy(&s.compose_mobius(&MobiusMap::new(&xi)), &grid);
        assert!(rel(mobius_energy(&s, &grid, xi.as_slice()), direct) < 1e-12);
    }

    #[test]
    fn energy_is_orthogonally_invariant() {
        let grid = TorusGrid::square(tp(0.2, 1.3), 32).unwrap();
        let s = sample_map(&grid, &TrigMap::psi3(*grid.params(), 0.7).unwrap(), true);
        let e = dirichlet_energy(&s, &grid);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..10 {
            let m = nalgebra::DMatrix::<f64>::from_fn(4, 4, |_, _| rng.gen_range(-1.0..1.0));
            let q = m.qr().q();
            let flat: Vec<f64> = (0..16).map(|i| q[(i / 4, i % 4)]).collect();
            assert!(rel(dirichlet_energy(&s.transform_linear(&flat), &grid), e) < 1e-12);
        }
    }

    #[test]
    fn area_equals_energy_at_origin_and_matches_reversed_composite() {
        let grid = TorusGrid::square(tp(0.3, 1.4), 64).unwrap();
        let s = sample_map(&grid, &TrigMap::bryant(*grid.params()).unwrap(), true);
        let e = dirichlet_energy(&s, &grid);
        assert!(rel(area_functional(&s, &grid, &BallPoint::origin(6)).unwrap(), e) < 1e-14);
        let xi = BallPoint::new(vec![0.2, -0.3, 0.1, 0.0, 0.25, 0.1]).unwrap();
        let area = area_functional(&s, &grid, &xi).unwrap();
        let composite = dirichlet_energy(&s.compose_mobius(&MobiusMap::new(&xi.neg())), &grid);
        assert!(rel(area, composite) < 1e-6);
    }

    #[test]
    fn bryant_sup_first_branch_square() {
        let grid = TorusGrid::square(TorusParams::square(), 32).unwrap();
        let s = sample_map(&grid, &TrigMap::bryant(*grid.params()).unwrap(), true);
        let sup = sup_energy_over_ball(&s, &grid);
        assert!(rel(sup.energy, 2.0 * PI2) < 1e-6);
        assert!(rel(bryant_sup_area(&TorusParams::square()), 2.0 * PI2) < 1e-15);
    }

    #[test]
    fn bryant_second_branch_sup_exceeds_value_at_origin() {
        let grid = TorusGrid::square(tp(0.0, 2.0), 32).unwrap();
        let s = sample_map(&grid, &TrigMap::bryant(*grid.params()).unwrap(), true);
        let sup = sup_energy_over_ball(&s, &grid);
        let at0 = area_functional(&s, &grid, &BallPoint::origin(6)).unwrap();
        assert!(sup.energy > at0 + 1e-3);
        assert!(rel(sup.energy, bryant_sup_area(grid.params())) < 5e-3);
    }

    #[test]
    fn psi3_sup_both_branches() {
        let grid = TorusGrid::square(tp(0.3, 1.2), 64).unwrap();
        let s = sample_map(&grid, &TrigMap::psi3(*grid.params(), 0.6).unwrap(), true);
        let sup = sup_energy_over_ball(&s, &grid);
        assert!(rel(sup.energy, psi3_sup_energy(grid.params(), 0.6).unwrap()) < 1e-6);
        assert!(sup.xi.norm() < 1e-4);

        let grid = TorusGrid::square(TorusParams::square(), 64).unwrap();
        let s = sample_map(&grid, &TrigMap::psi3(*grid.params(), 0.8).unwrap(), true);
        let sup = sup_energy_over_ball(&s, &grid);
        assert!(rel(sup.energy, psi3_sup_energy(grid.params(), 0.8).unwrap()) < 5e-3);
    }

    #[test]
    fn b0_bridge_agrees() {
        for &(a, b) in &[(0.0, 1.0), (0.3, 1.2), (0.5, 2.5)] {
            for r in [0.5, 0.6, 2.0 / 3.0, 0.7, 0.75, 0.9, 0.99] {
                let p = tp(a, b);
                let x = psi3_sup_energy(&p, r).unwrap();
                let y = psi3_sup_energy_via_b0(&p, r).unwrap();
                assert!(rel(x, y) < 1e-12, "({a},{b},{r})");
            }
        }
    }

    #[test]
    fn ratio_invariance() {
        let xi = BallPoint::new(vec![0.4, 0.0, 0.0, 0.0]).unwrap();
        let d = ratio_invariance_check(&TorusParams::square(), &tp(0.3, 1.5), 0.55, &xi).unwrap();
        assert!(d < 1e-6, "{d}");
        let d0 = ratio_invariance_check(&TorusParams::square(), &tp(0.3, 1.5), 0.55, &BallPoint::origin(4)).unwrap();
        assert_eq!(d0, 0.0);
    }
}
