//! Rayleigh–Ritz eigenvalues of `Δu = λ ω u` on a flat torus.
//!
//! The trial space is spanned by the flat eigenfunctions with `λ_pq` below a
//! cutoff. The Dirichlet form is conformally invariant in dimension two, so
//! the stiffness matrix is the diagonal of flat eigenvalues and the weight
//! enters only through the mass matrix `∫ ω e_j e_k`. Ritz values bound the
//! true eigenvalues from above.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::bounds::{lambda1_torus_max, uniform_bound, upper_bound_u};
use crate::error::{Error, Result};
use crate::flat_spectrum::{modes_below, Mode, Parity};
use crate::linalg::{generalized_eigen, Eigen};
use crate::moduli::TorusParams;
use crate::weight_expr;

/// Smallest admissible basis.
pub const MIN_BASIS: usize = 10;

/// A positive lattice-periodic weight `ω`, given as a function of the
/// lattice phases `u = 2πs`, `v = 2πt`.
#[derive(Clone)]
pub struct ConformalWeight {
    description: String,
    f: Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>,
}

impl fmt::Debug for ConformalWeight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_tuple("ConformalWeight").field(&self.description).finish()
    }
}

impl ConformalWeight {
    pub fn constant(c: f64) -> Result<Self> {
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::InvalidWeight(format!("constant weight {c} is not positive")));
        }
        Ok(Self::from_fn(format!("{c}"), move |_, _| c))
    }

    pub fn flat() -> Self {
        Self::from_fn("1", |_, _| 1.0)
    }

    pub fn from_expr(src: &str) -> Result<Self> {
        let expr = weight_expr::parse(src)?;
        Ok(Self::from_fn(src, move |u, v| expr.eval(u, v)))
    }

    pub fn from_fn(description: impl Into<String>, f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            description: description.into(),
            f: Arc::new(f),
        }
    }

    pub fn description(&self) -> &str {
        &self.description
    }

    /// `c·ω`.
    pub fn scaled(&self, c: f64) -> Self {
        let f = Arc::clone(&self.f);
        Self::from_fn(format!("{c}*({})", self.description), move |u, v| c * f(u, v))
    }

    #[inline]
    pub fn eval(&self, u: f64, v: f64) -> f64 {
        (self.f)(u, v)
    }

    /// Samples on the `ns × nt` lattice grid, `t` fastest; rejects `ω <= 0`.
    pub fn sample(&self, ns: usize, nt: usize) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(ns * nt);
        for i in 0..ns {
            let u = 2.0 * PI * i as f64 / ns as f64;
            for j in 0..nt {
                let v = 2.0 * PI * j as f64 / nt as f64;
                let w = self.eval(u, v);
                if !(w.is_finite() && w > 0.0) {
                    return Err(Error::InvalidWeight(format!(
                        "ω = {w} at (u, v) = ({u}, {v}) in '{}'",
                        self.description
                    )));
                }
                out.push(w);
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BasisFunction {
    pub mode: Mode,
    pub parity: Parity,
    pub eigenvalue: f64,
}

impl BasisFunction {
    /// Flat-`L²`-normalized value at lattice coordinates `(s,t)`.
    pub fn eval(&self, params: &TorusParams, s: f64, t: f64) -> f64 {
        let b = params.b();
        if self.mode.is_zero() {
            return 1.0 / b.sqrt();
        }
        let phase = 2.0 * PI * (self.mode.q() as f64 * s + self.mode.p() as f64 * t);
        let scale = (2.0 / b).sqrt();
        match self.parity {
            Parity::Cos => scale * phase.cos(),
            Parity::Sin => scale * phase.sin(),
        }
    }
}

/// The ordered basis below `cutoff`: modes by eigenvalue, cosine before sine.
pub fn basis_below(params: &TorusParams, cutoff: f64) -> Vec<BasisFunction> {
    let mut basis = Vec::new();
    for (mode, eigenvalue) in modes_below(params, cutoff) {
        basis.push(BasisFunction {
            mode,
            parity: Parity::Cos,
            eigenvalue,
        });
        if !mode.is_zero() {
            basis.push(BasisFunction {
                mode,
                parity: Parity::Sin,
                eigenvalue,
            });
        }
    }
    basis
}

/// Minimal quadrature grid for a basis: four nodes per highest oscillation
/// in each lattice direction, never below 16.
pub fn aliasing_floor(basis: &[BasisFunction]) -> (usize, usize) {
    let max_q = basis
        .iter()
        .map(|f| f.mode.q().unsigned_abs() as usize)
        .max()
        .unwrap_or(0);
    let max_p = basis
        .iter()
        .map(|f| f.mode.p().unsigned_abs() as usize)
        .max()
        .unwrap_or(0);
    ((4 * max_q).max(16), (4 * max_p).max(16))
}

#[derive(Debug, Clone, Copy, Default)]
pub struct AssembleOptions {
    /// Explicit quadrature grid; must meet the aliasing floor.
    pub grid: Option<(usize, usize)>,
}

#[derive(Debug, Clone)]
pub struct GalerkinProblem {
    params: TorusParams,
    basis: Vec<BasisFunction>,
    stiffness: Vec<f64>,
    mass: Vec<f64>,
    grid: (usize, usize),
    area: f64,
}

impl GalerkinProblem {
    pub fn params(&self) -> &TorusParams {
        &self.params
    }

    pub fn len(&self) -> usize {
        self.basis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.basis.is_empty()
    }

    pub fn basis(&self) -> &[BasisFunction] {
        &self.basis
    }

    /// Diagonal of the stiffness matrix.
    pub fn stiffness(&self) -> &[f64] {
        &self.stiffness
    }

    /// Row-major mass matrix.
    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn grid(&self) -> (usize, usize) {
        self.grid
    }

    /// `∫ ω` over the torus by quadrature.
    pub fn area(&self) -> f64 {
        self.area
    }
}

pub fn assemble(params: &TorusParams, weight: &ConformalWeight, cutoff: f64) -> Result<GalerkinProblem> {
    assemble_with(params, weight, cutoff, AssembleOptions::default())
}

pub fn assemble_with(
    params: &TorusParams,
    weight: &ConformalWeight,
    cutoff: f64,
    opts: AssembleOptions,
) -> Result<GalerkinProblem> {
    let basis = basis_below(params, cutoff);
    if basis.len() < MIN_BASIS {
        return Err(Error::Resolution(format!(
            "cutoff {cutoff} gives {} basis functions, need at least {MIN_BASIS}",
            basis.len()
        )));
    }
    let floor = aliasing_floor(&basis);
    let (ns, nt) = match opts.grid {
        Some((ns, nt)) if ns < floor.0 || nt < floor.1 => {
            return Err(Error::Resolution(format!(
                "quadrature grid {ns}x{nt} is below the aliasing floor {}x{}",
                floor.0, floor.1
            )))
        }
        Some(g) => g,
        None => floor,
    };
    let omega = weight.sample(ns, nt)?;
    let cell = params.b() / (ns * nt) as f64;
    let weighted: Vec<f64> = omega.iter().map(|w| w * cell).collect();
    let area = weighted.iter().sum();

    let nodes = ns * nt;
    let table: Vec<Vec<f64>> = basis
        .par_iter()
        .map(|f| {
            (0..nodes)
                .map(|k| f.eval(params, (k / nt) as f64 / ns as f64, (k % nt) as f64 / nt as f64))
                .collect()
        })
        .collect();
    let n = basis.len();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|j| {
            let ej: Vec<f64> = table[j].iter().zip(&weighted).map(|(e, w)| e * w).collect();
            (j..n)
                .map(|k| ej.iter().zip(&table[k]).map(|(a, b)| a * b).sum())
                .collect()
        })
        .collect();
    let mut mass = vec![0.0; n * n];
    for (j, row) in rows.iter().enumerate() {
        for (off, &v) in row.iter().enumerate() {
            let k = j + off;
            mass[j * n + k] = v;
            mass[k * n + j] = v;
        }
    }
    Ok(GalerkinProblem {
        params: *params,
        stiffness: basis.iter().map(|f| f.eigenvalue).collect(),
        basis,
        mass,
        grid: (ns, nt),
        area,
    })
}

fn stiffness_matrix(problem: &GalerkinProblem) -> Vec<f64> {
    let n = problem.len();
    let mut k = vec![0.0; n * n];
    for (i, &v) in problem.stiffness.iter().enumerate() {
        k[i * n + i] = v;
    }
    k
}

/// All Ritz pairs; eigenvectors are mass-orthonormal columns.
pub fn solve_full(problem: &GalerkinProblem, want_vectors: bool) -> Result<Eigen> {
    generalized_eigen(&stiffness_matrix(problem), &problem.mass, problem.len(), want_vectors)
}

/// The `k + 1` smallest Ritz values `λ_0 <= … <= λ_k`.
pub fn solve_generalized(problem: &GalerkinProblem, k: usize) -> Result<Vec<f64>> {
    if k >= problem.len() {
        return Err(Error::Resolution(format!(
            "index {k} needs more than {} basis functions",
            problem.len()
        )));
    }
    let mut values = solve_full(problem, false)?.values;
    values.truncate(k + 1);
    Ok(values)
}

/// Ritz `λ_k` times the area `∫ ω`.
pub fn normalized_lambda(params: &TorusParams, weight: &ConformalWeight, cutoff: f64, k: usize) -> Result<f64> {
    let problem = assemble(params, weight, cutoff)?;
    Ok(solve_generalized(&problem, k)?[k] * problem.area())
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundCertificate {
    pub a: f64,
    pub b: f64,
    pub weight: String,
    pub cutoff: f64,
    pub basis_size: usize,
    pub area: f64,
    pub lambda1_bar: f64,
    pub lambda2_bar: f64,
    #[serde(rename = "U")]
    pub u: f64,
    pub margin: f64,
    /// `λ̄₂ < U`.
    pub certified: bool,
    /// `λ̄₁ <= 8π²/√3 + 1e-6`.
    pub lambda1_below_torus_max: bool,
    /// `λ̄₂ < 16π²/√3`.
    pub below_uniform_bound: bool,
}

pub fn bound_certificate(params: &TorusParams, weight: &ConformalWeight, cutoff: f64) -> Result<BoundCertificate> {
    let problem = assemble(params, weight, cutoff)?;
    let values = solve_generalized(&problem, 2)?;
    let area = problem.area();
    let (l1, l2) = (values[1] * area, values[2] * area);
    let u = upper_bound_u(params);
    Ok(BoundCertificate {
        a: params.a(),
        b: params.b(),
        weight: weight.description().to_string(),
        cutoff,
        basis_size: problem.len(),
        area,
        lambda1_bar: l1,
        lambda2_bar: l2,
        u,
        margin: u - l2,
        certified: l2 < u,
        lambda1_below_torus_max: l1 <= lambda1_torus_max() + 1e-6,
        below_uniform_bound: l2 < uniform_bound(),
    })
}

/// Weights used by the certificate checks, as expressions in `u`, `v`.
pub fn reference_weights() -> Vec<(&'static str, &'static str)> {
    vec![
        ("cosine ripple", "1 + 0.3*cos(u)"),
        ("exponential saddle", "exp(0.5*sin(u)*sin(v))"),
        ("mixed ripple", "1.5 + 0.4*cos(u + v) + 0.3*sin(2*v)"),
        ("single bump", "1 + 20*exp(4*(cos(u) + -1))*exp(4*(cos(v) + -1))"),
        (
            "two bumps",
            "1 + 50*exp(6*(cos(u) + -1))*exp(6*(cos(v) + -1)) + 50*exp(6*(cos(u + -pi) + -1))*exp(6*(cos(v + -pi) + -1))",
        ),
    ]
}
