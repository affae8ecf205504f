//! Conformal geometry of `Sⁿ ⊂ R^{n+1}`.
//!
//! The Möbius family is
//!
//! ```text
//! φ_ξ(p) = (p + (β⟨p,ξ⟩ + α) ξ) / (α (⟨p,ξ⟩ + 1)),
//! α = (1 - |ξ|²)^{-1/2},  β = (α - 1) / |ξ|²,
//! ```
//!
//! indexed by `ξ` in the open unit ball. It fixes `±ξ/|ξ|` and pushes mass
//! toward `ξ/|ξ|`; its conformal factor is `(1 - |ξ|²) / (1 + ⟨p,ξ⟩)²`.
//!
//! Caps are `C(p,t) = φ_{-tp}(C(p,0))` where `C(p,0)` is the open hemisphere
//! centred at `p`; as a set this is `{x : ⟨x,p⟩ > -t}`. The cap reflection is
//! the hemisphere reflection conjugated by `φ_{-tp}`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Points with `|ξ| >= 1 - BALL_MARGIN` are rejected.
pub const BALL_MARGIN: f64 = 1e-14;

/// Below this `|ξ|`, `β` is taken from its series `1/2 + 3|ξ|²/8`.
const SMALL_XI: f64 = 1e-8;

/// Smallest admissible `|α (⟨p,ξ⟩ + 1)|`.
const SINGULAR_DENOM: f64 = 1e-14;

const INVERSE_MAX_STEPS: usize = 100;

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub(crate) fn normalize_in_place(v: &mut [f64]) {
    let n = norm(v);
    v.iter_mut().for_each(|x| *x /= n);
}

/// A parameter `ξ` of the Möbius family, strictly inside the unit ball.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BallPoint(Vec<f64>);

impl BallPoint {
    pub fn new(xi: Vec<f64>) -> Result<Self> {
        if xi.is_empty() || xi.iter().any(|x| !x.is_finite()) {
            return Err(Error::OutOfRange("ball point must be a finite non-empty vector".into()));
        }
        let n = norm(&xi);
        if n >= 1.0 - BALL_MARGIN {
            return Err(Error::OutOfRange(format!("|ξ| = {n} is not inside the unit ball")));
        }
        Ok(Self(xi))
    }

    pub fn origin(dim: usize) -> Self {
        Self(vec![0.0; dim])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn norm(&self) -> f64 {
        norm(&self.0)
    }

    pub fn neg(&self) -> Self {
        Self(self.0.iter().map(|x| -x).collect())
    }
}

/// A unit vector; normalized on construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpherePoint(Vec<f64>);

impl SpherePoint {
    pub fn new(mut x: Vec<f64>) -> Result<Self> {
        let n = norm(&x);
        if x.len() < 2 || !n.is_finite() || n == 0.0 {
            return Err(Error::OutOfRange(
                "sphere point needs a finite nonzero vector of length >= 2".into(),
            ));
        }
        x.iter_mut().for_each(|v| *v /= n);
        Ok(Self(x))
    }

    /// The basis vector `e_i` in `R^dim`.
    pub fn basis(dim: usize, i: usize) -> Self {
        let mut v = vec![0.0; dim];
        v[i] = 1.0;
        Self(v)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn neg(&self) -> Self {
        Self(self.0.iter().map(|x| -x).collect())
    }

    pub fn distance(&self, other: &SpherePoint) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt()
    }
}

/// `φ_ξ` with its coefficients precomputed.
#[derive(Debug, Clone)]
pub struct MobiusMap {
    xi: Vec<f64>,
    xi2: f64,
    alpha: f64,
    beta: f64,
}

impl MobiusMap {
    pub fn new(xi: &BallPoint) -> Self {
        Self::from_slice(xi.as_slice())
    }

    pub(crate) fn from_slice(xi: &[f64]) -> Self {
        let xi2 = dot(xi, xi);
        let alpha = 1.0 / (1.0 - xi2).sqrt();
        let beta = if xi2.sqrt() < SMALL_XI {
            0.5 + 0.375 * xi2
        } else {
            (alpha - 1.0) / xi2
        };
        Self {
            xi: xi.to_vec(),
            xi2,
            alpha,
            beta,
        }
    }

    pub fn dim(&self) -> usize {
        self.xi.len()
    }

    pub fn xi(&self) -> &[f64] {
        &self.xi
    }

    pub fn is_identity(&self) -> bool {
        self.xi2 == 0.0
    }

    #[inline]
    fn denom(&self, pd: f64) -> f64 {
        self.alpha * (pd + 1.0)
    }

    /// Apply to a unit vector, writing into `out`.
    #[inline]
    pub fn apply_into(&self, p: &[f64], out: &mut [f64]) {
        let pd = dot(p, &self.xi);
        let c = self.beta * pd + self.alpha;
        let d = self.denom(pd);
        for ((o, &pi), &xi) in out.iter_mut().zip(p).zip(&self.xi) {
            *o = (pi + c * xi) / d;
        }
    }

    pub fn apply(&self, p: &SpherePoint) -> Result<SpherePoint> {
        let pd = dot(p.as_slice(), &self.xi);
        if self.denom(pd).abs() < SINGULAR_DENOM {
            return Err(Error::Singular(p.as_slice().to_vec()));
        }
        let mut out = vec![0.0; self.dim()];
        self.apply_into(p.as_slice(), &mut out);
        Ok(SpherePoint(out))
    }

    /// Quotient-rule differential of the formula at `p` applied to `v`.
    #[inline]
    pub fn differential_into(&self, p: &[f64], v: &[f64], out: &mut [f64]) {
        let pd = dot(p, &self.xi);
        let vd = dot(v, &self.xi);
        let c = self.beta * pd + self.alpha;
        let d = self.denom(pd);
        let dd = self.alpha * vd;
        for i in 0..out.len() {
            let n_i = p[i] + c * self.xi[i];
            let dn_i = v[i] + self.beta * vd * self.xi[i];
            out[i] = dn_i / d - n_i * dd / (d * d);
        }
    }

    /// Transpose of the differential at `p` applied to `r`.
    #[inline]
    fn differential_transpose_into(&self, p: &[f64], r: &[f64], out: &mut [f64]) {
        let pd = dot(p, &self.xi);
        let c = self.beta * pd + self.alpha;
        let d = self.denom(pd);
        let rx = dot(r, &self.xi);
        let nr: f64 = p
            .iter()
            .zip(&self.xi)
            .zip(r)
            .map(|((pi, xi), ri)| (pi + c * xi) * ri)
            .sum();
        for i in 0..out.len() {
            out[i] = (r[i] + self.beta * rx * self.xi[i]) / d - self.alpha * nr * self.xi[i] / (d * d);
        }
    }

    /// Squared conformal factor `(1 - |ξ|²) / (1 + ⟨p,ξ⟩)²` at `p`.
    #[inline]
    pub fn conformal_factor_sq(&self, p: &[f64]) -> f64 {
        let pd = dot(p, &self.xi);
        (1.0 - self.xi2) / ((1.0 + pd) * (1.0 + pd))
    }

    /// `φ_{-ξ}(p)`.
    #[inline]
    pub fn apply_reversed_into(&self, p: &[f64], out: &mut [f64]) {
        let pd = -dot(p, &self.xi);
        let c = self.beta * pd + self.alpha;
        let d = self.denom(pd);
        for ((o, &pi), &xi) in out.iter_mut().zip(p).zip(&self.xi) {
            *o = (pi - c * xi) / d;
        }
    }

    /// Preimage of `q` by damped Newton on the sphere, seeded at `q`.
    pub fn inverse_into(&self, q: &[f64], out: &mut [f64]) -> Result<()> {
        self.inverse_seeded_into(q, q, out)
    }

    /// Newton for the preimage of `q` from a caller-supplied unit seed.
    pub fn inverse_seeded_into(&self, q: &[f64], seed: &[f64], out: &mut [f64]) -> Result<()> {
        let dim = q.len();
        out.copy_from_slice(seed);
        if self.is_identity() {
            out.copy_from_slice(q);
            return Ok(());
        }
        let mut img = vec![0.0; dim];
        let mut res = vec![0.0; dim];
        let mut step = vec![0.0; dim];
        let mut cand = vec![0.0; dim];
        let eval = |p: &[f64], img: &mut [f64], res: &mut [f64]| -> f64 {
            self.apply_into(p, img);
            for i in 0..dim {
                res[i] = img[i] - q[i];
            }
            norm(res)
        };
        let mut rn = eval(out, &mut img, &mut res);
        for _ in 0..INVERSE_MAX_STEPS {
            if rn < 1e-15 {
                return Ok(());
            }
            // w = -P_p Jᵀ res / κ²: the differential is conformal on T_p.
            self.differential_transpose_into(out, &res, &mut step);
            let k2 = self.conformal_factor_sq(out);
            let pd = dot(&step, out);
            for i in 0..dim {
                step[i] = -(step[i] - pd * out[i]) / k2;
            }
            let mut lambda = 1.0;
            loop {
                for i in 0..dim {
                    cand[i] = out[i] + lambda * step[i];
                }
                normalize_in_place(&mut cand);
                let rc = eval(&cand, &mut img, &mut res);
                if rc < rn {
                    out.copy_from_slice(&cand);
                    rn = rc;
                    break;
                }
                lambda *= 0.5;
                if lambda < 1e-12 {
                    // no further decrease: converged to rounding
                    if rn < 1e-12 {
                        return Ok(());
                    }
                    return Err(Error::NoConvergence {
                        what: "Möbius inverse",
                        iterations: INVERSE_MAX_STEPS,
                    });
                }
            }
            // res must describe the accepted point for the next step
            eval(out, &mut img, &mut res);
        }
        if rn < 1e-12 {
            Ok(())
        } else {
            Err(Error::NoConvergence {
                what: "Möbius inverse",
                iterations: INVERSE_MAX_STEPS,
            })
        }
    }

    /// Differential of the inverse at `φ(y)`, given the preimage `y`: solves
    /// `dφ(y) w = v` for `w ∈ T_y`.
    #[inline]
    pub fn inverse_differential_into(&self, y: &[f64], v: &[f64], out: &mut [f64]) {
        self.differential_transpose_into(y, v, out);
        let k2 = self.conformal_factor_sq(y);
        let pd = dot(out, y);
        for i in 0..out.len() {
            out[i] = (out[i] - pd * y[i]) / k2;
        }
    }
}

fn check_dims(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::OutOfRange(format!("dimension mismatch: {a} vs {b}")));
    }
    Ok(())
}

pub fn mobius_apply(xi: &BallPoint, p: &SpherePoint) -> Result<SpherePoint> {
    check_dims(xi.dim(), p.dim())?;
    MobiusMap::new(xi).apply(p)
}

pub fn mobius_inverse(xi: &BallPoint, q: &SpherePoint) -> Result<SpherePoint> {
    check_dims(xi.dim(), q.dim())?;
    let map = MobiusMap::new(xi);
    let mut out = vec![0.0; q.dim()];
    map.inverse_into(q.as_slice(), &mut out)?;
    SpherePoint::new(out)
}

/// `R_p(x) = x - 2⟨x,p⟩p`.
pub fn reflect_hyperplane(p: &SpherePoint, x: &SpherePoint) -> SpherePoint {
    let mut out = x.as_slice().to_vec();
    reflect_into(p.as_slice(), &mut out);
    SpherePoint(out)
}

/// Dot product with error-free transformations, accurate to about one ulp.
fn dot_compensated(a: &[f64], b: &[f64]) -> f64 {
    let (mut s, mut c) = (0.0f64, 0.0f64);
    for (x, y) in a.iter().zip(b) {
        let p = x * y;
        let pe = x.mul_add(*y, -p);
        let t = s + p;
        let z = t - s;
        c += (s - (t - z)) + (p - z) + pe;
        s = t;
    }
    s + c
}

#[inline]
pub(crate) fn reflect_into(p: &[f64], x: &mut [f64]) {
    let d2 = -2.0 * dot_compensated(x, p);
    for (xi, pi) in x.iter_mut().zip(p) {
        *xi = d2.mul_add(*pi, *xi);
    }
}

/// The spherical cap `C(p,t) = φ_{-tp}(C(p,0))`, `t ∈ (-1,1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cap {
    p: SpherePoint,
    t: f64,
}

impl Cap {
    pub fn new(p: SpherePoint, t: f64) -> Result<Self> {
        if !(t > -1.0 && t < 1.0) {
            return Err(Error::OutOfRange(format!("cap parameter t = {t} is outside (-1, 1)")));
        }
        Ok(Self { p, t })
    }

    pub fn hemisphere(p: SpherePoint) -> Self {
        Self { p, t: 0.0 }
    }

    pub fn center(&self) -> &SpherePoint {
        &self.p
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    /// `-t p`, the parameter of the generating Möbius map.
    pub fn generator(&self) -> BallPoint {
        BallPoint(self.p.as_slice().iter().map(|x| -self.t * x).collect())
    }

    pub fn maps(&self) -> CapMaps {
        CapMaps {
            p: self.p.as_slice().to_vec(),
            gen: MobiusMap::new(&self.generator()),
        }
    }
}

/// Where a point lies relative to a cap, with its pull-back to the hemisphere.
#[derive(Debug, Clone)]
pub struct CapSide {
    pub inside: bool,
    /// `⟨φ_{-tp}^{-1}(x), p⟩`, positive inside the cap.
    pub height: f64,
    pub preimage: Vec<f64>,
}

/// Precomputed maps for repeated cap queries.
#[derive(Debug, Clone)]
pub struct CapMaps {
    p: Vec<f64>,
    gen: MobiusMap,
}

impl CapMaps {
    pub fn generator(&self) -> &MobiusMap {
        &self.gen
    }

    pub fn center(&self) -> &[f64] {
        &self.p
    }

    pub fn side(&self, x: &[f64]) -> Result<CapSide> {
        let mut seed = vec![0.0; x.len()];
        let mut y = vec![0.0; x.len()];
        // φ_{-ξ} inverts φ_ξ, so Newton only polishes this seed
        self.gen.apply_reversed_into(x, &mut seed);
        self.gen.inverse_seeded_into(x, &seed, &mut y)?;
        let height = dot(&y, &self.p);
        Ok(CapSide {
            inside: height > 0.0,
            height,
            preimage: y,
        })
    }

    /// `τ_C(x) = φ_{-tp}(R_p(φ_{-tp}^{-1}(x)))`, given the preimage `y`.
    pub fn reflect_from_preimage(&self, y: &[f64], out: &mut [f64]) {
        let mut z = y.to_vec();
        reflect_into(&self.p, &mut z);
        self.gen.apply_into(&z, out);
    }

    /// Differential of `τ_C` at `x = φ_{-tp}(y)` applied to tangent `v`.
    pub fn reflect_differential(&self, y: &[f64], v: &[f64], out: &mut [f64]) {
        let mut w = vec![0.0; v.len()];
        self.gen.inverse_differential_into(y, v, &mut w);
        reflect_into(&self.p, &mut w);
        let mut z = y.to_vec();
        reflect_into(&self.p, &mut z);
        self.gen.differential_into(&z, &w, out);
    }

    pub fn fold_into(&self, x: &[f64], out: &mut [f64]) -> Result<bool> {
        let side = self.side(x)?;
        if side.inside {
            out.copy_from_slice(x);
        } else {
            self.reflect_from_preimage(&side.preimage, out);
        }
        Ok(side.inside)
    }
}

pub fn cap_contains(cap: &Cap, x: &SpherePoint) -> Result<bool> {
    check_dims(cap.p.dim(), x.dim())?;
    Ok(cap.maps().side(x.as_slice())?.inside)
}

pub fn cap_reflection(cap: &Cap, x: &SpherePoint) -> Result<SpherePoint> {
    check_dims(cap.p.dim(), x.dim())?;
    let maps = cap.maps();
    let side = maps.side(x.as_slice())?;
    let mut out = vec![0.0; x.dim()];
    maps.reflect_from_preimage(&side.preimage, &mut out);
    SpherePoint::new(out)
}

/// Folding map onto the cap: identity on `C`, `τ_C` on its complement.
pub fn fold(cap: &Cap, x: &SpherePoint) -> Result<SpherePoint> {
    check_dims(cap.p.dim(), x.dim())?;
    let mut out = vec![0.0; x.dim()];
    cap.maps().fold_into(x.as_slice(), &mut out)?;
    SpherePoint::new(out)
}

/// Quadrature points and positive weights on a sphere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteMeasure {
    dim: usize,
    points: Vec<f64>,
    weights: Vec<f64>,
}

impl DiscreteMeasure {
    /// `points` is row-major, one unit vector of length `dim` per weight.
    pub fn new(dim: usize, mut points: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if dim < 2 || points.len() != dim * weights.len() || weights.is_empty() {
            return Err(Error::OutOfRange(format!(
                "measure needs {dim}-vectors matching {} weights, got {} coordinates",
                weights.len(),
                points.len()
            )));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::OutOfRange("measure weights must be finite and positive".into()));
        }
        for x in points.chunks_mut(dim) {
            let n = norm(x);
            if !(n.is_finite() && n > 0.0) {
                return Err(Error::OutOfRange("measure point is not a nonzero finite vector".into()));
            }
            x.iter_mut().for_each(|v| *v /= n);
        }
        let total: f64 = weights.iter().sum();
        let max = weights.iter().cloned().fold(0.0, f64::max);
        if max >= 0.5 * total {
            return Err(Error::AtomCondition { max, total });
        }
        Ok(Self { dim, points, weights })
    }

    pub fn from_points(points: &[SpherePoint], weights: Vec<f64>) -> Result<Self> {
        let dim = points.first().map(|p| p.dim()).unwrap_or(0);
        let flat = points.iter().flat_map(|p| p.as_slice().iter().copied()).collect();
        Self::new(dim, flat, weights)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Weighted mean of `φ_ξ` over the measure.
    pub fn center_after(&self, map: &MobiusMap) -> Vec<f64> {
        let mut acc = vec![0.0; self.dim];
        let mut img = vec![0.0; self.dim];
        for (x, w) in self.points.chunks(self.dim).zip(&self.weights) {
            map.apply_into(x, &mut img);
            for (a, v) in acc.iter_mut().zip(&img) {
                *a += w * v;
            }
        }
        let total = self.total_mass();
        acc.iter_mut().for_each(|a| *a /= total);
        acc
    }
}

#[derive(Debug, Clone, Copy)]
pub struct RenormalizeOptions {
    pub tol: f64,
    pub max_steps: usize,
}

impl Default for RenormalizeOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_steps: 500,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Renormalization {
    pub xi: BallPoint,
    pub residual: f64,
    pub steps: usize,
}

/// The unique `ξ` with `Σ wᵢ φ_ξ(xᵢ) = 0`, by damped Newton from `ξ = 0`.
pub fn renormalize(measure: &DiscreteMeasure, tol: f64) -> Result<BallPoint> {
    let opts = RenormalizeOptions {
        tol,
        ..Default::default()
    };
    Ok(renormalize_from(measure, &BallPoint::origin(measure.dim()), opts)?.xi)
}

/// Damped Newton on `ξ ↦ mean of φ_ξ` with a central-difference Jacobian.
///
/// Each step is halved until the residual decreases and `|ξ|` stays below
/// `1 - 1e-12`.
pub fn renormalize_from(
    measure: &DiscreteMeasure,
    seed: &BallPoint,
    opts: RenormalizeOptions,
) -> Result<Renormalization> {
    let dim = measure.dim();
    check_dims(seed.dim(), dim)?;
    let max_norm = 1.0 - 1e-12;
    let residual = |xi: &[f64]| measure.center_after(&MobiusMap::from_slice(xi));

    let mut xi = seed.as_slice().to_vec();
    let mut res = residual(&xi);
    let mut rn = norm(&res);
    let mut jac = vec![0.0; dim * dim];
    for step in 0..opts.max_steps {
        if rn < opts.tol {
            return Ok(Renormalization {
                xi: BallPoint(xi),
                residual: rn,
                steps: step,
            });
        }
        let h = 1e-6f64.min(0.25 * (max_norm - norm(&xi)));
        for j in 0..dim {
            let mut plus = xi.clone();
            let mut minus = xi.clone();
            plus[j] += h;
            minus[j] -= h;
            let (rp, rm) = (residual(&plus), residual(&minus));
            for i in 0..dim {
                jac[i * dim + j] = (rp[i] - rm[i]) / (2.0 * h);
            }
        }
        let rhs: Vec<f64> = res.iter().map(|r| -r).collect();
        let delta = solve_dense(&jac, &rhs, dim).ok_or(Error::NoConvergence {
            what: "renormalization (singular Jacobian)",
            iterations: step,
        })?;
        let mut lambda = 1.0;
        loop {
            let cand: Vec<f64> = xi.iter().zip(&delta).map(|(x, d)| x + lambda * d).collect();
            if norm(&cand) < max_norm {
                let rc = residual(&cand);
                let rcn = norm(&rc);
                if rcn < rn {
                    xi = cand;
                    res = rc;
                    rn = rcn;
                    break;
                }
            }
            lambda *= 0.5;
            if lambda < 1e-14 {
                // rounding floor: accept if already tiny
                if rn < opts.tol.max(1e-14) * 10.0 {
                    return Ok(Renormalization {
                        xi: BallPoint(xi),
                        residual: rn,
                        steps: step,
                    });
                }
                return Err(Error::NoConvergence {
                    what: "renormalization (line search)",
                    iterations: step,
                });
            }
        }
    }
    if rn < opts.tol {
        return Ok(Renormalization {
            xi: BallPoint(xi),
            residual: rn,
            steps: opts.max_steps,
        });
    }
    Err(Error::NoConvergence {
        what: "renormalization",
        iterations: opts.max_steps,
    })
}

/// Gaussian elimination with partial pivoting on a small row-major system.
pub(crate) fn solve_dense(a: &[f64], b: &[f64], n: usize) -> Option<Vec<f64>> {
    let mut m = a.to_vec();
    let mut x = b.to_vec();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| m[i * n + col].abs().total_cmp(&m[j * n + col].abs()))?;
        if m[piv * n + col].abs() < 1e-300 {
            return None;
        }
        if piv != col {
            for k in 0..n {
                m.swap(col * n + k, piv * n + k);
            }
            x.swap(col, piv);
        }
        for row in col + 1..n {
            let f = m[row * n + col] / m[col * n + col];
            for k in col..n {
                m[row * n + k] -= f * m[col * n + k];
            }
            x[row] -= f * x[col];
        }
    }
    for col in (0..n).rev() {
        let mut s = x[col];
        for k in col + 1..n {
            s -= m[col * n + k] * x[k];
        }
        x[col] = s / m[col * n + col];
    }
    Some(x)
}
